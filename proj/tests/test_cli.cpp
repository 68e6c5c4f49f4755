// Drives the installed binary end to end: CSV shape, numeric agreement with
// the library, determinism, config/override precedence, exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relaycap/gauss_bounds.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const auto base = fs::temp_directory_path() /
                    ("relaycap_cli_test_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++));
  const fs::path out = base.string() + ".out";
  const fs::path err = base.string() + ".err";
  const std::string cmd = std::string(RELAYCAP_CLI_PATH) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> csv_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

// Same formatting the binary uses for CSV cells and point output.
std::string fmt(double v, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::map<std::string, std::string> kv_of(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const auto& line : lines_of(text)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

double db2lin(double db) { return std::pow(10.0, db / 10.0); }

fs::path temp_file(const std::string& stem) {
  return fs::temp_directory_path() /
         (stem + "_" + std::to_string(::getpid()) + ".txt");
}

}  // namespace

TEST_CASE("usage errors exit with code 1 and a message") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("").exit_code == 1);
  CHECK(run_cli("frobnicate").exit_code == 1);

  const auto no_range = run_cli(
      "sweep --model general --bounds cutset --set model.P1_dB=10");
  CHECK(no_range.exit_code == 1);
  CHECK(no_range.err.find("--range") != std::string::npos);

  const auto bad_pair = run_cli(
      "sweep --model general --bounds lb_hyper --range 0:1:1 "
      "--set model.P1_dB=10");
  CHECK(bad_pair.exit_code == 1);
  CHECK(bad_pair.err.find("lb_hyper") != std::string::npos);
  CHECK(bad_pair.err.find("general") != std::string::npos);

  const auto swept_fixed = run_cli(
      "sweep --model general --bounds cutset --x snr_relay --range 0:1:1 "
      "--set model.N2_dB=3 --set model.P1_dB=10");
  CHECK(swept_fixed.exit_code == 1);
  CHECK(swept_fixed.err.find("model.N2") != std::string::npos);

  const auto both_units = run_cli(
      "point --model general --bounds cutset --set model.P1=10 "
      "--set model.P1_dB=10");
  CHECK(both_units.exit_code == 1);
  CHECK(both_units.err.find("pick one") != std::string::npos);

  const auto unknown_key =
      run_cli("point --model general --bounds cutset --set model.bogus=1");
  CHECK(unknown_key.exit_code == 1);
  CHECK(unknown_key.err.find("model.bogus") != std::string::npos);

  CHECK(run_cli("sweep --model general --bounds cutset --range 0:1 "
                "--set model.P1_dB=10")
            .exit_code == 1);
  CHECK(run_cli("sweep --model general --bounds cutset --range 5:3:1 "
                "--set model.P1_dB=10 --set model.P2_dB=10 "
                "--set model.N3_dB=10 --set model.Q_dB=15")
            .exit_code == 1);
  CHECK(run_cli("preset fig99").exit_code == 1);

  const auto two_bounds = run_cli(
      "point --model hyper --bounds ub_hyper,lb_hyper "
      "--set model.P1R_dB=10 --set model.P1D_dB=10 --set model.P2_dB=10 "
      "--set model.N2_dB=10 --set model.N3_dB=10 --set model.Q_dB=5");
  CHECK(two_bounds.exit_code == 1);

  // Negative powers are a parameter-domain problem, still a usage error.
  CHECK(run_cli("point --model general --bounds cutset --set model.P1=-3 "
                "--set model.P2=10 --set model.N2=1 --set model.N3=10 "
                "--set model.Q=5")
            .exit_code == 1);
}

TEST_CASE("sweep CSV matches the library cell by cell") {
  const std::string args =
      "sweep --model general --bounds cutset,baseline_df --x snr_relay "
      "--range 0:2:1 --set model.P1_dB=10 --set model.P2_dB=10 "
      "--set model.N3_dB=10 --set model.Q_dB=15";
  const auto r = run_cli(args);
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.empty());

  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "x_dB,cutset,baseline_df");

  const double P1 = db2lin(10), P2 = db2lin(10), N3 = db2lin(10),
               Q = db2lin(15);
  for (int i = 0; i < 3; ++i) {
    const auto cells = csv_cells(lines[1 + i]);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0] == fmt(i, 6));
    const double N2 = P1 / db2lin(i);
    const gauss_bounds::GaussianRelayParams p{P1, P2, N2, N3, Q};
    CHECK(cells[1] == fmt(gauss_bounds::cutset_gaussian(p).rate, 6));
    CHECK(cells[2] ==
          fmt(gauss_bounds::baseline_df_state_as_noise(p).rate, 6));
  }

  SUBCASE("byte-deterministic and --out mirrors stdout") {
    const auto again = run_cli(args);
    CHECK(again.out == r.out);

    const auto path = temp_file("sweep_out");
    const auto filed = run_cli(args + " --out " + path.string());
    CHECK(filed.exit_code == 0);
    CHECK(filed.out.empty());
    CHECK(slurp(path) == r.out);
    fs::remove(path);
  }
}

TEST_CASE("config file supplies parameters and --set overrides it") {
  const auto cfg = temp_file("sweep_cfg");
  {
    std::ofstream out(cfg);
    out << "# operating point\n";
    out << "model.P1_dB = 10\n";
    out << "model.P2_dB = 10  # relay power\n";
    out << "model.N3_dB = 10\n";
    out << "model.Q_dB = 15\n";
  }
  const std::string tail =
      "sweep --model general --bounds cutset --range 0:1:1 ";
  const auto from_cfg = run_cli(tail + "--config " + cfg.string());
  const auto from_sets = run_cli(
      tail +
      "--set model.P1_dB=10 --set model.P2_dB=10 --set model.N3_dB=10 "
      "--set model.Q_dB=15");
  REQUIRE(from_cfg.exit_code == 0);
  CHECK(from_cfg.out == from_sets.out);

  const auto overridden = run_cli(tail + "--config " + cfg.string() +
                                  " --set model.P1_dB=12");
  const auto direct = run_cli(
      tail +
      "--set model.P1_dB=12 --set model.P2_dB=10 --set model.N3_dB=10 "
      "--set model.Q_dB=15");
  REQUIRE(overridden.exit_code == 0);
  CHECK(overridden.out == direct.out);
  CHECK(overridden.out != from_cfg.out);

  const auto bad_cfg = temp_file("sweep_badcfg");
  {
    std::ofstream out(bad_cfg);
    out << "model.P1_dB 10\n";
  }
  const auto broken = run_cli(tail + "--config " + bad_cfg.string());
  CHECK(broken.exit_code == 1);
  CHECK(broken.err.find("key=value") != std::string::npos);
  fs::remove(cfg);
  fs::remove(bad_cfg);
}

TEST_CASE("preset fig3 slice keeps the documented column ordering") {
  const auto r = run_cli("preset fig3 --range 8:12:2");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "x_dB,lb_input_description,lb_state_description,"
        "lb_state_description_theta0,cutset,baseline_df");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = csv_cells(lines[i]);
    REQUIRE(cells.size() == 6);
    std::vector<double> v;
    for (const auto& c : cells) {
      REQUIRE(!c.empty());
      v.push_back(std::stod(c));
    }
    const double cutset = v[4];
    CHECK(v[1] <= cutset + 1e-9);
    CHECK(v[2] <= cutset + 1e-9);
    CHECK(v[3] <= cutset + 1e-9);
    CHECK(v[5] <= cutset + 1e-9);
    // Freeing theta never hurts the state-description scheme.
    CHECK(v[2] >= v[3] - 1e-9);
  }
}

TEST_CASE("presets fig5a and fig5b keep the hyper-model sandwich") {
  for (const std::string name : {"fig5a", "fig5b"}) {
    CAPTURE(name);
    const auto r = run_cli("preset " + name + " --range 9:11:1");
    REQUIRE(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "x_dB,lb_hyper,ub_hyper,cutset,baseline_df");
    bool strictly_tighter = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = csv_cells(lines[i]);
      REQUIRE(cells.size() == 5);
      const double lb = std::stod(cells[1]);
      const double ub = std::stod(cells[2]);
      const double cs = std::stod(cells[3]);
      CHECK(lb <= ub + 1e-9);
      CHECK(ub <= cs + 1e-9);
      if (ub < cs - 1e-4) strictly_tighter = true;
    }
    CHECK(strictly_tighter);
  }
}

TEST_CASE("preset fig6 reports the no-relay-state capacity") {
  const auto r = run_cli("preset fig6 --range 9:10:1");
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "x_dB,capacity_dest_only,cutset,baseline_df");

  const double P1R = db2lin(10), P1D = db2lin(20), P2 = db2lin(20),
               N3 = db2lin(10), Q = db2lin(10);
  for (int i = 0; i < 2; ++i) {
    const auto cells = csv_cells(lines[1 + i]);
    REQUIRE(cells.size() == 4);
    const double N2 = P1R / db2lin(9 + i);
    const gauss_bounds::HyperSourceParams h{P1R, P1D, P2, N2, N3, Q};
    CHECK(cells[1] == fmt(gauss_bounds::capacity_dest_only(h).rate, 6));
    CHECK(std::stod(cells[1]) <= std::stod(cells[2]) + 1e-9);
  }
}

TEST_CASE("point prints the full key=value surface") {
  const auto r = run_cli(
      "point --model hyper --bounds ub_hyper --set model.P1R_dB=10 "
      "--set model.P1D_dB=10 --set model.P2_dB=10 --set model.N2_dB=10 "
      "--set model.N3_dB=10 --set model.Q_dB=5");
  REQUIRE(r.exit_code == 0);
  const auto kv = kv_of(r.out);
  CHECK(kv.at("model") == "hyper");
  CHECK(kv.at("bound") == "ub_hyper");
  CHECK(kv.at("feasible") == "1");

  const gauss_bounds::HyperSourceParams h{db2lin(10), db2lin(10), db2lin(10),
                                          db2lin(10), db2lin(10), db2lin(5)};
  const auto lib = gauss_bounds::ub_hyper(h);
  CHECK(kv.at("rate") == fmt(lib.rate, 17));
  CHECK(kv.at("active_term") == lib.active_term);
  CHECK(kv.at("argmax.rho12") == fmt(lib.argmax.at("rho12"), 17));
  CHECK(kv.count("details.zeta") == 1);
  CHECK(kv.count("details.term_relay_cut") == 1);
  CHECK(kv.count("details.term_mac_cut") == 1);

  const auto sd = run_cli(
      "point --model general --bounds lb_state_description "
      "--set model.P1_dB=10 --set model.P2_dB=10 --set model.N2_dB=10 "
      "--set model.N3_dB=10 --set model.Q_dB=15");
  REQUIRE(sd.exit_code == 0);
  const auto sdkv = kv_of(sd.out);
  // The scheme's internal description distortion and precoding scales
  // surface as details.
  for (const char* key : {"details.D", "details.q_tilde", "details.xi",
                          "details.alpha2", "details.P_u"}) {
    CAPTURE(key);
    CHECK(sdkv.count(key) == 1);
  }
  CHECK(sdkv.count("argmax.theta") == 1);
}

TEST_CASE("verify is deterministic and honors seed and tolerance") {
  const auto a = run_cli("verify --seed 7");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out.find(" FAIL") == std::string::npos);
  CHECK(a.out.find("0 failed") != std::string::npos);

  const auto lines = lines_of(a.out);
  REQUIRE(lines.size() > 200);
  CHECK(lines.back().rfind("verify: ", 0) == 0);
  int with_diff = 0;
  for (const auto& line : lines) {
    if (line.find("max_diff=") != std::string::npos) ++with_diff;
  }
  CHECK(with_diff >= 280);

  const auto b = run_cli("verify --seed 7");
  CHECK(b.out == a.out);

  const auto other_seed = run_cli("verify --seed 8");
  CHECK(other_seed.exit_code == 0);
  CHECK(other_seed.out != a.out);

  const auto strict = run_cli("verify --seed 7 --tol 1e-15");
  CHECK(strict.exit_code == 2);
  CHECK(strict.out.find(" FAIL") != std::string::npos);
}
