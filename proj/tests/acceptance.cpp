// Release gates for librelaycap. Each gate prints one verdict line; multi-part
// gates print their sub-checks first. Exit status is nonzero when any gate
// fails. Runtime budgets are part of the gate where stated.

#include "relaycap/dm.h"
#include "relaycap/gauss_bounds.h"
#include "relaycap/gauss_mi.h"
#include "relaycap/optimize.h"
#include "relaycap/oracle.h"

#include "mi_summation.h"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

using gauss_bounds::GaussianRelayParams;
using gauss_bounds::HyperSourceParams;
using Names = std::vector<std::string>;

namespace {

int g_failed = 0;

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void sub(const char* fmt, ...) {
  std::printf("      ");
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::printf("\n");
}

// budget <= 0 means untimed; otherwise exceeding it fails the gate.
void verdict(int id, const char* name, bool ok, const std::string& info,
             double secs, double budget) {
  bool pass = ok && (budget <= 0.0 || secs < budget);
  if (!pass) ++g_failed;
  std::printf("[%02d] %-34s %s  %s  %.1fs", id, name, pass ? "PASS" : "FAIL",
              info.c_str(), secs);
  if (budget > 0.0) std::printf(" (budget %.0fs)", budget);
  std::printf("\n");
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double unif(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen);
  }
  double log_unif(double lo_exp, double hi_exp) {
    return std::pow(10.0, unif(lo_exp, hi_exp));
  }
};

std::string fmt_diff(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

// --- gate 1: DPC scale identity ---------------------------------------------

void gate_costa() {
  Stopwatch sw;
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double P = rng.log_unif(-2.0, 3.0);
    const double Q = rng.log_unif(-2.0, 3.0);
    const double N = rng.log_unif(-2.0, 3.0);
    const double lhs = gauss_bounds::fn_R(P / (P + N), P, Q, N);
    worst = std::max(worst, std::abs(lhs - 0.5 * std::log2(1.0 + P / N)));
  }
  verdict(1, "costa-scale-identity", worst <= 1e-12,
          "max_diff=" + fmt_diff(worst) + " tol=1e-12 points=100", sw.secs(),
          1.0);
}

// --- gate 2: covariance-oracle equivalence of every construction ------------

void gate_oracle() {
  Stopwatch sw;
  Rng rng(202);
  const double tol = 1e-9;
  double worst = 0.0;
  int bad = 0;
  auto take = [&](const oracle::ConstructionReport& rep) {
    worst = std::max(worst, rep.max_diff);
    if (!rep.pass) ++bad;
  };

  for (int i = 0; i < 50; ++i) {
    const GaussianRelayParams p{rng.unif(0.1, 20.0), rng.unif(0.1, 20.0),
                                rng.unif(0.05, 10.0), rng.unif(0.05, 10.0),
                                rng.unif(0.05, 30.0)};
    take(oracle::verify_input_description(p, rng.unif(0.01, 1.0), tol));
  }

  int accepted = 0;
  for (int attempts = 0; accepted < 50 && attempts < 5000; ++attempts) {
    const GaussianRelayParams p{rng.unif(0.5, 20.0), rng.unif(0.5, 20.0),
                                rng.unif(0.1, 5.0), rng.unif(0.1, 5.0),
                                rng.unif(0.1, 20.0)};
    gauss_bounds::StateDescParamPoint pt;
    pt.P1r = rng.unif(0.0, 1.0) * p.P1;
    pt.P1d = rng.unif(0.0, 1.0) * (p.P1 - pt.P1r);
    pt.theta = rng.unif(0.0, 1.0);
    pt.rho12 = rng.unif(0.0, 0.9);
    pt.rho1s = rng.unif(-0.9, 0.0);
    if (pt.rho12 * pt.rho12 + pt.rho1s * pt.rho1s > 0.95) continue;
    pt.alpha = rng.unif(0.0, 1.0);
    if (!gauss_bounds::lb_state_description_at(p, pt).feasible) continue;
    take(oracle::verify_state_description(p, pt, tol));
    ++accepted;
  }
  if (accepted != 50) {
    sub("state-description rejection sampling starved: %d of 50", accepted);
    ++bad;
  }

  for (int i = 0; i < 50; ++i) {
    const HyperSourceParams h{rng.unif(0.1, 20.0),  rng.unif(0.1, 20.0),
                              rng.unif(0.1, 20.0),  rng.unif(0.05, 10.0),
                              rng.unif(0.05, 10.0), rng.unif(0.1, 20.0)};
    double r12 = rng.unif(0.0, 1.0);
    double r1s = rng.unif(-1.0, 0.0);
    while (r12 * r12 + r1s * r1s > 1.0) {
      r12 = rng.unif(0.0, 1.0);
      r1s = rng.unif(-1.0, 0.0);
    }
    take(oracle::verify_hyper_converse(h, r12, r1s, tol));
    take(oracle::verify_hyper_achievability(h, r12, r1s, tol));
  }

  for (int i = 0; i < 50; ++i) {
    const GaussianRelayParams p{rng.unif(0.1, 20.0), rng.unif(0.1, 20.0),
                                rng.unif(0.05, 10.0), rng.unif(0.05, 10.0),
                                rng.unif(0.05, 30.0)};
    take(oracle::verify_cutset_and_baseline(p, rng.unif(0.0, 1.0), tol));
  }

  verdict(2, "gaussian-oracle-constructions", bad == 0,
          "worst=" + fmt_diff(worst) + " tol=1e-09 constructions=250",
          sw.secs(), 30.0);
}

// --- gate 3: closed-form limits at extreme parameters ------------------------

void gate_extremes() {
  Stopwatch sw;
  const double P1 = 10.0, P2 = 10.0, N3 = 10.0;
  // N2 and Q are free wherever a sub-check does not pin them; both use the
  // same 10 dB operating point as the rest (Q at its sweep-preset value).
  const double N2_free = 10.0;
  const double Q_free = std::pow(10.0, 1.5);
  int bad = 0;
  auto check = [&](const char* what, double got, double want, double tol) {
    const double d = std::abs(got - want);
    const bool ok = d <= tol;
    if (!ok) ++bad;
    sub("%-44s rate=%.7f target=%.7f diff=%s tol=%.0e %s", what, got, want,
        fmt_diff(d).c_str(), tol, ok ? "ok" : "FAIL");
  };

  {
    GaussianRelayParams p{P1, P2, 1e-6 * P1, N3, Q_free};
    const double want =
        0.5 * std::log2(1.0 + std::pow(std::sqrt(P1) + std::sqrt(P2), 2) / N3);
    check("lb_input_description N2=1e-6*P1 -> full-coop",
          gauss_bounds::lb_input_description(p).rate, want, 1e-3);
    p.N2 = 1e-7 * P1;
    const double deeper =
        std::abs(gauss_bounds::lb_input_description(p).rate - want);
    sub("note: at N2=1e-7*P1 the same gap is %s; the limit converges but "
        "N2=1e-6*P1 sits outside the 1e-3 window",
        fmt_diff(deeper).c_str());
  }
  {
    const GaussianRelayParams p{P1, P2, 1e9, N3, Q_free};
    check("lb_input_description N2=1e9 -> relay-as-noise",
          gauss_bounds::lb_input_description(p).rate,
          0.5 * std::log2(1.0 + P1 / (N3 + P2)), 1e-3);
  }
  {
    const GaussianRelayParams p{P1, P2, N2_free, N3, 1e6};
    check("lb_state_description Q=1e6 -> direct-only",
          gauss_bounds::lb_state_description(p).rate,
          0.5 * std::log2(1.0 + P1 / std::max(N2_free, N3)), 1e-2);
  }
  {
    const GaussianRelayParams p{P1, P2, 1e9, N3, Q_free};
    check("lb_state_description N2=1e9 -> direct-only",
          gauss_bounds::lb_state_description(p).rate,
          0.5 * std::log2(1.0 + P1 / N3), 1e-3);
  }
  {
    const HyperSourceParams h{P1, P1, P2, N2_free, N3, 1e6};
    const double want = 0.5 * std::log2(1.0 + h.P1D / N3);
    check("ub_hyper Q=1e6 -> direct-only", gauss_bounds::ub_hyper(h).rate,
          want, 1e-3);
    check("lb_hyper Q=1e6 -> direct-only", gauss_bounds::lb_hyper(h).rate,
          want, 1e-3);
  }

  char info[64];
  std::snprintf(info, sizeof(info), "%d/6 sub-checks in tolerance", 6 - bad);
  verdict(3, "extreme-parameter-limits", bad == 0, info, sw.secs(), 10.0);
}

// --- gate 4: the input-description rate never reads the state power ----------

void gate_q_invariance() {
  Stopwatch sw;
  Rng rng(404);
  int identical = 0;
  for (int i = 0; i < 20; ++i) {
    GaussianRelayParams p{rng.unif(0.1, 20.0), rng.unif(0.1, 20.0),
                          rng.unif(0.05, 10.0), rng.unif(0.05, 10.0), 0.1};
    const auto lo = gauss_bounds::lb_input_description(p);
    p.Q = 1e4;
    const auto hi = gauss_bounds::lb_input_description(p);
    if (lo.rate == hi.rate && lo.argmax.at("gamma") == hi.argmax.at("gamma"))
      ++identical;
  }
  char info[48];
  std::snprintf(info, sizeof(info), "%d/20 bitwise-identical", identical);
  verdict(4, "state-power-invariance", identical == 20, info, sw.secs(), 0.0);
}

// --- gate 5: bound ordering across the general-model reference sweep ---------

void gate_sweep_ordering() {
  Stopwatch sw;
  const double P1 = 10.0, P2 = 10.0, N3 = 10.0, Q = std::pow(10.0, 1.5);
  int rows = 0, order_bad = 0, dominance_bad = 0;
  double gap_at_top = 0.0;
  for (int x = -10; x <= 30; ++x) {
    const double N2 = P1 / std::pow(10.0, x / 10.0);
    const GaussianRelayParams p{P1, P2, N2, N3, Q};
    const double cut = gauss_bounds::cutset_gaussian(p).rate;
    const double lbi = gauss_bounds::lb_input_description(p).rate;
    const double lbs = gauss_bounds::lb_state_description(p).rate;
    gauss_bounds::StateDescOptions theta0;
    theta0.theta_zero_only = true;
    const double lbs0 = gauss_bounds::lb_state_description(p, theta0).rate;
    const double df = gauss_bounds::baseline_df_state_as_noise(p).rate;
    for (double lower : {lbi, lbs, lbs0, df})
      if (lower > cut + 1e-9) ++order_bad;
    if (lbs < lbs0 - 1e-12) ++dominance_bad;
    if (x == 30) gap_at_top = cut - lbi;
    ++rows;
  }
  sub("rows=%d lower<=cutset violations=%d theta-dominance violations=%d",
      rows, order_bad, dominance_bad);
  const bool top_ok = std::abs(gap_at_top) <= 0.05;
  sub("cutset - lb_input_description at 30 dB = %.7f (tol 5e-2) %s",
      gap_at_top, top_ok ? "ok" : "FAIL");
  char info[80];
  std::snprintf(info, sizeof(info), "gap(30dB)=%.4f, ordering clean=%s",
                gap_at_top, (order_bad + dominance_bad) == 0 ? "yes" : "no");
  verdict(5, "general-model-sweep-ordering",
          order_bad == 0 && dominance_bad == 0 && top_ok, info, sw.secs(),
          60.0);
}

// --- gate 6: two-stream bounds sandwich inside the classical cut-set ---------

void gate_hyper_sandwich() {
  Stopwatch sw;
  struct Case {
    const char* name;
    HyperSourceParams base;
    bool sweep_n2;  // else N3
  };
  const Case cases[] = {
      {"relay-snr sweep", {10.0, 10.0, 10.0, 0.0, 10.0, std::pow(10.0, 0.5)},
       true},
      {"dest-snr sweep", {10.0, 10.0, 10.0, 10.0, 0.0, 100.0}, false},
  };
  int points = 0, sandwich_bad = 0;
  double best_witness = 0.0;
  for (const auto& c : cases) {
    for (int x = -10; x <= 30; ++x) {
      HyperSourceParams h = c.base;
      const double snr = std::pow(10.0, x / 10.0);
      if (c.sweep_n2)
        h.N2 = h.P1R / snr;
      else
        h.N3 = h.P1D / snr;
      const GaussianRelayParams general{h.P1R + h.P1D, h.P2, h.N2, h.N3, h.Q};
      const double lb = gauss_bounds::lb_hyper(h).rate;
      const double ub = gauss_bounds::ub_hyper(h).rate;
      const double cut = gauss_bounds::cutset_gaussian(general).rate;
      if (lb > ub + 1e-9 || ub > cut + 1e-9) ++sandwich_bad;
      best_witness = std::max(best_witness, cut - ub);
      ++points;
    }
  }
  sub("points=%d sandwich violations=%d widest ub-below-cutset margin=%.4f",
      points, sandwich_bad, best_witness);
  char info[80];
  std::snprintf(info, sizeof(info), "witness margin=%.4f (needs >=1e-4)",
                best_witness);
  verdict(6, "hyper-model-sandwich", sandwich_bad == 0 && best_witness >= 1e-4,
          info, sw.secs(), 0.0);
}

// --- gate 7: converse meets achievability when only the destination sees S ---

void gate_capacity_coincidence() {
  Stopwatch sw;
  double worst_ub = 0.0, worst_lb = 0.0, worst_arith = 0.0, worst_wit = 0.0;
  for (int x = -10; x <= 30; ++x) {
    HyperSourceParams h{10.0, 100.0, 100.0, 0.0, 10.0, 10.0};
    h.N2 = h.P1R / std::pow(10.0, x / 10.0);
    const auto cap = gauss_bounds::capacity_dest_only(h);
    worst_ub = std::max(worst_ub,
                        std::abs(cap.rate - gauss_bounds::ub_hyper(h).rate));

    // Covariance-oracle witness: both cut expressions at the winning
    // correlations equal their conditional-MI forms on the explicit jointly
    // Gaussian inputs. With no state on the relay link those cuts are also
    // what the scheme achieves.
    const auto wit = oracle::verify_hyper_converse(
        h, cap.argmax.at("rho12"), cap.argmax.at("rho1s"), 1e-9);
    worst_wit = std::max(worst_wit, wit.max_diff);

    // Achievability side rebuilt from the public pieces: the same correlation
    // box fed to the generic maximizer over the no-state-on-relay evaluation.
    gridopt::SearchBox box;
    box.dims = {{"rho12", 0.0, 1.0}, {"rho1s", -1.0, 0.0}};
    const auto ach = gridopt::maximize(
        [&](const gridopt::Point& pt) -> std::optional<double> {
          const auto e = gauss_bounds::detail::eval_hyper(h, pt[0], pt[1], 0.0);
          if (!e.valid) return std::nullopt;
          return e.rate;
        },
        box);
    worst_lb = std::max(worst_lb, std::abs(cap.rate - ach.value));

    // And the rate at the winning correlations recomputed with local
    // arithmetic only.
    const double r12 = ach.argmax[0], r1s = ach.argmax[1];
    const double zeta = std::max(1.0 - r12 * r12 - r1s * r1s, 0.0);
    const double relay = 0.5 * std::log2(1.0 + h.P1R / h.N2);
    const double direct = 0.5 * std::log2(1.0 + h.P1D * zeta / h.N3);
    const double mac_amp = std::sqrt(h.P2) + r12 * std::sqrt(h.P1D);
    const double state_amp = std::sqrt(h.Q) + r1s * std::sqrt(h.P1D);
    const double mac =
        0.5 * std::log2(1.0 + mac_amp * mac_amp /
                                  (h.P1D * zeta + state_amp * state_amp +
                                   h.N3));
    const double local = std::min(relay + direct, mac + direct);
    worst_arith = std::max(worst_arith, std::abs(ach.value - local));
  }
  sub("max|capacity-converse|=%s max|capacity-achievability|=%s "
      "max|achievability-local-arith|=%s oracle-witness=%s",
      fmt_diff(worst_ub).c_str(), fmt_diff(worst_lb).c_str(),
      fmt_diff(worst_arith).c_str(), fmt_diff(worst_wit).c_str());
  verdict(7, "dest-only-capacity-coincidence",
          worst_ub <= 1e-12 && worst_lb <= 1e-12 && worst_arith <= 1e-12 &&
              worst_wit <= 1e-9,
          "tol=1e-12 points=41", sw.secs(), 0.0);
}

// --- gate 8: discrete evaluators vs entropy summation and brute force --------

struct DmRng {
  std::mt19937_64 g;
  explicit DmRng(std::uint64_t seed) : g(seed) {}
  double unit() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
  void dirichlet(double* row, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      row[i] = std::max(-std::log1p(-unit()), 1e-12);
      sum += row[i];
    }
    for (int i = 0; i < n; ++i) row[i] /= sum;
  }
};

dm::DmChannel random_channel(int nS, int nX1R, int nX1D, int nX2, int nY2,
                             int nY3, std::uint64_t seed, bool hyper) {
  dm::DmChannel ch;
  ch.nS = nS;
  ch.nX1R = nX1R;
  ch.nX1D = nX1D;
  ch.nX2 = nX2;
  ch.nY2 = nY2;
  ch.nY3 = nY3;
  ch.QS.assign(nS, 0.0);
  ch.W.assign(static_cast<std::size_t>(ch.nX1()) * nX2 * nS * nY2 * nY3, 0.0);
  DmRng rng(seed);
  rng.dirichlet(ch.QS.data(), nS);
  if (hyper) {
    std::vector<double> w2(static_cast<std::size_t>(nX1R) * nS * nY2);
    std::vector<double> w3(static_cast<std::size_t>(nX1D) * nX2 * nS * nY3);
    for (int a = 0; a < nX1R * nS; ++a) rng.dirichlet(&w2[a * nY2], nY2);
    for (int a = 0; a < nX1D * nX2 * nS; ++a) rng.dirichlet(&w3[a * nY3], nY3);
    for (int x1r = 0; x1r < nX1R; ++x1r)
      for (int x1d = 0; x1d < nX1D; ++x1d)
        for (int x2 = 0; x2 < nX2; ++x2)
          for (int s = 0; s < nS; ++s)
            for (int y2 = 0; y2 < nY2; ++y2)
              for (int y3 = 0; y3 < nY3; ++y3)
                ch.w(x1r * nX1D + x1d, x2, s, y2, y3) =
                    w2[(x1r * nS + s) * nY2 + y2] *
                    w3[((x1d * nX2 + x2) * nS + s) * nY3 + y3];
  } else {
    for (int x1 = 0; x1 < ch.nX1(); ++x1)
      for (int x2 = 0; x2 < nX2; ++x2)
        for (int s = 0; s < nS; ++s) rng.dirichlet(&ch.w(x1, x2, s, 0, 0),
                                                   nY2 * nY3);
  }
  return ch;
}

double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double bsc(int out, int in, double f) { return out == in ? 1.0 - f : f; }

// Worst absolute deviation between the evaluator's terms and straight
// entropy summation on the same joint.
double summation_gap(const std::string& form, const dm::DmJoint& j,
                     const dm::DmEvalResult& r) {
  double worst = 0.0;
  auto I = [&](const Names& a, const Names& b, const Names& c = {}) {
    return mi_summation::cmi(j, a, b, c);
  };
  auto close = [&](const char* key, double want) {
    worst = std::max(worst, std::abs(r.details.at(key) - want));
  };
  auto rate_is = [&](double want) {
    worst = std::max(worst, std::abs(r.rate - want));
  };
  if (form == "state-description") {
    const double relay = I({"U"}, {"Y2"}, {"V", "ShR"}) -
                         I({"U"}, {"S", "ShD"}, {"V", "ShR"});
    const double dest = I({"U", "V"}, {"Y3"}, {"ShD"}) -
                        I({"U", "V"}, {"S", "ShR"}, {"ShD"});
    const double budget_r = I({"UR"}, {"Y2", "ShR"}, {"U", "V"}) -
                            I({"UR"}, {"S", "ShR", "ShD"}, {"U", "V"});
    const double spill =
        std::min(0.0, I({"U"}, {"Y3", "ShD"}, {"V"}) -
                          I({"U"}, {"S", "ShR", "ShD"}, {"V"}));
    const double budget_d = I({"UD"}, {"Y3", "ShD"}, {"U", "V"}) -
                            I({"UD"}, {"S", "ShR", "ShD"}, {"U", "V"}) + spill;
    close("relay_term", relay);
    close("dest_term", dest);
    close("desc_relay_budget", budget_r);
    close("desc_dest_budget", budget_d);
    close("desc_relay_rate", I({"S"}, {"ShR"}));
    close("desc_dest_rate", I({"S"}, {"ShD"}));
    close("cooperation", I({"V"}, {"Y3", "ShD"}) - I({"V"}, {"ShR"}));
    rate_is(std::min(relay, dest));
  } else if (form == "partial-df") {
    const double t1 = I({"U"}, {"Y2"}, {"X2"}) +
                      I({"U1"}, {"Y3"}, {"U", "X2"}) -
                      I({"U", "U1"}, {"S"}, {"X2"});
    const double t2 =
        I({"U", "U1", "X2"}, {"Y3"}) - I({"U", "U1"}, {"S"}, {"X2"});
    close("term_relay", t1);
    close("term_mac", t2);
    close("relay_decode_margin",
          I({"U"}, {"Y2"}, {"X2"}) - I({"U"}, {"S"}, {"X2"}));
    rate_is(std::min(t1, t2));
  } else if (form == "input-description") {
    close("description_rate", I({"X"}, {"Xh"}));
    close("relay_budget",
          I({"UR"}, {"Y2"}) - I({"UR"}, {"S"}) - I({"UR"}, {"U"}, {"S"}));
    rate_is(I({"U"}, {"Y3"}) - I({"U"}, {"S"}));
  } else if (form == "ub") {
    const double t1 =
        I({"V"}, {"Y2", "Y3"}, {"U", "X2"}) - I({"V"}, {"S"}, {"U", "X2"});
    const double t2 = I({"V"}, {"Y3"}) - I({"V"}, {"S"});
    close("term_relay_cut", t1);
    close("term_mac_cut", t2);
    rate_is(std::min(t1, t2));
  } else {  // ub-hyper
    const double relay = I({"X1R"}, {"Y2"}, {"X2", "S"});
    const double mac = I({"X2"}, {"Y3"});
    const double direct = I({"X1D"}, {"Y3"}, {"X2", "S"});
    close("term_relay", relay);
    close("term_mac", mac);
    close("term_direct", direct);
    close("cutset_relay_cut", I({"X1R", "X1D"}, {"Y2", "Y3"}, {"S", "X2"}));
    close("cutset_mac_cut", I({"X1R", "X1D", "X2"}, {"Y3"}, {"S"}));
    rate_is(std::min(relay, mac) + direct);
  }
  return worst;
}

dm::DmEvalResult eval_by_form(const std::string& form, const dm::DmJoint& j) {
  if (form == "state-description") return dm::eval_lb_state_description_dm(j);
  if (form == "partial-df") return dm::eval_lb_partial_df_dm(j);
  if (form == "input-description") return dm::eval_lb_input_description_dm(j);
  if (form == "ub") return dm::eval_ub_dm(j);
  return dm::eval_ub_hyper_dm(j);
}

void gate_dm() {
  Stopwatch sw;

  // Stateless all-binary channel where the optimum is computable by brute
  // force: relay link BSC(0.1) from X1R, direct link BSC(0.05) from X1D^X2.
  dm::DmChannel ch;
  ch.nS = 1;
  ch.nX1R = 2;
  ch.nX1D = 2;
  ch.nX2 = 2;
  ch.nY2 = 2;
  ch.nY3 = 2;
  ch.QS = {1.0};
  ch.W.assign(static_cast<std::size_t>(ch.nX1()) * ch.nX2 * ch.nY2 * ch.nY3,
              0.0);
  for (int x1r = 0; x1r < 2; ++x1r)
    for (int x1d = 0; x1d < 2; ++x1d)
      for (int x2 = 0; x2 < 2; ++x2)
        for (int y2 = 0; y2 < 2; ++y2)
          for (int y3 = 0; y3 < 2; ++y3)
            ch.w(x1r * 2 + x1d, x2, 0, y2, y3) =
                bsc(y2, x1r, 0.1) * bsc(y3, x1d ^ x2, 0.05);

  const int n = 50;  // 0.02 steps over each free conditional
  double relay_best = 0.0;
  for (int i = 0; i <= n; ++i)
    relay_best =
        std::max(relay_best, h2(0.1 + 0.8 * i / n) - h2(0.1));
  double grid_ref = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int jq = 0; jq <= n; ++jq)
      for (int k = 0; k <= n; ++k) {
        const double q[2] = {1.0 - static_cast<double>(i) / n,
                             static_cast<double>(i) / n};
        const double d[2] = {static_cast<double>(jq) / n,
                             static_cast<double>(k) / n};
        double mac_h = 0.0, direct = 0.0, py3 = 0.0;
        for (int x2 = 0; x2 < 2; ++x2) {
          const double p1 = d[x2] * bsc(1, 1 ^ x2, 0.05) +
                            (1.0 - d[x2]) * bsc(1, x2, 0.05);
          py3 += q[x2] * p1;
          mac_h += q[x2] * h2(p1);
          direct += q[x2] * (h2(p1) - (d[x2] * h2(bsc(1, 1 ^ x2, 0.05)) +
                                       (1.0 - d[x2]) * h2(bsc(1, x2, 0.05))));
        }
        grid_ref =
            std::max(grid_ref, std::min(relay_best, h2(py3) - mac_h) + direct);
      }
  const auto found = dm::search_dm(ch, "eval_ub_hyper_dm", {}, 200,
                                   0xC0FFEEULL);
  const double search_gap = std::abs(found.rate - grid_ref);
  sub("search=%.10f exhaustive-grid=%.10f diff=%s (tol 1e-3)", found.rate,
      grid_ref, fmt_diff(search_gap).c_str());

  struct FormCase {
    std::string form;
    std::map<std::string, int> aux;
    bool hyper;
  };
  const std::vector<FormCase> cases = {
      {"state-description",
       {{"ShR", 2}, {"ShD", 2}, {"V", 2}, {"U", 2}, {"UR", 2}, {"UD", 2}},
       false},
      {"partial-df", {{"U", 2}, {"U1", 2}}, false},
      {"input-description", {{"U", 2}, {"UR", 2}, {"X", 2}}, false},
      {"ub", {{"U", 2}, {"V", 2}}, false},
      {"ub-hyper", {}, true}};
  double worst = 0.0;
  int joints = 0, invalid = 0;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto& fc = cases[ci];
    const dm::DmChannel rc =
        fc.hyper ? random_channel(2, 2, 2, 2, 2, 2, 9001 + ci, true)
                 : random_channel(2, 2, 1, 2, 2, 2, 9001 + ci, false);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const dm::DmJoint j = dm::random_joint(rc, fc.form, fc.aux, seed);
      try {
        dm::validate(j, rc);
      } catch (const std::exception&) {
        ++invalid;
        continue;
      }
      worst = std::max(worst, summation_gap(fc.form, j, eval_by_form(fc.form, j)));
      ++joints;
    }
  }
  sub("random joints=%d invalid=%d worst evaluator-vs-summation diff=%s "
      "(tol 1e-12)",
      joints, invalid, fmt_diff(worst).c_str());
  char info[96];
  std::snprintf(info, sizeof(info), "search diff=%s, joints worst=%s",
                fmt_diff(search_gap).c_str(), fmt_diff(worst).c_str());
  verdict(8, "dm-evaluators-vs-summation",
          search_gap <= 1e-3 && worst <= 1e-12 && joints == 100 &&
              invalid == 0,
          info, sw.secs(), 60.0);
}

// --- gate 9: sampled MI agrees with the determinant form ----------------------

void gate_mc() {
  Stopwatch sw;
  Rng rng(0x9E3779B97F4A7C15ULL);
  int inside = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 20; ++t) {
    gauss_mi::GaussianSystem sys(
        {"a"}, Eigen::MatrixXd::Constant(1, 1, 0.5 + 4.0 * rng.unif(0.0, 1.0)));
    sys = sys.extend_linear("b", {{"a", 0.3 + rng.unif(0.0, 1.0)}},
                            0.1 + 2.0 * rng.unif(0.0, 1.0));
    sys = sys.extend_linear("c",
                            {{"a", -1.0 + 2.0 * rng.unif(0.0, 1.0)},
                             {"b", 0.5 * rng.unif(0.0, 1.0)}},
                            0.1 + rng.unif(0.0, 1.0));
    const double exact = gauss_mi::mutual_information(sys, {"a"}, {"b", "c"});
    const auto est = gauss_mi::mc_mi_estimate(sys, {"a"}, {"b", "c"}, 100000,
                                              0xABCD0000ULL + t);
    const double dev = std::abs(est.estimate - exact);
    if (dev <= 3.0 * est.std_error) ++inside;
    worst_ratio = std::max(worst_ratio, dev / est.std_error);
  }
  char info[64];
  std::snprintf(info, sizeof(info), "%d/20 within 3se, worst dev=%.2fse",
                inside, worst_ratio);
  verdict(9, "monte-carlo-cross-check", inside == 20, info, sw.secs(), 0.0);
}

// --- gate 10: the shipped self-check suite -----------------------------------

void gate_cli_verify() {
  Stopwatch sw;
  const std::string report = "/tmp/acceptance_verify_report.txt";
  const std::string cmd = std::string(RELAYCAP_CLI_PATH) + " verify --out " +
                          report + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const int exit_code =
      WIFEXITED(status) ? WEXITSTATUS(status) : 128;
  std::remove(report.c_str());
  char info[48];
  std::snprintf(info, sizeof(info), "exit=%d", exit_code);
  verdict(10, "cli-verify-suite", exit_code == 0, info, sw.secs(), 120.0);
}

}  // namespace

int main() {
  gate_costa();
  gate_oracle();
  gate_extremes();
  gate_q_invariance();
  gate_sweep_ordering();
  gate_hyper_sandwich();
  gate_capacity_coincidence();
  gate_dm();
  gate_mc();
  gate_cli_verify();
  std::printf("acceptance: %d/10 passed, %d failed\n", 10 - g_failed,
              g_failed);
  return g_failed == 0 ? 0 : 1;
}
