#include "relaycap/oracle.h"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

#include "relaycap/gauss_mi.h"

namespace oracle {

namespace {

using gauss_mi::GaussianSystem;
using gauss_mi::NameList;

constexpr double kVarEps = 1e-12;

double half_log2(double x) { return 0.5 * std::log2(x); }

double half_snr(double sig, double noise) {
  if (sig <= 0.0) return 0.0;
  return half_log2(1.0 + sig / noise);
}

GaussianSystem diag_system(
    const std::vector<std::pair<std::string, double>>& vars) {
  NameList names;
  names.reserve(vars.size());
  Eigen::MatrixXd cov =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vars.size()),
                            static_cast<Eigen::Index>(vars.size()));
  Eigen::Index i = 0;
  for (const auto& [name, var] : vars) {
    names.push_back(name);
    cov(i, i) = var;
    ++i;
  }
  return GaussianSystem(std::move(names), std::move(cov));
}

void add_term(ConstructionReport& rep, const std::string& name, double closed,
              double oracle_value) {
  TermCheck t;
  t.name = name;
  t.closed_form = closed;
  t.oracle = oracle_value;
  t.abs_diff = std::abs(closed - oracle_value);
  rep.terms.push_back(std::move(t));
}

void add_skipped(ConstructionReport& rep, const std::string& name,
                 double closed, const std::string& note) {
  TermCheck t;
  t.name = name;
  t.closed_form = closed;
  t.skipped = true;
  t.note = note;
  rep.terms.push_back(std::move(t));
}

// Local-optimality entry: oracle holds the best perturbed rate; only an
// increase beyond the stated optimum counts as a discrepancy.
void add_perturbation(ConstructionReport& rep, const std::string& name,
                      double stated, double best_perturbed) {
  TermCheck t;
  t.name = name;
  t.closed_form = stated;
  t.oracle = best_perturbed;
  t.abs_diff = std::max(0.0, best_perturbed - stated);
  rep.terms.push_back(std::move(t));
}

void finalize(ConstructionReport& rep, double tol) {
  rep.tol = tol;
  rep.max_diff = 0.0;
  for (const auto& t : rep.terms) {
    if (!t.skipped) rep.max_diff = std::max(rep.max_diff, t.abs_diff);
  }
  rep.pass = rep.max_diff <= tol;
}

}  // namespace

ConstructionReport verify_input_description(
    const gauss_bounds::GaussianRelayParams& p, double gamma, double tol) {
  p.validate();
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument(
        "verify_input_description: gamma must lie in (0,1]");
  }
  if (!(p.N2 > 0.0)) {
    throw std::invalid_argument(
        "verify_input_description: N2 must be positive, the quantizer "
        "degenerates at zero relay noise");
  }
  if (!(p.P1 > 0.0 && p.P2 > 0.0 && p.Q > 0.0)) {
    throw std::invalid_argument(
        "verify_input_description: P1, P2 and Q must be positive");
  }

  const double gp = gamma * p.P1;
  const double gbar = 1.0 - gamma;
  const double D = p.P2 * (p.N2 / (p.N2 + gp));  // strictly inside (0, P2)
  const double a = 1.0 - D / p.P2;

  GaussianSystem sys = diag_system({{"S", p.Q},
                                    {"X", p.P2},
                                    {"Xq", D * (1.0 - D / p.P2)},
                                    {"X1R", gp},
                                    {"Z2", p.N2},
                                    {"Z3", p.N3}});
  sys = sys.extend_linear("Xhat", {{"X", a}, {"Xq", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "X2", {{"Xhat", std::sqrt(p.P2 / (p.P2 - D))}}, 0.0);
  const double cx = std::sqrt(gbar * p.P1 / p.P2);
  sys = sys.extend_linear("X1", {{"X1R", 1.0}, {"X", cx}}, 0.0);
  sys = sys.extend_linear("Y2", {{"X1", 1.0}, {"S", 1.0}, {"Z2", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "Y3", {{"X1", 1.0}, {"X2", 1.0}, {"S", 1.0}, {"Z3", 1.0}}, 0.0);

  const double amp = std::sqrt(gbar * p.P1) + std::sqrt(p.P2 - D);
  const double alpha = amp * amp / (amp * amp + p.N3 + D + gp);
  const double cu = cx + std::sqrt((p.P2 - D) / p.P2);
  sys = sys.extend_linear("U", {{"X", cu}, {"S", alpha}}, 0.0);
  const double aR = gp / (gp + p.N2);
  sys = sys.extend_linear(
      "UR", {{"X1R", 1.0}, {"S", aR}, {"X", aR * cx}}, 0.0);

  ConstructionReport rep;
  rep.construction = "input-description";

  const double rate_closed = half_snr(amp * amp, p.N3 + D + gp);
  add_term(rep, "rate-direct-dpc", rate_closed,
           mutual_information(sys, {"U"}, {"Y3"}) -
               mutual_information(sys, {"U"}, {"S"}));

  add_term(rep, "description-rate", half_log2(p.P2 / D),
           mutual_information(sys, {"X"}, {"Xhat"}));

  const double relay_closed = half_snr(gp, p.N2);
  add_term(rep, "relay-decode", relay_closed,
           mutual_information(sys, {"UR"}, {"Y2"}) -
               mutual_information(sys, {"UR"}, {"S"}) -
               conditional_mi(sys, {"UR"}, {"U"}, {"S"}));

  double best_u = -std::numeric_limits<double>::infinity();
  double best_r = -std::numeric_limits<double>::infinity();
  for (double d : {-1e-3, 1e-3}) {
    const auto su = sys.extend_linear(
        "Up", {{"X", cu}, {"S", alpha + d}}, 0.0);
    best_u = std::max(best_u, mutual_information(su, {"Up"}, {"Y3"}) -
                                  mutual_information(su, {"Up"}, {"S"}));
    const double ar = aR + d;
    const auto sr = sys.extend_linear(
        "URp", {{"X1R", 1.0}, {"S", ar}, {"X", ar * cx}}, 0.0);
    best_r = std::max(best_r,
                      mutual_information(sr, {"URp"}, {"Y2"}) -
                          mutual_information(sr, {"URp"}, {"S"}) -
                          conditional_mi(sr, {"URp"}, {"U"}, {"S"}));
  }
  add_perturbation(rep, "rate-direct-dpc-perturbation", rate_closed, best_u);
  add_perturbation(rep, "relay-decode-perturbation", relay_closed, best_r);

  finalize(rep, tol);
  return rep;
}

ConstructionReport verify_state_description(
    const gauss_bounds::GaussianRelayParams& p,
    const gauss_bounds::StateDescParamPoint& pt, double tol) {
  p.validate();
  if (!(p.Q > 0.0)) {
    throw std::invalid_argument("verify_state_description: Q must be positive");
  }
  if (!(p.N2 > 0.0) || !(p.P2 > 0.0)) {
    throw std::invalid_argument(
        "verify_state_description: N2 and P2 must be positive");
  }
  if (!(pt.P1r >= 0.0 && pt.P1d >= 0.0 &&
        pt.P1r + pt.P1d <= p.P1 * (1.0 + 1e-12) + 1e-12)) {
    throw std::invalid_argument(
        "verify_state_description: power split out of range");
  }
  if (!(pt.theta >= 0.0 && pt.theta <= 1.0) ||
      !(pt.rho12 >= 0.0 && pt.rho12 <= 1.0) ||
      !(pt.rho1s >= -1.0 && pt.rho1s <= 0.0) ||
      pt.rho12 * pt.rho12 + pt.rho1s * pt.rho1s > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "verify_state_description: correlation parameters out of range");
  }

  const double tp = pt.theta * pt.P1r;
  const double wp = (1.0 - pt.theta) * pt.P1r;
  const double pu =
      std::max(1.0 - pt.rho12 * pt.rho12 - pt.rho1s * pt.rho1s, 0.0) * wp;
  const double D = p.Q * ((p.N2 + pt.P1d) / (p.N2 + tp + pt.P1d));
  const double xi = 1.0 + pt.rho1s * std::sqrt(wp / p.Q);
  const double coop_amp = pt.rho12 * std::sqrt(wp) + std::sqrt(p.P2);
  const double coop_num = coop_amp * coop_amp;
  const double coop_den = p.N3 + xi * xi * D + tp + pu + pt.P1d;
  const double alpha2 =
      coop_num / (coop_num + pu + (p.N3 + xi * xi * D + tp + pt.P1d));
  const double qt =
      (1.0 - alpha2) * (1.0 - alpha2) * p.Q - alpha2 * (alpha2 - 2.0) * D;
  const double qe = xi * xi * qt;
  const double n_relay = p.N2 + tp + pt.P1d;
  const double n_mac = p.N3 + tp + pt.P1d;

  const auto dpc_rate = [&](double alpha, double n) {
    if (pu <= 0.0) return 0.0;
    const double om = 1.0 - alpha;
    return half_log2(pu * (pu + qe + n) /
                     (pu * qe * om * om + n * (pu + alpha * alpha * qe)));
  };
  const double relay_closed = dpc_rate(pt.alpha, n_relay);
  const double dest_closed = dpc_rate(pt.alpha, n_mac);
  const double coop_closed = half_snr(coop_num, coop_den);
  const double direct_closed = half_snr(pt.P1d, p.N3 + tp);
  const double desc_closed = half_log2(p.Q / D);
  if (!(relay_closed >= 0.0 && dest_closed + direct_closed >= 0.0)) {
    throw std::invalid_argument(
        "verify_state_description: infeasible point, a rate constraint is "
        "negative");
  }

  GaussianSystem sys = diag_system({{"S", p.Q},
                                    {"SqR", D * (1.0 - D / p.Q)},
                                    {"X2", p.P2},
                                    {"XSR", tp},
                                    {"XWRp", pu},
                                    {"XWD", pt.P1d},
                                    {"Z2", p.N2},
                                    {"Z3", p.N3}});
  sys = sys.extend_linear("ShR", {{"S", 1.0 - D / p.Q}, {"SqR", 1.0}}, 0.0);
  const double c2 = pt.rho12 * std::sqrt(wp / p.P2);
  const double cs = pt.rho1s * std::sqrt(wp / p.Q);
  sys = sys.extend_linear(
      "XWR", {{"S", cs}, {"X2", c2}, {"XWRp", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "X1", {{"XSR", 1.0}, {"XWR", 1.0}, {"XWD", 1.0}}, 0.0);
  sys = sys.extend_linear("Y2", {{"X1", 1.0}, {"S", 1.0}, {"Z2", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "Y3", {{"X1", 1.0}, {"X2", 1.0}, {"S", 1.0}, {"Z3", 1.0}}, 0.0);
  sys = sys.extend_linear("W", {{"S", 1.0}, {"ShR", -alpha2}}, 0.0);
  sys = sys.extend_linear(
      "V", {{"X2", c2 + 1.0}, {"ShR", alpha2 * xi}}, 0.0);
  sys = sys.extend_linear(
      "U", {{"XWRp", 1.0}, {"W", pt.alpha * xi}}, 0.0);
  const double l1 = pt.P1d / (pt.P1d + p.N3 + tp);
  sys = sys.extend_linear(
      "U1", {{"XWD", 1.0}, {"W", l1 * xi * (1.0 - pt.alpha)}}, 0.0);
  const double lR = tp / (tp + p.N2 + pt.P1d);
  sys = sys.extend_linear(
      "UR", {{"XSR", 1.0}, {"S", lR * (1.0 - pt.alpha) * xi}}, 0.0);
  // Residual channels after the decoder peels what it already knows or has
  // decoded: known codewords move into the conditioning or get subtracted.
  sys = sys.extend_linear("Y2res",
                          {{"XWRp", 1.0},
                           {"W", xi},
                           {"Z2", 1.0},
                           {"XSR", 1.0},
                           {"XWD", 1.0}},
                          0.0);
  sys = sys.extend_linear("Y3res",
                          {{"XWRp", 1.0},
                           {"W", xi},
                           {"Z3", 1.0},
                           {"XSR", 1.0},
                           {"XWD", 1.0}},
                          0.0);
  sys = sys.extend_linear("Y3dir",
                          {{"XWD", 1.0},
                           {"W", xi * (1.0 - pt.alpha)},
                           {"Z3", 1.0},
                           {"XSR", 1.0}},
                          0.0);
  sys = sys.extend_linear("Y2desc",
                          {{"XSR", 1.0},
                           {"S", (1.0 - pt.alpha) * xi},
                           {"Z2", 1.0},
                           {"XWD", 1.0}},
                          0.0);

  ConstructionReport rep;
  rep.construction = "state-description";

  const bool has_stream = pu > kVarEps;
  const bool has_desc = sys.variance("ShR") > kVarEps;
  const bool has_direct = pt.P1d > kVarEps;

  if (has_stream) {
    add_term(rep, "relay-dpc-residual", relay_closed,
             mutual_information(sys, {"U"}, {"Y2res"}) -
                 mutual_information(sys, {"U"}, {"W"}));
    add_term(rep, "dest-dpc-residual", dest_closed,
             mutual_information(sys, {"U"}, {"Y3res"}) -
                 mutual_information(sys, {"U"}, {"W"}));
    NameList state_side = {"S"};
    if (has_desc) state_side.push_back("ShR");
    // Successive decoding of V then U must add up to the joint expression;
    // the split relies on V learning nothing about S beyond the description.
    const double joint =
        mutual_information(sys, {"V", "U"}, {"Y3"}) -
        mutual_information(sys, {"V", "U"}, state_side);
    const double coop_part =
        mutual_information(sys, {"V"}, {"Y3"}) -
        (has_desc ? mutual_information(sys, {"V"}, {"ShR"}) : 0.0);
    const double cond_part =
        conditional_mi(sys, {"U"}, {"Y3"}, {"V"}) -
        conditional_mi(sys, {"U"}, state_side, {"V"});
    add_term(rep, "dest-joint-vs-successive", coop_part + cond_part, joint);
    // Conditioning on the decoded V leaks its residual correlation with the
    // state, so the conditional peel-off matches the closed form only at the
    // scale matched to the destination channel.
    if (std::abs(pt.alpha - pu / (pu + n_mac)) <= 1e-9) {
      add_term(rep, "dest-dpc-conditional-route", dest_closed, cond_part);
    } else {
      add_skipped(rep, "dest-dpc-conditional-route", dest_closed,
                  "conditional peel-off is tight only at the matched scale");
    }
  } else {
    add_skipped(rep, "relay-dpc-residual", relay_closed,
                "zero-power cooperative stream");
    add_skipped(rep, "dest-dpc-residual", dest_closed,
                "zero-power cooperative stream");
    add_skipped(rep, "dest-joint-vs-successive", 0.0,
                "zero-power cooperative stream");
    add_skipped(rep, "dest-dpc-conditional-route", dest_closed,
                "zero-power cooperative stream");
  }

  if (has_desc) {
    add_term(rep, "cooperative-stream", coop_closed,
             mutual_information(sys, {"V"}, {"Y3"}) -
                 mutual_information(sys, {"V"}, {"ShR"}));
    double best = -std::numeric_limits<double>::infinity();
    for (double d : {-1e-3, 1e-3}) {
      const auto sv = sys.extend_linear(
          "Vp", {{"X2", c2 + 1.0}, {"ShR", (alpha2 + d) * xi}}, 0.0);
      best = std::max(best, mutual_information(sv, {"Vp"}, {"Y3"}) -
                                mutual_information(sv, {"Vp"}, {"ShR"}));
    }
    add_perturbation(rep, "cooperative-stream-perturbation", coop_closed,
                     best);
  } else {
    add_term(rep, "cooperative-stream", coop_closed,
             mutual_information(sys, {"V"}, {"Y3"}));
  }

  if (has_direct) {
    const bool residual_state = std::abs((1.0 - pt.alpha) * xi) > 0.0;
    add_term(rep, "direct-dpc", direct_closed,
             mutual_information(sys, {"U1"}, {"Y3dir"}) -
                 (residual_state
                      ? mutual_information(sys, {"U1"}, {"W"})
                      : 0.0));
    if (residual_state) {
      double best = -std::numeric_limits<double>::infinity();
      for (double d : {-1e-3, 1e-3}) {
        const auto su = sys.extend_linear(
            "U1p",
            {{"XWD", 1.0}, {"W", (l1 + d) * xi * (1.0 - pt.alpha)}}, 0.0);
        best = std::max(best, mutual_information(su, {"U1p"}, {"Y3dir"}) -
                                  mutual_information(su, {"U1p"}, {"W"}));
      }
      add_perturbation(rep, "direct-dpc-perturbation", direct_closed, best);
    }
  } else {
    add_skipped(rep, "direct-dpc", direct_closed, "no direct-stream power");
  }

  if (tp > kVarEps) {
    add_term(rep, "description-decode", desc_closed,
             mutual_information(sys, {"UR"}, {"Y2desc"}) -
                 mutual_information(sys, {"UR"}, {"S"}));
    double best = -std::numeric_limits<double>::infinity();
    for (double d : {-1e-3, 1e-3}) {
      const auto su = sys.extend_linear(
          "URp",
          {{"XSR", 1.0}, {"S", (lR + d) * (1.0 - pt.alpha) * xi}}, 0.0);
      best = std::max(best, mutual_information(su, {"URp"}, {"Y2desc"}) -
                                mutual_information(su, {"URp"}, {"S"}));
    }
    add_perturbation(rep, "description-decode-perturbation", desc_closed,
                     best);
  } else {
    add_skipped(rep, "description-decode", desc_closed,
                "no state-description power");
  }

  finalize(rep, tol);
  return rep;
}

ConstructionReport verify_hyper_converse(
    const gauss_bounds::HyperSourceParams& h, double rho12, double rho1s,
    double tol) {
  h.validate();
  if (!(rho12 >= 0.0 && rho12 <= 1.0) || !(rho1s >= -1.0 && rho1s <= 0.0) ||
      rho12 * rho12 + rho1s * rho1s > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "verify_hyper_converse: correlations out of range");
  }
  if (h.Q == 0.0 && rho1s != 0.0) {
    throw std::invalid_argument(
        "verify_hyper_converse: cannot correlate against a zero-variance "
        "state");
  }
  if (!(h.N2 > 0.0)) {
    throw std::invalid_argument("verify_hyper_converse: N2 must be positive");
  }

  const double zeta =
      std::max(1.0 - rho12 * rho12 - rho1s * rho1s, 0.0);
  NameList names = {"X1R", "X1D", "X2", "S", "Z2", "Z3"};
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
  cov(0, 0) = h.P1R;
  cov(1, 1) = h.P1D;
  cov(2, 2) = h.P2;
  cov(3, 3) = h.Q;
  cov(4, 4) = h.N2;
  cov(5, 5) = h.N3;
  cov(1, 2) = cov(2, 1) = rho12 * std::sqrt(h.P1D * h.P2);
  cov(1, 3) = cov(3, 1) = rho1s * std::sqrt(h.P1D * h.Q);
  GaussianSystem sys(names, cov);
  sys = sys.extend_linear("Y2", {{"X1R", 1.0}, {"S", 1.0}, {"Z2", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "Y3", {{"X1D", 1.0}, {"X2", 1.0}, {"S", 1.0}, {"Z3", 1.0}}, 0.0);

  NameList scond;
  if (h.Q > kVarEps) scond.push_back("S");
  NameList priv_cond = scond;
  if (h.P2 > kVarEps) priv_cond.insert(priv_cond.begin(), "X2");

  const double relay_mi =
      h.P1R > kVarEps ? conditional_mi(sys, {"X1R"}, {"Y2"}, scond) : 0.0;
  const double priv_mi =
      h.P1D > kVarEps ? conditional_mi(sys, {"X1D"}, {"Y3"}, priv_cond) : 0.0;
  const double mac_mi =
      h.P2 > kVarEps ? mutual_information(sys, {"X2"}, {"Y3"}) : 0.0;

  const double mac_amp = std::sqrt(h.P2) + rho12 * std::sqrt(h.P1D);
  const double state_amp = std::sqrt(h.Q) + rho1s * std::sqrt(h.P1D);
  const double t1_closed =
      half_snr(h.P1R, h.N2) + half_snr(h.P1D * zeta, h.N3);
  const double t2_closed =
      half_snr(mac_amp * mac_amp,
               h.P1D * zeta + state_amp * state_amp + h.N3) +
      half_snr(h.P1D * zeta, h.N3);

  ConstructionReport rep;
  rep.construction = "hyper-converse";
  add_term(rep, "relay-cut", t1_closed, relay_mi + priv_mi);
  add_term(rep, "mac-cut", t2_closed, mac_mi + priv_mi);
  finalize(rep, tol);
  return rep;
}

ConstructionReport verify_hyper_achievability(
    const gauss_bounds::HyperSourceParams& h, double rho12, double rho1s,
    double tol) {
  h.validate();
  if (!(rho12 >= 0.0 && rho12 <= 1.0) || !(rho1s >= -1.0 && rho1s <= 0.0) ||
      rho12 * rho12 + rho1s * rho1s > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "verify_hyper_achievability: correlations out of range");
  }
  if (!(h.Q > 0.0)) {
    throw std::invalid_argument(
        "verify_hyper_achievability: Q must be positive");
  }

  const double zeta =
      std::max(1.0 - rho12 * rho12 - rho1s * rho1s, 0.0);
  GaussianSystem sys = diag_system({{"X1R", h.P1R},
                                    {"X2", h.P2},
                                    {"S", h.Q},
                                    {"X1Dp", zeta * h.P1D},
                                    {"Z2", h.N2},
                                    {"Z3", h.N3}});
  const double c2 = h.P2 > 0.0 ? rho12 * std::sqrt(h.P1D / h.P2) : 0.0;
  const double cs = rho1s * std::sqrt(h.P1D / h.Q);
  sys = sys.extend_linear(
      "X1D", {{"X2", c2}, {"S", cs}, {"X1Dp", 1.0}}, 0.0);
  sys = sys.extend_linear("Y2", {{"X1R", 1.0}, {"S", 1.0}, {"Z2", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "Y3", {{"X1D", 1.0}, {"X2", 1.0}, {"S", 1.0}, {"Z3", 1.0}}, 0.0);

  const double alpha = zeta * h.P1D / (zeta * h.P1D + h.N3);
  const double alpha_opt = alpha * (1.0 + cs) - cs;
  const double u1s = cs + alpha_opt;  // = alpha * (1 + cs): the DPC match

  NameList cond;
  if (h.P1R > kVarEps) cond.push_back("X1R");
  if (h.P2 > kVarEps) cond.push_back("X2");

  ConstructionReport rep;
  rep.construction = "hyper-achievability";

  const double dpc_closed = half_snr(h.P1D * zeta, h.N3);
  if (zeta * h.P1D > kVarEps) {
    sys = sys.extend_linear("U1", {{"X1Dp", 1.0}, {"S", u1s}}, 0.0);
    add_term(rep, "dpc-direct", dpc_closed,
             conditional_mi(sys, {"U1"}, {"Y3"}, cond) -
                 conditional_mi(sys, {"U1"}, {"S"}, cond));
    double best = -std::numeric_limits<double>::infinity();
    for (double d : {-1e-3, 1e-3}) {
      const auto su = sys.extend_linear(
          "U1p", {{"X1Dp", 1.0}, {"S", u1s + d}}, 0.0);
      best = std::max(best, conditional_mi(su, {"U1p"}, {"Y3"}, cond) -
                                conditional_mi(su, {"U1p"}, {"S"}, cond));
    }
    add_perturbation(rep, "dpc-direct-perturbation", dpc_closed, best);
  } else {
    add_skipped(rep, "dpc-direct", dpc_closed,
                "private stream carries no power");
  }

  const double relay_closed = half_snr(h.P1R, h.N2 + h.Q);
  if (h.P1R > kVarEps) {
    NameList x2cond;
    if (h.P2 > kVarEps) x2cond.push_back("X2");
    add_term(rep, "relay-state-as-noise", relay_closed,
             conditional_mi(sys, {"X1R"}, {"Y2"}, x2cond));
  } else {
    add_skipped(rep, "relay-state-as-noise", relay_closed,
                "relay stream carries no power");
  }

  const double mac_amp = std::sqrt(h.P2) + rho12 * std::sqrt(h.P1D);
  const double state_amp = std::sqrt(h.Q) + rho1s * std::sqrt(h.P1D);
  const double mac_closed = half_snr(
      mac_amp * mac_amp, h.P1D * zeta + state_amp * state_amp + h.N3);
  if (h.P2 > kVarEps) {
    add_term(rep, "mac-cooperative", mac_closed,
             mutual_information(sys, {"X2"}, {"Y3"}));
  } else {
    add_skipped(rep, "mac-cooperative", mac_closed,
                "relay transmits no power");
  }

  finalize(rep, tol);
  return rep;
}

ConstructionReport verify_cutset_and_baseline(
    const gauss_bounds::GaussianRelayParams& p, double rho, double tol) {
  p.validate();
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument(
        "verify_cutset_and_baseline: rho must lie in [0,1]");
  }
  if (!(p.N2 > 0.0)) {
    throw std::invalid_argument(
        "verify_cutset_and_baseline: N2 must be positive");
  }

  NameList names = {"X1", "X2", "S", "Z2", "Z3"};
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(5, 5);
  cov(0, 0) = p.P1;
  cov(1, 1) = p.P2;
  cov(2, 2) = p.Q;
  cov(3, 3) = p.N2;
  cov(4, 4) = p.N3;
  cov(0, 1) = cov(1, 0) = rho * std::sqrt(p.P1 * p.P2);
  GaussianSystem sys(names, cov);
  sys = sys.extend_linear("Y2", {{"X1", 1.0}, {"S", 1.0}, {"Z2", 1.0}}, 0.0);
  sys = sys.extend_linear(
      "Y3", {{"X1", 1.0}, {"X2", 1.0}, {"S", 1.0}, {"Z3", 1.0}}, 0.0);

  NameList scond;
  if (p.Q > kVarEps) scond.push_back("S");
  NameList relay_cond = scond;
  if (p.P2 > kVarEps) relay_cond.insert(relay_cond.begin(), "X2");

  // With rho = 1 the inputs are collinear; keep one representative so the
  // joint input set stays nonsingular.
  NameList inputs;
  if (p.P1 > kVarEps && !(rho > 1.0 - 1e-12 && p.P2 > kVarEps)) {
    inputs.push_back("X1");
  }
  if (p.P2 > kVarEps) inputs.push_back("X2");

  ConstructionReport rep;
  rep.construction = "cutset-baseline";

  const double cs_t1_closed =
      half_snr((1.0 - rho * rho) * p.P1, p.N2 * (p.N3 / (p.N2 + p.N3)));
  const double mac_power = p.P1 + p.P2 + 2.0 * rho * std::sqrt(p.P1 * p.P2);
  const double cs_t2_closed = half_snr(mac_power, p.N3);
  const double df_t1_closed =
      half_snr((1.0 - rho * rho) * p.P1, p.N2 + p.Q);
  const double df_t2_closed = half_snr(mac_power, p.N3 + p.Q);

  if (p.P1 > kVarEps) {
    add_term(rep, "cutset-relay-cut", cs_t1_closed,
             conditional_mi(sys, {"X1"}, {"Y2", "Y3"}, relay_cond));
    NameList x2cond;
    if (p.P2 > kVarEps) x2cond.push_back("X2");
    add_term(rep, "baseline-relay-decode", df_t1_closed,
             conditional_mi(sys, {"X1"}, {"Y2"}, x2cond));
  } else {
    add_skipped(rep, "cutset-relay-cut", cs_t1_closed, "no source power");
    add_skipped(rep, "baseline-relay-decode", df_t1_closed,
                "no source power");
  }

  if (!inputs.empty()) {
    add_term(rep, "cutset-mac-cut", cs_t2_closed,
             conditional_mi(sys, inputs, {"Y3"}, scond));
    add_term(rep, "baseline-mac", df_t2_closed,
             mutual_information(sys, inputs, {"Y3"}));
  } else {
    add_skipped(rep, "cutset-mac-cut", cs_t2_closed, "no input power");
    add_skipped(rep, "baseline-mac", df_t2_closed, "no input power");
  }

  finalize(rep, tol);
  return rep;
}

}  // namespace oracle
