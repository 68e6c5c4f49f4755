#include "relaycap/gauss_bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "relaycap/optimize.h"

namespace gauss_bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_fields(const char* who, std::initializer_list<double> fields,
                  double n3) {
  for (double x : fields) {
    if (!std::isfinite(x) || x < 0.0) {
      throw std::domain_error(std::string(who) +
                              ": fields must be finite and nonnegative");
    }
  }
  if (!(n3 > 0.0)) {
    throw std::domain_error(std::string(who) + ": N3 must be positive");
  }
}

gridopt::SearchBox make_box(std::vector<gridopt::Dim> dims,
                            const GridConfig& grid) {
  gridopt::SearchBox box;
  box.dims = std::move(dims);
  box.coarse_steps = grid.coarse_steps;
  if (box.coarse_steps.size() > box.dims.size()) {
    box.coarse_steps.resize(box.dims.size());
  }
  box.refine_rounds = grid.refine_rounds;
  box.refine_shrink = grid.refine_shrink;
  return box;
}

}  // namespace

void GaussianRelayParams::validate() const {
  check_fields("GaussianRelayParams", {P1, P2, N2, N3, Q}, N3);
}

void HyperSourceParams::validate() const {
  check_fields("HyperSourceParams", {P1R, P1D, P2, N2, N3, Q}, N3);
}

namespace detail {

double half_log1p_snr(double signal, double noise) {
  if (signal <= 0.0) return 0.0;
  if (noise <= 0.0) return kInf;
  return 0.5 * std::log2(1.0 + signal / noise);
}

}  // namespace detail

double fn_R(double alpha, double P, double Q, double N) {
  if (!(N > 0.0)) throw std::domain_error("fn_R: N must be positive");
  if (P < 0.0 || Q < 0.0) {
    throw std::domain_error("fn_R: P and Q must be nonnegative");
  }
  if (P == 0.0) return 0.0;
  const double om = 1.0 - alpha;
  const double den = P * Q * om * om + N * (P + alpha * alpha * Q);
  return 0.5 * std::log2(P * (P + Q + N) / den);
}

double q_tilde(double t, double Q, double D) {
  if (Q < 0.0 || D < 0.0) {
    throw std::domain_error("q_tilde: Q and D must be nonnegative");
  }
  const double om = 1.0 - t;
  return om * om * Q - t * (t - 2.0) * D;
}

BoundResult lb_input_description_at(const GaussianRelayParams& p,
                                    double gamma) {
  p.validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument(
        "lb_input_description_at: gamma must lie in [0,1]");
  }
  const double gp = gamma * p.P1;
  const double dden = p.N2 + gp;
  // Ratio-first keeps D <= P2 exactly in floating point, so the sqrt below
  // never sees a negative argument. dden == 0 is the N2 = 0, gamma*P1 = 0
  // corner where the distortion limit is 0.
  const double D = dden > 0.0 ? p.P2 * (p.N2 / dden) : 0.0;
  const double s = std::sqrt((1.0 - gamma) * p.P1) + std::sqrt(p.P2 - D);
  BoundResult r;
  r.rate = detail::half_log1p_snr(s * s, p.N3 + D + gp);
  r.argmax = {{"gamma", gamma}};
  r.active_term = "unconstrained";
  r.details = {{"D", D}};
  return r;
}

BoundResult lb_input_description(const GaussianRelayParams& p,
                                 const GridConfig& grid) {
  p.validate();
  const auto box = make_box({{"gamma", 0.0, 1.0}}, grid);
  const auto res = gridopt::maximize(
      [&](const gridopt::Point& x) -> std::optional<double> {
        return lb_input_description_at(p, x[0]).rate;
      },
      box);
  return lb_input_description_at(p, res.argmax[0]);
}

namespace detail {

StateDescEval eval_state_desc(const GaussianRelayParams& p, double P1r,
                              double P1d, double theta, double rho12,
                              double rho1s, double alpha) {
  StateDescEval e{};
  e.status = 2;
  if (!(P1r >= 0.0) || !(P1d >= 0.0)) return e;
  if (P1r + P1d > p.P1 * (1.0 + 1e-12) + 1e-12) return e;
  if (!(theta >= 0.0 && theta <= 1.0)) return e;
  if (!(rho12 >= 0.0 && rho12 <= 1.0)) return e;
  if (!(rho1s >= -1.0 && rho1s <= 0.0)) return e;
  if (!std::isfinite(alpha)) return e;

  // With no state there is nothing to correlate against; drop rho1s.
  const double r1s = p.Q > 0.0 ? rho1s : 0.0;
  const double disc = 1.0 - rho12 * rho12 - r1s * r1s;
  if (disc < -1e-12) return e;

  const double tp = theta * P1r;           // state-description stream
  const double wp = (1.0 - theta) * P1r;   // cooperative stream
  const double pu = std::max(disc, 0.0) * wp;
  const double n_relay = p.N2 + tp + P1d;
  const double n_mac = p.N3 + tp + P1d;
  if (pu > 0.0 && !(n_relay > 0.0)) return e;

  const double dden = p.N2 + tp + P1d;
  e.D = dden > 0.0 ? p.Q * ((p.N2 + P1d) / dden) : p.Q;
  e.xi = p.Q > 0.0 ? 1.0 + r1s * std::sqrt(wp / p.Q) : 1.0;
  const double xi2 = e.xi * e.xi;

  const double coop_amp = rho12 * std::sqrt(wp) + std::sqrt(p.P2);
  const double coop_num = coop_amp * coop_amp;
  const double coop_den = p.N3 + xi2 * e.D + tp + pu + P1d;
  e.alpha2 = coop_num / (coop_num + pu + (p.N3 + xi2 * e.D + tp + P1d));
  const double qe = xi2 * q_tilde(e.alpha2, p.Q, e.D);
  e.q_tilde = qe;
  e.P_u = pu;

  const auto dpc_rate = [&](double n) {
    if (pu <= 0.0) return 0.0;
    const double om = 1.0 - alpha;
    const double den = pu * qe * om * om + n * (pu + alpha * alpha * qe);
    return 0.5 * std::log2(pu * (pu + qe + n) / den);
  };
  e.term_relay = dpc_rate(n_relay);
  e.term_mac_base = dpc_rate(n_mac);
  e.coop = half_log1p_snr(coop_num, coop_den);
  e.direct = half_log1p_snr(P1d, p.N3 + tp);
  e.term_mac = e.term_mac_base + e.coop;

  const bool ok = e.term_relay >= 0.0 && e.term_mac_base + e.direct >= 0.0;
  e.rate = std::min(e.term_relay, e.term_mac) + e.direct;
  e.status = ok ? 0 : 1;
  return e;
}

}  // namespace detail

BoundResult lb_state_description_at(const GaussianRelayParams& p,
                                    const StateDescParamPoint& pt) {
  p.validate();
  const auto e = detail::eval_state_desc(p, pt.P1r, pt.P1d, pt.theta,
                                         pt.rho12, pt.rho1s, pt.alpha);
  if (e.status == 2) {
    throw std::invalid_argument(
        "lb_state_description_at: point outside the theorem domain");
  }
  BoundResult r;
  r.argmax = {{"P1r", pt.P1r},     {"P1d", pt.P1d},   {"theta", pt.theta},
              {"rho12", pt.rho12}, {"rho1s", pt.rho1s}, {"alpha", pt.alpha}};
  r.details = {{"D", e.D},
               {"xi", e.xi},
               {"q_tilde", e.q_tilde},
               {"alpha2", e.alpha2},
               {"P_u", e.P_u},
               {"term_relay", e.term_relay},
               {"term_mac", e.term_mac},
               {"coop", e.coop},
               {"direct", e.direct}};
  if (e.status == 1) {
    r.feasible = false;
    r.active_term = "infeasible";
    r.rate = 0.0;
    return r;
  }
  r.rate = e.rate;
  r.active_term = e.term_relay <= e.term_mac ? "relay-cut" : "mac-cut";
  return r;
}

namespace {

struct SdIncumbent {
  bool found = false;
  double rate = -kInf;
  StateDescParamPoint pt{};

  void offer(double rate_cand, const StateDescParamPoint& cand) {
    if (!found || rate_cand > rate) {
      found = true;
      rate = rate_cand;
      pt = cand;
    }
  }
};

// The DPC factor alpha = P/(P+N) maximizes fn_R over alpha for any state
// variance, so each grid point carries two closed-form candidates, one per
// noise denominator. The grid pass with an explicit alpha axis covers
// whatever lies between them.
std::pair<double, double> sd_costa_alphas(const GaussianRelayParams& p,
                                          double P1r, double P1d,
                                          double theta, double rho12,
                                          double rho1s) {
  const double r1s = p.Q > 0.0 ? rho1s : 0.0;
  const double disc = std::max(1.0 - rho12 * rho12 - r1s * r1s, 0.0);
  const double pu = disc * (1.0 - theta) * P1r;
  const double nr = p.N2 + theta * P1r + P1d;
  const double nm = p.N3 + theta * P1r + P1d;
  const double ar = pu + nr > 0.0 ? pu / (pu + nr) : 0.0;
  const double am = pu / (pu + nm);
  return {ar, am};
}

void sd_pass(const GaussianRelayParams& p, bool theta_zero, bool costa_alpha,
             const GridConfig& grid, SdIncumbent& best) {
  std::vector<gridopt::Dim> dims = {{"P1r", 0.0, p.P1},
                                    {"P1d", 0.0, p.P1},
                                    {"theta", 0.0, theta_zero ? 0.0 : 1.0},
                                    {"rho12", 0.0, 1.0},
                                    {"rho1s", -1.0, 0.0}};
  if (!costa_alpha) dims.push_back({"alpha", -1.0, 2.0});
  const auto box = make_box(std::move(dims), grid);

  gridopt::MaxResult res;
  if (costa_alpha) {
    res = gridopt::maximize(
        [&](const gridopt::Point& x) -> std::optional<double> {
          const auto [ar, am] =
              sd_costa_alphas(p, x[0], x[1], x[2], x[3], x[4]);
          std::optional<double> out;
          for (double a : {ar, am}) {
            const auto e =
                detail::eval_state_desc(p, x[0], x[1], x[2], x[3], x[4], a);
            if (e.status == 0 && (!out || e.rate > *out)) out = e.rate;
          }
          return out;
        },
        box);
  } else {
    res = gridopt::maximize(
        [&](const gridopt::Point& x) -> std::optional<double> {
          const auto e =
              detail::eval_state_desc(p, x[0], x[1], x[2], x[3], x[4], x[5]);
          if (e.status != 0) return std::nullopt;
          return e.rate;
        },
        box);
  }

  StateDescParamPoint pt{res.argmax[0], res.argmax[1], res.argmax[2],
                         res.argmax[3], res.argmax[4], 0.0};
  if (costa_alpha) {
    const auto [ar, am] =
        sd_costa_alphas(p, pt.P1r, pt.P1d, pt.theta, pt.rho12, pt.rho1s);
    const auto er =
        detail::eval_state_desc(p, pt.P1r, pt.P1d, pt.theta, pt.rho12,
                                pt.rho1s, ar);
    const auto em =
        detail::eval_state_desc(p, pt.P1r, pt.P1d, pt.theta, pt.rho12,
                                pt.rho1s, am);
    if (er.status == 0 && (em.status != 0 || er.rate >= em.rate)) {
      pt.alpha = ar;
    } else {
      pt.alpha = am;
    }
  } else {
    pt.alpha = res.argmax[5];
  }
  best.offer(res.value, pt);
}

}  // namespace

BoundResult lb_state_description(const GaussianRelayParams& p,
                                 const StateDescOptions& opts) {
  p.validate();
  SdIncumbent best;
  // Theta-zero passes run first; ties keep their argmax, so the restricted
  // and the unrestricted maximization agree whenever no theta > 0 point
  // strictly improves.
  sd_pass(p, true, false, opts.grid, best);
  sd_pass(p, true, true, opts.grid, best);
  if (!opts.theta_zero_only) {
    sd_pass(p, false, false, opts.grid, best);
    sd_pass(p, false, true, opts.grid, best);
  }
  return lb_state_description_at(p, best.pt);
}

namespace detail {

HyperEval eval_hyper(const HyperSourceParams& h, double rho12, double rho1s,
                     double q_on_relay) {
  HyperEval e{};
  e.valid = false;
  if (!(rho12 >= 0.0 && rho12 <= 1.0)) return e;
  if (!(rho1s >= -1.0 && rho1s <= 0.0)) return e;
  const double disc = 1.0 - rho12 * rho12 - rho1s * rho1s;
  if (disc < -1e-12) return e;
  e.zeta = std::max(disc, 0.0);

  const double relay = half_log1p_snr(h.P1R, h.N2 + q_on_relay);
  const double direct = half_log1p_snr(h.P1D * e.zeta, h.N3);
  const double mac_amp = std::sqrt(h.P2) + rho12 * std::sqrt(h.P1D);
  const double state_amp = std::sqrt(h.Q) + rho1s * std::sqrt(h.P1D);
  const double mac =
      half_log1p_snr(mac_amp * mac_amp,
                     h.P1D * e.zeta + state_amp * state_amp + h.N3);
  e.term_relay_cut = relay + direct;
  e.term_mac_cut = mac + direct;
  e.rate = std::min(e.term_relay_cut, e.term_mac_cut);
  e.valid = true;
  return e;
}

}  // namespace detail

namespace {

BoundResult hyper_result(const detail::HyperEval& e, double rho12,
                         double rho1s) {
  BoundResult r;
  r.rate = e.rate;
  r.argmax = {{"rho12", rho12}, {"rho1s", rho1s}};
  r.active_term =
      e.term_relay_cut <= e.term_mac_cut ? "relay-cut" : "mac-cut";
  r.details = {{"zeta", e.zeta},
               {"term_relay_cut", e.term_relay_cut},
               {"term_mac_cut", e.term_mac_cut}};
  return r;
}

BoundResult hyper_opt(const HyperSourceParams& h, double q_on_relay,
                      const GridConfig& grid) {
  h.validate();
  const auto box =
      make_box({{"rho12", 0.0, 1.0}, {"rho1s", -1.0, 0.0}}, grid);
  const auto res = gridopt::maximize(
      [&](const gridopt::Point& x) -> std::optional<double> {
        const auto e = detail::eval_hyper(h, x[0], x[1], q_on_relay);
        if (!e.valid) return std::nullopt;
        return e.rate;
      },
      box);
  const auto e = detail::eval_hyper(h, res.argmax[0], res.argmax[1],
                                    q_on_relay);
  return hyper_result(e, res.argmax[0], res.argmax[1]);
}

}  // namespace

BoundResult ub_hyper_at(const HyperSourceParams& h, double rho12,
                        double rho1s) {
  h.validate();
  const auto e = detail::eval_hyper(h, rho12, rho1s, 0.0);
  if (!e.valid) {
    throw std::invalid_argument(
        "ub_hyper_at: correlations must satisfy rho12 in [0,1], rho1s in "
        "[-1,0], rho12^2+rho1s^2 <= 1");
  }
  return hyper_result(e, rho12, rho1s);
}

BoundResult ub_hyper(const HyperSourceParams& h, const GridConfig& grid) {
  return hyper_opt(h, 0.0, grid);
}

BoundResult lb_hyper(const HyperSourceParams& h, const GridConfig& grid) {
  return hyper_opt(h, h.Q, grid);
}

BoundResult capacity_dest_only(const HyperSourceParams& h,
                               const GridConfig& grid) {
  // Same optimized expression as ub_hyper: with no state on the relay link
  // the converse is achieved, so this shares the code path exactly.
  return hyper_opt(h, 0.0, grid);
}

BoundResult capacity_orthogonal(const GaussianRelayParams& p,
                                const GridConfig& grid) {
  p.validate();
  const auto terms = [&](double g, double& relay, double& mac,
                         double& direct) {
    relay = detail::half_log1p_snr(g * p.P1, p.N2);
    mac = detail::half_log1p_snr(p.P2, p.N3);
    direct = detail::half_log1p_snr((1.0 - g) * p.P1, p.N3);
  };
  const auto value = [&](double g) {
    double relay, mac, direct;
    terms(g, relay, mac, direct);
    return std::min(relay, mac) + direct;
  };

  const auto box = make_box({{"gamma", 0.0, 1.0}}, grid);
  const auto res = gridopt::maximize(
      [&](const gridopt::Point& x) -> std::optional<double> {
        return value(x[0]);
      },
      box);
  double best_g = res.argmax[0];
  double best_v = res.value;

  // Exact stationary candidates: the crossing of the relay and MAC terms,
  // and the unconstrained optimum of relay + direct left of the crossing.
  std::vector<double> cands = {0.0, 1.0};
  if (p.P1 > 0.0 && p.N2 > 0.0) {
    const double gstar =
        std::clamp(p.P2 * p.N2 / (p.P1 * p.N3), 0.0, 1.0);
    const double a = p.P1 / p.N2;
    const double b = p.P1 / p.N3;
    cands.push_back(gstar);
    cands.push_back(std::clamp((a - b + a * b) / (2.0 * a * b), 0.0, gstar));
  }
  for (double g : cands) {
    const double v = value(g);
    if (v > best_v) {
      best_v = v;
      best_g = g;
    }
  }

  double relay, mac, direct;
  terms(best_g, relay, mac, direct);
  BoundResult r;
  r.rate = best_v;
  r.argmax = {{"gamma", best_g}};
  r.active_term = relay <= mac ? "relay-cut" : "mac-cut";
  r.details = {{"term_relay", relay}, {"term_mac", mac}, {"direct", direct}};
  return r;
}

namespace {

// max over rho in [0,1] of min{t1, t2} with t1 decreasing and t2
// nondecreasing in rho: either t1(0) <= t2(0) and rho = 0 is optimal, or the
// optimum sits at the crossing, found by bisection to machine precision.
BoundResult crossing_max(double P1, double P2, double n_relay_side,
                         double n_mac_side) {
  const auto t1 = [&](double r) {
    return detail::half_log1p_snr((1.0 - r * r) * P1, n_relay_side);
  };
  const auto t2 = [&](double r) {
    return detail::half_log1p_snr(P1 + P2 + 2.0 * r * std::sqrt(P1 * P2),
                                  n_mac_side);
  };
  double rho = 0.0;
  if (t1(0.0) > t2(0.0)) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (lo + hi);
      if (t1(m) > t2(m)) {
        lo = m;
      } else {
        hi = m;
      }
    }
    rho = std::min(t1(lo), t2(lo)) >= std::min(t1(hi), t2(hi)) ? lo : hi;
  }
  BoundResult r;
  r.rate = std::min(t1(rho), t2(rho));
  r.argmax = {{"rho", rho}};
  r.active_term = t1(rho) <= t2(rho) ? "relay-cut" : "mac-cut";
  r.details = {{"term_relay_cut", t1(rho)}, {"term_mac_cut", t2(rho)}};
  return r;
}

}  // namespace

BoundResult cutset_gaussian(const GaussianRelayParams& p) {
  p.validate();
  // Relay-side noise is harmonic: the relay cut sees both Z2 and Z3.
  const double n1 = p.N2 > 0.0 ? p.N2 * (p.N3 / (p.N2 + p.N3)) : 0.0;
  return crossing_max(p.P1, p.P2, n1, p.N3);
}

BoundResult baseline_df_state_as_noise(const GaussianRelayParams& p) {
  p.validate();
  return crossing_max(p.P1, p.P2, p.N2 + p.Q, p.N3 + p.Q);
}

double extreme_case(const GaussianRelayParams& p, ExtremeCase which) {
  p.validate();
  switch (which) {
    case ExtremeCase::RelayNoiseZero: {
      const double s = std::sqrt(p.P1) + std::sqrt(p.P2);
      return detail::half_log1p_snr(s * s, p.N3);
    }
    case ExtremeCase::StateInfinite:
      return detail::half_log1p_snr(p.P1, std::max(p.N2, p.N3));
    case ExtremeCase::RelayLinkBroken:
      return detail::half_log1p_snr(p.P1, p.N3 + p.P2);
  }
  throw std::logic_error("extreme_case: unhandled case");
}

double extreme_case(const HyperSourceParams& h, ExtremeCase which) {
  h.validate();
  switch (which) {
    case ExtremeCase::StateInfinite:
    case ExtremeCase::RelayLinkBroken:
      return detail::half_log1p_snr(h.P1D, h.N3);
    case ExtremeCase::RelayNoiseZero:
      throw std::domain_error(
          "extreme_case: the two-component source model has no "
          "relay-noise-zero closed form");
  }
  throw std::logic_error("extreme_case: unhandled case");
}

}  // namespace gauss_bounds
