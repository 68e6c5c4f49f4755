#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gauss_bounds {

// General relay model: the relay hears Y2 = X1 + S + Z2, the destination
// hears Y3 = X1 + X2 + S + Z3. All values linear scale.
struct GaussianRelayParams {
  double P1;
  double P2;
  double N2;
  double N3;
  double Q;
  void validate() const;
};

// Two-component source: X1 = (X1R, X1D); the relay link carries only X1R and
// only X1D knows the state. Y2 = X1R + S + Z2, Y3 = X1D + X2 + S + Z3.
struct HyperSourceParams {
  double P1R;
  double P1D;
  double P2;
  double N2;
  double N3;
  double Q;
  void validate() const;
};

// Free parameters of the state-description lower bound.
struct StateDescParamPoint {
  double P1r;
  double P1d;
  double theta;
  double rho12;
  double rho1s;
  double alpha;
};

struct BoundResult {
  double rate = 0.0;
  std::map<std::string, double> argmax;
  // "relay-cut" | "mac-cut" | "unconstrained" | "infeasible"
  std::string active_term;
  std::map<std::string, double> details;
  bool feasible = true;
};

// Grid controls handed through to the optimize module; empty coarse_steps
// uses the per-dimension defaults.
struct GridConfig {
  std::vector<int> coarse_steps;
  int refine_rounds = 4;
  double refine_shrink = 0.25;
};

struct StateDescOptions {
  bool theta_zero_only = false;
  GridConfig grid;
};

// R(alpha,P,Q,N) = 0.5*log2(P(P+Q+N)/(PQ(1-alpha)^2 + N(P+alpha^2 Q))).
// P = 0 returns 0; N <= 0 is a domain error. May be negative away from the
// Costa point; the bounds' feasibility conditions use that sign.
double fn_R(double alpha, double P, double Q, double N);

// Q_tilde(t,Q,D) = (1-t)^2 Q - t(t-2) D.
double q_tilde(double t, double Q, double D);

BoundResult lb_input_description_at(const GaussianRelayParams& p,
                                    double gamma);
BoundResult lb_input_description(const GaussianRelayParams& p,
                                 const GridConfig& grid = {});

BoundResult lb_state_description_at(const GaussianRelayParams& p,
                                    const StateDescParamPoint& pt);
BoundResult lb_state_description(const GaussianRelayParams& p,
                                 const StateDescOptions& opts = {});

BoundResult ub_hyper_at(const HyperSourceParams& h, double rho12,
                        double rho1s);
BoundResult ub_hyper(const HyperSourceParams& h, const GridConfig& grid = {});
BoundResult lb_hyper(const HyperSourceParams& h, const GridConfig& grid = {});

// Capacity when the state is absent from the relay link (Y2 = X1R + Z2):
// the converse and the achievability coincide, and the expression is the
// hyper-source upper bound with no state on the relay term.
BoundResult capacity_dest_only(const HyperSourceParams& h,
                               const GridConfig& grid = {});

// Capacity of the orthogonal-components model: X1 = (X1R, X1D) with
// Y2 = X1R + Z2 and Y3 = X1D + X2 + Z3 (no state on either link here).
BoundResult capacity_orthogonal(const GaussianRelayParams& p,
                                const GridConfig& grid = {});

// Cut-set bound of the general model, evaluated for jointly Gaussian inputs
// with correlation rho: max over rho in [0,1] of
// min{0.5*log2(1+(1-rho^2)P1(1/N2+1/N3)), 0.5*log2(1+(P1+P2+2rho*sqrt(P1P2))/N3)}.
// Solved by bisection on the crossing of the two terms: the first is
// decreasing in rho and the second increasing, so this is exact.
BoundResult cutset_gaussian(const GaussianRelayParams& p);

// Classical full decode-and-forward with the state treated as noise on both
// links: max over rho of min{0.5*log2(1+(1-rho^2)P1/(N2+Q)),
// 0.5*log2(1+(P1+P2+2rho*sqrt(P1P2))/(N3+Q))}. Unlike the cut-set's
// broadcast term, the relay decodes alone, so the destination's observation
// does not appear in the first term.
BoundResult baseline_df_state_as_noise(const GaussianRelayParams& p);

enum class ExtremeCase { RelayNoiseZero, StateInfinite, RelayLinkBroken };

double extreme_case(const GaussianRelayParams& p, ExtremeCase which);
double extreme_case(const HyperSourceParams& h, ExtremeCase which);

namespace detail {

// Closed-form evaluation shared by the optimized ops and their _at variants.
// status: 0 evaluated, 1 theorem feasibility violated, 2 parameters outside
// the domain.
struct StateDescEval {
  int status;
  double rate;
  double term_relay;
  double term_mac;
  double term_mac_base;
  double coop;
  double direct;
  double D;
  double xi;
  double q_tilde;
  double alpha2;
  double P_u;
};

StateDescEval eval_state_desc(const GaussianRelayParams& p, double P1r,
                              double P1d, double theta, double rho12,
                              double rho1s, double alpha);

struct HyperEval {
  bool valid;
  double rate;
  double term_relay_cut;
  double term_mac_cut;
  double zeta;
};

// q_on_relay = 0 gives the upper bound / destination-only capacity; Q gives
// the lower bound whose relay term takes the state as noise.
HyperEval eval_hyper(const HyperSourceParams& h, double rho12, double rho1s,
                     double q_on_relay);

double half_log1p_snr(double signal, double noise);

}  // namespace detail

}  // namespace gauss_bounds
