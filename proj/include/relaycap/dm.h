#pragma once

#include "relaycap/gauss_bounds.h"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dm {

// Finite-alphabet relay channel with an i.i.d. state. The source input is
// factored as X1 = (X1R, X1D) with flat index x1 = x1r * nX1D + x1d; plain
// channels use nX1D = 1 so that x1 == x1r. Kernel rows are indexed by
// (x1, x2, s) and hold a joint pmf over (y2, y3).
struct DmChannel {
  int nS = 1;
  int nX1R = 1;
  int nX1D = 1;
  int nX2 = 1;
  int nY2 = 1;
  int nY3 = 1;
  std::vector<double> QS;  // size nS
  std::vector<double> W;   // size nX1()*nX2*nS*nY2*nY3

  int nX1() const { return nX1R * nX1D; }
  double& w(int x1, int x2, int s, int y2, int y3);
  double w(int x1, int x2, int s, int y2, int y3) const;
};

// All entries nonnegative, QS sums to 1 within 1e-12, every kernel row sums
// to 1 within 1e-12. Throws std::invalid_argument otherwise.
void validate(const DmChannel& ch);

// A full joint pmf over a declared list of named variables, flattened in
// row-major order (last declared variable varies fastest). `form` names the
// factorization template the measure claims to follow; evaluators verify the
// claim factor by factor before computing anything.
struct DmJoint {
  std::vector<std::string> vars;
  std::vector<int> sizes;
  std::vector<double> p;
  std::string form;

  std::size_t support() const;
  int index_of(const std::string& var) const;  // -1 when absent
  bool has(const std::string& var) const;
};

// Template tags understood by the evaluators and by search_dm:
//   "state-description"  vars S,ShR,ShD,V,U,UR,UD,X1,X2,Y2,Y3
//   "partial-df"         vars S,X2,U,U1,X1,Y2,Y3
//   "input-description"  vars S,U,UR,X1,X,Xh,X2,Y2,Y3
//   "ub"                 vars S,U,X2,V,X1,Y2,Y3
//   "ub-hyper"           vars S,X2,X1R,X1D,Y2,Y3
// Variable names are fixed; alphabet sizes are free. Singleton alphabets
// stand in for absent auxiliaries.

// Pmf and factorization validation for a joint: nonnegative entries, total
// mass 1 within 1e-12, and every conditional-independence factor implied by
// the claimed template holds within 1e-9 in sup norm. Throws
// std::invalid_argument naming the violated factor.
void validate(const DmJoint& joint);

// Checks that the joint's (S, inputs, Y2, Y3) marginal equals
// p(s, inputs) * W(y2,y3|inputs,s) within 1e-9, i.e. that the joint really
// runs through this channel. Throws std::invalid_argument otherwise.
void validate(const DmJoint& joint, const DmChannel& ch);

// I(A;B|C) in bits computed from the joint pmf with 0 log 0 := 0. The three
// sets must be disjoint; every named variable must exist in the joint.
double discrete_mi(const DmJoint& joint, const std::vector<std::string>& a,
                   const std::vector<std::string>& b,
                   const std::vector<std::string>& c = {});

// Outcome of evaluating one rate expression on one joint. `rate` always
// carries the expression value, also when the point is infeasible; `violated`
// names the first failed constraint. Per-term values live in `details`.
struct DmEvalResult {
  double rate = 0.0;
  bool feasible = true;
  std::string violated;
  std::map<std::string, double> details;
};

// Two-description decode-and-forward rate: the min of the relay and
// destination decoding terms, gated by the three description-rate constraints
// and the cooperative-decodability condition. Requires form
// "state-description".
DmEvalResult eval_lb_state_description_dm(const DmJoint& joint);

// Partial decode-and-forward with Gel'fand-Pinsker binning, form "partial-df".
DmEvalResult eval_lb_partial_df_dm(const DmJoint& joint);

// Input-description rate I(U;Y3) - I(U;S) gated by the strict description
// constraint (margin 1e-9), form "input-description".
DmEvalResult eval_lb_input_description_dm(const DmJoint& joint);

// Upper bound min{I(V;Y2,Y3|U,X2) - I(V;S|U,X2), I(V;Y3) - I(V;S)},
// form "ub". Always feasible.
DmEvalResult eval_ub_dm(const DmJoint& joint);

// Hyper-source upper bound min{I(X1R;Y2|X2,S), I(X2;Y3)} + I(X1D;Y3|X2,S),
// form "ub-hyper". Always feasible. details also carries the two cut-set
// terms computed on the same joint for the tightness comparison.
DmEvalResult eval_ub_hyper_dm(const DmJoint& joint);

// Cut-set bound min{I(X1;Y2,Y3|S,X2), I(X1,X2;Y3|S)} for the input joint
// composed with the channel. The joint must carry S, X2 and either X1 or the
// pair (X1R, X1D); extra variables are marginalized out first. The joint's
// S-marginal must match the channel's QS within 1e-9.
DmEvalResult eval_cutset_dm(const DmJoint& joint, const DmChannel& ch);

// Composes an input joint over (S, X1 or (X1R,X1D), X2) with the channel
// kernel, appending Y2 and Y3.
DmJoint compose(const DmJoint& inputs, const DmChannel& ch);

// Draws a random joint of the given template: each free conditional factor is
// sampled from a flat Dirichlet per conditioning cell; QS and the kernel come
// from the channel. aux_sizes maps auxiliary variable names to alphabet
// sizes; missing names default to singletons. Deterministic per seed.
DmJoint random_joint(const DmChannel& ch, const std::string& form,
                     const std::map<std::string, int>& aux_sizes,
                     std::uint64_t seed);

// Best evaluator value over `restarts` random template joints, each refined
// by coordinate-wise hill climbing on the free conditionals. Deterministic
// per seed; the restart stream is prefix-stable, so a larger restart count
// never lowers the result. Throws std::invalid_argument when the template's
// joint support would exceed 1e6 entries. When best_out is non-null it
// receives the maximizing joint.
gauss_bounds::BoundResult search_dm(const DmChannel& ch,
                                    const std::string& evaluator,
                                    const std::map<std::string, int>& aux_sizes,
                                    int restarts, std::uint64_t seed,
                                    DmJoint* best_out = nullptr);

// Flat-text serialization. The grammar lives in docs/file-formats.md.
DmChannel load_channel(const std::string& path);
void save_channel(const std::string& path, const DmChannel& ch);
DmJoint load_joint(const std::string& path);
void save_joint(const std::string& path, const DmJoint& joint);

}  // namespace dm
