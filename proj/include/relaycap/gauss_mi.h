#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gauss_mi {

using NameList = std::vector<std::string>;

// Requested differential entropy does not exist: the covariance of the
// variable set is singular. Carries the offending determinant.
class DegenerateEntropy : public std::runtime_error {
 public:
  DegenerateEntropy(const std::string& what, double determinant)
      : std::runtime_error(what), determinant_(determinant) {}
  double determinant() const { return determinant_; }

 private:
  double determinant_;
};

// I(A;B) diverges: the joint covariance of A and B is singular while both
// marginals are not.
class InfiniteInformation : public std::runtime_error {
 public:
  explicit InfiniteInformation(const std::string& what)
      : std::runtime_error(what) {}
};

// A named set of zero-mean jointly Gaussian variables. Immutable after
// construction; extend_linear returns a new system.
class GaussianSystem {
 public:
  // Validates that cov is square and matches names, that names are unique,
  // that cov is symmetric within 1e-12 relative tolerance, and that the
  // smallest eigenvalue is >= -1e-9 times the largest. Small negative
  // eigenvalues within that band are clamped to zero.
  GaussianSystem(NameList names, Eigen::MatrixXd cov);

  const NameList& names() const { return names_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  std::size_t size() const { return names_.size(); }
  bool has(const std::string& name) const;
  Eigen::Index index_of(const std::string& name) const;
  double variance(const std::string& name) const;

  // Adds new_name = sum_i coeff_i * variable_i + fresh independent noise of
  // variance noise_var. Covariance rows extend by the bilinear rule.
  GaussianSystem extend_linear(
      const std::string& new_name,
      const std::vector<std::pair<std::string, double>>& coeffs,
      double noise_var) const;

  // Sub-covariance of the listed variables, rows ordered canonically by the
  // variables' positions in this system (not by the order given).
  Eigen::MatrixXd cov_of(const NameList& vars) const;

 private:
  NameList names_;
  Eigen::MatrixXd cov_;
  std::map<std::string, Eigen::Index> index_;
};

// Differential entropy of the listed variables in bits:
// 0.5 * log2((2*pi*e)^k * det(Sigma)). Throws DegenerateEntropy if the
// determinant is <= 1e-300.
double entropy(const GaussianSystem& sys, const NameList& vars);

// I(A;B) = 0.5 * log2(det(Sigma_A) det(Sigma_B) / det(Sigma_AB)) in bits.
double mutual_information(const GaussianSystem& sys, const NameList& a,
                          const NameList& b);

// I(A;B|C) in bits. An empty C reduces to mutual_information. If A or B is
// measurable from C (the conditional covariance volume collapses), returns 0.
double conditional_mi(const GaussianSystem& sys, const NameList& a,
                      const NameList& b, const NameList& c);

struct McEstimate {
  double estimate;
  double std_error;
};

// Monte Carlo estimate of I(A;B) by averaging the Gaussian log-density ratio
// over samples drawn from the joint. Deterministic for a fixed seed.
McEstimate mc_mi_estimate(const GaussianSystem& sys, const NameList& a,
                          const NameList& b, std::size_t samples,
                          std::uint64_t seed);

}  // namespace gauss_mi
