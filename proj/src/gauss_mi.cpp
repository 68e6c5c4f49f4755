#include "relaycap/gauss_mi.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace gauss_mi {
namespace {

constexpr double kTwoPiE = 17.079468445347134;
constexpr double kDetFloor = 1e-300;

struct Det {
  long double value;
  double log2_abs;
};

// Determinant through a fully pivoted LU factorization. The sign and the
// magnitude are tracked separately; pivot logs accumulate in extended
// precision so 20x20 systems with variances spanning many decades stay exact
// to the last bit that matters.
Det log_det(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return {1.0L, 0.0};
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  long double value =
      static_cast<long double>(lu.permutationP().determinant()) *
      static_cast<long double>(lu.permutationQ().determinant());
  long double log2_abs = 0.0L;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const long double pivot = lu.matrixLU()(i, i);
    value *= pivot;
    if (pivot != 0.0L) log2_abs += std::log2(std::abs(pivot));
  }
  return {value, static_cast<double>(log2_abs)};
}

void check_name_set(const GaussianSystem& sys, const NameList& vars,
                    const char* which) {
  if (vars.empty()) {
    throw std::invalid_argument(std::string(which) +
                                " variable set must not be empty");
  }
  std::set<std::string> seen;
  for (const auto& v : vars) {
    sys.index_of(v);
    if (!seen.insert(v).second) {
      throw std::invalid_argument(std::string(which) +
                                  " set repeats variable '" + v + "'");
    }
  }
}

void check_disjoint(const NameList& a, const NameList& b, const char* what) {
  std::set<std::string> sa(a.begin(), a.end());
  for (const auto& v : b) {
    if (sa.count(v)) {
      throw std::invalid_argument(std::string("variable '") + v +
                                  "' appears in both " + what);
    }
  }
}

NameList set_union(const NameList& a, const NameList& b) {
  NameList u = a;
  u.insert(u.end(), b.begin(), b.end());
  return u;
}

double product_of_variances(const GaussianSystem& sys, const NameList& vars) {
  double p = 1.0;
  for (const auto& v : vars) p *= std::max(sys.variance(v), 0.0);
  return p;
}

}  // namespace

GaussianSystem::GaussianSystem(NameList names, Eigen::MatrixXd cov)
    : names_(std::move(names)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols()) {
    throw std::invalid_argument("covariance matrix must be square");
  }
  if (static_cast<Eigen::Index>(names_.size()) != cov_.rows()) {
    throw std::invalid_argument(
        "variable name count does not match covariance dimension");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<Eigen::Index>(i)).second) {
      throw std::invalid_argument("duplicate variable name '" + names_[i] +
                                  "'");
    }
  }
  if (cov_.rows() == 0) return;

  const double scale = cov_.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < cov_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < cov_.cols(); ++j) {
      const double diff = std::abs(cov_(i, j) - cov_(j, i));
      const double tol =
          1e-12 * std::max({std::abs(cov_(i, j)), std::abs(cov_(j, i)), scale});
      if (diff > tol) {
        std::ostringstream os;
        os << "covariance is not symmetric at (" << names_[i] << ","
           << names_[j] << "): " << cov_(i, j) << " vs " << cov_(j, i);
        throw std::invalid_argument(os.str());
      }
    }
  }
  cov_ = (0.5 * (cov_ + cov_.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_);
  if (es.info() != Eigen::Success) {
    throw std::invalid_argument("covariance eigendecomposition failed");
  }
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < -1e-9 * std::max(lmax, 0.0)) {
    std::ostringstream os;
    os << "covariance is not positive semidefinite: eigenvalue " << lmin
       << " against largest " << lmax;
    throw std::invalid_argument(os.str());
  }
  if (lmin < 0.0) {
    const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    cov_ = es.eigenvectors() * clamped.asDiagonal() *
           es.eigenvectors().transpose();
    cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
  }
}

bool GaussianSystem::has(const std::string& name) const {
  return index_.count(name) > 0;
}

Eigen::Index GaussianSystem::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown variable '" + name + "'");
  }
  return it->second;
}

double GaussianSystem::variance(const std::string& name) const {
  const Eigen::Index i = index_of(name);
  return cov_(i, i);
}

GaussianSystem GaussianSystem::extend_linear(
    const std::string& new_name,
    const std::vector<std::pair<std::string, double>>& coeffs,
    double noise_var) const {
  if (has(new_name)) {
    throw std::invalid_argument("variable '" + new_name + "' already exists");
  }
  if (noise_var < 0.0) {
    throw std::invalid_argument("noise variance must be nonnegative");
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(cov_.rows());
  std::set<std::string> seen;
  for (const auto& [name, coeff] : coeffs) {
    if (!seen.insert(name).second) {
      throw std::invalid_argument("coefficient for '" + name +
                                  "' given twice");
    }
    c(index_of(name)) = coeff;
  }

  const Eigen::Index n = cov_.rows();
  Eigen::MatrixXd ext(n + 1, n + 1);
  ext.topLeftCorner(n, n) = cov_;
  const Eigen::VectorXd cross = cov_ * c;
  ext.block(0, n, n, 1) = cross;
  ext.block(n, 0, 1, n) = cross.transpose();
  ext(n, n) = c.dot(cross) + noise_var;

  NameList names = names_;
  names.push_back(new_name);
  return GaussianSystem(std::move(names), std::move(ext));
}

Eigen::MatrixXd GaussianSystem::cov_of(const NameList& vars) const {
  std::vector<Eigen::Index> idx;
  idx.reserve(vars.size());
  for (const auto& v : vars) idx.push_back(index_of(v));
  std::sort(idx.begin(), idx.end());
  Eigen::MatrixXd sub(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cov_(idx[i], idx[j]);
    }
  }
  return sub;
}

double entropy(const GaussianSystem& sys, const NameList& vars) {
  check_name_set(sys, vars, "entropy");
  const Det det = log_det(sys.cov_of(vars));
  if (!(det.value > kDetFloor)) {
    std::ostringstream os;
    os << "entropy is degenerate: determinant "
       << static_cast<double>(det.value);
    throw DegenerateEntropy(os.str(), static_cast<double>(det.value));
  }
  const double k = static_cast<double>(vars.size());
  return 0.5 * (k * std::log2(kTwoPiE) + det.log2_abs);
}

double mutual_information(const GaussianSystem& sys, const NameList& a,
                          const NameList& b) {
  check_name_set(sys, a, "first");
  check_name_set(sys, b, "second");
  check_disjoint(a, b, "arguments of mutual_information");

  const Det det_a = log_det(sys.cov_of(a));
  if (!(det_a.value > kDetFloor)) {
    throw DegenerateEntropy("singular covariance of the first argument",
                            static_cast<double>(det_a.value));
  }
  const Det det_b = log_det(sys.cov_of(b));
  if (!(det_b.value > kDetFloor)) {
    throw DegenerateEntropy("singular covariance of the second argument",
                            static_cast<double>(det_b.value));
  }
  const Det det_ab = log_det(sys.cov_of(set_union(a, b)));
  if (!(det_ab.value > kDetFloor)) {
    throw InfiniteInformation(
        "joint covariance is singular while the marginals are not");
  }
  return 0.5 * (det_a.log2_abs + det_b.log2_abs - det_ab.log2_abs);
}

double conditional_mi(const GaussianSystem& sys, const NameList& a,
                      const NameList& b, const NameList& c) {
  if (c.empty()) return mutual_information(sys, a, b);
  check_name_set(sys, a, "first");
  check_name_set(sys, b, "second");
  check_name_set(sys, c, "conditioning");
  check_disjoint(a, b, "arguments of conditional_mi");
  check_disjoint(a, c, "the first argument and the conditioning set");
  check_disjoint(b, c, "the second argument and the conditioning set");

  const Det det_c = log_det(sys.cov_of(c));
  if (!(det_c.value > kDetFloor)) {
    throw DegenerateEntropy("singular conditioning covariance",
                            static_cast<double>(det_c.value));
  }
  const Det det_ac = log_det(sys.cov_of(set_union(a, c)));
  const Det det_bc = log_det(sys.cov_of(set_union(b, c)));

  // Conditional covariance volume of a set given C. When it collapses the
  // set is measurable from C and the conditional information is zero.
  const long double cond_a = det_ac.value / det_c.value;
  const long double cond_b = det_bc.value / det_c.value;
  if (cond_a < 1e-12 * product_of_variances(sys, a) ||
      !(cond_a > kDetFloor)) {
    return 0.0;
  }
  if (cond_b < 1e-12 * product_of_variances(sys, b) ||
      !(cond_b > kDetFloor)) {
    return 0.0;
  }

  const Det det_abc = log_det(sys.cov_of(set_union(set_union(a, b), c)));
  if (!(det_abc.value > kDetFloor)) {
    throw InfiniteInformation(
        "joint covariance given the conditioning set is singular");
  }
  return 0.5 * (det_ac.log2_abs + det_bc.log2_abs - det_c.log2_abs -
                det_abc.log2_abs);
}

McEstimate mc_mi_estimate(const GaussianSystem& sys, const NameList& a,
                          const NameList& b, std::size_t samples,
                          std::uint64_t seed) {
  check_name_set(sys, a, "first");
  check_name_set(sys, b, "second");
  check_disjoint(a, b, "arguments of mc_mi_estimate");
  if (samples < 1000) {
    throw std::invalid_argument("mc_mi_estimate needs at least 1000 samples");
  }

  const NameList joint = set_union(a, b);
  const Eigen::MatrixXd sigma_ab = sys.cov_of(joint);
  const Eigen::MatrixXd sigma_a = sys.cov_of(a);
  const Eigen::MatrixXd sigma_b = sys.cov_of(b);

  // cov_of orders rows by the variables' system positions, so recover which
  // joint coordinates belong to A.
  std::vector<Eigen::Index> joint_idx;
  for (const auto& v : joint) joint_idx.push_back(sys.index_of(v));
  std::sort(joint_idx.begin(), joint_idx.end());
  std::set<Eigen::Index> a_idx;
  for (const auto& v : a) a_idx.insert(sys.index_of(v));
  std::vector<Eigen::Index> pos_a, pos_b;
  for (std::size_t i = 0; i < joint_idx.size(); ++i) {
    if (a_idx.count(joint_idx[i])) {
      pos_a.push_back(static_cast<Eigen::Index>(i));
    } else {
      pos_b.push_back(static_cast<Eigen::Index>(i));
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt_ab(sigma_ab);
  Eigen::LLT<Eigen::MatrixXd> llt_a(sigma_a);
  Eigen::LLT<Eigen::MatrixXd> llt_b(sigma_b);
  if (llt_ab.info() != Eigen::Success || llt_a.info() != Eigen::Success ||
      llt_b.info() != Eigen::Success) {
    throw std::runtime_error(
        "mc_mi_estimate requires a positive definite joint covariance");
  }

  auto log2_det_from_llt = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    double s = 0.0;
    const auto diag = llt.matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) s += std::log2(diag(i));
    return 2.0 * s;
  };
  const double const_bits = 0.5 * (log2_det_from_llt(llt_a) +
                                   log2_det_from_llt(llt_b) -
                                   log2_det_from_llt(llt_ab));
  const double inv_2ln2 = 0.5 / std::log(2.0);

  const Eigen::MatrixXd chol = llt_ab.matrixL();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::Index n = sigma_ab.rows();
  Eigen::VectorXd g(n), x(n), xa(static_cast<Eigen::Index>(pos_a.size())),
      xb(static_cast<Eigen::Index>(pos_b.size()));
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(gen);
    x = chol * g;
    for (std::size_t i = 0; i < pos_a.size(); ++i) xa(i) = x(pos_a[i]);
    for (std::size_t i = 0; i < pos_b.size(); ++i) xb(i) = x(pos_b[i]);
    const double q_ab = x.dot(llt_ab.solve(x));
    const double q_a = xa.dot(llt_a.solve(xa));
    const double q_b = xb.dot(llt_b.solve(xb));
    const double w = const_bits + (q_a + q_b - q_ab) * inv_2ln2;
    sum += w;
    sum_sq += w * w;
  }

  const double n_d = static_cast<double>(samples);
  const double mean = sum / n_d;
  const double var = std::max(0.0, (sum_sq - n_d * mean * mean) / (n_d - 1.0));
  return {mean, std::sqrt(var / n_d)};
}

}  // namespace gauss_mi
