#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "relaycap/gauss_mi.h"

using gauss_mi::DegenerateEntropy;
using gauss_mi::GaussianSystem;
using gauss_mi::InfiniteInformation;
using gauss_mi::NameList;

namespace {

GaussianSystem single(const std::string& name, double var) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = var;
  return GaussianSystem({name}, m);
}

GaussianSystem independent_pair(double va, double vb) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = va;
  m(1, 1) = vb;
  return GaussianSystem({"A", "B"}, m);
}

GaussianSystem random_system(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = u(gen);
  Eigen::MatrixXd cov = r * r.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  NameList names;
  for (int i = 0; i < n; ++i) names.push_back("V" + std::to_string(i));
  return GaussianSystem(names, cov);
}

}  // namespace

TEST_CASE("system validation") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(GaussianSystem({"A"}, m), std::invalid_argument);
  CHECK_THROWS_AS(GaussianSystem({"A", "A"}, m), std::invalid_argument);

  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(GaussianSystem({"A", "B"}, asym), std::invalid_argument);

  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianSystem({"A", "B"}, indef), std::invalid_argument);

  Eigen::MatrixXd near(2, 2);
  near << 1.0, 1.0, 1.0, 1.0 - 1e-12;
  GaussianSystem sys({"A", "B"}, near);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.cov());
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("extend_linear bilinear rule") {
  auto sys = single("S", 1.0).extend_linear("Y", {{"S", 1.0}}, 1.0);
  CHECK(sys.cov()(sys.index_of("Y"), sys.index_of("Y")) == doctest::Approx(2.0));
  CHECK(sys.cov()(sys.index_of("Y"), sys.index_of("S")) == doctest::Approx(1.0));

  const double p = 3.0, d = 0.7;
  const double a = 1.0 - d / p;
  auto quant = single("X", p)
                   .extend_linear("Xhat", {{"X", a}}, d * (1.0 - d / p))
                   .extend_linear("Err", {{"X", 1.0}, {"Xhat", -1.0}}, 0.0);
  CHECK(quant.variance("Xhat") == doctest::Approx(p - d));
  CHECK(quant.variance("Err") == doctest::Approx(d));

  CHECK_THROWS_AS(single("X", 1.0).extend_linear("Y", {{"Z", 1.0}}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(single("X", 1.0).extend_linear("X", {{"X", 1.0}}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(single("X", 1.0).extend_linear("Y", {{"X", 1.0}}, -1.0),
                  std::invalid_argument);
}

TEST_CASE("entropy closed forms") {
  auto one = single("X", 1.0);
  CHECK(gauss_mi::entropy(one, {"X"}) == doctest::Approx(2.047095).epsilon(1e-6));

  auto two = independent_pair(1.0, 1.0);
  CHECK(gauss_mi::entropy(two, {"A", "B"}) ==
        doctest::Approx(2.0 * 2.047095).epsilon(1e-6));

  auto copy = single("X", 1.0).extend_linear("X2", {{"X", 1.0}}, 0.0);
  CHECK_THROWS_AS(gauss_mi::entropy(copy, {"X", "X2"}), DegenerateEntropy);
  try {
    gauss_mi::entropy(copy, {"X", "X2"});
  } catch (const DegenerateEntropy& e) {
    CHECK(std::abs(e.determinant()) <= 1e-300);
  }
}

TEST_CASE("mutual information closed forms") {
  auto sys = independent_pair(1.0, 1.0)
                 .extend_linear("Y", {{"A", 1.0}, {"B", 1.0}}, 0.0);
  CHECK(gauss_mi::mutual_information(sys, {"A"}, {"Y"}) ==
        doctest::Approx(0.5).epsilon(1e-12));

  CHECK(std::abs(gauss_mi::mutual_information(independent_pair(2.0, 3.0),
                                              {"A"}, {"B"})) <= 1e-12);

  auto copy = single("X", 1.0).extend_linear("X2", {{"X", 1.0}}, 0.0);
  CHECK_THROWS_AS(gauss_mi::mutual_information(copy, {"X"}, {"X2"}),
                  InfiniteInformation);
  CHECK_THROWS_AS(gauss_mi::mutual_information(copy, {"X"}, {"X"}),
                  std::invalid_argument);

  auto sing = copy.extend_linear("W", {}, 1.0);
  CHECK_THROWS_AS(gauss_mi::mutual_information(sing, {"X", "X2"}, {"W"}),
                  DegenerateEntropy);
}

TEST_CASE("mutual information symmetry is exact") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 10; ++t) {
    auto sys = random_system(gen, 6);
    NameList a = {"V0", "V3"}, b = {"V1", "V4", "V5"};
    CHECK(gauss_mi::mutual_information(sys, a, b) ==
          gauss_mi::mutual_information(sys, b, a));
  }
}

TEST_CASE("conditional mi basics") {
  auto sys = independent_pair(1.0, 1.0)
                 .extend_linear("Y", {{"A", 1.0}, {"B", 1.0}}, 0.0)
                 .extend_linear("C", {}, 4.0);
  const double plain = gauss_mi::mutual_information(sys, {"A"}, {"Y"});
  CHECK(gauss_mi::conditional_mi(sys, {"A"}, {"Y"}, {"C"}) ==
        doctest::Approx(plain).epsilon(1e-12));
  CHECK(gauss_mi::conditional_mi(sys, {"A"}, {"Y"}, {}) ==
        doctest::Approx(plain).epsilon(1e-12));

  auto copy = sys.extend_linear("A2", {{"A", 1.0}}, 0.0);
  CHECK(gauss_mi::conditional_mi(copy, {"Y"}, {"A"}, {"A2"}) == 0.0);
  CHECK(gauss_mi::conditional_mi(copy, {"A"}, {"Y"}, {"A2"}) == 0.0);

  CHECK_THROWS_AS(gauss_mi::conditional_mi(sys, {"A"}, {"Y"}, {"A"}),
                  std::invalid_argument);
}

TEST_CASE("conditional mi matches hand value on relay triple") {
  // Y3 = X1D + X2 + S + Z3 with everything independent and unit P1D, N3.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = 1.0;   // X1D
  m(1, 1) = 2.0;   // X2
  m(2, 2) = 5.0;   // S
  m(3, 3) = 1.0;   // Z3
  GaussianSystem sys({"X1D", "X2", "S", "Z3"}, m);
  sys = sys.extend_linear(
      "Y3", {{"X1D", 1.0}, {"X2", 1.0}, {"S", 1.0}, {"Z3", 1.0}}, 0.0);
  CHECK(gauss_mi::conditional_mi(sys, {"X1D"}, {"Y3"}, {"X2", "S"}) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("chain consistency on random systems") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 20; ++t) {
    auto sys = random_system(gen, 5);
    NameList a = {"V0"}, b = {"V1", "V2"}, c = {"V3", "V4"};
    const double joint = gauss_mi::mutual_information(
        sys, a, {"V1", "V2", "V3", "V4"});
    const double chain = gauss_mi::mutual_information(sys, a, c) +
                         gauss_mi::conditional_mi(sys, a, b, c);
    CHECK(joint == doctest::Approx(chain).epsilon(1e-9));
  }
}

TEST_CASE("nonnegativity and data processing") {
  std::mt19937_64 gen(13);
  for (int t = 0; t < 20; ++t) {
    auto sys = random_system(gen, 5);
    CHECK(gauss_mi::mutual_information(sys, {"V0", "V1"}, {"V2", "V3"}) >=
          -1e-9);
    auto noisy = sys.extend_linear("Y", {{"V0", 1.0}}, 0.5);
    CHECK(gauss_mi::mutual_information(noisy, {"V1", "V2"}, {"Y"}) <=
          gauss_mi::mutual_information(noisy, {"V1", "V2"}, {"V0"}) + 1e-9);
  }
}

TEST_CASE("monte carlo estimator") {
  auto sys = single("X", 1.0).extend_linear("Y", {{"X", 1.0}}, 1.0);
  auto est = gauss_mi::mc_mi_estimate(sys, {"X"}, {"Y"}, 100000, 42);
  CHECK(std::abs(est.estimate - 0.5) <= 3.0 * est.std_error);
  CHECK(est.std_error > 0.0);

  auto indep = independent_pair(1.0, 2.0);
  auto zero = gauss_mi::mc_mi_estimate(indep, {"A"}, {"B"}, 50000, 9);
  CHECK(std::abs(zero.estimate) <= 3.0 * zero.std_error);

  auto again = gauss_mi::mc_mi_estimate(sys, {"X"}, {"Y"}, 100000, 42);
  CHECK(est.estimate == again.estimate);
  CHECK(est.std_error == again.std_error);

  CHECK_THROWS_AS(gauss_mi::mc_mi_estimate(sys, {"X"}, {"Y"}, 100, 1),
                  std::invalid_argument);

  auto copy = single("X", 1.0).extend_linear("X2", {{"X", 1.0}}, 0.0);
  CHECK_THROWS_AS(gauss_mi::mc_mi_estimate(copy, {"X"}, {"X2"}, 2000, 1),
                  std::runtime_error);
}

TEST_CASE("monte carlo brackets exact value on random systems") {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 5; ++t) {
    auto sys = random_system(gen, 5);
    NameList a = {"V0", "V1"}, b = {"V2", "V3", "V4"};
    const double exact = gauss_mi::mutual_information(sys, a, b);
    auto est = gauss_mi::mc_mi_estimate(sys, a, b, 20000,
                                        1000 + static_cast<std::uint64_t>(t));
    CHECK(std::abs(est.estimate - exact) <= 3.0 * est.std_error);
  }
}
