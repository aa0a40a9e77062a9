#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "ensobs/observability.hpp"

using namespace ensobs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LinearSystem example1(bool observable_output) {
  LinearSystem sys;
  sys.a.resize(2, 2);
  sys.a << -1, 1, 0, 0;
  sys.c.resize(1, 2);
  if (observable_output)
    sys.c << 1, 0;  // C''
  else
    sys.c << 0, 1;  // C'
  return sys;
}

LinearSystem system14() {
  LinearSystem sys;
  sys.a = Eigen::Vector3d(0, -1, -2).asDiagonal();
  sys.c.resize(1, 3);
  sys.c << 1, 1, 1;
  return sys;
}

LinearSystem rotation_example() {
  LinearSystem sys;
  sys.a.resize(3, 3);
  sys.a << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  sys.c.resize(1, 3);
  sys.c << 1, 1, std::sqrt(2.0);
  return sys;
}

MatrixXd random_matrix(int rows, int cols, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// Random system with a built-in unobservable block, returned together with a
// vector from the unobservable subspace.
std::pair<LinearSystem, VectorXd> random_unobservable(int n, int n_unobs, std::mt19937& rng) {
  MatrixXd a = random_matrix(n, n, rng);
  // block form: the trailing n_unobs states never reach the output
  a.topRightCorner(n - n_unobs, n_unobs).setZero();
  MatrixXd c = random_matrix(1, n, rng);
  c.rightCols(n_unobs).setZero();
  // rotate into generic coordinates
  Eigen::HouseholderQR<MatrixXd> qr(random_matrix(n, n, rng));
  const MatrixXd q = qr.householderQ();
  LinearSystem sys{q * a * q.transpose(), c * q.transpose()};
  VectorXd v = q * VectorXd::Unit(n, n - 1);
  return {sys, v};
}

}  // namespace

TEST_CASE("observability matrix on the worked two-dimensional system") {
  const LinearSystem obs = example1(true);
  MatrixXd stack = observability_matrix(obs);
  MatrixXd expected(2, 2);
  expected << 1, 0, -1, 1;
  CHECK((stack - expected).norm() < 1e-15);
  CHECK(numerical_rank(stack) == 2);

  const LinearSystem unobs = example1(false);
  stack = observability_matrix(unobs);
  expected << 0, 1, 0, 0;
  CHECK((stack - expected).norm() < 1e-15);
  CHECK(numerical_rank(stack) == 1);

  LinearSystem full{MatrixXd::Random(3, 3), MatrixXd::Identity(3, 3)};
  CHECK(numerical_rank(observability_matrix(full)) == 3);
}

TEST_CASE("unobservable subspace of the worked system") {
  const MatrixXd basis = unobservable_subspace(example1(false));
  REQUIRE(basis.cols() == 1);
  CHECK(std::abs(std::abs(basis(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(basis(1, 0)) < 1e-12);

  CHECK(unobservable_subspace(example1(true)).cols() == 0);

  LinearSystem blind{MatrixXd::Random(3, 3), MatrixXd::Zero(1, 3)};
  CHECK(unobservable_subspace(blind).cols() == 3);
}

TEST_CASE("unobservable directions are invisible along the whole flow") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto [sys, v] = random_unobservable(3 + trial % 2, 1, rng);
    const MatrixXd basis = unobservable_subspace(sys);
    REQUIRE(basis.cols() >= 1);
    for (int k = 0; k < basis.cols(); ++k)
      for (double t = 0.0; t <= 10.0; t += 0.5)
        CHECK((sys.c * (sys.a * t).exp() * basis.col(k)).norm() < 1e-8);
  }
}

TEST_CASE("hautus test on the worked systems") {
  for (const auto& e : hautus_test(system14())) CHECK(e.rank_deficiency == 0);
  CHECK(hautus_observable(system14()));

  LinearSystem repeated{MatrixXd::Zero(2, 2), MatrixXd::Zero(1, 2)};
  repeated.c << 1, 0;
  bool deficient = false;
  for (const auto& e : hautus_test(repeated)) {
    CHECK(std::abs(e.eigenvalue) < 1e-12);
    if (e.rank_deficiency >= 1) deficient = true;
  }
  CHECK(deficient);

  // complex spectrum handled in complex arithmetic
  for (const auto& e : hautus_test(rotation_example())) CHECK(e.rank_deficiency == 0);
}

TEST_CASE("kalman and hautus verdicts agree on random systems") {
  std::mt19937 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 4;
    const int m = 1 + trial % 2;
    LinearSystem sys{random_matrix(n, n, rng), random_matrix(m, n, rng)};
    if (trial % 5 == 0) {
      auto [unobs, v] = random_unobservable(n, 1, rng);
      sys = unobs;
    }
    const bool kalman = unobservable_subspace(sys).cols() == 0;
    const bool hautus = hautus_observable(sys);
    CHECK(kalman == hautus);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("tensor observability finds the order-2 obstruction of system (14)") {
  const TensorObservability to = tensor_observability(system14(), 2);
  CHECK_FALSE(to.observable);
  REQUIRE(to.unobs_basis.cols() == 1);
  VectorXd a(6);
  a << 0, 0, -1.0 / std::sqrt(2.0), 1, 0, 0;
  a.normalize();
  const double cosine = std::abs(to.unobs_basis.col(0).dot(a));
  CHECK(cosine > 1.0 - 1e-10);

  CHECK(tensor_observability(example1(true), 2).observable);

  // order-1 lift is the system itself
  for (bool flag : {true, false}) {
    const LinearSystem sys = example1(flag);
    CHECK(tensor_observability(sys, 1).observable == (unobservable_subspace(sys).cols() == 0));
  }
}

TEST_CASE("duality: kernel vectors kill lifted output rows and only them") {
  const LinearSystem sys = system14();
  const int p = 2;
  const TensorObservability to = tensor_observability(sys, p);
  REQUIRE(to.unobs_basis.cols() == 1);
  const VectorXd a = to.unobs_basis.col(0);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> tdist(0.0, 5.0), zdist(-2.0, 2.0);
  const MultiIndexBasis basis = enumerate_basis(sys.n(), p);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = tdist(rng);
    const double z = zdist(rng);
    const VectorXd lifted = lift_vector(((sys.c * (sys.a * t).exp()).transpose() * z), basis);
    CHECK(std::abs(a.dot(lifted)) < 1e-8 * (1.0 + lifted.norm()));
  }
  // a direction outside the kernel is seen at some sample
  VectorXd outside = VectorXd::Unit(6, 0);
  double best = 0.0;
  for (double t = 0.0; t <= 5.0; t += 0.25) {
    const VectorXd lifted = lift_vector((sys.c * (sys.a * t).exp()).transpose(), basis);
    best = std::max(best, std::abs(outside.dot(lifted)));
  }
  CHECK(best > 0.1);
}

TEST_CASE("variety polynomial extraction") {
  const MultiIndexBasis basis = enumerate_basis(3, 2);
  VectorXd a(6);
  a << 0, 0, -1.0 / std::sqrt(2.0), 1, 0, 0;
  const VarietyPolynomial poly = variety_from_kernel(a, basis);
  REQUIRE(poly.size() == 2);
  CHECK(poly.at({0, 2, 0}) == doctest::Approx(1.0));
  CHECK(poly.at({1, 0, 1}) == doctest::Approx(-1.0));
  CHECK(polynomial_to_string(poly) == "x2^2 - x1*x3 = 0");

  const VarietyPolynomial first = variety_from_kernel(VectorXd::Unit(6, 0), basis);
  REQUIRE(first.size() == 1);
  CHECK(first.at({2, 0, 0}) == doctest::Approx(1.0));
  CHECK(polynomial_to_string(first) == "x1^2 = 0");

  const VarietyPolynomial last = variety_from_kernel(VectorXd::Unit(6, 5), basis);
  CHECK(last.at({0, 0, 2}) == doctest::Approx(1.0));

  CHECK_THROWS_AS(variety_from_kernel(VectorXd::Zero(6), basis), std::invalid_argument);
}

TEST_CASE("richness check: truncated verdicts") {
  const RichnessResult blocked = richness_check(system14(), 3);
  CHECK_FALSE(blocked.rich_up_to_pmax);
  CHECK(blocked.orders[0].observable);
  CHECK_FALSE(blocked.orders[1].observable);
  REQUIRE(blocked.orders[1].blocking_varieties.size() == 1);
  CHECK(polynomial_to_string(blocked.orders[1].blocking_varieties[0]) == "x2^2 - x1*x3 = 0");

  const RichnessResult rich = richness_check(example1(true), 4);
  CHECK(rich.rich_up_to_pmax);
  for (const auto& order : rich.orders) CHECK(order.observable);

  const RichnessResult unobs = richness_check(example1(false), 2);
  CHECK_FALSE(unobs.orders[0].observable);
}

TEST_CASE("rational independence search") {
  Eigen::Vector3d lambda(0, -1, -2);
  const RationalIndependence dep = rational_independence_test(lambda, 2);
  CHECK_FALSE(dep.independent);
  REQUIRE(dep.witness.has_value());
  Eigen::Vector3i expected(1, -2, 1);
  CHECK(*dep.witness == expected);

  Eigen::Vector2d pair(0, -1);
  CHECK(rational_independence_test(pair, 10).independent);

  Eigen::Vector3d irrational(0, -1, -std::sqrt(2.0));
  CHECK(rational_independence_test(irrational, 10, 1e-9).independent);

  Eigen::Vector3d repeated(0, 0, 1);
  CHECK_THROWS_AS(rational_independence_test(repeated, 2), std::invalid_argument);
}

TEST_CASE("independence-constrained test: rotation example fails with the known witness") {
  const ConstrainedHautus failed = constrained_hautus_independence(rotation_example(), 2);
  CHECK_FALSE(failed.passes);
  REQUIRE(failed.witness.has_value());
  VectorXd expected(6);
  expected << 1, 0, 0, 1, 0, -1;
  expected.normalize();
  CHECK(std::abs(failed.witness->normalized().dot(expected)) > 1.0 - 1e-8);

  // system (14) is rescued by independence
  CHECK(constrained_hautus_independence(system14(), 2).passes);

  // fully observable lift passes trivially
  CHECK(constrained_hautus_independence(example1(true), 2).passes);
}

TEST_CASE("analyze aggregates the report") {
  const ObservabilityReport report = analyze(system14(), 3, 2, kDefaultRankTol, true);
  CHECK(report.classical_observable);
  CHECK_FALSE(report.richness.rich_up_to_pmax);
  REQUIRE(report.rational_independence.has_value());
  CHECK_FALSE(report.rational_independence->independent);
  REQUIRE(report.independence_constrained.size() == 3);
  CHECK(report.independence_constrained[1].passes);

  const ObservabilityReport unobs = analyze(example1(false), 2, 2);
  CHECK_FALSE(unobs.classical_observable);
  CHECK(unobs.unobs_basis.cols() == 1);
}

TEST_CASE("principal angles") {
  MatrixXd u = MatrixXd::Identity(4, 2);
  MatrixXd v(4, 1);
  v << 1, 0, 0, 0;
  const VectorXd angles = principal_angles(u, v);
  REQUIRE(angles.size() == 1);
  CHECK(angles[0] < 1e-12);

  MatrixXd w(4, 1);
  w << 0, 0, 0, 1;
  CHECK(principal_angles(u, w)[0] == doctest::Approx(M_PI / 2));
}
