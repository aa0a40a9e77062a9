#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "ensobs/ensemble.hpp"

using namespace ensobs;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

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

// The bimodal reconstruction target used throughout the experiments.
GaussianMixture bimodal() {
  GaussianMixture mix;
  mix.weights = {0.7, 0.3};
  mix.means = {Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 1)};
  mix.covariances = {Eigen::Vector2d(0.09, 0.09).asDiagonal(),
                     Eigen::Vector2d(0.04, 0.04).asDiagonal()};
  return mix;
}

// Closed-form scalar Gaussian moments via the Hermite-style recursion
// m_p = mu m_{p-1} + (p-1) sigma^2 m_{p-2}, independent of the library path.
double scalar_gaussian_moment_oracle(double mu, double var, int p) {
  std::vector<double> m(p + 1);
  m[0] = 1.0;
  if (p >= 1) m[1] = mu;
  for (int q = 2; q <= p; ++q) m[q] = mu * m[q - 1] + (q - 1) * var * m[q - 2];
  return m[p];
}

}  // namespace

TEST_CASE("mixture validation") {
  GaussianMixture mix = bimodal();
  CHECK_NOTHROW(mix.validate());

  GaussianMixture bad_weights = bimodal();
  bad_weights.weights = {0.7, 0.4};
  CHECK_THROWS_AS(bad_weights.validate(), std::invalid_argument);

  GaussianMixture degenerate = bimodal();
  degenerate.covariances[0] = MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(degenerate.validate(), std::invalid_argument);

  GaussianMixture asymmetric = bimodal();
  asymmetric.covariances[0](0, 1) = 0.5;
  CHECK_THROWS_AS(asymmetric.validate(), std::invalid_argument);
}

TEST_CASE("pushforward identity and dimension checks") {
  const GaussianMixture mix = bimodal();
  const GaussianMixture same = pushforward(mix, MatrixXd::Identity(2, 2));
  for (int k = 0; k < 2; ++k) {
    CHECK((same.means[k] - mix.means[k]).norm() == 0.0);
    CHECK((same.covariances[k] - mix.covariances[k]).norm() == 0.0);
  }
  CHECK_THROWS_AS(pushforward(mix, MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("output variance: system (14) hides the covariance difference") {
  const LinearSystem sys = system14();
  const double sigma2 = 1.0;
  const MatrixXd prime = sigma2 * MatrixXd::Identity(3, 3);
  MatrixXd dblprime(3, 3);
  dblprime << sigma2, 0, -sigma2 / 2, 0, 2 * sigma2, 0, -sigma2 / 2, 0, sigma2;

  for (double t = 0.0; t <= 5.0; t += 0.25) {
    const double expected = (1 + std::exp(-2 * t) + std::exp(-4 * t)) * sigma2;
    CHECK(std::abs(output_variance(sys, prime, t)(0, 0) - expected) < 1e-10);
    CHECK(std::abs(output_variance(sys, dblprime, t)(0, 0) - expected) < 1e-10);
  }

  // matching pushforward of full mixtures
  GaussianMixture g;
  g.weights = {1.0};
  g.means = {Eigen::Vector3d(0.5, -0.5, 1.0)};
  g.covariances = {prime};
  const GaussianMixture pushed = pushforward(g, output_map(sys, 0.7));
  CHECK(std::abs(pushed.covariances[0](0, 0) - output_variance(sys, prime, 0.7)(0, 0)) < 1e-14);
}

TEST_CASE("output variance: rotation example is flat") {
  const LinearSystem sys = rotation_example();
  const MatrixXd prime = MatrixXd::Identity(3, 3);
  const MatrixXd dblprime = Eigen::Vector3d(1.5, 1.5, 0.5).asDiagonal();
  for (double t = 0.0; t <= 5.0; t += 0.2) {
    CHECK(std::abs(output_variance(sys, prime, t)(0, 0) - 4.0) < 1e-10);
    CHECK(std::abs(output_variance(sys, dblprime, t)(0, 0) - 4.0) < 1e-10);
  }
}

TEST_CASE("output variance at t = 0 with full state output returns sigma") {
  LinearSystem sys{MatrixXd::Random(3, 3), MatrixXd::Identity(3, 3)};
  MatrixXd sigma = MatrixXd::Random(3, 3);
  sigma = sigma * sigma.transpose() + MatrixXd::Identity(3, 3);
  CHECK((output_variance(sys, sigma, 0.0) - sigma).norm() < 1e-12);
}

TEST_CASE("output variance against a hand-computed 2x2 flow") {
  // A = [[-1, 1], [0, 0]]: e^{At} = [[e^-t, 1 - e^-t], [0, 1]]
  LinearSystem sys;
  sys.a.resize(2, 2);
  sys.a << -1, 1, 0, 0;
  sys.c.resize(1, 2);
  sys.c << 1, 0;
  for (double t : {0.0, 0.5, 1.3, 2.8}) {
    const double e = std::exp(-t);
    const double expected = e * e + (1 - e) * (1 - e);
    CHECK(std::abs(output_variance(sys, MatrixXd::Identity(2, 2), t)(0, 0) - expected) < 1e-12);
  }
}

TEST_CASE("sampling is deterministic and hits the mixture mean") {
  const GaussianMixture mix = bimodal();
  const int count = 100000;
  const MatrixXd draws = sample(mix, count, 1234);
  const MatrixXd again = sample(mix, count, 1234);
  CHECK((draws - again).norm() == 0.0);
  CHECK((sample(mix, count, 99) - draws).norm() > 0.0);

  // CLT bound: mixture std is below 0.75 per coordinate
  const VectorXd mean = draws.colwise().mean();
  const VectorXd expected = mix.mean();
  CHECK(std::abs(expected[0] - 1.3) < 1e-12);
  CHECK(std::abs(expected[1] - 1.7) < 1e-12);
  for (int j = 0; j < 2; ++j)
    CHECK(std::abs(mean[j] - expected[j]) < 3.0 * 0.75 / std::sqrt(double(count)));

  CHECK_THROWS_AS(sample(mix, 0, 1), std::invalid_argument);
}

TEST_CASE("snapshots draw fresh individuals per time, deterministically") {
  const LinearSystem sys = system14();
  GaussianMixture mix;
  mix.weights = {1.0};
  mix.means = {Eigen::Vector3d(1, 0, -1)};
  mix.covariances = {MatrixXd::Identity(3, 3)};

  const std::vector<double> times = {0.0, 0.5, 1.0};
  const auto snaps = snapshots(sys, mix, times, 2000, 7);
  REQUIRE(snaps.size() == 3);
  for (size_t i = 0; i < snaps.size(); ++i) {
    CHECK(snaps[i].time == times[i]);
    CHECK(snaps[i].samples.rows() == 2000);
    CHECK(snaps[i].samples.cols() == 1);
  }
  // different snapshots are not the same draw pushed forward
  CHECK((snaps[0].samples - snaps[1].samples).norm() > 0.0);

  const auto again = snapshots(sys, mix, times, 2000, 7);
  for (size_t i = 0; i < snaps.size(); ++i)
    CHECK((snaps[i].samples - again[i].samples).norm() == 0.0);

  CHECK(derived_seed(7, 0) != derived_seed(7, 1));
  CHECK_THROWS_AS(snapshots(sys, mix, {1.0, 0.5}, 10, 7), std::invalid_argument);
}

TEST_CASE("analytic moments: standard normal and shifted component") {
  GaussianMixture std2;
  std2.weights = {1.0};
  std2.means = {Eigen::Vector2d(0, 0)};
  std2.covariances = {MatrixXd::Identity(2, 2)};
  const MomentMap mm = analytic_moments(std2, 4);
  CHECK(mm.at({2, 0}) == doctest::Approx(1.0));
  CHECK(mm.at({1, 1}) == doctest::Approx(0.0));
  CHECK(mm.at({4, 0}) == doctest::Approx(3.0));
  CHECK(mm.at({2, 2}) == doctest::Approx(1.0));

  GaussianMixture comp;
  comp.weights = {1.0};
  comp.means = {Eigen::Vector2d(1, 2)};
  comp.covariances = {Eigen::Vector2d(0.09, 0.09).asDiagonal()};
  CHECK(analytic_moments(comp, 2).at({2, 0}) == doctest::Approx(1.09));

  CHECK(analytic_moments(bimodal(), 1).at({1, 0}) == doctest::Approx(1.3));
}

TEST_CASE("scalar moments match the Hermite-recursion oracle to order 6") {
  GaussianMixture g;
  g.weights = {1.0};
  g.means = {VectorXd::Constant(1, 0.8)};
  g.covariances = {MatrixXd::Constant(1, 1, 0.36)};
  const MomentMap mm = analytic_moments(g, 6);
  for (int p = 1; p <= 6; ++p)
    CHECK(mm.at({p}) == doctest::Approx(scalar_gaussian_moment_oracle(0.8, 0.36, p)).epsilon(1e-12));
}

TEST_CASE("empirical moments: degenerate and statistical checks") {
  MatrixXd one(1, 2);
  one << 2.0, -3.0;
  const MomentMap single = empirical_moments(one, 3);
  CHECK(single.at({1, 0}) == 2.0);
  CHECK(single.at({1, 2}) == doctest::Approx(2.0 * 9.0));
  CHECK(single.at({0, 3}) == doctest::Approx(-27.0));

  // permutation invariance
  MatrixXd pair(2, 1);
  pair << 1.0, 4.0;
  MatrixXd swapped(2, 1);
  swapped << 4.0, 1.0;
  CHECK(empirical_moments(pair, 4).at({3}) == empirical_moments(swapped, 4).at({3}));

  CHECK_THROWS_AS(empirical_moments(MatrixXd(0, 2), 2), std::invalid_argument);

  // agreement with analytic moments within 5x Monte Carlo standard error;
  // SE estimated from the sample spread of the monomials themselves
  const GaussianMixture mix = bimodal();
  const int count = 100000;
  const MatrixXd draws = sample(mix, count, 31);
  const MomentMap analytic = analytic_moments(mix, 4);
  const MomentMap empirical = empirical_moments(draws, 4);
  for (const auto& [alpha, value] : analytic) {
    double second = 0.0;
    for (int i = 0; i < count; ++i) {
      double monomial = 1.0;
      for (int j = 0; j < 2; ++j)
        for (int e = 0; e < alpha[j]; ++e) monomial *= draws(i, j);
      second += monomial * monomial;
    }
    second /= count;
    const double est = empirical.at(alpha);
    const double se = std::sqrt(std::max(second - est * est, 0.0) / count);
    CHECK(std::abs(est - value) < 5.0 * se + 1e-12);
  }
}

TEST_CASE("indistinguishability of the worked covariance pairs") {
  const std::vector<double> times = {0.0, 0.3, 0.9, 1.7, 3.1, 5.0};

  GaussianMixture prime, dblprime;
  prime.weights = dblprime.weights = {1.0};
  prime.means = dblprime.means = {Eigen::Vector3d(0.2, -0.4, 1.0)};
  prime.covariances = {MatrixXd::Identity(3, 3)};
  MatrixXd sigma(3, 3);
  sigma << 1, 0, -0.5, 0, 2, 0, -0.5, 0, 1;
  dblprime.covariances = {sigma};

  const auto verdict = indistinguishability_check(system14(), prime, dblprime, times, 4, 1e-10);
  CHECK(verdict.indistinguishable);
  CHECK(verdict.max_deviation < 1e-10);

  GaussianMixture rot_prime = prime, rot_dblprime = prime;
  rot_dblprime.covariances = {Eigen::Vector3d(1.5, 1.5, 0.5).asDiagonal()};
  CHECK(indistinguishability_check(rotation_example(), rot_prime, rot_dblprime, times, 4, 1e-10)
            .indistinguishable);

  const auto same = indistinguishability_check(system14(), prime, prime, times, 4, 1e-12);
  CHECK(same.indistinguishable);
  CHECK(same.max_deviation == 0.0);

  // distinguishable pair: different means under an observable map
  GaussianMixture shifted = prime;
  shifted.means = {Eigen::Vector3d(1.2, -0.4, 1.0)};
  CHECK_FALSE(indistinguishability_check(system14(), prime, shifted, times, 2, 1e-10)
                  .indistinguishable);
}

TEST_CASE("necessity: shifts along unobservable directions are invisible") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 2;
    MatrixXd a(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) a(r, c) = dist(rng);
    a.topRightCorner(n - 1, 1).setZero();
    MatrixXd c(1, n);
    for (int j = 0; j < n - 1; ++j) c(0, j) = dist(rng);
    c(0, n - 1) = 0.0;
    LinearSystem sys{a, c};
    const MatrixXd basis = unobservable_subspace(sys);
    REQUIRE(basis.cols() >= 1);
    const VectorXd v = basis.col(0);

    GaussianMixture mix;
    mix.weights = {0.5, 0.5};
    VectorXd mu1(n), mu2(n);
    for (int j = 0; j < n; ++j) {
      mu1[j] = dist(rng);
      mu2[j] = dist(rng);
    }
    mix.means = {mu1, mu2};
    mix.covariances = {MatrixXd::Identity(n, n), 0.5 * MatrixXd::Identity(n, n)};

    GaussianMixture shifted = mix;
    for (auto& mu : shifted.means) mu += v;

    for (double t = 0.0; t <= 9.0; t += 1.0) {
      const Eigen::MatrixXd map = output_map(sys, t);
      const GaussianMixture pa = pushforward(mix, map);
      const GaussianMixture pb = pushforward(shifted, map);
      for (int k = 0; k < 2; ++k) {
        CHECK((pa.means[k] - pb.means[k]).norm() < 1e-12);
        CHECK((pa.covariances[k] - pb.covariances[k]).norm() < 1e-12);
      }
    }
  }
}
