#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "ensobs/lift.hpp"
#include "ensobs/observability.hpp"

namespace ensobs {

/// Finite Gaussian mixture; the class of initial distributions used
/// throughout. Covariances must be symmetric positive definite.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return components() ? static_cast<int>(means[0].size()) : 0; }

  /// Checks weight normalization (to 1e-12), shared dimensions, and SPD
  /// covariances (Cholesky must succeed). Throws std::invalid_argument.
  void validate() const;

  /// Overall mean and covariance of the mixture.
  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;
};

/// Output samples observed at one time; rows are samples, columns outputs.
/// Different snapshots come from different individuals by construction.
struct Snapshot {
  double time = 0.0;
  Eigen::MatrixXd samples;  // count x m
};

/// e^{At} via scaling-and-squaring Pade approximation.
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

/// Output map Ce^{At}.
Eigen::MatrixXd output_map(const LinearSystem& sys, double t);

/// Image of the mixture under x -> M x: means and covariances mapped,
/// weights unchanged.
GaussianMixture pushforward(const GaussianMixture& mix, const Eigen::MatrixXd& M);

/// (Ce^{At}) Sigma (Ce^{At})^T.
Eigen::MatrixXd output_variance(const LinearSystem& sys, const Eigen::MatrixXd& sigma, double t);

/// Deterministic seeded sampling: categorical component draw, then
/// Cholesky transform of Box-Muller normals from mt19937_64.
Eigen::MatrixXd sample(const GaussianMixture& mix, int count, std::uint64_t seed);

/// Name of the pinned random number generation scheme, recorded in manifests.
const char* rng_scheme();

/// Seed for snapshot k derived from the run seed; independent of the order
/// in which snapshots are generated.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index);

/// One snapshot per time, each from a fresh draw of `count` initial states
/// pushed through Ce^{At}. Parallel across times; deterministic.
std::vector<Snapshot> snapshots(const LinearSystem& sys, const GaussianMixture& mix,
                                const std::vector<double>& times, int count,
                                std::uint64_t seed);

using MomentMap = std::map<MultiIndex, double>;

/// Raw moments E[x^alpha] for all 1 <= |alpha| <= p_max, via the Gaussian
/// moment recursion applied per component.
MomentMap analytic_moments(const GaussianMixture& mix, int p_max);

/// Plain monomial averages over samples (rows).
MomentMap empirical_moments(const Eigen::MatrixXd& samples, int p_max);

struct Indistinguishability {
  bool indistinguishable = false;
  double max_deviation = 0.0;
  double worst_time = 0.0;
  MultiIndex worst_index;
};

/// Pushes both mixtures through Ce^{At} at each time and compares output
/// moments up to p_max.
Indistinguishability indistinguishability_check(const LinearSystem& sys,
                                                const GaussianMixture& mix_a,
                                                const GaussianMixture& mix_b,
                                                const std::vector<double>& times, int p_max,
                                                double tol);

}  // namespace ensobs
