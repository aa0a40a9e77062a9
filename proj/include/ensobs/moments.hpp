#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ensobs/ensemble.hpp"
#include "ensobs/lift.hpp"
#include "ensobs/observability.hpp"

namespace ensobs {

/// Raw moments of one order, unweighted, indexed by the MultiIndexBasis
/// ordering of the corresponding dimension.
struct MomentVector {
  int order = 0;
  Eigen::VectorXd values;
};

/// Map from initial state moments of order p to output moments of order p
/// at time t, acting on unweighted moment vectors:
/// W_out^{-1} (Ce^{At})^{[p]} W_in.
Eigen::MatrixXd output_moment_map(const LinearSystem& sys, int p, double t);

struct MomentSolve {
  MomentVector solution;            // minimum-norm least squares solution
  double residual = 0.0;            // ||stack * x - rhs||
  double condition_number = 0.0;    // of the stacked map (rank-restricted)
  bool rank_deficient = false;
  Eigen::MatrixXd ambiguity_basis;  // orthonormal; solution + span is the full set
};

/// Solve the stacked output-moment equations for the initial moments of
/// order p. Requires K * N(m,p) >= N(n,p) with distinct times. Rank
/// deficiency is reported, never silently pseudo-inverted away.
MomentSolve reconstruct_moments(const LinearSystem& sys, int p, const std::vector<double>& times,
                                const std::vector<MomentVector>& outputs,
                                double tol = kDefaultRankTol);

/// Raw moments m_1..m_p -> cumulants k_1..k_p (scalar, p <= 6).
Eigen::VectorXd moments_to_cumulants(const Eigen::VectorXd& raw_moments);

/// Cumulants k_1..k_p -> raw moments m_1..m_p.
Eigen::VectorXd cumulants_to_moments(const Eigen::VectorXd& cumulants);

/// Rows are the element-wise pth powers of Ce^{At} (single-output systems).
Eigen::MatrixXd cumulant_design_matrix(const LinearSystem& sys, int p,
                                       const std::vector<double>& times);

struct CumulantSolve {
  Eigen::VectorXd cumulants;  // per-component kappa_p(X_{0,i})
  double residual = 0.0;
  int rank = 0;
  bool rank_deficient = false;
  Eigen::MatrixXd null_basis;  // coefficient directions of no-cross-term varieties
};

/// Least squares for the order-p component cumulants under the declared
/// independence assumption.
CumulantSolve reconstruct_cumulants_independent(const LinearSystem& sys, int p,
                                                const std::vector<double>& times,
                                                const Eigen::VectorXd& output_cumulants,
                                                double tol = kDefaultRankTol);

/// Unbiased k-statistics for p <= 4; needs at least p + 1 samples.
Eigen::VectorXd empirical_scalar_cumulants(const Eigen::VectorXd& samples, int p);

enum class PipelineMode { Moments, CumulantsIndependent };

struct PipelineOrder {
  int order = 0;
  MomentSolve moment_solve;      // Moments mode
  CumulantSolve cumulant_solve;  // CumulantsIndependent mode
};

struct PipelineResult {
  PipelineMode mode = PipelineMode::Moments;
  std::vector<PipelineOrder> orders;  // p = 1..p_max
};

/// Per order: empirical output moments (or cumulants) from the snapshots,
/// then the corresponding reconstruction, with diagnostics attached.
PipelineResult full_pipeline(const LinearSystem& sys, const std::vector<Snapshot>& snaps,
                             int p_max, PipelineMode mode, double tol = kDefaultRankTol);

/// Default time grid for order p: 3 * N(n,p) equispaced points on [0, T],
/// T = 3 / |Re lambda_min| (or 3 for marginally stable spectra).
std::vector<double> default_time_grid(const LinearSystem& sys, int p);

}  // namespace ensobs
