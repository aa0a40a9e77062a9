#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ensobs/lift.hpp"

namespace ensobs {

/// The structural pair (A, C): xdot = A x, y = C x.
struct LinearSystem {
  Eigen::MatrixXd a;  // n x n
  Eigen::MatrixXd c;  // m x n

  int n() const { return static_cast<int>(a.rows()); }
  int m() const { return static_cast<int>(c.rows()); }

  /// Throws std::invalid_argument on shape violations.
  void validate() const;

  /// C is square (or taller): reconstruction degenerates to the
  /// full-state-information case.
  bool full_state_output() const { return m() >= n(); }
};

constexpr double kDefaultRankTol = 1e-9;

/// Kalman stack [C; CA; ...; CA^{n-1}].
Eigen::MatrixXd observability_matrix(const LinearSystem& sys);

/// Orthonormal basis of the unobservable subspace (kernel of the
/// observability matrix), as matrix columns. Empty (n x 0) when observable.
/// Rank decisions use the relative SVD threshold tol * sigma_max.
Eigen::MatrixXd unobservable_subspace(const LinearSystem& sys, double tol = kDefaultRankTol);

/// Kernel of an arbitrary matrix by SVD with relative threshold.
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& M, double tol = kDefaultRankTol);

/// Numerical rank by SVD with relative threshold.
int numerical_rank(const Eigen::MatrixXd& M, double tol = kDefaultRankTol);

struct HautusEntry {
  std::complex<double> eigenvalue;
  int rank_deficiency = 0;  // column rank loss of [A - lambda I; C]
};

/// PBH test at every eigenvalue of A; observable iff all deficiencies are 0.
std::vector<HautusEntry> hautus_test(const LinearSystem& sys, double tol = kDefaultRankTol);

bool hautus_observable(const LinearSystem& sys, double tol = kDefaultRankTol);

struct TensorObservability {
  int order = 0;
  bool observable = false;
  Eigen::MatrixXd unobs_basis;  // columns in R^{N(n,p)}, weighted coordinates
};

/// Observability of the lifted pair (A_[p], C^[p]).
TensorObservability tensor_observability(const LinearSystem& sys, int p,
                                         double tol = kDefaultRankTol);

/// Homogeneous polynomial a^T x^[p] written over unweighted monomials,
/// normalized so the largest-magnitude coefficient is +-1.
using VarietyPolynomial = std::map<MultiIndex, double>;

VarietyPolynomial variety_from_kernel(const Eigen::VectorXd& a, const MultiIndexBasis& basis);

/// Render a variety polynomial as e.g. "x2^2 - x1*x3".
std::string polynomial_to_string(const VarietyPolynomial& poly);

struct RichnessOrder {
  int order = 0;
  bool observable = false;
  Eigen::MatrixXd unobs_basis;
  std::vector<VarietyPolynomial> blocking_varieties;
};

struct RichnessResult {
  int p_max = 0;
  bool rich_up_to_pmax = false;  // truncated verdict; the condition quantifies over all p
  std::vector<RichnessOrder> orders;
};

RichnessResult richness_check(const LinearSystem& sys, int p_max,
                              double tol = kDefaultRankTol);

struct RationalIndependence {
  bool independent = false;  // within the search bound
  int z_bound = 0;
  std::optional<Eigen::VectorXi> witness;  // z with sum z = 0 and z . lambda = 0
};

/// Exhaustive search for an integer relation among the eigenvalues:
/// nonzero z with |z_i| <= z_bound, sum z_i = 0 and |z . lambda| below
/// tol * |lambda| * |z|. Eigenvalues must be real and pairwise distinct.
RationalIndependence rational_independence_test(const Eigen::VectorXd& eigenvalues,
                                                int z_bound, double tol = kDefaultRankTol);

struct ConstrainedHautus {
  bool passes = false;
  std::optional<Eigen::VectorXd> witness;  // weighted coordinates, if failing
  double min_principal_angle = 0.0;        // radians, vs the no-cross-term subspace
};

/// Intersection of the lifted unobservable subspace with the span of the
/// non-cross-term coordinates (multi-indices with a single nonzero entry).
/// Passes iff the intersection is trivial.
ConstrainedHautus constrained_hautus_independence(const LinearSystem& sys, int p,
                                                  double tol = kDefaultRankTol);

/// Largest principal angle between equal-dimensional subspaces given by
/// orthonormal column bases; smallest angle for intersection detection is
/// acos of the largest singular value of U^T V.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

struct ObservabilityReport {
  bool classical_observable = false;
  Eigen::MatrixXd unobs_basis;
  std::vector<HautusEntry> hautus;
  RichnessResult richness;
  std::optional<RationalIndependence> rational_independence;  // when applicable
  std::vector<ConstrainedHautus> independence_constrained;    // per order 1..p_max, if requested
};

ObservabilityReport analyze(const LinearSystem& sys, int p_max, int z_bound,
                            double tol = kDefaultRankTol,
                            bool with_independence = false);

}  // namespace ensobs
