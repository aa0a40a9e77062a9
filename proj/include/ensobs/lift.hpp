#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ensobs {

/// A degree-p monomial exponent tuple, one entry per state component.
using MultiIndex = std::vector<int>;

/// Ordered basis of the weighted p-forms of an n-dimensional state.
/// Multi-indices are sorted lexicographically decreasing, so the first
/// entry is (p,0,...,0) and the last is (0,...,0,p).
struct MultiIndexBasis {
  int n = 0;
  int p = 0;
  std::vector<MultiIndex> indices;
  Eigen::VectorXd weights;  // weights[k] = sqrt(p! / (a_1! ... a_n!))

  int size() const { return static_cast<int>(indices.size()); }

  /// Position of a multi-index in the basis, -1 if absent.
  int find(const MultiIndex& alpha) const;
};

/// N(n,p) = binom(n+p-1, p), the number of degree-p monomials in n variables.
long long basis_dimension(int n, int p);

/// Multinomial weight sqrt(p! / (a_1! ... a_n!)) for |alpha| = p.
double multi_index_weight(const MultiIndex& alpha);

MultiIndexBasis enumerate_basis(int n, int p);

/// Weighted monomial vector: entry k is weights[k] * x^indices[k].
Eigen::VectorXd lift_vector(const Eigen::VectorXd& x, const MultiIndexBasis& basis);

/// Lift of a linear map: (M x)^[p] = lift_matrix(M, p) * x^[p].
/// Built symbolically by expanding row polynomials over the monomial basis.
Eigen::MatrixXd lift_matrix(const Eigen::MatrixXd& M, int p);

/// Generator of the lifted flow in weighted coordinates: if xdot = A x then
/// d/dt x^[p] = lift_generator(A, p) x^[p]. Exact product-rule construction.
Eigen::MatrixXd lift_generator(const Eigen::MatrixXd& A, int p);

/// Same generator acting on the unweighted monomials x^alpha (the raw
/// moment dynamics matrix).
Eigen::MatrixXd lift_generator_unweighted(const Eigen::MatrixXd& A, int p);

/// Diagonal matrix W with x^[p] = W x_u^[p].
Eigen::MatrixXd weight_matrix(const MultiIndexBasis& basis);

/// The lifted pair (A_[p], C^[p]) together with the weight diagonal.
struct TensorSystem {
  int order = 0;
  Eigen::MatrixXd a_lift;      // N(n,p) x N(n,p)
  Eigen::MatrixXd c_lift;      // N(m,p) x N(n,p)
  Eigen::VectorXd weight_diag; // diagonal of W for the state basis
};

TensorSystem lift_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, int p);

}  // namespace ensobs
