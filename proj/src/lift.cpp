#include "ensobs/lift.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ensobs {

namespace {

void check_order(int n, int p) {
  if (n < 1) throw std::invalid_argument("lift: state dimension must be >= 1");
  if (p < 1) throw std::invalid_argument("lift: order must be >= 1 (order 0 is the constant 1)");
}

// Sparse polynomial in n variables, keyed by exponent tuple.
using Poly = std::map<MultiIndex, double>;

// Multiply poly by the linear form sum_j coeffs[j] x_j.
Poly multiply_by_linear(const Poly& poly, const Eigen::RowVectorXd& coeffs) {
  Poly out;
  for (const auto& [alpha, c] : poly) {
    for (int j = 0; j < coeffs.size(); ++j) {
      if (coeffs[j] == 0.0) continue;
      MultiIndex beta = alpha;
      beta[j] += 1;
      out[beta] += c * coeffs[j];
    }
  }
  return out;
}

}  // namespace

int MultiIndexBasis::find(const MultiIndex& alpha) const {
  // indices are lexicographically decreasing
  auto it = std::lower_bound(indices.begin(), indices.end(), alpha,
                             [](const MultiIndex& a, const MultiIndex& b) { return a > b; });
  if (it == indices.end() || *it != alpha) return -1;
  return static_cast<int>(it - indices.begin());
}

long long basis_dimension(int n, int p) {
  check_order(n, p);
  // binom(n+p-1, p)
  long long r = 1;
  for (int k = 1; k <= p; ++k) r = r * (n - 1 + k) / k;
  return r;
}

double multi_index_weight(const MultiIndex& alpha) {
  int p = 0;
  for (int a : alpha) p += a;
  double multinomial = 1.0;
  int consumed = 0;
  for (int a : alpha) {
    for (int k = 1; k <= a; ++k) {
      ++consumed;
      multinomial *= static_cast<double>(consumed) / k;
    }
  }
  (void)p;
  return std::sqrt(multinomial);
}

MultiIndexBasis enumerate_basis(int n, int p) {
  check_order(n, p);
  MultiIndexBasis basis;
  basis.n = n;
  basis.p = p;

  MultiIndex current(n, 0);
  // Recursive enumeration in lexicographically decreasing order.
  auto emit = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n - 1) {
      current[pos] = remaining;
      basis.indices.push_back(current);
      current[pos] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      current[pos] = k;
      self(self, pos + 1, remaining - k);
    }
    current[pos] = 0;
  };
  emit(emit, 0, p);

  const int N = basis.size();
  basis.weights.resize(N);
  for (int k = 0; k < N; ++k) basis.weights[k] = multi_index_weight(basis.indices[k]);
  return basis;
}

Eigen::VectorXd lift_vector(const Eigen::VectorXd& x, const MultiIndexBasis& basis) {
  if (x.size() != basis.n) throw std::invalid_argument("lift_vector: dimension mismatch");
  Eigen::VectorXd out(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    double monomial = 1.0;
    for (int i = 0; i < basis.n; ++i)
      for (int e = 0; e < basis.indices[k][i]; ++e) monomial *= x[i];
    out[k] = basis.weights[k] * monomial;
  }
  return out;
}

Eigen::MatrixXd lift_matrix(const Eigen::MatrixXd& M, int p) {
  const int m = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  check_order(n, p);
  check_order(m, p);
  const MultiIndexBasis out_basis = enumerate_basis(m, p);
  const MultiIndexBasis in_basis = enumerate_basis(n, p);

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(out_basis.size(), in_basis.size());
  for (int r = 0; r < out_basis.size(); ++r) {
    const MultiIndex& beta = out_basis.indices[r];
    // Expand prod_i (sum_j M_ij x_j)^beta_i over the monomial basis.
    Poly poly;
    poly[MultiIndex(n, 0)] = 1.0;
    for (int i = 0; i < m; ++i)
      for (int e = 0; e < beta[i]; ++e) poly = multiply_by_linear(poly, M.row(i));
    const double wb = out_basis.weights[r];
    for (const auto& [alpha, c] : poly) {
      int col = in_basis.find(alpha);
      L(r, col) = wb * c / in_basis.weights[col];
    }
  }
  return L;
}

Eigen::MatrixXd lift_generator_unweighted(const Eigen::MatrixXd& A, int p) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw std::invalid_argument("lift_generator: A must be square");
  check_order(n, p);
  const MultiIndexBasis basis = enumerate_basis(n, p);
  const int N = basis.size();

  // d/dt x^beta = sum_i beta_i x^{beta - e_i} sum_j A_ij x_j
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
  for (int r = 0; r < N; ++r) {
    const MultiIndex& beta = basis.indices[r];
    for (int i = 0; i < n; ++i) {
      if (beta[i] == 0) continue;
      for (int j = 0; j < n; ++j) {
        if (A(i, j) == 0.0) continue;
        MultiIndex alpha = beta;
        alpha[i] -= 1;
        alpha[j] += 1;
        G(r, basis.find(alpha)) += beta[i] * A(i, j);
      }
    }
  }
  return G;
}

Eigen::MatrixXd lift_generator(const Eigen::MatrixXd& A, int p) {
  const MultiIndexBasis basis = enumerate_basis(static_cast<int>(A.rows()), p);
  Eigen::MatrixXd G = lift_generator_unweighted(A, p);
  // conjugate by weights: A_[p] = W G W^{-1}
  for (int r = 0; r < basis.size(); ++r)
    for (int c = 0; c < basis.size(); ++c)
      G(r, c) *= basis.weights[r] / basis.weights[c];
  return G;
}

Eigen::MatrixXd weight_matrix(const MultiIndexBasis& basis) {
  return basis.weights.asDiagonal();
}

TensorSystem lift_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, int p) {
  TensorSystem ts;
  ts.order = p;
  ts.a_lift = lift_generator(A, p);
  ts.c_lift = lift_matrix(C, p);
  ts.weight_diag = enumerate_basis(static_cast<int>(A.cols()), p).weights;
  return ts;
}

}  // namespace ensobs
