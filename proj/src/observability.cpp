#include "ensobs/observability.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ensobs {

namespace {

constexpr double kAngleTol = 1e-7;  // subspace-intersection triviality threshold (radians)

int rank_from_singular_values(const Eigen::VectorXd& sv, double tol) {
  if (sv.size() == 0) return 0;
  const double smax = sv[0];
  if (smax <= 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] >= tol * smax) ++r;
  return r;
}

}  // namespace

void LinearSystem::validate() const {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument("LinearSystem: A must be square and nonempty");
  if (c.rows() < 1 || c.cols() != a.rows())
    throw std::invalid_argument("LinearSystem: C must be m x n with m >= 1");
}

Eigen::MatrixXd observability_matrix(const LinearSystem& sys) {
  sys.validate();
  const int n = sys.n();
  const int m = sys.m();
  Eigen::MatrixXd obs(n * m, n);
  Eigen::MatrixXd row = sys.c;
  for (int k = 0; k < n; ++k) {
    obs.middleRows(k * m, m) = row;
    if (k + 1 < n) row = row * sys.a;
  }
  return obs;
}

Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0 || M.norm() == 0.0)
    return Eigen::MatrixXd::Identity(M.cols(), M.cols());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const int r = rank_from_singular_values(svd.singularValues(), tol);
  return svd.matrixV().rightCols(M.cols() - r);
}

int numerical_rank(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return rank_from_singular_values(svd.singularValues(), tol);
}

Eigen::MatrixXd unobservable_subspace(const LinearSystem& sys, double tol) {
  sys.validate();
  if (tol <= 0.0) throw std::invalid_argument("unobservable_subspace: tol must be positive");
  // Largest A-invariant subspace inside ker C, found by shrinking an
  // orthonormal candidate basis Q: keep only directions whose image under A
  // stays in span Q. Each step takes the kernel of a small well-scaled
  // matrix, so rank decisions never see the conditioning of high powers of A
  // (the explicit Kalman stack is Vandermonde-like for lifted systems and
  // reports false rank loss already at moderate orders).
  const int n = sys.n();
  const double a_scale = std::max(sys.a.norm(), 1.0);
  Eigen::MatrixXd q = kernel_basis(sys.c, tol);
  while (q.cols() > 0) {
    const Eigen::MatrixXd image = sys.a * q;                    // n x d
    const Eigen::MatrixXd leak = image - q * (q.transpose() * image);
    // absolute threshold: a fully invariant candidate leaves leak at noise
    // level, where a relative-to-leak threshold would see spurious rank
    Eigen::BDCSVD<Eigen::MatrixXd> svd(leak, Eigen::ComputeFullV);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] >= tol * a_scale) ++rank;
    const Eigen::MatrixXd keep = svd.matrixV().rightCols(q.cols() - rank);
    if (keep.cols() == q.cols()) break;
    // re-orthonormalize to keep later rank decisions clean
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q * keep);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(n, keep.cols());
  }
  return q;
}

std::vector<HautusEntry> hautus_test(const LinearSystem& sys, double tol) {
  sys.validate();
  if (tol <= 0.0) throw std::invalid_argument("hautus_test: tol must be positive");
  const int n = sys.n();
  const int m = sys.m();
  Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a);

  std::vector<HautusEntry> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()[i];
    Eigen::MatrixXcd pencil(n + m, n);
    pencil.topRows(n) = sys.a.cast<std::complex<double>>();
    pencil.topRows(n).diagonal().array() -= lambda;
    pencil.bottomRows(m) = sys.c.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const int rank = rank_from_singular_values(svd.singularValues(), tol);
    out.push_back({lambda, n - rank});
  }
  return out;
}

bool hautus_observable(const LinearSystem& sys, double tol) {
  for (const auto& e : hautus_test(sys, tol))
    if (e.rank_deficiency > 0) return false;
  return true;
}

TensorObservability tensor_observability(const LinearSystem& sys, int p, double tol) {
  sys.validate();
  const TensorSystem ts = lift_system(sys.a, sys.c, p);
  LinearSystem lifted{ts.a_lift, ts.c_lift};
  TensorObservability result;
  result.order = p;
  result.unobs_basis = unobservable_subspace(lifted, tol);
  result.observable = result.unobs_basis.cols() == 0;
  return result;
}

VarietyPolynomial variety_from_kernel(const Eigen::VectorXd& a, const MultiIndexBasis& basis) {
  if (a.size() != basis.size())
    throw std::invalid_argument("variety_from_kernel: coefficient length mismatch");
  if (a.norm() == 0.0) throw std::invalid_argument("variety_from_kernel: zero vector");
  VarietyPolynomial poly;
  double max_abs = 0.0;
  for (int k = 0; k < basis.size(); ++k) {
    const double coeff = a[k] * basis.weights[k];
    if (coeff != 0.0) {
      poly[basis.indices[k]] = coeff;
      max_abs = std::max(max_abs, std::abs(coeff));
    }
  }
  for (auto& [alpha, coeff] : poly) coeff /= max_abs;
  // drop coefficients that are numerically zero after normalization
  for (auto it = poly.begin(); it != poly.end();) {
    if (std::abs(it->second) < 1e-12)
      it = poly.erase(it);
    else
      ++it;
  }
  // canonical sign: the leading surviving term gets a positive sign, so the
  // rendered polynomial does not depend on the kernel basis direction
  if (!poly.empty() && poly.begin()->second < 0.0)
    for (auto& [alpha, coeff] : poly) coeff = -coeff;
  return poly;
}

std::string polynomial_to_string(const VarietyPolynomial& poly) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [alpha, coeff] : poly) {
    const double mag = std::abs(coeff);
    if (first) {
      if (coeff < 0) os << "-";
    } else {
      os << (coeff < 0 ? " - " : " + ");
    }
    first = false;
    const bool unit = std::abs(mag - 1.0) < 1e-9;
    if (!unit) os << mag << "*";
    bool first_var = true;
    for (size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] == 0) continue;
      if (!first_var) os << "*";
      first_var = false;
      os << "x" << (i + 1);
      if (alpha[i] > 1) os << "^" << alpha[i];
    }
    if (first_var) os << "1";  // constant monomial (does not occur for p >= 1)
  }
  os << " = 0";
  return os.str();
}

RichnessResult richness_check(const LinearSystem& sys, int p_max, double tol) {
  if (p_max < 1) throw std::invalid_argument("richness_check: p_max must be >= 1");
  RichnessResult result;
  result.p_max = p_max;
  result.rich_up_to_pmax = true;
  for (int p = 1; p <= p_max; ++p) {
    TensorObservability to = tensor_observability(sys, p, tol);
    RichnessOrder order;
    order.order = p;
    order.observable = to.observable;
    order.unobs_basis = to.unobs_basis;
    if (!to.observable) {
      result.rich_up_to_pmax = false;
      const MultiIndexBasis basis = enumerate_basis(sys.n(), p);
      for (int k = 0; k < to.unobs_basis.cols(); ++k)
        order.blocking_varieties.push_back(variety_from_kernel(to.unobs_basis.col(k), basis));
    }
    result.orders.push_back(std::move(order));
  }
  return result;
}

namespace {

// Canonical form: first nonzero entry positive, entries divided by their gcd.
Eigen::VectorXi canonicalize_witness(Eigen::VectorXi z) {
  int g = 0;
  for (int i = 0; i < z.size(); ++i) g = std::gcd(g, std::abs(z[i]));
  if (g > 1) z /= g;
  for (int i = 0; i < z.size(); ++i) {
    if (z[i] != 0) {
      if (z[i] < 0) z = -z;
      break;
    }
  }
  return z;
}

// Depth-first search in ascending lexicographic order; the first hit is the
// lexicographically smallest witness in the branch.
bool search_witness(const Eigen::VectorXd& lambda, int bound, double abs_tol, int pos,
                    int partial_sum, Eigen::VectorXi& z, bool have_nonzero,
                    Eigen::VectorXi& found) {
  const int n = static_cast<int>(lambda.size());
  if (pos == n) {
    if (!have_nonzero || partial_sum != 0) return false;
    double dot = 0.0, norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      dot += z[i] * lambda[i];
      norm2 += double(z[i]) * z[i];
    }
    if (std::abs(dot) < abs_tol * std::sqrt(norm2)) {
      found = z;
      return true;
    }
    return false;
  }
  // prune: remaining entries can change the running sum by at most this much
  const int slack = (n - pos) * bound;
  if (std::abs(partial_sum) > slack) return false;
  // restrict to first-nonzero-positive vectors; -z covers the rest
  const int lo = have_nonzero ? -bound : 0;
  for (int v = lo; v <= bound; ++v) {
    z[pos] = v;
    if (search_witness(lambda, bound, abs_tol, pos + 1, partial_sum + v, z,
                       have_nonzero || v != 0, found))
      return true;
  }
  z[pos] = 0;
  return false;
}

}  // namespace

RationalIndependence rational_independence_test(const Eigen::VectorXd& eigenvalues,
                                                int z_bound, double tol) {
  const int n = static_cast<int>(eigenvalues.size());
  if (n < 1) throw std::invalid_argument("rational_independence_test: empty spectrum");
  if (z_bound < 1) throw std::invalid_argument("rational_independence_test: z_bound must be >= 1");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(eigenvalues[i] - eigenvalues[j]) <= tol)
        throw std::invalid_argument("rational_independence_test: eigenvalues must be distinct");

  RationalIndependence result;
  result.z_bound = z_bound;
  const double abs_tol = std::max(tol * eigenvalues.norm(), 1e-300);
  Eigen::VectorXi z = Eigen::VectorXi::Zero(n);
  Eigen::VectorXi found(n);
  if (search_witness(eigenvalues, z_bound, abs_tol, 0, 0, z, false, found)) {
    result.independent = false;
    result.witness = canonicalize_witness(found);
  } else {
    result.independent = true;
  }
  return result;
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  const int k = static_cast<int>(std::min(U.cols(), V.cols()));
  if (k == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(U.transpose() * V);
  Eigen::VectorXd angles(k);
  for (int i = 0; i < k; ++i)
    angles[i] = std::acos(std::clamp(svd.singularValues()[i], 0.0, 1.0));
  return angles;
}

ConstrainedHautus constrained_hautus_independence(const LinearSystem& sys, int p, double tol) {
  sys.validate();
  const TensorObservability to = tensor_observability(sys, p, tol);
  ConstrainedHautus result;
  if (to.unobs_basis.cols() == 0) {
    result.passes = true;
    result.min_principal_angle = M_PI / 2;
    return result;
  }
  const MultiIndexBasis basis = enumerate_basis(sys.n(), p);
  // non-cross-term coordinates: multi-index has a single nonzero entry
  std::vector<int> pure;
  for (int k = 0; k < basis.size(); ++k) {
    int nonzero = 0;
    for (int a : basis.indices[k])
      if (a > 0) ++nonzero;
    if (nonzero == 1) pure.push_back(k);
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(basis.size(), static_cast<int>(pure.size()));
  for (size_t j = 0; j < pure.size(); ++j) S(pure[j], static_cast<int>(j)) = 1.0;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(to.unobs_basis.transpose() * S,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sigma = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  result.min_principal_angle = std::acos(std::clamp(sigma, 0.0, 1.0));
  result.passes = result.min_principal_angle > kAngleTol;
  if (!result.passes) {
    Eigen::VectorXd w = to.unobs_basis * svd.matrixU().col(0);
    // deterministic sign: largest-magnitude entry positive
    int imax = 0;
    w.cwiseAbs().maxCoeff(&imax);
    if (w[imax] < 0) w = -w;
    result.witness = w;
  }
  return result;
}

ObservabilityReport analyze(const LinearSystem& sys, int p_max, int z_bound, double tol,
                            bool with_independence) {
  sys.validate();
  ObservabilityReport report;
  report.unobs_basis = unobservable_subspace(sys, tol);
  report.classical_observable = report.unobs_basis.cols() == 0;
  report.hautus = hautus_test(sys, tol);
  report.richness = richness_check(sys, p_max, tol);

  // applies to single-output systems with a real, distinct spectrum
  if (sys.m() == 1) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a);
    bool real_distinct = true;
    Eigen::VectorXd lambdas(sys.n());
    for (int i = 0; i < sys.n(); ++i) {
      if (std::abs(es.eigenvalues()[i].imag()) > 1e-9) real_distinct = false;
      lambdas[i] = es.eigenvalues()[i].real();
    }
    for (int i = 0; real_distinct && i < sys.n(); ++i)
      for (int j = i + 1; j < sys.n(); ++j)
        if (std::abs(lambdas[i] - lambdas[j]) <= tol) real_distinct = false;
    if (real_distinct && report.classical_observable) {
      std::sort(lambdas.data(), lambdas.data() + lambdas.size());
      report.rational_independence = rational_independence_test(lambdas, z_bound, tol);
    }
  }

  if (with_independence) {
    for (int p = 1; p <= p_max; ++p)
      report.independence_constrained.push_back(constrained_hautus_independence(sys, p, tol));
  }
  return report;
}

}  // namespace ensobs
