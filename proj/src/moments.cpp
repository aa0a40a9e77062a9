#include "ensobs/moments.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ensobs {

Eigen::MatrixXd output_moment_map(const LinearSystem& sys, int p, double t) {
  sys.validate();
  if (t < 0.0) throw std::invalid_argument("output_moment_map: t must be >= 0");
  const Eigen::MatrixXd lifted = lift_matrix(output_map(sys, t), p);
  const Eigen::VectorXd w_in = enumerate_basis(sys.n(), p).weights;
  const Eigen::VectorXd w_out = enumerate_basis(sys.m(), p).weights;
  Eigen::MatrixXd map = lifted;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c) map(r, c) *= w_in[c] / w_out[r];
  return map;
}

MomentSolve reconstruct_moments(const LinearSystem& sys, int p, const std::vector<double>& times,
                                const std::vector<MomentVector>& outputs, double tol) {
  sys.validate();
  if (times.size() != outputs.size())
    throw std::invalid_argument("reconstruct_moments: times/outputs length mismatch");
  const int n_out = static_cast<int>(basis_dimension(sys.m(), p));
  const int n_in = static_cast<int>(basis_dimension(sys.n(), p));
  const int k = static_cast<int>(times.size());
  if (k * n_out < n_in)
    throw std::invalid_argument("reconstruct_moments: not enough time points");
  std::set<double> unique(times.begin(), times.end());
  if (static_cast<int>(unique.size()) != k)
    throw std::invalid_argument("reconstruct_moments: times must be distinct");

  Eigen::MatrixXd stack(k * n_out, n_in);
  Eigen::VectorXd rhs(k * n_out);
  for (int i = 0; i < k; ++i) {
    if (outputs[i].order != p || outputs[i].values.size() != n_out)
      throw std::invalid_argument("reconstruct_moments: malformed output moment vector");
    stack.middleRows(i * n_out, n_out) = output_moment_map(sys, p, times[i]);
    rhs.segment(i * n_out, n_out) = outputs[i].values;
  }

  // Row equilibration: rows decay like e^{-p sigma t} across the time grid,
  // which would dominate the singular spectrum and blur the rank decision.
  // Scaling rows to unit norm keeps the kernel and row space unchanged;
  // rows far below the largest one are left small rather than blown up.
  double max_row_norm = 0.0;
  for (int r = 0; r < stack.rows(); ++r) max_row_norm = std::max(max_row_norm, stack.row(r).norm());
  if (max_row_norm > 0.0) {
    const double floor = 1e-8 * max_row_norm;
    for (int r = 0; r < stack.rows(); ++r) {
      const double scale = std::max(stack.row(r).norm(), floor);
      stack.row(r) /= scale;
      rhs[r] /= scale;
    }
  }

  // The kernel of the stacked map at distinct times equals the lifted
  // unobservable subspace (in unweighted coordinates). Deriving the
  // ambiguity from the lift is far more robust than thresholding the
  // stack's singular values: the exponential time profile makes the stack
  // ill-conditioned long before the rank boundary is reached.
  const TensorObservability tens = tensor_observability(sys, p, tol);
  const Eigen::VectorXd w_in = enumerate_basis(sys.n(), p).weights;
  Eigen::MatrixXd ambiguity(n_in, tens.unobs_basis.cols());
  for (int col = 0; col < ambiguity.cols(); ++col)
    for (int r = 0; r < n_in; ++r) ambiguity(r, col) = tens.unobs_basis(r, col) / w_in[r];
  if (ambiguity.cols() > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ambiguity);
    ambiguity = qr.householderQ() * Eigen::MatrixXd::Identity(n_in, ambiguity.cols());
  }

  // Orthonormal basis of the identifiable complement.
  const int rank = n_in - static_cast<int>(ambiguity.cols());
  Eigen::MatrixXd complement = Eigen::MatrixXd::Identity(n_in, n_in);
  if (ambiguity.cols() > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> asvd(ambiguity.transpose(), Eigen::ComputeFullV);
    complement = asvd.matrixV().rightCols(rank);
  }

  MomentSolve out;
  out.solution.order = p;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_in);
  double cond = 0.0;
  if (rank > 0) {
    // ordinary least squares on the restricted, well-posed problem;
    // the result is the minimum-norm solution of the full problem
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stack * complement,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd y = svd.solve(rhs);
    x = complement * y;
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() > 0 && sv[sv.size() - 1] > 0.0) cond = sv[0] / sv[sv.size() - 1];
  }
  out.solution.values = x;
  out.residual = (stack * x - rhs).norm();
  out.condition_number = cond;
  out.rank_deficient = rank < n_in;
  out.ambiguity_basis = ambiguity;
  return out;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Eigen::VectorXd moments_to_cumulants(const Eigen::VectorXd& raw_moments) {
  const int p = static_cast<int>(raw_moments.size());
  if (p < 1 || p > 6)
    throw std::invalid_argument("moments_to_cumulants: orders 1..6 supported");
  Eigen::VectorXd kappa(p);
  for (int q = 1; q <= p; ++q) {
    double v = raw_moments[q - 1];
    for (int k = 1; k < q; ++k)
      v -= binomial(q - 1, k - 1) * kappa[k - 1] * raw_moments[q - k - 1];
    kappa[q - 1] = v;
  }
  return kappa;
}

Eigen::VectorXd cumulants_to_moments(const Eigen::VectorXd& cumulants) {
  const int p = static_cast<int>(cumulants.size());
  if (p < 1 || p > 6)
    throw std::invalid_argument("cumulants_to_moments: orders 1..6 supported");
  Eigen::VectorXd m(p + 1);
  m[0] = 1.0;
  for (int q = 1; q <= p; ++q) {
    double v = 0.0;
    for (int k = 1; k <= q; ++k)
      v += binomial(q - 1, k - 1) * cumulants[k - 1] * m[q - k];
    m[q] = v;
  }
  return m.tail(p);
}

Eigen::MatrixXd cumulant_design_matrix(const LinearSystem& sys, int p,
                                       const std::vector<double>& times) {
  sys.validate();
  if (sys.m() != 1)
    throw std::invalid_argument("cumulant_design_matrix: single-output systems only");
  if (p < 1) throw std::invalid_argument("cumulant_design_matrix: p must be >= 1");
  std::set<double> unique(times.begin(), times.end());
  if (unique.size() != times.size())
    throw std::invalid_argument("cumulant_design_matrix: times must be distinct");

  Eigen::MatrixXd design(times.size(), sys.n());
  for (size_t i = 0; i < times.size(); ++i) {
    const Eigen::MatrixXd row = output_map(sys, times[i]);
    for (int j = 0; j < sys.n(); ++j) design(static_cast<int>(i), j) = std::pow(row(0, j), p);
  }
  return design;
}

CumulantSolve reconstruct_cumulants_independent(const LinearSystem& sys, int p,
                                                const std::vector<double>& times,
                                                const Eigen::VectorXd& output_cumulants,
                                                double tol) {
  if (static_cast<int>(times.size()) != output_cumulants.size())
    throw std::invalid_argument("reconstruct_cumulants_independent: length mismatch");
  if (static_cast<int>(times.size()) < sys.n())
    throw std::invalid_argument("reconstruct_cumulants_independent: not enough time points");
  const Eigen::MatrixXd design = cumulant_design_matrix(sys, p, times);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] >= tol * smax) ++rank;

  CumulantSolve out;
  Eigen::VectorXd coeff = svd.matrixU().transpose() * output_cumulants;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.n());
  for (int i = 0; i < rank; ++i) x += (coeff[i] / sv[i]) * svd.matrixV().col(i);
  out.cumulants = x;
  out.residual = (design * x - output_cumulants).norm();
  out.rank = rank;
  out.rank_deficient = rank < sys.n();
  out.null_basis = svd.matrixV().rightCols(sys.n() - rank);
  return out;
}

Eigen::VectorXd empirical_scalar_cumulants(const Eigen::VectorXd& samples, int p) {
  if (p < 1 || p > 4)
    throw std::invalid_argument("empirical_scalar_cumulants: orders 1..4 supported");
  const double n = static_cast<double>(samples.size());
  if (samples.size() < p + 1)
    throw std::invalid_argument("empirical_scalar_cumulants: need at least p + 1 samples");

  const double mean = samples.mean();
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  Eigen::VectorXd kappa(p);
  kappa[0] = mean;
  if (p >= 2) kappa[1] = n / (n - 1.0) * m2;
  if (p >= 3) kappa[2] = n * n / ((n - 1.0) * (n - 2.0)) * m3;
  if (p >= 4)
    kappa[3] = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) /
               ((n - 1.0) * (n - 2.0) * (n - 3.0));
  return kappa;
}

PipelineResult full_pipeline(const LinearSystem& sys, const std::vector<Snapshot>& snaps,
                             int p_max, PipelineMode mode, double tol) {
  sys.validate();
  if (p_max < 1) throw std::invalid_argument("full_pipeline: p_max must be >= 1");
  if (snaps.empty()) throw std::invalid_argument("full_pipeline: no snapshots");
  if (mode == PipelineMode::CumulantsIndependent && sys.m() != 1)
    throw std::invalid_argument("full_pipeline: cumulant mode needs a single output");

  std::vector<double> times;
  for (const auto& s : snaps) times.push_back(s.time);

  PipelineResult result;
  result.mode = mode;
  for (int p = 1; p <= p_max; ++p) {
    PipelineOrder order;
    order.order = p;
    if (mode == PipelineMode::Moments) {
      const MultiIndexBasis out_basis = enumerate_basis(sys.m(), p);
      std::vector<MomentVector> outputs;
      for (const auto& s : snaps) {
        const MomentMap mm = empirical_moments(s.samples, p);
        MomentVector mv;
        mv.order = p;
        mv.values.resize(out_basis.size());
        for (int i = 0; i < out_basis.size(); ++i) mv.values[i] = mm.at(out_basis.indices[i]);
        outputs.push_back(std::move(mv));
      }
      order.moment_solve = reconstruct_moments(sys, p, times, outputs, tol);
    } else {
      Eigen::VectorXd output_kappa(snaps.size());
      for (size_t i = 0; i < snaps.size(); ++i)
        output_kappa[static_cast<int>(i)] =
            empirical_scalar_cumulants(snaps[i].samples.col(0), p)[p - 1];
      order.cumulant_solve =
          reconstruct_cumulants_independent(sys, p, times, output_kappa, tol);
    }
    result.orders.push_back(std::move(order));
  }
  return result;
}

std::vector<double> default_time_grid(const LinearSystem& sys, int p) {
  sys.validate();
  Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a);
  // slowest decaying stable mode sets the transient length
  double slowest = 0.0;
  for (int i = 0; i < sys.n(); ++i) {
    const double rate = -es.eigenvalues()[i].real();
    if (rate > 1e-9 && (slowest == 0.0 || rate < slowest)) slowest = rate;
  }
  const double horizon = slowest > 0.0 ? 3.0 / slowest : 3.0;
  const int k = 3 * static_cast<int>(basis_dimension(sys.n(), p));
  std::vector<double> times(k);
  for (int i = 0; i < k; ++i) times[i] = horizon * i / (k - 1);
  return times;
}

}  // namespace ensobs
