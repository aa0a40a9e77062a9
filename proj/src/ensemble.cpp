#include "ensobs/ensemble.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "ensobs/parallel.hpp"

namespace ensobs {

void GaussianMixture::validate() const {
  if (components() == 0) throw std::invalid_argument("GaussianMixture: no components");
  if (means.size() != weights.size() || covariances.size() != weights.size())
    throw std::invalid_argument("GaussianMixture: field lengths differ");
  double total = 0.0;
  const int n = dim();
  for (int k = 0; k < components(); ++k) {
    if (weights[k] < 0.0) throw std::invalid_argument("GaussianMixture: negative weight");
    total += weights[k];
    if (means[k].size() != n || covariances[k].rows() != n || covariances[k].cols() != n)
      throw std::invalid_argument("GaussianMixture: component dimension mismatch");
    if ((covariances[k] - covariances[k].transpose()).norm() > 1e-10 * (1.0 + covariances[k].norm()))
      throw std::invalid_argument("GaussianMixture: covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[k]);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("GaussianMixture: covariance not positive definite");
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1");
}

Eigen::VectorXd GaussianMixture::mean() const {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim());
  for (int k = 0; k < components(); ++k) mu += weights[k] * means[k];
  return mu;
}

Eigen::MatrixXd GaussianMixture::covariance() const {
  const Eigen::VectorXd mu = mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim(), dim());
  for (int k = 0; k < components(); ++k) {
    const Eigen::VectorXd d = means[k] - mu;
    cov += weights[k] * (covariances[k] + d * d.transpose());
  }
  return cov;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) { return A.exp(); }

Eigen::MatrixXd output_map(const LinearSystem& sys, double t) {
  return sys.c * expm(sys.a * t);
}

GaussianMixture pushforward(const GaussianMixture& mix, const Eigen::MatrixXd& M) {
  if (M.cols() != mix.dim()) throw std::invalid_argument("pushforward: dimension mismatch");
  GaussianMixture out;
  out.weights = mix.weights;
  for (int k = 0; k < mix.components(); ++k) {
    out.means.push_back(M * mix.means[k]);
    out.covariances.push_back(M * mix.covariances[k] * M.transpose());
  }
  return out;
}

Eigen::MatrixXd output_variance(const LinearSystem& sys, const Eigen::MatrixXd& sigma,
                                double t) {
  const Eigen::MatrixXd map = output_map(sys, t);
  return map * sigma * map.transpose();
}

namespace {

// Pinned sampling scheme: mt19937_64 -> 53-bit uniforms -> Box-Muller.
struct Rng {
  std::mt19937_64 eng;

  explicit Rng(std::uint64_t seed) : eng(seed) {}

  double uniform() {  // (0, 1]
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

const char* rng_scheme() { return "mt19937_64/box-muller"; }

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ splitmix64(index);
}

Eigen::MatrixXd sample(const GaussianMixture& mix, int count, std::uint64_t seed) {
  mix.validate();
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  const int n = mix.dim();

  std::vector<Eigen::MatrixXd> chol;
  for (int k = 0; k < mix.components(); ++k)
    chol.push_back(Eigen::LLT<Eigen::MatrixXd>(mix.covariances[k]).matrixL());

  std::vector<double> cumulative(mix.components());
  double acc = 0.0;
  for (int k = 0; k < mix.components(); ++k) {
    acc += mix.weights[k];
    cumulative[k] = acc;
  }

  Rng rng(seed);
  Eigen::MatrixXd out(count, n);
  Eigen::VectorXd z(n);
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform();
    int k = 0;
    while (k + 1 < mix.components() && u > cumulative[k]) ++k;
    for (int j = 0; j < n; ++j) z[j] = rng.normal();
    out.row(i) = (mix.means[k] + chol[k] * z).transpose();
  }
  return out;
}

std::vector<Snapshot> snapshots(const LinearSystem& sys, const GaussianMixture& mix,
                                const std::vector<double>& times, int count,
                                std::uint64_t seed) {
  sys.validate();
  mix.validate();
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw std::invalid_argument("snapshots: times must be >= 0");
    if (i > 0 && times[i] < times[i - 1])
      throw std::invalid_argument("snapshots: times must be sorted");
  }
  std::vector<Snapshot> out(times.size());
  const int nt = static_cast<int>(times.size());
#ifdef ENSOBS_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
#endif
  for (int i = 0; i < nt; ++i) {
    // fresh individuals per snapshot, seed independent of evaluation order
    const Eigen::MatrixXd x0 = sample(mix, count, derived_seed(seed, i));
    const Eigen::MatrixXd map = output_map(sys, times[i]);
    out[i].time = times[i];
    out[i].samples = x0 * map.transpose();
  }
  return out;
}

namespace {

// Raw Gaussian moments via m_{a+e_i} = mu_i m_a + sum_j Sigma_ij a_j m_{a-e_j}.
double gaussian_raw_moment(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                           const MultiIndex& alpha, std::map<MultiIndex, double>& memo) {
  auto it = memo.find(alpha);
  if (it != memo.end()) return it->second;
  int i = 0;
  while (alpha[i] == 0) ++i;  // degree >= 1 here
  MultiIndex prev = alpha;
  prev[i] -= 1;
  double value = mu[i] * gaussian_raw_moment(mu, sigma, prev, memo);
  for (size_t j = 0; j < prev.size(); ++j) {
    if (prev[j] == 0) continue;
    MultiIndex prev2 = prev;
    prev2[j] -= 1;
    value += sigma(i, static_cast<int>(j)) * prev[j] *
             gaussian_raw_moment(mu, sigma, prev2, memo);
  }
  memo[alpha] = value;
  return value;
}

}  // namespace

MomentMap analytic_moments(const GaussianMixture& mix, int p_max) {
  mix.validate();
  if (p_max < 1) throw std::invalid_argument("analytic_moments: p_max must be >= 1");
  const int n = mix.dim();
  MomentMap out;
  std::vector<std::map<MultiIndex, double>> memos(mix.components());
  for (int k = 0; k < mix.components(); ++k) memos[k][MultiIndex(n, 0)] = 1.0;
  for (int p = 1; p <= p_max; ++p) {
    const MultiIndexBasis basis = enumerate_basis(n, p);
    for (const MultiIndex& alpha : basis.indices) {
      double m = 0.0;
      for (int k = 0; k < mix.components(); ++k)
        m += mix.weights[k] *
             gaussian_raw_moment(mix.means[k], mix.covariances[k], alpha, memos[k]);
      out[alpha] = m;
    }
  }
  return out;
}

MomentMap empirical_moments(const Eigen::MatrixXd& samples, int p_max) {
  if (samples.rows() < 1) throw std::invalid_argument("empirical_moments: no samples");
  if (p_max < 1) throw std::invalid_argument("empirical_moments: p_max must be >= 1");
  const int n = static_cast<int>(samples.cols());
  const long long count = samples.rows();

  std::vector<MultiIndex> all;
  for (int p = 1; p <= p_max; ++p) {
    const MultiIndexBasis basis = enumerate_basis(n, p);
    all.insert(all.end(), basis.indices.begin(), basis.indices.end());
  }
  std::vector<double> values(all.size());
  const int total = static_cast<int>(all.size());
  // parallel over moment indices: each entry is a full serial pass over the
  // samples, so results do not depend on the thread count
#ifdef ENSOBS_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
#endif
  for (int idx = 0; idx < total; ++idx) {
    const MultiIndex& alpha = all[idx];
    double acc = 0.0;
    for (long long r = 0; r < count; ++r) {
      double monomial = 1.0;
      for (int j = 0; j < n; ++j)
        for (int e = 0; e < alpha[j]; ++e) monomial *= samples(r, j);
      acc += monomial;
    }
    values[idx] = acc / static_cast<double>(count);
  }
  MomentMap out;
  for (int idx = 0; idx < total; ++idx) out[all[idx]] = values[idx];
  return out;
}

Indistinguishability indistinguishability_check(const LinearSystem& sys,
                                                const GaussianMixture& mix_a,
                                                const GaussianMixture& mix_b,
                                                const std::vector<double>& times, int p_max,
                                                double tol) {
  sys.validate();
  if (mix_a.dim() != mix_b.dim())
    throw std::invalid_argument("indistinguishability_check: mixture dimensions differ");
  Indistinguishability result;
  for (double t : times) {
    const Eigen::MatrixXd map = output_map(sys, t);
    const MomentMap ma = analytic_moments(pushforward(mix_a, map), p_max);
    const MomentMap mb = analytic_moments(pushforward(mix_b, map), p_max);
    for (const auto& [alpha, va] : ma) {
      const double dev = std::abs(va - mb.at(alpha)) / std::max(1.0, std::abs(va));
      if (dev > result.max_deviation) {
        result.max_deviation = dev;
        result.worst_time = t;
        result.worst_index = alpha;
      }
    }
  }
  result.indistinguishable = result.max_deviation <= tol;
  return result;
}

}  // namespace ensobs
