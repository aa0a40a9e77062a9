#include "ensobs/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ensobs/parallel.hpp"

namespace ensobs {

void PixelGrid::validate() const {
  if (nx < 2 || ny < 2) throw std::invalid_argument("PixelGrid: nx, ny must be >= 2");
  if (!(x_min < x_max) || !(y_min < y_max))
    throw std::invalid_argument("PixelGrid: empty bounding box");
  if (values.size() != 0 && values.size() != size())
    throw std::invalid_argument("PixelGrid: value count mismatch");
}

Eigen::VectorXd bin_samples(const Eigen::VectorXd& samples, const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw std::invalid_argument("bin_samples: need at least two edges");
  for (size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > bin_edges[i - 1]))
      throw std::invalid_argument("bin_samples: edges must be strictly increasing");
  const int bins = static_cast<int>(bin_edges.size()) - 1;
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(bins);
  for (int i = 0; i < samples.size(); ++i) {
    const double v = samples[i];
    if (v < bin_edges.front() || v >= bin_edges.back()) continue;
    const int j = static_cast<int>(std::upper_bound(bin_edges.begin(), bin_edges.end(), v) -
                                   bin_edges.begin()) - 1;
    probs[j] += 1.0;
  }
  probs /= static_cast<double>(samples.size());
  return probs;
}

std::vector<double> equal_width_bins(const Eigen::VectorXd& samples, int bins) {
  if (samples.size() == 0) throw std::invalid_argument("equal_width_bins: no samples");
  if (bins < 1) throw std::invalid_argument("equal_width_bins: bins must be >= 1");
  double lo = samples.minCoeff();
  double hi = samples.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;
  // nudge the top edge so the maximum sample falls inside the last bin
  hi += (hi - lo) * 1e-9;
  std::vector<double> edges(bins + 1);
  for (int j = 0; j <= bins; ++j) edges[j] = lo + (hi - lo) * j / bins;
  return edges;
}

Eigen::VectorXd strip_row(const PixelGrid& grid, const Eigen::RowVector2d& c, double lo,
                          double hi, int subsample) {
  grid.validate();
  if (!(lo < hi)) throw std::invalid_argument("strip_row: lo must be < hi");
  if (c.norm() == 0.0) throw std::invalid_argument("strip_row: zero direction");
  if (subsample < 1) throw std::invalid_argument("strip_row: subsample must be >= 1");

  const double area = grid.dx() * grid.dy();
  const double inv = 1.0 / subsample;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(grid.size());
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double px = grid.x_min + ix * grid.dx();
      const double py = grid.y_min + iy * grid.dy();
      int inside = 0;
      for (int sy = 0; sy < subsample; ++sy) {
        const double y = py + (sy + 0.5) * inv * grid.dy();
        for (int sx = 0; sx < subsample; ++sx) {
          const double x = px + (sx + 0.5) * inv * grid.dx();
          const double v = c[0] * x + c[1] * y;
          if (v >= lo && v < hi) ++inside;
        }
      }
      if (inside > 0)
        row[grid.index(ix, iy)] = area * inside / double(subsample * subsample);
    }
  }
  return row;
}

AssembledSystem assemble(const ProjectionSet& projections, const PixelGrid& grid,
                         int subsample, bool parallel) {
  grid.validate();
  int total_rows = 0;
  for (const auto& e : projections.entries)
    total_rows += static_cast<int>(e.probs.size());

  AssembledSystem out;
  out.rows.resize(total_rows, grid.size());
  out.rhs.resize(total_rows);

  struct RowSpec {
    const ProjectionEntry* entry;
    int bin;
  };
  std::vector<RowSpec> specs;
  specs.reserve(total_rows);
  for (const auto& e : projections.entries) {
    if (static_cast<int>(e.bin_edges.size()) != e.probs.size() + 1)
      throw std::invalid_argument("assemble: bin edge / probability count mismatch");
    for (int j = 0; j < e.probs.size(); ++j) specs.push_back({&e, j});
  }

#ifdef ENSOBS_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(num_threads()) if (parallel)
#endif
  for (int r = 0; r < total_rows; ++r) {
    const auto& [entry, j] = specs[r];
    out.rows.row(r) =
        strip_row(grid, entry->row, entry->bin_edges[j], entry->bin_edges[j + 1], subsample)
            .transpose();
    out.rhs[r] = entry->probs[j];
  }
  for (int r = 0; r < total_rows; ++r)
    if (out.rows.row(r).norm() == 0.0) out.zero_rows.push_back(r);
  return out;
}

KaczmarzResult kaczmarz(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs, int sweeps,
                        double relaxation, bool nonneg, const Eigen::VectorXd& init) {
  if (rows.rows() != rhs.size()) throw std::invalid_argument("kaczmarz: shape mismatch");
  if (sweeps < 1) throw std::invalid_argument("kaczmarz: sweeps must be >= 1");
  if (!(relaxation > 0.0 && relaxation < 2.0))
    throw std::invalid_argument("kaczmarz: relaxation must be in (0, 2)");
  if (rows.norm() == 0.0) throw std::invalid_argument("kaczmarz: all-zero system");

  Eigen::VectorXd norms2(rows.rows());
  for (int r = 0; r < rows.rows(); ++r) norms2[r] = rows.row(r).squaredNorm();

  KaczmarzResult result;
  result.values = init.size() ? init : Eigen::VectorXd::Zero(rows.cols());
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int r = 0; r < rows.rows(); ++r) {
      if (norms2[r] == 0.0) continue;
      const double misfit = rhs[r] - rows.row(r).dot(result.values);
      result.values += (relaxation * misfit / norms2[r]) * rows.row(r).transpose();
    }
    if (nonneg) result.values = result.values.cwiseMax(0.0);
    const double rms = (rows * result.values - rhs).norm() / std::sqrt(double(rows.rows()));
    result.residuals.push_back(rms);
  }
  return result;
}

ReconstructionResult reconstruct(const LinearSystem& sys, const std::vector<Snapshot>& snaps,
                                 PixelGrid grid, const TomoOptions& opt) {
  sys.validate();
  if (sys.n() != 2 || sys.m() != 1)
    throw std::invalid_argument(
        "reconstruct: ART pipeline covers n = 2, m = 1; use the moment pipeline for general n");
  grid.validate();

  ReconstructionResult result;
  for (const Snapshot& snap : snaps) {
    ProjectionEntry entry;
    entry.t = snap.time;
    entry.row = output_map(sys, snap.time);
    entry.bin_edges = equal_width_bins(snap.samples.col(0), opt.bins);
    entry.probs = bin_samples(snap.samples.col(0), entry.bin_edges);
    result.projections.entries.push_back(std::move(entry));
  }

  const AssembledSystem system = assemble(result.projections, grid, opt.subsample);
  // start from the uniform unit-mass density: row actions then only
  // redistribute mass, which keeps the pre-normalization defect small
  const double area = (grid.x_max - grid.x_min) * (grid.y_max - grid.y_min);
  const Eigen::VectorXd init = Eigen::VectorXd::Constant(grid.size(), 1.0 / area);
  const KaczmarzResult kz =
      kaczmarz(system.rows, system.rhs, opt.sweeps, opt.relaxation, opt.nonneg, init);

  grid.values = kz.values;
  result.residuals = kz.residuals;
  const double mass = grid.mass();
  result.mass_defect = std::abs(1.0 - mass);
  if (mass > 0.0) grid.values /= mass;
  result.grid = std::move(grid);
  return result;
}

double l2_error(const PixelGrid& estimate, const Eigen::VectorXd& truth) {
  if (estimate.values.size() != truth.size())
    throw std::invalid_argument("l2_error: size mismatch");
  const double denom = truth.norm();
  if (denom == 0.0) throw std::invalid_argument("l2_error: zero reference");
  return (estimate.values - truth).norm() / denom;
}

Eigen::VectorXd density_on_grid(const GaussianMixture& mix, const PixelGrid& grid) {
  mix.validate();
  grid.validate();
  if (mix.dim() != 2) throw std::invalid_argument("density_on_grid: mixture must be 2-d");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  for (int k = 0; k < mix.components(); ++k) {
    const Eigen::MatrixXd inv = mix.covariances[k].inverse();
    const double norm =
        mix.weights[k] / (2.0 * M_PI * std::sqrt(mix.covariances[k].determinant()));
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        Eigen::Vector2d d(grid.center_x(ix) - mix.means[k][0],
                          grid.center_y(iy) - mix.means[k][1]);
        out[grid.index(ix, iy)] += norm * std::exp(-0.5 * d.dot(inv * d));
      }
    }
  }
  return out;
}

}  // namespace ensobs
