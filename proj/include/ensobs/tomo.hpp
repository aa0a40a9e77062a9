#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ensobs/ensemble.hpp"
#include "ensobs/observability.hpp"

namespace ensobs {

/// Discretized density on a rectangle; values at pixel centers, row-major
/// with x varying fastest.
struct PixelGrid {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  int nx = 2, ny = 2;
  Eigen::VectorXd values;  // nx * ny entries

  double dx() const { return (x_max - x_min) / nx; }
  double dy() const { return (y_max - y_min) / ny; }
  int size() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }
  double center_x(int ix) const { return x_min + (ix + 0.5) * dx(); }
  double center_y(int iy) const { return y_min + (iy + 0.5) * dy(); }

  void validate() const;
  /// Integral of the piecewise-constant density.
  double mass() const { return values.sum() * dx() * dy(); }
};

/// Measured strip probabilities for one time point: the bin [edge_j, edge_{j+1})
/// of the output pulls back to the strip lo <= c . x < hi.
struct ProjectionEntry {
  double t = 0.0;
  Eigen::RowVector2d row;        // c_t = Ce^{At}
  std::vector<double> bin_edges; // strictly increasing
  Eigen::VectorXd probs;         // one per bin
};

struct ProjectionSet {
  std::vector<ProjectionEntry> entries;
};

/// Histogram probabilities of scalar samples over the given bin edges.
/// Mass outside [edges.front(), edges.back()) is dropped (defect recorded
/// by callers via probs.sum()).
Eigen::VectorXd bin_samples(const Eigen::VectorXd& samples, const std::vector<double>& bin_edges);

/// Equal-width bin edges spanning [min, max] of the samples.
std::vector<double> equal_width_bins(const Eigen::VectorXd& samples, int bins);

/// Pixel weights of the strip {x : lo <= c . x < hi}: pixel area times the
/// covered fraction estimated on a subsample x subsample point grid.
Eigen::VectorXd strip_row(const PixelGrid& grid, const Eigen::RowVector2d& c, double lo,
                          double hi, int subsample);

struct AssembledSystem {
  Eigen::MatrixXd rows;       // one row per (time, bin)
  Eigen::VectorXd rhs;        // measured probabilities
  std::vector<int> zero_rows; // strips that miss the grid entirely
};

/// Builds the Kaczmarz system, rows ordered by time then bin.
/// Row assembly runs in parallel; `parallel = false` forces the serial
/// reference path (identical output).
AssembledSystem assemble(const ProjectionSet& projections, const PixelGrid& grid,
                         int subsample, bool parallel = true);

struct KaczmarzResult {
  Eigen::VectorXd values;
  std::vector<double> residuals;  // RMS data residual after each sweep
};

/// Classic row-action iteration in fixed row order; zero rows skipped;
/// optional nonnegativity projection after each full sweep.
KaczmarzResult kaczmarz(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs, int sweeps,
                        double relaxation, bool nonneg, const Eigen::VectorXd& init);

struct TomoOptions {
  int bins = 40;
  int sweeps = 7;
  double relaxation = 1.0;
  int subsample = 4;
  bool nonneg = true;
};

struct ReconstructionResult {
  PixelGrid grid;
  std::vector<double> residuals;
  double mass_defect = 0.0;  // |1 - mass| before renormalization
  ProjectionSet projections;
};

/// End-to-end ART pipeline for n = 2, m = 1: bin samples, assemble strips,
/// run Kaczmarz, renormalize the mass to 1.
ReconstructionResult reconstruct(const LinearSystem& sys, const std::vector<Snapshot>& snaps,
                                 PixelGrid grid, const TomoOptions& opt = {});

/// Relative L2 distance between pixel value vectors.
double l2_error(const PixelGrid& estimate, const Eigen::VectorXd& truth);

/// Gaussian mixture density evaluated at the pixel centers (comparison
/// oracle for reconstructions).
Eigen::VectorXd density_on_grid(const GaussianMixture& mix, const PixelGrid& grid);

}  // namespace ensobs
