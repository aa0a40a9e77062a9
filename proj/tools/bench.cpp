// Benchmark of the OpenMP kernels against their serial reference paths:
// snapshot sampling and strip-row assembly.

#include <chrono>
#include <cstdio>

#include "ensobs/ensemble.hpp"
#include "ensobs/parallel.hpp"
#include "ensobs/tomo.hpp"

using namespace ensobs;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main() {
  std::printf("openmp: %s, threads: %d\n", has_openmp() ? "yes" : "no", num_threads());

  LinearSystem sys;
  sys.a.resize(2, 2);
  sys.a << -1, 1, 0, 0;
  sys.c.resize(1, 2);
  sys.c << 1, 0;

  GaussianMixture mix;
  mix.weights = {0.7, 0.3};
  mix.means = {Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 1)};
  mix.covariances = {Eigen::Vector2d(0.09, 0.09).asDiagonal(),
                     Eigen::Vector2d(0.04, 0.04).asDiagonal()};

  std::vector<double> times;
  for (int k = 0; k < 32; ++k) times.push_back(3.0 * k / 31);
  const int count = 200000;

  // snapshot generation: the parallel loop spans times; the serial reference
  // is the same per-time draw executed one time point at a time
  auto start = Clock::now();
  const auto parallel_snaps = snapshots(sys, mix, times, count, 99);
  const double t_par_snap = seconds_since(start);

  start = Clock::now();
  std::vector<Snapshot> serial_snaps;
  for (size_t i = 0; i < times.size(); ++i) {
    const auto one = snapshots(sys, mix, {times[i]}, count, derived_seed(99, i));
    serial_snaps.push_back(one[0]);
  }
  const double t_ser_snap = seconds_since(start);
  std::printf("snapshots (%zu times x %d samples): parallel %.3fs, serial-loop %.3fs (x%.2f)\n",
              times.size(), count, t_par_snap, t_ser_snap, t_ser_snap / t_par_snap);

  // strip-row assembly: identical output, explicit serial path
  ProjectionSet projections;
  for (const auto& snap : parallel_snaps) {
    ProjectionEntry entry;
    entry.t = snap.time;
    entry.row = output_map(sys, snap.time);
    entry.bin_edges = equal_width_bins(snap.samples.col(0), 40);
    entry.probs = bin_samples(snap.samples.col(0), entry.bin_edges);
    projections.entries.push_back(std::move(entry));
  }
  PixelGrid grid;
  grid.x_min = grid.y_min = 0.0;
  grid.x_max = grid.y_max = 3.0;
  grid.nx = grid.ny = 128;
  grid.values = Eigen::VectorXd::Zero(grid.size());

  start = Clock::now();
  const AssembledSystem par = assemble(projections, grid, 4, true);
  const double t_par_asm = seconds_since(start);

  start = Clock::now();
  const AssembledSystem ser = assemble(projections, grid, 4, false);
  const double t_ser_asm = seconds_since(start);

  const double diff = (par.rows - ser.rows).norm();
  std::printf("assembly (%ld rows x %d pixels): parallel %.3fs, serial %.3fs (x%.2f), diff %g\n",
              static_cast<long>(par.rows.rows()), grid.size(), t_par_asm, t_ser_asm,
              t_ser_asm / t_par_asm, diff);
  return diff == 0.0 ? 0 : 1;
}
