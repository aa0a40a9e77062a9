// ensobs: analyze ensemble observability of linear systems and reconstruct
// initial distributions from output snapshots (ART strips or moment ladders).

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ensobs/ensemble.hpp"
#include "ensobs/io.hpp"
#include "ensobs/moments.hpp"
#include "ensobs/observability.hpp"
#include "ensobs/parallel.hpp"
#include "ensobs/tomo.hpp"

using namespace ensobs;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitDemoFailure = 4;

std::vector<double> parse_time_list(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad time value: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--times must list at least one time");
  return out;
}

json base_manifest(const std::string& command) {
  json m;
  m["command"] = command;
  m["version"] = tool_version();
  m["rng_scheme"] = rng_scheme();
  m["threads"] = num_threads();
  return m;
}

std::string manifest_path_for(const std::string& output) {
  const std::filesystem::path p(output);
  std::filesystem::path q = p;
  q.replace_extension();
  return q.string() + ".manifest.json";
}

// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& system_path, int p_max, int z_bound, double tol,
                bool independence, const std::string& output) {
  const LinearSystem sys = load_system(system_path);
  const auto start = std::chrono::steady_clock::now();
  const ObservabilityReport report = analyze(sys, p_max, z_bound, tol, independence);

  std::printf("system: n=%d, m=%d\n", sys.n(), sys.m());
  std::printf("classical: %s\n", report.classical_observable ? "observable" : "not observable");
  if (!report.classical_observable) {
    std::printf("  -> not ensemble observable (unobservable subspace dimension %d)\n",
                static_cast<int>(report.unobs_basis.cols()));
  }
  for (const auto& h : report.hautus)
    std::printf("  hautus lambda=(%.6g%+.6gi): rank deficiency %d\n", h.eigenvalue.real(),
                h.eigenvalue.imag(), h.rank_deficiency);

  std::printf("richness up to p=%d: %s\n", report.richness.p_max,
              report.richness.rich_up_to_pmax ? "rich (all tensor orders observable)"
                                              : "blocked");
  for (const auto& order : report.richness.orders) {
    if (order.observable) {
      std::printf("  order %d: observable\n", order.order);
    } else {
      std::printf("  order %d: blocked", order.order);
      for (const auto& poly : order.blocking_varieties)
        std::printf("  [%s]", polynomial_to_string(poly).c_str());
      std::printf("\n");
    }
  }
  if (report.rational_independence) {
    const auto& ri = *report.rational_independence;
    if (ri.independent) {
      std::printf("eigenvalue integer relations: none within |z| <= %d\n", ri.z_bound);
    } else {
      std::printf("eigenvalue integer relation found: z = (");
      for (int i = 0; i < ri.witness->size(); ++i)
        std::printf("%s%d", i ? ", " : "", (*ri.witness)[i]);
      std::printf(")\n");
    }
  }
  if (independence) {
    for (size_t i = 0; i < report.independence_constrained.size(); ++i) {
      const auto& ch = report.independence_constrained[i];
      std::printf("independence-constrained order %zu: %s\n", i + 1,
                  ch.passes ? "passes" : "fails (cross-term-free invisible direction exists)");
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!output.empty()) {
    json rep;
    rep["classical_observable"] = report.classical_observable;
    rep["unobservable_dimension"] = static_cast<int>(report.unobs_basis.cols());
    rep["rich_up_to_pmax"] = report.richness.rich_up_to_pmax;
    json orders = json::array();
    for (const auto& order : report.richness.orders) {
      json o;
      o["order"] = order.order;
      o["observable"] = order.observable;
      json vars = json::array();
      for (const auto& poly : order.blocking_varieties) vars.push_back(polynomial_to_string(poly));
      o["blocking_varieties"] = vars;
      orders.push_back(o);
    }
    rep["orders"] = orders;
    if (report.rational_independence) {
      const auto& ri = *report.rational_independence;
      rep["rational_independence"] = {{"independent", ri.independent}, {"z_bound", ri.z_bound}};
      if (ri.witness) {
        std::vector<int> z(ri.witness->data(), ri.witness->data() + ri.witness->size());
        rep["rational_independence"]["witness"] = z;
      }
    }
    if (independence) {
      json cons = json::array();
      for (const auto& ch : report.independence_constrained) cons.push_back(ch.passes);
      rep["independence_constrained"] = cons;
    }
    write_manifest(output, rep);

    json manifest = base_manifest("analyze");
    manifest["parameters"] = {{"system", system_path}, {"pmax", p_max}, {"zbound", z_bound},
                              {"tol", tol},           {"independence", independence}};
    manifest["inputs"] = {{"system_digest", file_digest(system_path)}};
    manifest["timing_seconds"] = elapsed;
    manifest["results"] = {{"classical_observable", report.classical_observable},
                           {"rich_up_to_pmax", report.richness.rich_up_to_pmax}};
    write_manifest(manifest_path_for(output), manifest);
  }
  return kExitOk;
}

int cmd_simulate(const std::string& system_path, const std::string& mixture_path,
                 const std::string& times_spec, int count, std::uint64_t seed,
                 const std::string& out_dir) {
  const LinearSystem sys = load_system(system_path);
  const GaussianMixture mix = load_mixture(mixture_path);
  std::vector<double> times = parse_time_list(times_spec);
  std::sort(times.begin(), times.end());

  const auto start = std::chrono::steady_clock::now();
  const std::vector<Snapshot> snaps = snapshots(sys, mix, times, count, seed);
  std::filesystem::create_directories(out_dir);
  const auto files = write_snapshot_dir(out_dir, snaps);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest = base_manifest("simulate");
  manifest["parameters"] = {{"system", system_path},
                            {"mixture", mixture_path},
                            {"times", times},
                            {"count", count},
                            {"seed", seed}};
  manifest["inputs"] = {{"system_digest", file_digest(system_path)},
                        {"mixture_digest", file_digest(mixture_path)}};
  json outputs = json::array();
  for (const auto& f : files) outputs.push_back({{"file", f}, {"digest", file_digest(f)}});
  manifest["outputs"] = outputs;
  manifest["timing_seconds"] = elapsed;
  write_manifest((std::filesystem::path(out_dir) / "manifest.json").string(), manifest);
  std::printf("wrote %zu snapshots to %s\n", files.size(), out_dir.c_str());
  return kExitOk;
}

int cmd_reconstruct_art(const std::string& system_path, const std::string& snap_dir,
                        const std::string& grid_spec, const std::string& box_spec, int bins,
                        int sweeps, double relax, const std::string& output) {
  const LinearSystem sys = load_system(system_path);
  const std::vector<Snapshot> snaps = read_snapshot_dir(snap_dir);
  if (snaps.empty()) throw std::invalid_argument("no snapshot_*.csv files in " + snap_dir);

  PixelGrid grid;
  if (std::sscanf(grid_spec.c_str(), "%dx%d", &grid.nx, &grid.ny) != 2)
    throw std::invalid_argument("--grid expects NXxNY, e.g. 64x64");
  if (std::sscanf(box_spec.c_str(), "%lf,%lf,%lf,%lf", &grid.x_min, &grid.x_max, &grid.y_min,
                  &grid.y_max) != 4)
    throw std::invalid_argument("--box expects x0,x1,y0,y1");
  grid.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.nx) * grid.ny);
  grid.validate();

  TomoOptions opt;
  opt.bins = bins;
  opt.sweeps = sweeps;
  opt.relaxation = relax;

  const auto start = std::chrono::steady_clock::now();
  const ReconstructionResult res = reconstruct(sys, snaps, grid, opt);
  write_grid_csv(output, res.grid);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest = base_manifest("reconstruct-art");
  manifest["parameters"] = {{"system", system_path}, {"snapshots", snap_dir},
                            {"grid", grid_spec},     {"box", box_spec},
                            {"bins", bins},          {"sweeps", sweeps},
                            {"relax", relax}};
  manifest["inputs"] = {{"system_digest", file_digest(system_path)}};
  manifest["results"] = {{"residuals", res.residuals},
                         {"mass_defect", res.mass_defect},
                         {"output_digest", file_digest(output)}};
  manifest["timing_seconds"] = elapsed;
  write_manifest(manifest_path_for(output), manifest);

  std::printf("reconstruction written to %s (mass defect %.4f, final residual %.6g)\n",
              output.c_str(), res.mass_defect, res.residuals.empty() ? 0.0 : res.residuals.back());
  return kExitOk;
}

int cmd_reconstruct_moments(const std::string& system_path, const std::string& snap_dir,
                            int p_max, const std::string& mode_name, const std::string& output) {
  const LinearSystem sys = load_system(system_path);
  const std::vector<Snapshot> snaps = read_snapshot_dir(snap_dir);
  if (snaps.empty()) throw std::invalid_argument("no snapshot_*.csv files in " + snap_dir);

  PipelineMode mode;
  if (mode_name == "moments")
    mode = PipelineMode::Moments;
  else if (mode_name == "cumulants")
    mode = PipelineMode::CumulantsIndependent;
  else
    throw std::invalid_argument("--mode must be moments or cumulants");

  const auto start = std::chrono::steady_clock::now();
  const PipelineResult res = full_pipeline(sys, snaps, p_max, mode);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json ladder = json::array();
  for (const auto& order : res.orders) {
    json o;
    o["order"] = order.order;
    if (mode == PipelineMode::Moments) {
      const auto& ms = order.moment_solve;
      const MultiIndexBasis basis = enumerate_basis(sys.n(), order.order);
      json values = json::array();
      for (int k = 0; k < basis.size(); ++k) {
        json entry;
        entry["alpha"] = basis.indices[k];
        entry["value"] = ms.solution.values[k];
        values.push_back(entry);
      }
      o["moments"] = values;
      o["residual"] = ms.residual;
      o["condition_number"] = ms.condition_number;
      o["rank_deficient"] = ms.rank_deficient;
      o["ambiguity_dimension"] = static_cast<int>(ms.ambiguity_basis.cols());
    } else {
      const auto& cs = order.cumulant_solve;
      std::vector<double> kappa(cs.cumulants.data(), cs.cumulants.data() + cs.cumulants.size());
      o["component_cumulants"] = kappa;
      o["residual"] = cs.residual;
      o["rank"] = cs.rank;
      o["rank_deficient"] = cs.rank_deficient;
    }
    ladder.push_back(o);
  }
  json doc;
  doc["mode"] = mode_name;
  doc["orders"] = ladder;
  write_manifest(output, doc);

  json manifest = base_manifest("reconstruct-moments");
  manifest["parameters"] = {{"system", system_path},
                            {"snapshots", snap_dir},
                            {"pmax", p_max},
                            {"mode", mode_name}};
  manifest["inputs"] = {{"system_digest", file_digest(system_path)}};
  manifest["results"] = {{"output_digest", file_digest(output)}};
  manifest["timing_seconds"] = elapsed;
  write_manifest(manifest_path_for(output), manifest);

  std::printf("moment ladder written to %s\n", output.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

bool demo_check(const char* what, bool ok) {
  std::printf("  %s  %s\n", ok ? "PASS" : "FAIL", what);
  return ok;
}

int cmd_demo(const std::string& name) {
  bool ok = true;
  if (name == "example1") {
    LinearSystem sys;
    sys.a.resize(2, 2);
    sys.a << -1, 1, 0, 0;
    sys.c.resize(1, 2);
    sys.c << 0, 1;  // hidden first state
    const Eigen::MatrixXd basis = unobservable_subspace(sys);
    ok &= demo_check("unobservable subspace is span{(1,0)}",
                     basis.cols() == 1 && std::abs(basis(0, 0)) > 1.0 - 1e-12);
    GaussianMixture mix;
    mix.weights = {1.0};
    mix.means = {Eigen::Vector2d(0.5, -0.5)};
    mix.covariances = {Eigen::MatrixXd::Identity(2, 2)};
    GaussianMixture shifted = mix;
    shifted.means[0] += basis.col(0);
    bool same = true;
    for (double t = 0.0; t <= 5.0; t += 0.5) {
      const Eigen::MatrixXd map = output_map(sys, t);
      const GaussianMixture pa = pushforward(mix, map);
      const GaussianMixture pb = pushforward(shifted, map);
      same &= (pa.means[0] - pb.means[0]).norm() < 1e-12 &&
              (pa.covariances[0] - pb.covariances[0]).norm() < 1e-12;
    }
    ok &= demo_check("shift along the hidden direction is output-invisible", same);
  } else if (name == "system14") {
    LinearSystem sys;
    sys.a = Eigen::Vector3d(0, -1, -2).asDiagonal();
    sys.c.resize(1, 3);
    sys.c << 1, 1, 1;
    const Eigen::MatrixXd prime = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd dblprime(3, 3);
    dblprime << 1, 0, -0.5, 0, 2, 0, -0.5, 0, 1;
    bool flat = true;
    for (double t = 0.0; t <= 5.0; t += 0.1) {
      const double expected = 1 + std::exp(-2 * t) + std::exp(-4 * t);
      flat &= std::abs(output_variance(sys, prime, t)(0, 0) - expected) < 1e-10;
      flat &= std::abs(output_variance(sys, dblprime, t)(0, 0) - expected) < 1e-10;
    }
    ok &= demo_check("two covariances share the output-variance curve", flat);
    ok &= demo_check("classically observable", unobservable_subspace(sys).cols() == 0);
    ok &= demo_check("order-2 tensor lift blocked", !tensor_observability(sys, 2).observable);
  } else if (name == "rotation") {
    LinearSystem sys;
    sys.a.resize(3, 3);
    sys.a << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    sys.c.resize(1, 3);
    sys.c << 1, 1, std::sqrt(2.0);
    const Eigen::MatrixXd prime = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd dblprime = Eigen::Vector3d(1.5, 1.5, 0.5).asDiagonal();
    bool flat = true;
    for (double t = 0.0; t <= 5.0; t += 0.1) {
      flat &= std::abs(output_variance(sys, prime, t)(0, 0) - 4.0) < 1e-10;
      flat &= std::abs(output_variance(sys, dblprime, t)(0, 0) - 4.0) < 1e-10;
    }
    ok &= demo_check("both covariances give flat output variance 4", flat);
    const ConstrainedHautus ch = constrained_hautus_independence(sys, 2);
    ok &= demo_check("cross-term-free independence test fails at order 2", !ch.passes);
  } else if (name == "bimodal-art") {
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
    for (int k = 0; k < 20; ++k) times.push_back(3.0 * k / 19);
    const auto snaps = snapshots(sys, mix, times, 100000, 20240817);
    PixelGrid grid;
    grid.x_min = grid.y_min = 0.0;
    grid.x_max = grid.y_max = 3.0;
    grid.nx = grid.ny = 64;
    grid.values = Eigen::VectorXd::Zero(grid.size());
    const ReconstructionResult res = reconstruct(sys, snaps, grid, {});
    ok &= demo_check("residual decreases over sweeps",
                     res.residuals.back() < res.residuals.front());
    const Eigen::VectorXd truth = density_on_grid(mix, res.grid);
    ok &= demo_check("relative L2 error below 0.5", l2_error(res.grid, truth) < 0.5);
  } else {
    throw std::invalid_argument("unknown demo: " + name +
                                " (choose example1, system14, rotation, bimodal-art)");
  }
  std::printf("demo %s: %s\n", name.c_str(), ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitDemoFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble observability analysis and distribution reconstruction"};
  app.require_subcommand(1);

  // analyze
  std::string an_system, an_output;
  int an_pmax = 4, an_zbound = 5;
  double an_tol = 1e-9;
  bool an_independence = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "observability report for a system");
  analyze_cmd->add_option("system", an_system, "system JSON file")->required();
  analyze_cmd->add_option("--pmax", an_pmax, "highest tensor order to check");
  analyze_cmd->add_option("--zbound", an_zbound, "integer-relation search bound");
  analyze_cmd->add_option("--tol", an_tol, "rank decision tolerance");
  analyze_cmd->add_flag("--independence", an_independence,
                        "also run the independence-constrained tests");
  analyze_cmd->add_option("-o,--output", an_output, "write the JSON report here");

  // simulate
  std::string sim_system, sim_mixture, sim_times, sim_out;
  int sim_count = 100000;
  std::uint64_t sim_seed = 0;
  auto* simulate_cmd = app.add_subcommand("simulate", "draw output snapshots of a mixture");
  simulate_cmd->add_option("system", sim_system, "system JSON file")->required();
  simulate_cmd->add_option("mixture", sim_mixture, "mixture JSON file")->required();
  simulate_cmd->add_option("--times", sim_times, "comma-separated times")->required();
  simulate_cmd->add_option("--count", sim_count, "samples per snapshot");
  simulate_cmd->add_option("--seed", sim_seed, "random seed")->required();
  simulate_cmd->add_option("-o,--output", sim_out, "output directory")->required();

  // reconstruct-art
  std::string art_system, art_snaps, art_grid = "64x64", art_box = "0,3,0,3", art_out;
  int art_bins = 40, art_sweeps = 7;
  double art_relax = 1.0;
  auto* art_cmd = app.add_subcommand("reconstruct-art", "strip-integral ART reconstruction");
  art_cmd->add_option("system", art_system, "system JSON file")->required();
  art_cmd->add_option("snapshots", art_snaps, "snapshot directory")->required();
  art_cmd->add_option("--grid", art_grid, "pixel grid, NXxNY");
  art_cmd->add_option("--box", art_box, "bounding box x0,x1,y0,y1");
  art_cmd->add_option("--bins", art_bins, "histogram bins per snapshot");
  art_cmd->add_option("--sweeps", art_sweeps, "Kaczmarz sweeps");
  art_cmd->add_option("--relax", art_relax, "relaxation parameter");
  art_cmd->add_option("-o,--output", art_out, "output grid CSV")->required();

  // reconstruct-moments
  std::string mom_system, mom_snaps, mom_mode = "moments", mom_out;
  int mom_pmax = 3;
  auto* mom_cmd = app.add_subcommand("reconstruct-moments", "moment/cumulant reconstruction");
  mom_cmd->add_option("system", mom_system, "system JSON file")->required();
  mom_cmd->add_option("snapshots", mom_snaps, "snapshot directory")->required();
  mom_cmd->add_option("--pmax", mom_pmax, "highest moment order");
  mom_cmd->add_option("--mode", mom_mode, "moments or cumulants");
  mom_cmd->add_option("-o,--output", mom_out, "output ladder JSON")->required();

  // demo
  std::string demo_name;
  auto* demo_cmd = app.add_subcommand("demo", "run a built-in scenario with pinned values");
  demo_cmd->add_option("name", demo_name, "example1 | system14 | rotation | bimodal-art")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (analyze_cmd->parsed())
      return cmd_analyze(an_system, an_pmax, an_zbound, an_tol, an_independence, an_output);
    if (simulate_cmd->parsed())
      return cmd_simulate(sim_system, sim_mixture, sim_times, sim_count, sim_seed, sim_out);
    if (art_cmd->parsed())
      return cmd_reconstruct_art(art_system, art_snaps, art_grid, art_box, art_bins, art_sweeps,
                                 art_relax, art_out);
    if (mom_cmd->parsed())
      return cmd_reconstruct_moments(mom_system, mom_snaps, mom_pmax, mom_mode, mom_out);
    if (demo_cmd->parsed()) return cmd_demo(demo_name);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitInput;
}
