#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "ensobs/ensemble.hpp"
#include "ensobs/observability.hpp"
#include "ensobs/tomo.hpp"

namespace ensobs {

/// Parse a JSON scalar that is either a number or a string of the form
/// "sqrt(k)" / "-sqrt(k)" / "a/b" (so irrational constants round-trip exactly).
double parse_number(const nlohmann::json& value);

/// System JSON: {"a": [[...]], "c": [[...]]}.
LinearSystem parse_system(const nlohmann::json& j);
LinearSystem load_system(const std::string& path);

/// Mixture JSON: {"weights": [...], "means": [[...]], "covariances": [[[...]]]}.
GaussianMixture parse_mixture(const nlohmann::json& j);
GaussianMixture load_mixture(const std::string& path);

/// Snapshot CSV: header "t,y1,...,ym", one row per sample.
void write_snapshot_csv(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot_csv(const std::string& path);

/// All snapshot_*.csv files in a directory, sorted by time.
std::vector<Snapshot> read_snapshot_dir(const std::string& dir);
std::vector<std::string> write_snapshot_dir(const std::string& dir,
                                            const std::vector<Snapshot>& snaps);

/// Grid CSV: header "x,y,value", one row per pixel.
void write_grid_csv(const std::string& path, const PixelGrid& grid);

/// FNV-1a 64-bit digest of a file's bytes, as hex.
std::string file_digest(const std::string& path);

/// Tool version string recorded in manifests.
const char* tool_version();

/// Writes <path> with command, parameters, seeds, input digests and headline
/// results; the same inputs and seed reproduce the outputs bit-identically
/// per platform.
void write_manifest(const std::string& path, const nlohmann::json& manifest);

}  // namespace ensobs
