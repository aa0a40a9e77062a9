#include "ensobs/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace ensobs {

namespace fs = std::filesystem;
using nlohmann::json;

double parse_number(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    static const std::regex sqrt_re(R"(^\s*(-?)\s*sqrt\(\s*([0-9]+(?:\.[0-9]+)?)\s*\)\s*$)");
    static const std::regex frac_re(R"(^\s*(-?[0-9]+(?:\.[0-9]+)?)\s*/\s*([0-9]+(?:\.[0-9]+)?)\s*$)");
    std::smatch m;
    if (std::regex_match(s, m, sqrt_re)) {
      const double r = std::sqrt(std::stod(m[2]));
      return m[1].str() == "-" ? -r : r;
    }
    if (std::regex_match(s, m, frac_re)) return std::stod(m[1]) / std::stod(m[2]);
    try {
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (...) {
    }
    throw std::invalid_argument("unrecognized numeric literal: " + s);
  }
  throw std::invalid_argument("expected a number or numeric string");
}

namespace {

Eigen::MatrixXd parse_matrix(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument("expected a matrix (array of arrays)");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw std::invalid_argument("ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(r, c) = parse_number(j[r][c]);
  }
  return m;
}

Eigen::VectorXd parse_vector(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = parse_number(j[i]);
  return v;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

LinearSystem parse_system(const json& j) {
  if (!j.contains("a") || !j.contains("c"))
    throw std::invalid_argument("system JSON needs fields \"a\" and \"c\"");
  LinearSystem sys{parse_matrix(j.at("a")), parse_matrix(j.at("c"))};
  sys.validate();
  return sys;
}

LinearSystem load_system(const std::string& path) { return parse_system(load_json(path)); }

GaussianMixture parse_mixture(const json& j) {
  if (!j.contains("weights") || !j.contains("means") || !j.contains("covariances"))
    throw std::invalid_argument("mixture JSON needs weights, means, covariances");
  GaussianMixture mix;
  for (const auto& w : j.at("weights")) mix.weights.push_back(parse_number(w));
  for (const auto& mu : j.at("means")) mix.means.push_back(parse_vector(mu));
  for (const auto& cov : j.at("covariances")) mix.covariances.push_back(parse_matrix(cov));
  mix.validate();
  return mix;
}

GaussianMixture load_mixture(const std::string& path) { return parse_mixture(load_json(path)); }

void write_snapshot_csv(const std::string& path, const Snapshot& snap) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t";
  for (int j = 0; j < snap.samples.cols(); ++j) out << ",y" << (j + 1);
  out << "\n";
  out.precision(17);
  for (int i = 0; i < snap.samples.rows(); ++i) {
    out << snap.time;
    for (int j = 0; j < snap.samples.cols(); ++j) out << "," << snap.samples(i, j);
    out << "\n";
  }
}

Snapshot read_snapshot_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty snapshot file " + path);
  const int m = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (m < 1 || line.rfind("t,", 0) != 0)
    throw std::invalid_argument("bad snapshot header in " + path);

  std::vector<double> data;
  Snapshot snap;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, field, ',');
    snap.time = std::stod(field);
    for (int j = 0; j < m; ++j) {
      if (!std::getline(ls, field, ','))
        throw std::invalid_argument("short row in " + path);
      data.push_back(std::stod(field));
    }
    ++rows;
  }
  snap.samples.resize(rows, m);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < m; ++j) snap.samples(i, j) = data[i * m + j];
  return snap;
}

std::vector<Snapshot> read_snapshot_dir(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("snapshot_", 0) == 0 &&
        entry.path().extension() == ".csv")
      files.push_back(entry.path().string());
  }
  if (files.empty()) throw std::invalid_argument("no snapshot_*.csv files in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<Snapshot> snaps;
  for (const auto& f : files) snaps.push_back(read_snapshot_csv(f));
  std::sort(snaps.begin(), snaps.end(),
            [](const Snapshot& a, const Snapshot& b) { return a.time < b.time; });
  return snaps;
}

std::vector<std::string> write_snapshot_dir(const std::string& dir,
                                            const std::vector<Snapshot>& snaps) {
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (size_t i = 0; i < snaps.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "snapshot_%03zu.csv", i);
    const std::string path = (fs::path(dir) / name).string();
    write_snapshot_csv(path, snaps[i]);
    paths.push_back(path);
  }
  return paths;
}

void write_grid_csv(const std::string& path, const PixelGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "x,y,value\n";
  out.precision(17);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix)
      out << grid.center_x(ix) << "," << grid.center_y(iy) << ","
          << grid.values[grid.index(ix, iy)] << "\n";
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

const char* tool_version() { return "0.1.0"; }

void write_manifest(const std::string& path, const json& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << manifest.dump(2) << "\n";
}

}  // namespace ensobs
