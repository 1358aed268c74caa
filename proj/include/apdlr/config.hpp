#pragma once

// Run configuration: flat "section.key = value" text, every key also settable
// from the command line.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/integrator.hpp"
#include "apdlr/problems.hpp"
#include "apdlr/time_step.hpp"
#include "apdlr/velocity.hpp"
#include "apdlr/weighted_qr.hpp"

namespace apdlr {

enum class CompareMode { none, full_tensor, diffusion };

inline const char* to_string(CompareMode m) {
  switch (m) {
    case CompareMode::full_tensor: return "full-tensor";
    case CompareMode::diffusion: return "diffusion";
    default: return "none";
  }
}

struct ConfigKey {
  const char* key;
  const char* help;
};

/// Every recognised key. An empty value means "problem default".
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"problem.name", "benchmark problem"},
      {"problem.eps", "Knudsen number"},
      {"grid.nx", "cells in x"},
      {"grid.ny", "cells in y (defaults to grid.nx)"},
      {"velocity.n", "quadrature size"},
      {"velocity.data_dir", "directory with lebedev/ tables and block layouts"},
      {"lowrank.rank", "rank r"},
      {"lowrank.augment", "put xi, eta, gamma into the initial velocity basis"},
      {"lowrank.seed", "seed for QR basis completion"},
      {"scheme.order", "1 or 2"},
      {"scheme.substeps", "first-order substep ordering, a permutation of KLS"},
      {"scheme.cfl", "mixed | hyperbolic | parabolic"},
      {"scheme.c1", "CFL constant c1"},
      {"scheme.c2", "CFL constant c2"},
      {"scheme.t_end", "final time"},
      {"output.dir", "output directory"},
      {"output.snapshot_every", "write densities every k steps (0: final only)"},
      {"compare.mode", "none | full-tensor | diffusion"},
      {"study.grids", "comma-separated Nx list for converge"},
      {"study.eps", "comma-separated eps list for converge"},
      {"study.ranks", "comma-separated rank list for rank-sweep"},
      {"run.paper_scale", "allow paper-size grids and quadratures"},
  };
  return keys;
}

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

/// Shortest round-trip decimal form.
inline std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool known_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (key == k.key) return true;
  return false;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
}

inline long parse_int(const std::string& key, const std::string& v) {
  long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(T(parse(key, item)));
  }
  if (out.empty()) throw ValidationError(key + ": empty list");
  return out;
}

}  // namespace detail

inline ConfigMap parse_config(std::istream& in, const std::string& origin) {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (!detail::known_key(key))
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

inline ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

/// Fully resolved configuration of one run or study.
struct RunConfig {
  std::string problem = "manufactured";
  std::optional<double> eps;
  int nx = 0, ny = 0;
  int nv = 0;
  std::filesystem::path data_dir = default_data_dir();
  int rank = 0;
  bool augment = true;
  std::uint64_t seed = default_seed;
  SchemeConfig scheme;
  std::filesystem::path output_dir = "out";
  long snapshot_every = 0;
  CompareMode compare = CompareMode::none;
  std::vector<int> study_grids = {16, 32, 64, 128};
  std::vector<double> study_eps = {1.0, 1e-6};
  std::vector<int> study_ranks = {10, 20, 40, 60};
  bool paper_scale = false;

  /// Layers `values` over the defaults of the chosen problem.
  static RunConfig from_map(const ConfigMap& values) {
    using namespace detail;
    for (const auto& [k, v] : values)
      if (!known_key(k)) throw ValidationError("unknown config key '" + k + "'");
    auto get = [&](const char* key) -> std::optional<std::string> {
      auto it = values.find(key);
      if (it == values.end() || it->second.empty()) return std::nullopt;
      return it->second;
    };

    RunConfig c;
    if (auto v = get("problem.name")) c.problem = *v;
    if (auto v = get("run.paper_scale")) c.paper_scale = parse_bool("run.paper_scale", *v);
    if (auto v = get("velocity.data_dir")) c.data_dir = *v;
    if (auto v = get("problem.eps")) {
      c.eps = parse_double("problem.eps", *v);
      if (!(*c.eps > 0.0)) throw ValidationError("problem.eps must be positive");
    }
    const ProblemSpec p = make_problem(c.problem, c.eps, c.data_dir);
    const RunDefaults& def = c.paper_scale ? p.paper : p.desk;
    c.eps = p.eps;

    c.nx = def.nx;
    c.nv = def.nv;
    c.rank = def.rank;
    c.scheme.cfl = def.cfl;
    c.scheme.t_end = def.t_end;
    if (auto v = get("grid.nx")) c.nx = int(parse_int("grid.nx", *v));
    c.ny = c.nx;
    if (auto v = get("grid.ny")) c.ny = int(parse_int("grid.ny", *v));
    if (auto v = get("velocity.n")) c.nv = int(parse_int("velocity.n", *v));
    if (auto v = get("lowrank.rank")) c.rank = int(parse_int("lowrank.rank", *v));
    if (auto v = get("lowrank.augment")) c.augment = parse_bool("lowrank.augment", *v);
    if (auto v = get("lowrank.seed")) {
      const long s = parse_int("lowrank.seed", *v);
      if (s < 0) throw ValidationError("lowrank.seed must be nonnegative");
      c.seed = std::uint64_t(s);
    }
    if (auto v = get("scheme.order")) c.scheme.order = int(parse_int("scheme.order", *v));
    if (auto v = get("scheme.substeps")) c.scheme.substep_order = *v;
    if (auto v = get("scheme.cfl")) c.scheme.cfl.kind = parse_cfl_kind(*v);
    if (auto v = get("scheme.c1")) c.scheme.cfl.c1 = parse_double("scheme.c1", *v);
    if (auto v = get("scheme.c2")) c.scheme.cfl.c2 = parse_double("scheme.c2", *v);
    if (auto v = get("scheme.t_end")) c.scheme.t_end = parse_double("scheme.t_end", *v);
    if (auto v = get("output.dir")) c.output_dir = *v;
    if (auto v = get("output.snapshot_every")) c.snapshot_every = parse_int("output.snapshot_every", *v);
    if (auto v = get("compare.mode")) {
      if (*v == "none") c.compare = CompareMode::none;
      else if (*v == "full-tensor") c.compare = CompareMode::full_tensor;
      else if (*v == "diffusion") c.compare = CompareMode::diffusion;
      else throw ValidationError("compare.mode must be none, full-tensor or diffusion, got '" + *v + "'");
    }
    if (auto v = get("study.grids"))
      c.study_grids = parse_list<int>("study.grids", *v, parse_int);
    if (auto v = get("study.eps")) c.study_eps = parse_list<double>("study.eps", *v, parse_double);
    if (auto v = get("study.ranks")) c.study_ranks = parse_list<int>("study.ranks", *v, parse_int);
    c.validate();
    return c;
  }

  static bool paper_sized(int nx, int ny, int nv) { return nv > 590 || long(nx) * long(ny) > 128L * 128L; }

  void validate() const {
    if (nx < 4 || ny < 4) throw ValidationError("grid.nx and grid.ny must be at least 4");
    if (rank < 1) throw ValidationError("lowrank.rank must be at least 1");
    if (augment && rank < 4) throw ValidationError("lowrank.augment needs lowrank.rank >= 4");
    if (rank > nv) throw ValidationError("lowrank.rank exceeds velocity.n");
    if (snapshot_every < 0) throw ValidationError("output.snapshot_every must be nonnegative");
    scheme.validate();
    if (!paper_scale) {
      if (paper_sized(nx, ny, nv))
        throw ValidationError("grid.nx/grid.ny/velocity.n exceed desk scale (n <= 590, Nx*Ny <= 128^2); "
                              "pass --run.paper_scale true to allow");
      for (int g : study_grids)
        if (paper_sized(g, g, nv)) throw ValidationError("study.grids exceeds desk scale; pass --run.paper_scale true");
    }
    for (int g : study_grids)
      if (g < 4) throw ValidationError("study.grids entries must be at least 4");
    for (double e : study_eps)
      if (!(e > 0.0)) throw ValidationError("study.eps entries must be positive");
    for (int r : study_ranks)
      if (r < 1 || (augment && r < 4)) throw ValidationError("study.ranks entry " + std::to_string(r) + " is invalid");
  }

  /// key = value lines of the resolved configuration.
  std::string echo() const {
    using detail::fmt;
    std::ostringstream o;
    auto list = [](const auto& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(double(v[i]));
      return s;
    };
    o << "problem.name = " << problem << "\n";
    o << "problem.eps = " << fmt(eps.value_or(0.0)) << "\n";
    o << "grid.nx = " << nx << "\n";
    o << "grid.ny = " << ny << "\n";
    o << "velocity.n = " << nv << "\n";
    o << "lowrank.rank = " << rank << "\n";
    o << "lowrank.augment = " << (augment ? "true" : "false") << "\n";
    o << "lowrank.seed = " << seed << "\n";
    o << "scheme.order = " << scheme.order << "\n";
    o << "scheme.substeps = " << scheme.substep_order << "\n";
    o << "scheme.cfl = " << to_string(scheme.cfl.kind) << "\n";
    o << "scheme.c1 = " << fmt(scheme.cfl.c1) << "\n";
    o << "scheme.c2 = " << fmt(scheme.cfl.c2) << "\n";
    o << "scheme.t_end = " << fmt(scheme.t_end) << "\n";
    o << "output.snapshot_every = " << snapshot_every << "\n";
    o << "compare.mode = " << to_string(compare) << "\n";
    o << "study.grids = " << list(study_grids) << "\n";
    o << "study.eps = " << list(study_eps) << "\n";
    o << "study.ranks = " << list(study_ranks) << "\n";
    o << "run.paper_scale = " << (paper_scale ? "true" : "false") << "\n";
    return o.str();
  }
};

}  // namespace apdlr
