#pragma once

// Benchmark problem catalog.
//
// Sources and initial micro data are sums of separable terms
// time(t) * space(x, y) * velocity(v), which lets the low-rank solver project
// them onto its bases without forming dense phase-space arrays.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/time_step.hpp"
#include "apdlr/velocity.hpp"

namespace apdlr {

using SpaceFn = std::function<double(double, double)>;
using VelocityFn = std::function<double(const Vec3&)>;
using TimeFn = std::function<double(double)>;

struct SeparableTerm {
  SpaceFn space;
  VelocityFn velocity;  // empty: isotropic (1)
  TimeFn time;          // empty: constant (1)
};

struct RunDefaults {
  int nx = 64;
  int nv = 302;
  int rank = 5;
  CflRule cfl;
  double t_end = 0.1;
};

struct ProblemSpec {
  std::string name;
  double a = 0, b = 1, c = 0, d = 1;
  double eps = 1.0;
  SpaceFn sigma_s;
  SpaceFn sigma_a;
  std::vector<SeparableTerm> source;         // G(t, x, v), before the macro-micro split
  SpaceFn initial_density;                   // rho(0, x)
  std::vector<SeparableTerm> initial_micro;  // g(0, x, v); f0 = rho0 + eps * g0
  std::function<double(double, double, double)> exact_density;  // (t, x, y), optional
  RunDefaults desk;
  RunDefaults paper;
};

namespace detail {

inline double sin2pi(double x) { return std::sin(2.0 * std::numbers::pi * x); }

/// Normalized Gaussian exp(-|x - x0|^2 / (4 s2)) / (4 pi s2).
inline SpaceFn gaussian(double x0, double y0, double s2) {
  return [=](double x, double y) {
    const double r2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
    return std::exp(-r2 / (4.0 * s2)) / (4.0 * std::numbers::pi * s2);
  };
}

inline SpaceFn constant(double value) {
  return [value](double, double) { return value; };
}

}  // namespace detail

/// Smooth periodic problem with known density exp(-t) sin^2(2 pi x) sin^2(2 pi y)
/// and rank-one micro part with velocity profile (eta + eta^3) / 3.
inline ProblemSpec manufactured(double eps = 1.0) {
  using detail::sin2pi;
  constexpr double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "manufactured";
  p.a = 0, p.b = 1, p.c = 0, p.d = 1;
  p.eps = eps;
  p.sigma_s = detail::constant(1.0);
  p.sigma_a = detail::constant(0.0);

  SpaceFn rho = [](double x, double y) {
    const double sx = sin2pi(x), sy = sin2pi(y);
    return sx * sx * sy * sy;
  };
  SpaceFn rho_x = [](double x, double y) {
    const double sy = sin2pi(y);
    return 2.0 * pi * std::sin(4.0 * pi * x) * sy * sy;
  };
  SpaceFn rho_y = [](double x, double y) {
    const double sx = sin2pi(x);
    return 2.0 * pi * std::sin(4.0 * pi * y) * sx * sx;
  };
  VelocityFn prof = [](const Vec3& v) { return (v.y + v.y * v.y * v.y) / 3.0; };
  VelocityFn xi = [](const Vec3& v) { return v.x; };
  VelocityFn eta = [](const Vec3& v) { return v.y; };
  VelocityFn xi_prof = [prof](const Vec3& v) { return v.x * prof(v); };
  VelocityFn eta_prof = [prof](const Vec3& v) { return v.y * prof(v); };
  TimeFn decay = [](double t) { return std::exp(-t); };
  auto scaled = [](SpaceFn f, double s) -> SpaceFn { return [f, s](double x, double y) { return s * f(x, y); }; };

  // G = d_t f + (1/eps) v . grad f + g / eps with f = rho (1 + eps * prof), g = rho * prof
  p.source = {
      {scaled(rho, -1.0), {}, decay},
      {scaled(rho, 1.0 / eps - eps), prof, decay},
      {scaled(rho_x, 1.0 / eps), xi, decay},
      {scaled(rho_y, 1.0 / eps), eta, decay},
      {rho_x, xi_prof, decay},
      {rho_y, eta_prof, decay},
  };
  p.initial_density = rho;
  p.initial_micro = {{rho, prof, {}}};
  p.exact_density = [rho](double t, double x, double y) { return std::exp(-t) * rho(x, y); };
  p.desk = {64, 302, 5, {CflKind::mixed, 0.18, 0.1}, 0.1};
  p.paper = {128, 590, 5, {CflKind::mixed, 0.18, 0.1}, 0.1};
  return p;
}

inline ProblemSpec gaussian_constant(double eps = 1e-6) {
  ProblemSpec p;
  p.name = "gaussian_constant";
  p.a = -1, p.b = 1, p.c = -1, p.d = 1;
  p.eps = eps;
  p.sigma_s = detail::constant(1.0);
  p.sigma_a = detail::constant(0.0);
  p.initial_density = detail::gaussian(0.0, 0.0, 1e-2);
  p.desk = {64, 302, 5, {CflKind::mixed, 0.1, 0.1}, 0.1};
  p.paper = {128, 590, 5, {CflKind::mixed, 0.1, 0.1}, 0.1};
  return p;
}

/// Radial scattering profile: 0.999 c^4 (c + sqrt2)^2 (c - sqrt2)^2 + 0.001 inside the unit disk, 1 outside.
inline double variable_scattering(double x, double y) {
  const double c = std::sqrt(x * x + y * y);
  if (c >= 1.0) return 1.0;
  const double s2 = std::numbers::sqrt2;
  const double c2 = c * c;
  return 0.999 * c2 * c2 * (c + s2) * (c + s2) * (c - s2) * (c - s2) + 0.001;
}

inline ProblemSpec gaussian_variable(double eps = 0.01) {
  ProblemSpec p = gaussian_constant(eps);
  p.name = "gaussian_variable";
  p.sigma_s = variable_scattering;
  p.desk = {64, 302, 40, {CflKind::mixed, 0.1, 0.1}, 0.004};
  p.paper = {256, 2702, 80, {CflKind::mixed, 0.1, 0.1}, 0.012};
  return p;
}

/// Absorbing/scattering rectangles read from a block-layout file.
struct BlockLayout {
  struct Block {
    double x0, y0, x1, y1, sigma_a, sigma_s;
  };
  double domain[4] = {0, 5, 0, 5};
  double background_sigma_a = 0.0;
  double background_sigma_s = 1.0;
  std::vector<Block> blocks;

  const Block* find(double x, double y) const {
    constexpr double tol = 1e-12;
    for (const auto& b : blocks)
      if (x >= b.x0 - tol && x <= b.x1 + tol && y >= b.y0 - tol && y <= b.y1 + tol) return &b;
    return nullptr;
  }
  double sigma_a(double x, double y) const {
    const Block* b = find(x, y);
    return b ? b->sigma_a : background_sigma_a;
  }
  double sigma_s(double x, double y) const {
    const Block* b = find(x, y);
    return b ? b->sigma_s : background_sigma_s;
  }
};

inline BlockLayout parse_block_layout(std::istream& in, const std::string& origin) {
  BlockLayout layout;
  std::string line;
  int lineno = 0;
  bool have_version = false;
  auto fail = [&](const std::string& what) { throw DataError(origin + ":" + std::to_string(lineno) + ": " + what); };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "version") {
      int v = 0;
      if (!(ls >> v) || v != 1) fail("unsupported layout version");
      have_version = true;
    } else if (key == "domain") {
      if (!(ls >> layout.domain[0] >> layout.domain[1] >> layout.domain[2] >> layout.domain[3])) fail("bad domain line");
    } else if (key == "background") {
      if (!(ls >> layout.background_sigma_a >> layout.background_sigma_s)) fail("bad background line");
    } else if (key == "block") {
      BlockLayout::Block b{};
      if (!(ls >> b.x0 >> b.y0 >> b.x1 >> b.y1 >> b.sigma_a >> b.sigma_s)) fail("bad block line");
      if (!(b.x1 > b.x0) || !(b.y1 > b.y0)) fail("empty block");
      if (b.sigma_a < 0 || b.sigma_s < 0) fail("negative coefficient");
      layout.blocks.push_back(b);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!have_version) throw DataError(origin + ": missing version line");
  return layout;
}

inline BlockLayout load_block_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open block layout " + path.string());
  return parse_block_layout(in, path.string());
}

inline ProblemSpec two_material(double eps = 1.0, const std::filesystem::path& data_dir = default_data_dir()) {
  const BlockLayout layout = load_block_layout(data_dir / "two_material_blocks.txt");
  ProblemSpec p;
  p.name = "two_material";
  p.a = layout.domain[0], p.b = layout.domain[1], p.c = layout.domain[2], p.d = layout.domain[3];
  p.eps = eps;
  p.sigma_s = [layout](double x, double y) { return layout.sigma_s(x, y); };
  p.sigma_a = [layout](double x, double y) { return layout.sigma_a(x, y); };
  p.source = {{[](double x, double y) {
                 constexpr double tol = 1e-12;
                 return (x >= 2.0 - tol && x <= 3.0 + tol && y >= 2.0 - tol && y <= 3.0 + tol) ? 1.0 : 0.0;
               },
               {},
               {}}};
  p.initial_density = detail::gaussian(2.5, 2.5, 1e-2);
  p.desk = {50, 146, 40, {CflKind::mixed, 0.1, 0.1}, 0.1};
  p.paper = {250, 2702, 150, {CflKind::mixed, 0.1, 0.1}, 1.7};
  return p;
}

inline ProblemSpec line_source(double eps = 1.0) {
  ProblemSpec p;
  p.name = "line_source";
  p.a = -1.5, p.b = 1.5, p.c = -1.5, p.d = 1.5;
  p.eps = eps;
  p.sigma_s = detail::constant(1.0);
  p.sigma_a = detail::constant(0.0);
  p.initial_density = detail::gaussian(0.0, 0.0, 4e-4);
  p.desk = {60, 302, 60, {CflKind::mixed, 0.025, 0.025}, 0.1};
  p.paper = {150, 5810, 600, {CflKind::mixed, 0.025, 0.025}, 0.7};
  return p;
}

inline std::vector<std::string> problem_names() {
  return {"manufactured", "gaussian_constant", "gaussian_variable", "two_material", "line_source"};
}

/// Catalog lookup; `eps` overrides the problem's default.
inline ProblemSpec make_problem(const std::string& name, std::optional<double> eps = std::nullopt,
                                const std::filesystem::path& data_dir = default_data_dir()) {
  if (eps && !(*eps > 0.0)) throw ValidationError("eps must be positive");
  if (name == "manufactured") return eps ? manufactured(*eps) : manufactured();
  if (name == "gaussian_constant") return eps ? gaussian_constant(*eps) : gaussian_constant();
  if (name == "gaussian_variable") return eps ? gaussian_variable(*eps) : gaussian_variable();
  if (name == "two_material") return two_material(eps.value_or(1.0), data_dir);
  if (name == "line_source") return eps ? line_source(*eps) : line_source();
  std::string msg = "unknown problem '" + name + "'; available:";
  for (const auto& n : problem_names()) msg += " " + n;
  throw ValidationError(msg);
}

}  // namespace apdlr
