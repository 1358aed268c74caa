#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"

namespace apdlr {

enum class CflKind { mixed, hyperbolic, parabolic };

inline const char* to_string(CflKind k) {
  switch (k) {
    case CflKind::mixed: return "mixed";
    case CflKind::hyperbolic: return "hyperbolic";
    case CflKind::parabolic: return "parabolic";
  }
  return "?";
}

inline CflKind parse_cfl_kind(const std::string& s) {
  if (s == "mixed") return CflKind::mixed;
  if (s == "hyperbolic") return CflKind::hyperbolic;
  if (s == "parabolic") return CflKind::parabolic;
  throw ValidationError("unknown CFL kind '" + s + "' (expected mixed, hyperbolic or parabolic)");
}

/// mixed:      dt = c1 * min(sigma_s) * dx^2 + c2 * eps * dx
/// hyperbolic: dt = c1 * dx
/// parabolic:  dt = c1 * dx^2
struct CflRule {
  CflKind kind = CflKind::mixed;
  double c1 = 0.1;
  double c2 = 0.1;
};

/// Smallest positive entry; zero-scattering regions do not constrain the step.
inline double min_positive(const Vector& v) {
  double m = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] > 0.0) m = std::min(m, v[i]);
  return m;
}

inline double select_dt(const CflRule& cfl, double dx, double eps, double sigma_s_min) {
  if (!(cfl.c1 > 0.0) || (cfl.kind == CflKind::mixed && !(cfl.c2 > 0.0)))
    throw ValidationError("CFL constants must be positive");
  if (!(dx > 0.0)) throw ValidationError("CFL: dx must be positive");
  switch (cfl.kind) {
    case CflKind::mixed:
      if (!(sigma_s_min > 0.0) || !std::isfinite(sigma_s_min))
        throw ValidationError("mixed CFL needs a positive scattering coefficient somewhere");
      return cfl.c1 * sigma_s_min * dx * dx + cfl.c2 * eps * dx;
    case CflKind::hyperbolic: return cfl.c1 * dx;
    case CflKind::parabolic: return cfl.c1 * dx * dx;
  }
  return 0.0;
}

/// Step sizes from 0 to t_end: full steps of dt, the last one clipped to land on t_end.
/// A remainder below 1e-9*dt is absorbed into the previous step.
inline std::vector<double> step_schedule(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ValidationError("step_schedule: dt and t_end must be positive");
  const double ratio = t_end / dt;
  auto full = static_cast<long long>(std::floor(ratio));
  double rest = t_end - double(full) * dt;
  if (rest < 1e-9 * dt) rest = 0.0;
  std::vector<double> steps;
  steps.reserve(std::size_t(full) + 1);
  for (long long i = 0; i < full; ++i) steps.push_back(dt);
  if (rest > 0.0) steps.push_back(rest);
  else if (!steps.empty()) steps.back() = t_end - double(full - 1) * dt;
  return steps;
}

}  // namespace apdlr
