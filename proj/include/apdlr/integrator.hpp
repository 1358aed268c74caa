#pragma once

#include <algorithm>
#include <array>
#include <string>

#include "apdlr/discretization.hpp"
#include "apdlr/error.hpp"
#include "apdlr/factors.hpp"
#include "apdlr/imex.hpp"
#include "apdlr/mesh.hpp"
#include "apdlr/substeps.hpp"
#include "apdlr/time_step.hpp"
#include "apdlr/velocity.hpp"

namespace apdlr {

struct SchemeConfig {
  int order = 1;
  std::string substep_order = "KLS";  // order 1 only
  CflRule cfl;
  double t_end = 0.1;

  static bool valid_ordering(const std::string& s) {
    if (s.size() != 3) return false;
    std::string sorted = s;
    std::sort(sorted.begin(), sorted.end());
    return sorted == "KLS";
  }

  void validate() const {
    if (order != 1 && order != 2) throw ValidationError("scheme.order must be 1 or 2, got " + std::to_string(order));
    if (!valid_ordering(substep_order))
      throw ValidationError("scheme.substeps must be a permutation of KLS, got '" + substep_order + "'");
    if (!(cfl.c1 > 0.0) || !(cfl.c2 > 0.0)) throw ValidationError("scheme.c1 and scheme.c2 must be positive");
    if (!(t_end > 0.0)) throw ValidationError("scheme.t_end must be positive");
  }
};

inline const std::array<std::string, 6>& all_orderings() {
  static const std::array<std::string, 6> o = {"KLS", "KSL", "LKS", "LSK", "SKL", "SLK"};
  return o;
}

struct State {
  LowRankFactors F;
  Vector rho;
  double t = 0.0;
  Vector rho_half;  // last intermediate density of the second-order scheme
};

/// The micro flux (<xi g>_v, <eta g>_v) of g = X S V^T on the faces.
inline std::pair<Vector, Vector> micro_flux(const VelocitySet& vel, const LowRankFactors& f) {
  const Moments m = moments(vel, f.V);
  const Matrix XS = f.X * f.S;
  return {XS * m.flux.row(0).transpose(), XS * m.flux.row(1).transpose()};
}

inline Vector rho_step_euler(const Discretization& d, const Vector& rho, const LowRankFactors& f, double t, double dt) {
  const auto [fx, fy] = micro_flux(d.velocity(), f);
  Vector out = rho - (dt / four_pi) * div_faces(d.grid(), fx, fy);
  out -= dt * d.coef().sigma_a_macro.cwiseProduct(rho);
  out += dt * d.macro_source(t);
  return out;
}

/// Full step from rho_n with the half-step factors; absorption acts on rho_half and
/// the source is taken at t_half.
inline Vector rho_step_midpoint(const Discretization& d, const Vector& rho_n, const LowRankFactors& f_half,
                                const Vector& rho_half, double t_half, double dt) {
  const auto [fx, fy] = micro_flux(d.velocity(), f_half);
  Vector out = rho_n - (dt / four_pi) * div_faces(d.grid(), fx, fy);
  out -= dt * d.coef().sigma_a_macro.cwiseProduct(rho_half);
  out += dt * d.macro_source(t_half);
  return out;
}

inline LowRankFactors apply_substep(char which, const Discretization& d, const LowRankFactors& f, const Vector& rho,
                                    double t0, double h, Stepper stepper, std::uint64_t seed) {
  switch (which) {
    case 'K': return k_step(d, f, rho, t0, h, stepper, seed);
    case 'L': return l_step(d, f, rho, t0, h, stepper, seed);
    case 'S': return s_step(d, f, rho, t0, h, stepper);
  }
  throw ValidationError(std::string("unknown substep '") + which + "'");
}

inline State step_first_order(const Discretization& d, const State& s, const SchemeConfig& cfg, double dt,
                              std::uint64_t seed = default_seed) {
  State out;
  out.F = s.F;
  for (char c : cfg.substep_order) out.F = apply_substep(c, d, out.F, s.rho, s.t, dt, Stepper::backward_euler, seed);
  out.rho = rho_step_euler(d, s.rho, out.F, s.t, dt);
  out.t = s.t + dt;
  return out;
}

inline State step_second_order(const Discretization& d, const State& s, const SchemeConfig&, double dt,
                               std::uint64_t seed = default_seed) {
  const double h = 0.5 * dt;
  State out;
  out.rho_half = rho_step_euler(d, s.rho, s.F, s.t, h);
  LowRankFactors f = s.F;
  for (char c : {'K', 'L', 'S'}) f = apply_substep(c, d, f, out.rho_half, s.t, h, Stepper::ars222, seed);
  const LowRankFactors f_half = f;
  for (char c : {'S', 'L', 'K'}) f = apply_substep(c, d, f, out.rho_half, s.t + h, h, Stepper::ars222, seed);
  out.F = std::move(f);
  out.rho = rho_step_midpoint(d, s.rho, f_half, out.rho_half, s.t + h, dt);
  out.t = s.t + dt;
  return out;
}

inline State advance(const Discretization& d, const State& s, const SchemeConfig& cfg, double dt,
                     std::uint64_t seed = default_seed) {
  return cfg.order == 2 ? step_second_order(d, s, cfg, dt, seed) : step_first_order(d, s, cfg, dt, seed);
}

inline double select_dt(const SchemeConfig& cfg, const Discretization& d) {
  const double h = std::min(d.grid().dx(), d.grid().dy());
  return select_dt(cfg.cfl, h, d.eps(), d.coef().sigma_s_min_positive());
}

/// rho0 sampled on both density families, g0 compressed to rank r.
inline State initial_state(const ProblemSpec& p, const Discretization& d, int rank, bool augment,
                           std::uint64_t seed = default_seed) {
  State s;
  s.rho = d.grid().sample_macro(p.initial_density);
  s.F = init_factors(d.grid(), d.velocity(), p.initial_micro, rank, augment, seed);
  s.t = 0.0;
  return s;
}

}  // namespace apdlr
