#pragma once

// Reference solvers on the same grid and quadrature as the low-rank scheme:
// the full-tensor macro-micro IMEX scheme and the limiting diffusion scheme.

#include <optional>

#include "apdlr/discretization.hpp"
#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"
#include "apdlr/problems.hpp"
#include "apdlr/velocity.hpp"

namespace apdlr {

struct FullTensorState {
  Vector rho;
  Matrix g;  // faces x nodes
  double t = 0.0;
};

/// Dense g0 = sum_m space_m(x) velocity_m(v) at t = 0.
inline Matrix sample_micro(const StaggeredGrid& grid, const VelocitySet& vel, const std::vector<SeparableTerm>& terms) {
  Matrix g = Matrix::Zero(grid.face_size(), vel.size());
  for (const auto& term : terms) {
    const double tf = term.time ? term.time(0.0) : 1.0;
    const Vector a = tf * grid.sample_faces(term.space);
    const Vector b = term.velocity ? vel.sample(term.velocity) : Vector(Vector::Ones(vel.size()));
    g.noalias() += a * b.transpose();
  }
  return g;
}

inline FullTensorState full_tensor_initial(const ProblemSpec& p, const Discretization& d) {
  return {d.grid().sample_macro(p.initial_density), sample_micro(d.grid(), d.velocity(), p.initial_micro), 0.0};
}

/// (I - <.>_v/4pi)(v . grad g) with upwinding per node.
inline Matrix full_tensor_transport(const StaggeredGrid& grid, const VelocitySet& vel, const Matrix& g) {
  const Vector xp = vel.xi.cwiseMax(0.0), xm = vel.xi.cwiseMin(0.0);
  const Vector yp = vel.eta.cwiseMax(0.0), ym = vel.eta.cwiseMin(0.0);
  Matrix h = upwind_transport(grid, g * xp.asDiagonal(), g * xm.asDiagonal(), g * yp.asDiagonal(), g * ym.asDiagonal());
  const Vector mean = (h * vel.w) / four_pi;
  h.colwise() -= mean;
  return h;
}

/// One forward-backward Euler step of the dense macro-micro system.
inline FullTensorState full_tensor_step(const Discretization& d, const FullTensorState& s, double dt) {
  const StaggeredGrid& grid = d.grid();
  const VelocitySet& vel = d.velocity();
  const double eps = d.eps();

  Matrix rhs = full_tensor_transport(grid, vel, s.g);
  rhs *= -1.0 / eps;
  const Vector gx = d_central_rho(grid, s.rho, Axis::x), gy = d_central_rho(grid, s.rho, Axis::y);
  rhs.noalias() -= (1.0 / (eps * eps)) * (gx * vel.xi.transpose() + gy * vel.eta.transpose());
  rhs -= d.coef().sigma_a_face.asDiagonal() * s.g;
  if (d.has_micro_source()) rhs.noalias() += d.micro_space(s.t) * d.micro_velocity().transpose();

  FullTensorState out;
  const Vector denom =
      (Vector::Ones(grid.face_size()) + (dt / (eps * eps)) * d.coef().sigma_s_face).cwiseInverse();
  out.g = denom.asDiagonal() * (s.g + dt * rhs);

  const Vector fx = out.g * vel.w.cwiseProduct(vel.xi), fy = out.g * vel.w.cwiseProduct(vel.eta);
  out.rho = s.rho - (dt / four_pi) * div_faces(grid, fx, fy);
  out.rho -= dt * d.coef().sigma_a_macro.cwiseProduct(s.rho);
  out.rho += dt * d.macro_source(s.t);
  out.t = s.t + dt;
  return out;
}

/// (1/3) div(grad rho / sigma_s) with the compact staggered stencil.
inline Vector diffusion_operator(const Discretization& d, const Vector& rho) {
  const Vector& ss = d.coef().sigma_s_face;
  if (ss.minCoeff() <= 0.0) throw ValidationError("diffusion reference needs sigma_s > 0 on every face");
  const Vector fx = d_central_rho(d.grid(), rho, Axis::x).cwiseQuotient(ss);
  const Vector fy = d_central_rho(d.grid(), rho, Axis::y).cwiseQuotient(ss);
  return div_faces(d.grid(), fx, fy) / 3.0;
}

enum class DiffusionStage { euler, rk2 };

/// Explicit step of the limit equation.
///
/// rk2 is the limit of the second-order scheme: a half step whose diffusion term
/// uses `lagged` (the previous intermediate density; rho itself when absent),
/// followed by a midpoint step.
inline Vector diffusion_step(const Discretization& d, const Vector& rho, double t, double dt, DiffusionStage stage,
                             const std::optional<Vector>& lagged = std::nullopt, Vector* half_out = nullptr) {
  const Vector& sa = d.coef().sigma_a_macro;
  if (stage == DiffusionStage::euler)
    return rho + dt * (diffusion_operator(d, rho) - sa.cwiseProduct(rho) + d.macro_source(t));
  const double h = 0.5 * dt;
  const Vector half = rho + h * (diffusion_operator(d, lagged ? *lagged : rho) - sa.cwiseProduct(rho) + d.macro_source(t));
  if (half_out) *half_out = half;
  return rho + dt * (diffusion_operator(d, half) - sa.cwiseProduct(half) + d.macro_source(t + h));
}

}  // namespace apdlr
