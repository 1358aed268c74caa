#pragma once

// Fully discrete K, L and S substeps of the projector-splitting integrator for the
// micro equation
//
//   g_t = -(1/eps)(I - <.>_v/4pi)(v . grad g) - (1/eps^2) v . grad rho
//         - (sigma_s/eps^2) g - sigma_a g + G_micro.
//
// The density is frozen during each substep. sigma_s/eps^2 is implicit, every
// other term explicit.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <string>

#include "apdlr/discretization.hpp"
#include "apdlr/error.hpp"
#include "apdlr/factors.hpp"
#include "apdlr/imex.hpp"
#include "apdlr/mesh.hpp"
#include "apdlr/velocity.hpp"
#include "apdlr/weighted_qr.hpp"

namespace apdlr {

inline constexpr double max_s_step_condition = 1e12;

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite values");
}

/// Face gradient of rho: column 0 is d/dx, column 1 is d/dy.
inline Matrix rho_gradient(const StaggeredGrid& g, const Vector& rho) {
  Matrix out(g.face_size(), 2);
  out.col(0) = d_central_rho(g, rho, Axis::x);
  out.col(1) = d_central_rho(g, rho, Axis::y);
  return out;
}

/// Spatial matrices shared by the L- and S-steps for a fixed X.
struct SpatialOperators {
  Matrix cx, cy;      // <X_i d_x X_k>_x, <X_i d_y X_k>_x
  Matrix scatter;     // <X_i sigma_s X_k>_x
  Matrix absorb;      // <X_i sigma_a X_k>_x
  Vector grad_x, grad_y;  // <X_i d_x rho>_x, <X_i d_y rho>_x
  Eigen::SelfAdjointEigenSolver<Matrix> scatter_eig;
};

inline SpatialOperators spatial_operators(const Discretization& d, const Matrix& X, const Vector& rho) {
  const StaggeredGrid& g = d.grid();
  SpatialOperators op;
  op.cx = gram_x(g, X, d_central_faces(g, X, Axis::x));
  op.cy = gram_x(g, X, d_central_faces(g, X, Axis::y));
  op.scatter = gram_x(g, X, d.coef().sigma_s_face.asDiagonal() * X);
  op.absorb = gram_x(g, X, d.coef().sigma_a_face.asDiagonal() * X);
  const Matrix grad = rho_gradient(g, rho);
  op.grad_x = gram_x(g, X, grad.col(0));
  op.grad_y = gram_x(g, X, grad.col(1));
  op.scatter_eig.compute(0.5 * (op.scatter + op.scatter.transpose()));
  return op;
}

}  // namespace detail

/// K-step: evolves K = X S with V frozen, then re-factors K = X_new S_new.
///
/// The transport term is the upwind discretization of the full equation
/// projected onto span(V) through the sign-split transport tensors.
inline LowRankFactors k_step(const Discretization& d, const LowRankFactors& f, const Vector& rho, double t0,
                             double h, Stepper stepper, std::uint64_t seed = default_seed) {
  const StaggeredGrid& g = d.grid();
  const VelocitySet& vel = d.velocity();
  const double eps = d.eps();
  const Index r = f.rank();

  const TransportTensors tt = transport_tensors(vel, f.V);
  const Moments mom = moments(vel, f.V);
  Matrix stacked(r, 4 * r);  // K * stacked gives the four columns sum_l K_l T_jl
  stacked << tt.xi_plus.transpose(), tt.xi_minus.transpose(), tt.eta_plus.transpose(), tt.eta_minus.transpose();

  const Matrix grad = detail::rho_gradient(g, rho);
  const Matrix forcing = (-1.0 / (eps * eps)) * (grad.col(0) * mom.flux.row(0) + grad.col(1) * mom.flux.row(1));
  const Matrix src_velocity =
      d.has_micro_source() ? Matrix(d.micro_velocity().transpose() * (vel.w.asDiagonal() * f.V)) : Matrix();
  const Vector& sa = d.coef().sigma_a_face;
  const Vector& ss = d.coef().sigma_s_face;

  auto explicit_rhs = [&](const Matrix& K, double t) -> Matrix {
    const Matrix kt = K * stacked;
    Matrix out = (-1.0 / eps) * upwind_transport(g, kt.leftCols(r), kt.middleCols(r, r), kt.middleCols(2 * r, r),
                                                 kt.rightCols(r));
    out += forcing;
    out -= sa.asDiagonal() * K;
    if (d.has_micro_source()) out += d.micro_space(t) * src_velocity;
    return out;
  };
  auto solve = [&](double alpha, const Matrix& rhs) -> Matrix {
    const Vector denom = (Vector::Ones(ss.size()) + (alpha / (eps * eps)) * ss).cwiseInverse();
    return denom.asDiagonal() * rhs;
  };

  const Matrix K0 = f.X * f.S;
  const Matrix K = imex_advance(K0, t0, h, ImexTableau::get(stepper), explicit_rhs, solve);
  detail::require_finite(K, "k_step");
  const QrResult qr = weighted_qr(K, d.x_weights(), seed);
  return {qr.Q, qr.R, f.V};
}

/// L-step: evolves L_i = sum_j S_ij V_j with X frozen, then re-factors L into V_new and S_new.
inline LowRankFactors l_step(const Discretization& d, const LowRankFactors& f, const Vector& rho, double t0,
                             double h, Stepper stepper, std::uint64_t seed = default_seed) {
  const VelocitySet& vel = d.velocity();
  const double eps = d.eps();

  const detail::SpatialOperators op = detail::spatial_operators(d, f.X, rho);
  const Vector& lam = op.scatter_eig.eigenvalues();
  const Matrix& Q = op.scatter_eig.eigenvectors();
  const Matrix forcing = (-1.0 / (eps * eps)) * (vel.xi * op.grad_x.transpose() + vel.eta * op.grad_y.transpose());
  const Vector wxi = vel.w.cwiseProduct(vel.xi), weta = vel.w.cwiseProduct(vel.eta);

  auto explicit_rhs = [&](const Matrix& L, double t) -> Matrix {
    // (v L_k - <v L_k>_v / 4pi) . <X_i grad X_k>_x
    Matrix px = vel.xi.asDiagonal() * L;
    px.rowwise() -= (wxi.transpose() * L) / four_pi;
    Matrix py = vel.eta.asDiagonal() * L;
    py.rowwise() -= (weta.transpose() * L) / four_pi;
    Matrix out = (-1.0 / eps) * (px * op.cx.transpose() + py * op.cy.transpose());
    out += forcing;
    out -= L * op.absorb.transpose();
    if (d.has_micro_source()) {
      const Matrix proj = d.grid().face_weight() * (d.micro_space(t).transpose() * f.X);  // M x r
      out += d.micro_velocity() * proj;
    }
    return out;
  };
  auto solve = [&](double alpha, const Matrix& rhs) -> Matrix {
    const Vector inv = (Vector::Ones(lam.size()) + (alpha / (eps * eps)) * lam).cwiseInverse();
    return ((rhs * Q) * inv.asDiagonal()) * Q.transpose();
  };

  const Matrix L0 = f.V * f.S.transpose();
  const Matrix L = imex_advance(L0, t0, h, ImexTableau::get(stepper), explicit_rhs, solve);
  detail::require_finite(L, "l_step");
  const QrResult qr = weighted_qr(L, d.v_weights(), seed);
  return {f.X, qr.R.transpose(), qr.Q};
}

/// S-step: evolves S with X and V frozen (the backward subflow).
///
/// The implicit system (I - alpha/eps^2 A) S = rhs is solved through the
/// eigendecomposition of A = <X sigma_s X>_x; a condition number above
/// max_s_step_condition aborts with the offending eigenvalue.
inline LowRankFactors s_step(const Discretization& d, const LowRankFactors& f, const Vector& rho, double t0,
                             double h, Stepper stepper) {
  const VelocitySet& vel = d.velocity();
  const double eps = d.eps();

  const detail::SpatialOperators op = detail::spatial_operators(d, f.X, rho);
  const Vector& lam = op.scatter_eig.eigenvalues();
  const Matrix& Q = op.scatter_eig.eigenvectors();
  const Matrix txi = projected_tensor(vel, f.V, vel.xi);
  const Matrix teta = projected_tensor(vel, f.V, vel.eta);
  const Moments mom = moments(vel, f.V);
  const Matrix forcing =
      (1.0 / (eps * eps)) * (op.grad_x * mom.flux.row(0) + op.grad_y * mom.flux.row(1));
  const Matrix src_velocity =
      d.has_micro_source() ? Matrix(d.micro_velocity().transpose() * (vel.w.asDiagonal() * f.V)) : Matrix();

  auto explicit_rhs = [&](const Matrix& S, double t) -> Matrix {
    Matrix out = (1.0 / eps) * (op.cx * S * txi.transpose() + op.cy * S * teta.transpose());
    out += forcing;
    out += op.absorb * S;
    if (d.has_micro_source()) {
      const Matrix proj = d.grid().face_weight() * (f.X.transpose() * d.micro_space(t));  // r x M
      out -= proj * src_velocity;
    }
    return out;
  };
  auto solve = [&](double alpha, const Matrix& rhs) -> Matrix {
    const Vector diag = Vector::Ones(lam.size()) - (alpha / (eps * eps)) * lam;
    const double big = diag.cwiseAbs().maxCoeff(), small = diag.cwiseAbs().minCoeff();
    if (!(small > 0.0) || big / small > max_s_step_condition) {
      Index worst = 0;
      diag.cwiseAbs().minCoeff(&worst);
      std::ostringstream msg;
      msg << "s_step: implicit matrix I - (dt/eps^2) A is near singular (condition "
          << (small > 0.0 ? big / small : INFINITY) << ", eigenvalue of A " << lam[worst]
          << ", dt/eps^2 = " << alpha / (eps * eps) << ")";
      throw NumericalError(msg.str());
    }
    return Q * (diag.cwiseInverse().asDiagonal() * (Q.transpose() * rhs));
  };

  const Matrix S = imex_advance(Matrix(f.S), t0, h, ImexTableau::get(stepper), explicit_rhs, solve);
  detail::require_finite(S, "s_step");
  return {f.X, S, f.V};
}

}  // namespace apdlr
