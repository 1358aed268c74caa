#pragma once

#include <string>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"
#include "apdlr/problems.hpp"
#include "apdlr/velocity.hpp"
#include "apdlr/weighted_qr.hpp"

namespace apdlr {

/// Scattering and absorption sampled on the face and density families.
struct Coefficients {
  Vector sigma_s_face, sigma_a_face;    // [x-face | y-face]
  Vector sigma_s_macro, sigma_a_macro;  // [vertex | center]
  double eps = 1.0;

  static Coefficients sample(const StaggeredGrid& g, const SpaceFn& sigma_s, const SpaceFn& sigma_a, double eps) {
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    Coefficients c;
    c.sigma_s_face = g.sample_faces(sigma_s);
    c.sigma_a_face = g.sample_faces(sigma_a);
    c.sigma_s_macro = g.sample_macro(sigma_s);
    c.sigma_a_macro = g.sample_macro(sigma_a);
    c.eps = eps;
    for (const Vector* v : {&c.sigma_s_face, &c.sigma_s_macro, &c.sigma_a_face, &c.sigma_a_macro})
      if (!v->allFinite() || v->minCoeff() < 0.0)
        throw ValidationError("coefficients must be finite and nonnegative");
    return c;
  }

  static Coefficients uniform(const StaggeredGrid& g, double sigma_s, double sigma_a, double eps) {
    return sample(g, detail::constant(sigma_s), detail::constant(sigma_a), eps);
  }

  double sigma_s_min_positive() const {
    return std::min(min_positive(sigma_s_face), min_positive(sigma_s_macro));
  }
};

/// A source term sampled on the grid and velocity set, already split into its
/// macro part <phi>_v / 4pi and zero-mean micro profile phi - <phi>_v / 4pi.
struct SampledSource {
  TimeFn time;
  Vector face;    // space(x) on the faces
  Vector macro;   // space(x) on the density points
  Vector micro;   // zero-mean velocity profile at the nodes
  double mean = 0.0;

  double factor(double t) const { return time ? time(t) : 1.0; }
};

/// Everything a step needs: grid, velocity set, coefficients, sampled sources.
class Discretization {
 public:
  Discretization(StaggeredGrid grid, VelocitySet vel, Coefficients coef, const std::vector<SeparableTerm>& source = {})
      : grid_(std::move(grid)), vel_(std::move(vel)), coef_(std::move(coef)) {
    if (coef_.sigma_s_face.size() != grid_.face_size() || coef_.sigma_s_macro.size() != grid_.macro_size())
      throw ValidationError("coefficients do not match the grid");
    for (const auto& term : source) {
      SampledSource s;
      s.time = term.time;
      s.face = grid_.sample_faces(term.space);
      s.macro = grid_.sample_macro(term.space);
      const Vector phi = term.velocity ? vel_.sample(term.velocity) : Vector(Vector::Ones(vel_.size()));
      s.mean = vel_.integrate(phi) / four_pi;
      s.micro = phi - Vector::Constant(vel_.size(), s.mean);
      if (s.micro.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, std::abs(s.mean))) s.micro.setZero();
      sources_.push_back(std::move(s));
      if (sources_.back().micro.isZero(0.0)) continue;
      micro_index_.push_back(sources_.size() - 1);
    }
    micro_velocity_.resize(vel_.size(), Index(micro_index_.size()));
    micro_face_.resize(grid_.face_size(), Index(micro_index_.size()));
    for (std::size_t m = 0; m < micro_index_.size(); ++m) {
      micro_velocity_.col(Index(m)) = sources_[micro_index_[m]].micro;
      micro_face_.col(Index(m)) = sources_[micro_index_[m]].face;
    }
  }

  static Discretization from_problem(const ProblemSpec& p, int nx, int ny, VelocitySet vel) {
    StaggeredGrid g(p.a, p.b, p.c, p.d, nx, ny);
    Coefficients c = Coefficients::sample(g, p.sigma_s, p.sigma_a, p.eps);
    return Discretization(g, std::move(vel), std::move(c), p.source);
  }

  const StaggeredGrid& grid() const { return grid_; }
  const VelocitySet& velocity() const { return vel_; }
  const Coefficients& coef() const { return coef_; }
  double eps() const { return coef_.eps; }
  RowWeights x_weights() const { return RowWeights(grid_.face_weight()); }
  RowWeights v_weights() const { return RowWeights(vel_.w); }

  /// <G>_v / 4pi at time t on the density points.
  Vector macro_source(double t) const {
    Vector out = Vector::Zero(grid_.macro_size());
    for (const auto& s : sources_)
      if (s.mean != 0.0) out += (s.factor(t) * s.mean) * s.macro;
    return out;
  }

  bool has_micro_source() const { return !micro_index_.empty(); }

  /// Micro source (1/eps)(G - <G>_v/4pi) = Y(t) * Phiᵀ with Y the scaled spatial
  /// columns returned here and Phi = micro_velocity().
  Matrix micro_space(double t) const {
    Matrix out = micro_face_;
    for (std::size_t m = 0; m < micro_index_.size(); ++m)
      out.col(Index(m)) *= sources_[micro_index_[m]].factor(t) / coef_.eps;
    return out;
  }
  const Matrix& micro_velocity() const { return micro_velocity_; }

  /// Dense micro source on faces x nodes (tests and the full-tensor solver).
  Matrix micro_source_dense(double t) const {
    if (!has_micro_source()) return Matrix::Zero(grid_.face_size(), vel_.size());
    return micro_space(t) * micro_velocity_.transpose();
  }

 private:
  StaggeredGrid grid_;
  VelocitySet vel_;
  Coefficients coef_;
  std::vector<SampledSource> sources_;
  std::vector<std::size_t> micro_index_;
  Matrix micro_velocity_;
  Matrix micro_face_;
};

}  // namespace apdlr
