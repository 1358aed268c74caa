#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"

namespace apdlr {

/// sqrt(dx dy sum over the cell-center family of (a - b)^2).
inline double l2_error_centers(const StaggeredGrid& g, const Vector& a, const Vector& b) {
  if (a.size() != g.macro_size() || b.size() != g.macro_size())
    throw ValidationError("l2_error_centers: fields do not match the grid");
  const Index fam = g.family_size();
  const Vector diff = (a.segment(fam, fam) - b.segment(fam, fam)).cwiseAbs2();
  return std::sqrt(g.dx() * g.dy() * pairwise_sum(diff));
}

/// Descending singular values.
inline Vector singular_values(const Matrix& S) {
  if (S.size() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(S).singularValues();
}

inline int effective_rank(const Vector& sv, double threshold = 1e-5) {
  int count = 0;
  for (Index i = 0; i < sv.size(); ++i) count += sv[i] > threshold;
  return count;
}

inline int effective_rank(const Matrix& S, double threshold = 1e-5) {
  return effective_rank(singular_values(S), threshold);
}

/// Least-squares slope of log(error) against log(h).
inline double convergence_slope(const std::vector<double>& errors, const std::vector<double>& h) {
  if (errors.size() != h.size()) throw ValidationError("convergence_slope: length mismatch");
  if (errors.size() < 3) throw ValidationError("convergence_slope: need at least 3 points");
  const std::size_t n = errors.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(errors[i] > 0.0) || !(h[i] > 0.0)) throw ValidationError("convergence_slope: values must be positive");
    mx += std::log(h[i]);
    my += std::log(errors[i]);
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(errors[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct FamilyMass {
  double vertex = 0.0, center = 0.0;
};

/// Sum of rho over each density family.
inline FamilyMass family_mass(const StaggeredGrid& g, const Vector& rho) {
  const Index fam = g.family_size();
  return {pairwise_sum(Vector(rho.head(fam))), pairwise_sum(Vector(rho.segment(fam, fam)))};
}

inline double relative_drift(double now, double start) {
  const double scale = std::abs(start) > 0.0 ? std::abs(start) : 1.0;
  return std::abs(now - start) / scale;
}

struct StepRecord {
  long step = 0;
  double time = 0.0, dt = 0.0;
  Vector singular_values;
  int effective_rank = 0;
  FamilyMass mass;
  double orthonormality = 0.0;
};

struct RunRecord {
  std::vector<StepRecord> steps;
  FamilyMass initial_mass;
  double wall_seconds = 0.0;

  double max_mass_drift() const {
    double out = 0.0;
    for (const auto& s : steps)
      out = std::max({out, relative_drift(s.mass.vertex, initial_mass.vertex),
                      relative_drift(s.mass.center, initial_mass.center)});
    return out;
  }
  double max_orthonormality_defect() const {
    double out = 0.0;
    for (const auto& s : steps) out = std::max(out, s.orthonormality);
    return out;
  }
};

}  // namespace apdlr
