#pragma once

// Periodic staggered 2D grid and its finite-difference stencils.
//
// Four point families share the same Nx x Ny index space (k, l):
//   vertex  (x_k,       y_l)
//   center  (x_{k+1/2}, y_{l+1/2})
//   x-face  (x_{k+1/2}, y_l)
//   y-face  (x_k,       y_{l+1/2})
// Each family is stored row-major (l outer, k inner) as one contiguous block.
// Macro fields (density) stack [vertex | center]; face fields stack
// [x-face | y-face]. Matrices of face fields hold one field per column.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "apdlr/error.hpp"

namespace apdlr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Axis { x, y };
enum class Side { plus, minus };
enum class Family { vertex, center, xface, yface };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::vertex: return "vertex";
    case Family::center: return "center";
    case Family::xface: return "xface";
    case Family::yface: return "yface";
  }
  return "?";
}

class StaggeredGrid {
 public:
  StaggeredGrid(double a, double b, double c, double d, int nx, int ny)
      : a_(a), b_(b), c_(c), d_(d), nx_(nx), ny_(ny) {
    if (!(b > a) || !(d > c))
      throw ValidationError("grid: domain bounds must satisfy a < b and c < d");
    if (nx < 4 || ny < 4)
      throw ValidationError("grid: Nx and Ny must be at least 4, got " + std::to_string(nx) + "x" +
                            std::to_string(ny));
    dx_ = (b - a) / nx;
    dy_ = (d - c) / ny;
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }

  Index family_size() const { return Index(nx_) * ny_; }
  Index macro_size() const { return 2 * family_size(); }
  Index face_size() const { return 2 * family_size(); }

  /// Periodic index inside one family block.
  Index index(int k, int l) const {
    k %= nx_;
    if (k < 0) k += nx_;
    l %= ny_;
    if (l < 0) l += ny_;
    return Index(l) * nx_ + k;
  }

  /// Weight of the midpoint rule over both face families.
  double face_weight() const { return 0.5 * dx_ * dy_; }

  double x_of(Family f, int k) const {
    return (f == Family::center || f == Family::xface) ? a_ + (k + 0.5) * dx_ : a_ + k * dx_;
  }
  double y_of(Family f, int l) const {
    return (f == Family::center || f == Family::yface) ? c_ + (l + 0.5) * dy_ : c_ + l * dy_;
  }

  /// Samples fn(x, y) on one family.
  template <class Fn>
  Vector sample(Family f, Fn&& fn) const {
    Vector out(family_size());
    for (int l = 0; l < ny_; ++l)
      for (int k = 0; k < nx_; ++k) out[index(k, l)] = fn(x_of(f, k), y_of(f, l));
    return out;
  }

  /// Samples fn(x, y) on [vertex | center].
  template <class Fn>
  Vector sample_macro(Fn&& fn) const {
    Vector out(macro_size());
    out << sample(Family::vertex, fn), sample(Family::center, fn);
    return out;
  }

  /// Samples fn(x, y) on [x-face | y-face].
  template <class Fn>
  Vector sample_faces(Fn&& fn) const {
    Vector out(face_size());
    out << sample(Family::xface, fn), sample(Family::yface, fn);
    return out;
  }

  bool same_as(const StaggeredGrid& o) const {
    return a_ == o.a_ && b_ == o.b_ && c_ == o.c_ && d_ == o.d_ && nx_ == o.nx_ && ny_ == o.ny_;
  }

 private:
  double a_, b_, c_, d_;
  int nx_, ny_;
  double dx_, dy_;
};

namespace detail {

inline std::vector<Index> wrapped_offsets(int n, int shift) {
  std::vector<Index> out(n);
  for (int k = 0; k < n; ++k) out[k] = ((k + shift) % n + n) % n;
  return out;
}

inline void require_rows(const StaggeredGrid& g, Index rows, Index expected, const char* what) {
  if (rows != expected)
    throw ValidationError(std::string(what) + ": expected " + std::to_string(expected) +
                          " rows for a " + std::to_string(g.nx()) + "x" + std::to_string(g.ny()) +
                          " grid, got " + std::to_string(rows));
}

}  // namespace detail

/// Pairwise summation; error grows like log(n) instead of n.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t block = 64;
  if (v.size() <= block) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const Vector& v) { return pairwise_sum(std::span<const double>(v.data(), v.size())); }

/// Fused second-order upwind transport, applied column by column:
///   D+x(xp) + D-x(xm) + D+y(yp) + D-y(ym)
/// with D+ = (3f(x) - 4f(x-h) + f(x-2h)) / 2h and D- = (-3f(x) + 4f(x+h) - f(x+2h)) / 2h,
/// neighbours taken inside the same face family. Any argument may be an empty matrix.
inline Matrix upwind_transport(const StaggeredGrid& g, const Matrix& xp, const Matrix& xm,
                               const Matrix& yp, const Matrix& ym) {
  const Matrix* parts[4] = {&xp, &xm, &yp, &ym};
  Index cols = -1;
  for (const Matrix* m : parts) {
    if (m->size() == 0) continue;
    detail::require_rows(g, m->rows(), g.face_size(), "upwind_transport");
    if (cols >= 0 && m->cols() != cols) throw ValidationError("upwind_transport: column count mismatch");
    cols = m->cols();
  }
  if (cols < 0) return Matrix();

  const int nx = g.nx(), ny = g.ny();
  const Index fam = g.family_size();
  const double cx = 1.0 / (2.0 * g.dx()), cy = 1.0 / (2.0 * g.dy());
  const auto km1 = detail::wrapped_offsets(nx, -1), km2 = detail::wrapped_offsets(nx, -2);
  const auto kp1 = detail::wrapped_offsets(nx, 1), kp2 = detail::wrapped_offsets(nx, 2);

  Matrix out = Matrix::Zero(g.face_size(), cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index block = 0; block < 2; ++block) {
      const Index base = block * fam;
      double* o = out.col(j).data() + base;
      if (xp.size() || xm.size()) {
        const double* p = xp.size() ? xp.col(j).data() + base : nullptr;
        const double* m = xm.size() ? xm.col(j).data() + base : nullptr;
        for (int l = 0; l < ny; ++l) {
          const Index row = Index(l) * nx;
          for (int k = 0; k < nx; ++k) {
            double acc = 0.0;
            if (p) acc += 3.0 * p[row + k] - 4.0 * p[row + km1[k]] + p[row + km2[k]];
            if (m) acc += -3.0 * m[row + k] + 4.0 * m[row + kp1[k]] - m[row + kp2[k]];
            o[row + k] += cx * acc;
          }
        }
      }
      if (yp.size() || ym.size()) {
        const double* p = yp.size() ? yp.col(j).data() + base : nullptr;
        const double* m = ym.size() ? ym.col(j).data() + base : nullptr;
        for (int l = 0; l < ny; ++l) {
          const Index r0 = Index(l) * nx;
          const Index rm1 = Index((l + ny - 1) % ny) * nx, rm2 = Index((l + ny - 2) % ny) * nx;
          const Index rp1 = Index((l + 1) % ny) * nx, rp2 = Index((l + 2) % ny) * nx;
          for (int k = 0; k < nx; ++k) {
            double acc = 0.0;
            if (p) acc += 3.0 * p[r0 + k] - 4.0 * p[rm1 + k] + p[rm2 + k];
            if (m) acc += -3.0 * m[r0 + k] + 4.0 * m[rp1 + k] - m[rp2 + k];
            o[r0 + k] += cy * acc;
          }
        }
      }
    }
  }
  return out;
}

/// Second-order one-sided derivative of each column along `axis`.
inline Matrix d_upwind(const StaggeredGrid& g, const Matrix& f, Axis axis, Side side) {
  const Matrix none;
  if (axis == Axis::x)
    return side == Side::plus ? upwind_transport(g, f, none, none, none) : upwind_transport(g, none, f, none, none);
  return side == Side::plus ? upwind_transport(g, none, none, f, none) : upwind_transport(g, none, none, none, f);
}

/// Central difference (f(x+h) - f(x-h)) / 2h of each column inside its own face family.
inline Matrix d_central_faces(const StaggeredGrid& g, const Matrix& f, Axis axis) {
  detail::require_rows(g, f.rows(), g.face_size(), "d_central_faces");
  const int nx = g.nx(), ny = g.ny();
  const Index fam = g.family_size();
  Matrix out(f.rows(), f.cols());
  if (axis == Axis::x) {
    const double c = 1.0 / (2.0 * g.dx());
    const auto km1 = detail::wrapped_offsets(nx, -1), kp1 = detail::wrapped_offsets(nx, 1);
    for (Index j = 0; j < f.cols(); ++j)
      for (Index base = 0; base < 2 * fam; base += fam) {
        const double* p = f.col(j).data() + base;
        double* o = out.col(j).data() + base;
        for (int l = 0; l < ny; ++l) {
          const Index row = Index(l) * nx;
          for (int k = 0; k < nx; ++k) o[row + k] = c * (p[row + kp1[k]] - p[row + km1[k]]);
        }
      }
  } else {
    const double c = 1.0 / (2.0 * g.dy());
    for (Index j = 0; j < f.cols(); ++j)
      for (Index base = 0; base < 2 * fam; base += fam) {
        const double* p = f.col(j).data() + base;
        double* o = out.col(j).data() + base;
        for (int l = 0; l < ny; ++l) {
          const Index r0 = Index(l) * nx, rm = Index((l + ny - 1) % ny) * nx, rp = Index((l + 1) % ny) * nx;
          for (int k = 0; k < nx; ++k) o[r0 + k] = c * (p[rp + k] - p[rm + k]);
        }
      }
  }
  return out;
}

/// Compact central derivative of a density field, evaluated at the faces.
///
/// x-derivative: at x-faces from the two neighbouring vertices, at y-faces from the
/// two neighbouring cell centers. The y-derivative mirrors this.
inline Vector d_central_rho(const StaggeredGrid& g, const Vector& rho, Axis axis) {
  detail::require_rows(g, rho.size(), g.macro_size(), "d_central_rho");
  const int nx = g.nx(), ny = g.ny();
  const Index fam = g.family_size();
  const double* vert = rho.data();
  const double* cent = rho.data() + fam;
  Vector out(g.face_size());
  double* xf = out.data();
  double* yf = out.data() + fam;
  if (axis == Axis::x) {
    const double c = 1.0 / g.dx();
    for (int l = 0; l < ny; ++l)
      for (int k = 0; k < nx; ++k) {
        const Index i = g.index(k, l);
        xf[i] = c * (vert[g.index(k + 1, l)] - vert[i]);  // (x_{k+1/2}, y_l)
        yf[i] = c * (cent[i] - cent[g.index(k - 1, l)]);  // (x_k, y_{l+1/2})
      }
  } else {
    const double c = 1.0 / g.dy();
    for (int l = 0; l < ny; ++l)
      for (int k = 0; k < nx; ++k) {
        const Index i = g.index(k, l);
        xf[i] = c * (cent[i] - cent[g.index(k, l - 1)]);
        yf[i] = c * (vert[g.index(k, l + 1)] - vert[i]);
      }
  }
  return out;
}

/// Flux-form divergence of the face vector field (fx, fy) onto both density families.
inline Vector div_faces(const StaggeredGrid& g, const Vector& fx, const Vector& fy) {
  detail::require_rows(g, fx.size(), g.face_size(), "div_faces");
  detail::require_rows(g, fy.size(), g.face_size(), "div_faces");
  const int nx = g.nx(), ny = g.ny();
  const Index fam = g.family_size();
  const double cx = 1.0 / g.dx(), cy = 1.0 / g.dy();
  Vector out(g.macro_size());
  double* vert = out.data();
  double* cent = out.data() + fam;
  const double* fx_x = fx.data();
  const double* fx_y = fx.data() + fam;
  const double* fy_x = fy.data();
  const double* fy_y = fy.data() + fam;
  for (int l = 0; l < ny; ++l)
    for (int k = 0; k < nx; ++k) {
      const Index i = g.index(k, l);
      vert[i] = cx * (fx_x[i] - fx_x[g.index(k - 1, l)]) + cy * (fy_y[i] - fy_y[g.index(k, l - 1)]);
      cent[i] = cx * (fx_y[g.index(k + 1, l)] - fx_y[i]) + cy * (fy_x[g.index(k, l + 1)] - fy_x[i]);
    }
  return out;
}

/// Midpoint-rule inner product over both face families.
inline double inner_x(const StaggeredGrid& g, const Vector& f, const Vector& h) {
  detail::require_rows(g, f.size(), g.face_size(), "inner_x");
  detail::require_rows(g, h.size(), g.face_size(), "inner_x");
  const Vector prod = f.cwiseProduct(h);
  return g.face_weight() * pairwise_sum(prod);
}

/// Gram matrix <F_i, H_k>_x of two sets of face columns.
inline Matrix gram_x(const StaggeredGrid& g, const Matrix& f, const Matrix& h) {
  return g.face_weight() * (f.transpose() * h);
}

/// Periodic translation by (sk, sl) cells, applied to every block of length Nx*Ny.
inline Vector shift_blocks(const StaggeredGrid& g, const Vector& v, int sk, int sl) {
  const Index fam = g.family_size();
  Vector out(v.size());
  for (Index base = 0; base < v.size(); base += fam)
    for (int l = 0; l < g.ny(); ++l)
      for (int k = 0; k < g.nx(); ++k) out[base + g.index(k + sk, l + sl)] = v[base + g.index(k, l)];
  return out;
}

}  // namespace apdlr
