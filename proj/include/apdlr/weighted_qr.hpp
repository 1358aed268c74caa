#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"

namespace apdlr {

inline constexpr std::uint64_t default_seed = 20200728;

/// Diagonal weights of an inner product <f, g> = sum_i w_i f_i g_i.
/// A uniform weight is kept as a scalar.
class RowWeights {
 public:
  explicit RowWeights(double uniform) : uniform_(uniform) {}
  explicit RowWeights(const Vector& w) : uniform_(0.0), w_(&w) {}

  Vector apply(const Vector& v) const { return w_ ? Vector(w_->cwiseProduct(v)) : Vector(uniform_ * v); }
  Matrix apply(const Matrix& m) const { return w_ ? Matrix(w_->asDiagonal() * m) : Matrix(uniform_ * m); }
  double dot(const Vector& a, const Vector& b) const { return w_ ? a.dot(w_->cwiseProduct(b)) : uniform_ * a.dot(b); }
  Index size_hint() const { return w_ ? w_->size() : -1; }

 private:
  double uniform_;
  const Vector* w_ = nullptr;
};

namespace detail {

/// splitmix64; fixed bit pattern on every platform.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53 - 0.5; }
};

}  // namespace detail

/// Deterministic pseudo-random column used to complete a rank-deficient basis.
inline Vector completion_vector(Index rows, Index column, std::uint64_t seed) {
  detail::SplitMix64 gen{seed ^ (0xd1b54a32d192ed03ULL * std::uint64_t(column + 1))};
  Vector v(rows);
  for (Index i = 0; i < rows; ++i) v[i] = gen.uniform();
  return v;
}

struct QrResult {
  Matrix Q;  // orthonormal columns in the weighted inner product
  Matrix R;  // upper triangular, nonnegative diagonal
};

/// Thin QR in a weighted inner product, via Gram-Schmidt with reorthogonalization.
///
/// Columns whose residual falls below 1e-13 of the input norm are replaced by
/// seeded pseudo-random directions orthogonal to the previous columns; their
/// diagonal entry in R is zero, so Q*R still reproduces the input.
inline QrResult weighted_qr(const Matrix& A, const RowWeights& w, std::uint64_t seed = default_seed) {
  const Index m = A.rows(), n = A.cols();
  if (n > m)
    throw ValidationError("weighted_qr: " + std::to_string(n) + " columns exceed " + std::to_string(m) + " rows");
  if (w.size_hint() >= 0 && w.size_hint() != m) throw ValidationError("weighted_qr: weight length mismatch");

  QrResult out{Matrix::Zero(m, n), Matrix::Zero(n, n)};
  const double total = std::sqrt(std::max(0.0, (A.array() * w.apply(A).array()).sum()));
  const double tol = 1e-13 * total;

  auto orthogonalize = [&](Vector& v, Index p, bool record) {
    for (int pass = 0; pass < 2; ++pass) {
      if (p == 0) break;
      const Vector c = out.Q.leftCols(p).transpose() * w.apply(v);
      v.noalias() -= out.Q.leftCols(p) * c;
      if (record) out.R.col(p).head(p) += c;
    }
  };

  for (Index p = 0; p < n; ++p) {
    Vector v = A.col(p);
    orthogonalize(v, p, true);
    const double norm = std::sqrt(std::max(0.0, w.dot(v, v)));
    if (norm > tol && norm > 0.0) {
      out.Q.col(p) = v / norm;
      out.R(p, p) = norm;
      continue;
    }
    for (std::uint64_t attempt = 0;; ++attempt) {
      Vector r = completion_vector(m, p, seed + attempt * 0x632be59bd9b4e019ULL);
      orthogonalize(r, p, false);
      const double rn = std::sqrt(w.dot(r, r));
      if (rn > 1e-8 * std::sqrt(w.dot(Vector::Ones(m), Vector::Ones(m)))) {
        out.Q.col(p) = r / rn;
        break;
      }
      if (attempt > 16) throw NumericalError("weighted_qr: could not complete the basis");
    }
  }
  return out;
}

}  // namespace apdlr
