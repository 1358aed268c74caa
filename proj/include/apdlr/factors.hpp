#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <string>
#include <vector>

#include "apdlr/error.hpp"
#include "apdlr/mesh.hpp"
#include "apdlr/problems.hpp"
#include "apdlr/velocity.hpp"
#include "apdlr/weighted_qr.hpp"

namespace apdlr {

/// g(x, v) = sum_ij X_i(x) S_ij V_j(v), X orthonormal in <,>_x and V in <,>_v.
struct LowRankFactors {
  Matrix X;  // faces x r
  Matrix S;  // r x r
  Matrix V;  // nodes x r

  Index rank() const { return S.rows(); }
};

/// Dense micro field on faces x nodes.
inline Matrix reconstruct(const LowRankFactors& f) { return f.X * (f.S * f.V.transpose()); }

/// Largest deviation of X^T W X and V^T W V from the identity.
inline double orthonormality_defect(const StaggeredGrid& g, const VelocitySet& vel, const LowRankFactors& f) {
  const Index r = f.rank();
  const Matrix I = Matrix::Identity(r, r);
  const double dx = (gram_x(g, f.X, f.X) - I).cwiseAbs().maxCoeff();
  const double dv = (f.V.transpose() * vel.w.asDiagonal() * f.V - I).cwiseAbs().maxCoeff();
  return std::max(dx, dv);
}

/// Compresses g0 = A B^T (A: faces x M, B: nodes x M) to rank r.
///
/// The velocity basis is the leading r weighted singular directions of g0; with
/// `augment`, xi, eta, gamma are put into the basis first and the remaining r - 3
/// directions are the best ones for the part of g0 orthogonal to them.
inline LowRankFactors init_factors(const StaggeredGrid& g, const VelocitySet& vel, Matrix A, Matrix B, int r,
                                   bool augment, std::uint64_t seed = default_seed) {
  const Index nf = g.face_size(), nv = vel.size();
  if (A.rows() != nf || B.rows() != nv || A.cols() != B.cols())
    throw ValidationError("init_factors: factor shapes do not match grid and velocity set");
  if (r < 1) throw ValidationError("init_factors: rank must be at least 1");
  if (r > std::min(nf, nv))
    throw ValidationError("init_factors: rank " + std::to_string(r) + " exceeds min(faces, nodes) = " +
                          std::to_string(std::min(nf, nv)));
  if (augment && r < 4) throw ValidationError("init_factors: augmentation needs rank >= 4");

  const RowWeights wx(g.face_weight()), wv(vel.w);
  if (A.cols() > nf) {  // more terms than grid points: fold A into B
    B = B * A.transpose();
    A = Matrix::Identity(nf, nf);
  }

  // g0 = Qa (B Ra^T)^T with Qa x-orthonormal
  Matrix Bt;
  if (A.cols() > 0) {
    const QrResult qa = weighted_qr(A, wx, seed);
    Bt = B * qa.R.transpose();
  } else {
    Bt = Matrix::Zero(nv, 0);
  }

  Matrix P(nv, 0);
  if (augment) {
    Matrix dirs(nv, 3);
    dirs << vel.xi, vel.eta, vel.gamma;
    P = weighted_qr(dirs, wv, seed).Q;
    Bt -= P * (P.transpose() * vel.w.asDiagonal() * Bt);
  }

  const Index want = r - P.cols();
  Matrix lead(nv, 0);
  if (Bt.cols() > 0 && want > 0) {
    const Vector sw = vel.w.cwiseSqrt();
    Eigen::BDCSVD<Matrix> svd(sw.asDiagonal() * Bt, Eigen::ComputeThinU);
    const Index take = std::min<Index>(want, svd.matrixU().cols());
    lead = sw.cwiseInverse().asDiagonal() * svd.matrixU().leftCols(take);
  }

  Matrix cand = Matrix::Zero(nv, r);
  cand.leftCols(P.cols()) = P;
  cand.middleCols(P.cols(), lead.cols()) = lead;
  LowRankFactors out;
  out.V = weighted_qr(cand, wv, seed).Q;

  // K = g0 W V, then X S = K
  const Matrix K = A * (B.transpose() * (vel.w.asDiagonal() * out.V));
  const QrResult qk = weighted_qr(K, wx, seed + 1);
  out.X = qk.Q;
  out.S = qk.R;
  return out;
}

/// Dense-sample variant: g0 given on faces x nodes.
inline LowRankFactors init_factors(const StaggeredGrid& g, const VelocitySet& vel, const Matrix& g0, int r,
                                   bool augment, std::uint64_t seed = default_seed) {
  if (g0.rows() != g.face_size() || g0.cols() != vel.size())
    throw ValidationError("init_factors: dense sample has the wrong shape");
  return init_factors(g, vel, g0, Matrix::Identity(vel.size(), vel.size()), r, augment, seed);
}

/// Separable-term variant: g0 = sum_m space_m(x) velocity_m(v).
inline LowRankFactors init_factors(const StaggeredGrid& g, const VelocitySet& vel,
                                   const std::vector<SeparableTerm>& terms, int r, bool augment,
                                   std::uint64_t seed = default_seed) {
  Matrix A(g.face_size(), Index(terms.size())), B(vel.size(), Index(terms.size()));
  for (std::size_t m = 0; m < terms.size(); ++m) {
    const double tf = terms[m].time ? terms[m].time(0.0) : 1.0;
    A.col(Index(m)) = tf * g.sample_faces(terms[m].space);
    B.col(Index(m)) = terms[m].velocity ? vel.sample(terms[m].velocity) : Vector(Vector::Ones(vel.size()));
  }
  return init_factors(g, vel, std::move(A), std::move(B), r, augment, seed);
}

}  // namespace apdlr
