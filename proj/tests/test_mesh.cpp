#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "apdlr/mesh.hpp"

using namespace apdlr;

namespace {

constexpr double pi = std::numbers::pi;

Vector random_vector(Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

double max_err_upwind_sin(int n, Side side) {
  StaggeredGrid g(0, 1, 0, 1, n, n);
  const Vector f = g.sample_faces([](double x, double) { return std::sin(2 * pi * x); });
  const Vector ex = g.sample_faces([](double x, double) { return 2 * pi * std::cos(2 * pi * x); });
  return (d_upwind(g, f, Axis::x, side) - ex).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Grid, RejectsTooFewCells) {
  EXPECT_THROW(StaggeredGrid(0, 1, 0, 1, 3, 8), ValidationError);
  EXPECT_THROW(StaggeredGrid(1, 0, 0, 1, 8, 8), ValidationError);
}

TEST(Grid, FamilyCoordinates) {
  StaggeredGrid g(0, 1, 0, 2, 4, 8);
  EXPECT_DOUBLE_EQ(g.x_of(Family::vertex, 1), 0.25);
  EXPECT_DOUBLE_EQ(g.x_of(Family::xface, 1), 0.375);
  EXPECT_DOUBLE_EQ(g.y_of(Family::yface, 0), 0.125);
  EXPECT_DOUBLE_EQ(g.y_of(Family::xface, 2), 0.5);
  EXPECT_EQ(g.index(-1, 0), 3);
  EXPECT_EQ(g.index(4, 9), 1 * 4 + 0);
}

TEST(Upwind, ConstantGivesZero) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const Vector f = Vector::Constant(g.face_size(), 3.0);
  for (Axis a : {Axis::x, Axis::y})
    for (Side s : {Side::plus, Side::minus}) EXPECT_LT(d_upwind(g, f, a, s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Upwind, ExactForQuadraticsAwayFromWrap) {
  StaggeredGrid g(0, 1, 0, 1, 16, 16);
  const Vector f = g.sample_faces([](double x, double) { return x * x; });
  const Vector dp = d_upwind(g, f, Axis::x, Side::plus);
  const Vector dm = d_upwind(g, f, Axis::x, Side::minus);
  for (Family fam : {Family::xface, Family::yface}) {
    const Index base = fam == Family::yface ? g.family_size() : 0;
    for (int l = 0; l < 16; ++l)
      for (int k = 2; k < 14; ++k) {
        const double x = g.x_of(fam, k);
        EXPECT_NEAR(dp[base + g.index(k, l)], 2 * x, 1e-11);
        EXPECT_NEAR(dm[base + g.index(k, l)], 2 * x, 1e-11);
      }
  }
}

TEST(Upwind, SecondOrderRefinement) {
  for (Side s : {Side::plus, Side::minus}) {
    const double ratio = max_err_upwind_sin(64, s) / max_err_upwind_sin(128, s);
    EXPECT_NEAR(ratio, 4.0, 0.1);
  }
}

TEST(Upwind, FusedEqualsSumOfParts) {
  StaggeredGrid g(0, 1, 0, 1, 8, 6);
  Matrix a = Matrix::Random(g.face_size(), 3), b = Matrix::Random(g.face_size(), 3);
  Matrix c = Matrix::Random(g.face_size(), 3), d = Matrix::Random(g.face_size(), 3);
  const Matrix fused = upwind_transport(g, a, b, c, d);
  const Matrix sum = d_upwind(g, a, Axis::x, Side::plus) + d_upwind(g, b, Axis::x, Side::minus) +
                     d_upwind(g, c, Axis::y, Side::plus) + d_upwind(g, d, Axis::y, Side::minus);
  EXPECT_LT((fused - sum).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CentralRho, ConstantAndLinear) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  EXPECT_LT(d_central_rho(g, Vector::Constant(g.macro_size(), 2.0), Axis::x).cwiseAbs().maxCoeff(), 1e-12);
  // linear in y, away from the periodic seam
  const Vector rho = g.sample_macro([](double, double y) { return 3.0 * y; });
  const Vector dy = d_central_rho(g, rho, Axis::y);
  for (int l = 1; l < 7; ++l)
    for (int k = 0; k < 8; ++k) {
      EXPECT_NEAR(dy[g.index(k, l)], 3.0, 1e-12);
      EXPECT_NEAR(dy[g.family_size() + g.index(k, l)], 3.0, 1e-12);
    }
}

TEST(CentralRho, SecondOrderRefinement) {
  auto err = [](int n) {
    StaggeredGrid g(0, 1, 0, 1, n, n);
    const Vector rho = g.sample_macro([](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); });
    const Vector ex = g.sample_faces([](double x, double y) { return 2 * pi * std::cos(2 * pi * x) * std::sin(2 * pi * y); });
    return (d_central_rho(g, rho, Axis::x) - ex).cwiseAbs().maxCoeff();
  };
  EXPECT_NEAR(err(32) / err(64), 4.0, 0.1);
}

TEST(CentralFaces, ConstantLinearAndOrder) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  EXPECT_LT(d_central_faces(g, Matrix::Constant(g.face_size(), 2, 1.5), Axis::y).cwiseAbs().maxCoeff(), 1e-12);
  const Vector f = g.sample_faces([](double x, double) { return 2.0 * x; });
  const Vector d = d_central_faces(g, f, Axis::x);
  for (int k = 1; k < 7; ++k) EXPECT_NEAR(d[g.index(k, 3)], 2.0, 1e-12);
  auto err = [](int n) {
    StaggeredGrid g(0, 1, 0, 1, n, n);
    const Vector f = g.sample_faces([](double, double y) { return std::sin(2 * pi * y); });
    const Vector ex = g.sample_faces([](double, double y) { return 2 * pi * std::cos(2 * pi * y); });
    return (d_central_faces(g, f, Axis::y) - ex).cwiseAbs().maxCoeff();
  };
  EXPECT_NEAR(err(32) / err(64), 4.0, 0.1);
}

TEST(DivFaces, ConstantGivesZeroAndSumsVanish) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const Vector c = Vector::Constant(g.face_size(), 1.0);
  EXPECT_LT(div_faces(g, c, 2 * c).cwiseAbs().maxCoeff(), 1e-12);
  const Vector fx = random_vector(g.face_size(), 1), fy = random_vector(g.face_size(), 2);
  const Vector div = div_faces(g, fx, fy);
  const double scale = div.cwiseAbs().sum();
  EXPECT_LT(std::abs(div.head(g.family_size()).sum()), 1e-12 * scale);
  EXPECT_LT(std::abs(div.tail(g.family_size()).sum()), 1e-12 * scale);
}

TEST(DivFaces, SecondOrderRefinement) {
  auto err = [](int n) {
    StaggeredGrid g(0, 1, 0, 1, n, n);
    const Vector fx = g.sample_faces([](double x, double) { return std::sin(2 * pi * x); });
    const Vector ex = g.sample_macro([](double x, double) { return 2 * pi * std::cos(2 * pi * x); });
    return (div_faces(g, fx, Vector::Zero(g.face_size())) - ex).cwiseAbs().maxCoeff();
  };
  EXPECT_NEAR(err(32) / err(64), 4.0, 0.1);
}

TEST(InnerX, Examples) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const Vector one = Vector::Ones(g.face_size());
  const Vector s = g.sample_faces([](double x, double) { return std::sin(2 * pi * x); });
  EXPECT_NEAR(inner_x(g, one, one), 1.0, 1e-14);
  EXPECT_NEAR(inner_x(g, one, s), 0.0, 1e-15);
  StaggeredGrid g4(0, 1, 0, 1, 4, 4);
  const Vector s4 = g4.sample_faces([](double x, double) { return std::sin(2 * pi * x); });
  EXPECT_NEAR(inner_x(g4, s4, s4), 0.5, 1e-12);
}

TEST(InnerX, SymmetricPositive) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const Vector a = random_vector(g.face_size(), 3), b = random_vector(g.face_size(), 4);
  EXPECT_DOUBLE_EQ(inner_x(g, a, b), inner_x(g, b, a));
  EXPECT_GT(inner_x(g, a, a), 0.0);
  EXPECT_NEAR(gram_x(g, a, b)(0, 0), inner_x(g, a, b), 1e-13);
}

TEST(Stencils, CommuteWithShifts) {
  StaggeredGrid g(0, 1, 0, 1, 8, 6);
  const Vector f = random_vector(g.face_size(), 5);
  const Vector rho = random_vector(g.macro_size(), 6);
  const Vector f2 = random_vector(g.face_size(), 7);
  for (Axis a : {Axis::x, Axis::y}) {
    for (Side s : {Side::plus, Side::minus}) {
      const Vector lhs = shift_blocks(g, d_upwind(g, f, a, s), 1, 2);
      const Vector rhs = d_upwind(g, shift_blocks(g, f, 1, 2), a, s);
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_LT((shift_blocks(g, d_central_rho(g, rho, a), 2, 1) - d_central_rho(g, shift_blocks(g, rho, 2, 1), a))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    EXPECT_LT((shift_blocks(g, d_central_faces(g, f, a), 3, 1) - d_central_faces(g, shift_blocks(g, f, 3, 1), a))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
  EXPECT_LT((shift_blocks(g, div_faces(g, f, f2), 1, 1) - div_faces(g, shift_blocks(g, f, 1, 1), shift_blocks(g, f2, 1, 1)))
                .cwiseAbs()
                .maxCoeff(),
            1e-11);
}

TEST(PairwiseSum, MatchesLongDouble) {
  const Vector v = random_vector(100000, 9);
  long double ref = 0;
  for (Index i = 0; i < v.size(); ++i) ref += v[i];
  EXPECT_NEAR(pairwise_sum(v), double(ref), 1e-11);
}
