#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"

using namespace apdlr;

namespace {

constexpr double pi = std::numbers::pi;

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

Discretization toy(int nx, int nv, double eps, bool variable, bool with_source = true) {
  const ProblemSpec p = manufactured(eps);
  StaggeredGrid g(0, 1, 0, 1, nx, nx);
  SpaceFn ss = [variable](double x, double) { return variable ? 1.0 + 0.5 * std::sin(2 * pi * x) : 1.0; };
  SpaceFn sa = [variable](double, double y) { return variable ? 0.3 + 0.1 * std::cos(2 * pi * y) : 0.0; };
  return Discretization(g, load_velocity_set(nv), Coefficients::sample(g, ss, sa, eps),
                        with_source ? p.source : std::vector<SeparableTerm>{});
}

LowRankFactors random_factors(const Discretization& d, int r, unsigned seed) {
  std::srand(seed);
  LowRankFactors f;
  f.X = weighted_qr(Matrix::Random(d.grid().face_size(), r), d.x_weights()).Q;
  f.V = weighted_qr(Matrix::Random(d.velocity().size(), r), d.v_weights()).Q;
  f.S = Matrix::Random(r, r);
  return f;
}

Vector smooth_rho(const StaggeredGrid& g) {
  return g.sample_macro([](double x, double y) { return 1.0 + 0.3 * std::sin(2 * pi * x) * std::cos(2 * pi * y); });
}

Matrix source_of(const Discretization& d, double t) {
  return oracle::micro_source(d.grid(), d.velocity(), manufactured(d.eps()).source, t, d.eps());
}

/// -v . grad rho / sigma_s on faces x nodes.
Matrix diffusive_g(const Discretization& d, const Vector& rho) {
  const Vector gx = d_central_rho(d.grid(), rho, Axis::x), gy = d_central_rho(d.grid(), rho, Axis::y);
  const Vector inv = d.coef().sigma_s_face.cwiseInverse();
  return -(inv.asDiagonal() * (gx * d.velocity().xi.transpose() + gy * d.velocity().eta.transpose()));
}

}  // namespace

// ---------------------------------------------------------------- weighted_qr

TEST(WeightedQr, OrthonormalInputIsIdentity) {
  const Vector w = Vector::LinSpaced(20, 0.5, 2.0);
  const Matrix Q0 = weighted_qr(Matrix::Random(20, 4), RowWeights(w)).Q;
  const QrResult qr = weighted_qr(Q0, RowWeights(w));
  EXPECT_LT((qr.Q - Q0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((qr.R - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  const QrResult q2 = weighted_qr(2.0 * Q0, RowWeights(w));
  EXPECT_LT((q2.R - 2.0 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedQr, ReproducesInputWithNonnegativeDiagonal) {
  const Matrix A = Matrix::Random(30, 6);
  const QrResult qr = weighted_qr(A, RowWeights(0.25));
  EXPECT_LT((qr.Q * qr.R - A).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((0.25 * qr.Q.transpose() * qr.Q - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
  for (int p = 0; p < 6; ++p) EXPECT_GE(qr.R(p, p), 0.0);
  EXPECT_TRUE(qr.R.triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0));
}

TEST(WeightedQr, RankOneInputCompletesBasis) {
  const Vector a = Vector::Random(25);
  Matrix A(25, 3);
  A << a, -2.0 * a, 0.5 * a;
  const QrResult qr = weighted_qr(A, RowWeights(1.0));
  EXPECT_LT(qr.R.row(1).cwiseAbs().maxCoeff(), 1e-12 * qr.R(0, 0));
  EXPECT_LT(qr.R.row(2).cwiseAbs().maxCoeff(), 1e-12 * qr.R(0, 0));
  EXPECT_LT((qr.Q.transpose() * qr.Q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((qr.Q * qr.R - A).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedQr, ZeroInputAndDeterminism) {
  const QrResult a = weighted_qr(Matrix::Zero(10, 3), RowWeights(1.0), 7);
  const QrResult b = weighted_qr(Matrix::Zero(10, 3), RowWeights(1.0), 7);
  EXPECT_TRUE(a.R.isZero(0.0));
  EXPECT_LT((a.Q.transpose() * a.Q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(a.Q, b.Q);
}

TEST(WeightedQr, TooManyColumns) { EXPECT_THROW(weighted_qr(Matrix::Zero(3, 4), RowWeights(1.0)), ValidationError); }

// ---------------------------------------------------------------- init_factors

TEST(InitFactors, ZeroDataGivesZeroS) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const VelocitySet vel = load_velocity_set(26);
  const LowRankFactors f = init_factors(g, vel, Matrix::Zero(g.face_size(), vel.size()), 3, false);
  EXPECT_TRUE(f.S.isZero(0.0));
  EXPECT_LT(orthonormality_defect(g, vel, f), 1e-12);
}

TEST(InitFactors, RankOneWithAugmentation) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const VelocitySet vel = load_velocity_set(86);
  const Vector a = g.sample_faces([](double x, double y) { return std::sin(2 * pi * x) + y; });
  const Matrix g0 = a * vel.eta.transpose();
  const LowRankFactors f = init_factors(g, vel, g0, 5, true);
  EXPECT_LT(rel_err(reconstruct(f), g0), 1e-12);
  EXPECT_LT(orthonormality_defect(g, vel, f), 1e-12);
  for (const Vector* d : {&vel.xi, &vel.eta, &vel.gamma}) {
    const Vector proj = f.V * (f.V.transpose() * vel.w.cwiseProduct(*d));
    EXPECT_LT((proj - *d).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(InitFactors, RandomRankThree) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const VelocitySet vel = load_velocity_set(26);
  const Matrix g0 = Matrix::Random(g.face_size(), 3) * Matrix::Random(3, vel.size());
  const LowRankFactors f = init_factors(g, vel, g0, 6, false);
  const Vector sv = singular_values(f.S);
  for (Index i = 3; i < sv.size(); ++i) EXPECT_LT(sv[i], 1e-12 * sv[0]);
  EXPECT_LT(rel_err(reconstruct(f), g0), 1e-12);
}

TEST(InitFactors, TruncationIsOptimalInWeightedNorm) {
  StaggeredGrid g(0, 1, 0, 1, 4, 4);
  const VelocitySet vel = load_velocity_set(26);
  const Matrix g0 = Matrix::Random(g.face_size(), vel.size());
  const int r = 4;
  const LowRankFactors f = init_factors(g, vel, g0, r, false);
  const Vector sx = Vector::Constant(g.face_size(), std::sqrt(g.face_weight())), sv = vel.w.cwiseSqrt();
  const Matrix scaled = sx.asDiagonal() * g0 * sv.asDiagonal();
  const Vector s = Eigen::JacobiSVD<Matrix>(scaled).singularValues();
  const double best = s.tail(s.size() - r).norm();
  const double got = (sx.asDiagonal() * (reconstruct(f) - g0) * sv.asDiagonal()).norm();
  EXPECT_NEAR(got, best, 1e-10 * best);
}

TEST(InitFactors, Errors) {
  StaggeredGrid g(0, 1, 0, 1, 4, 4);
  const VelocitySet vel = load_velocity_set(6);
  EXPECT_THROW(init_factors(g, vel, Matrix::Zero(g.face_size(), 6), 7, false), ValidationError);
  EXPECT_THROW(init_factors(g, vel, Matrix::Zero(g.face_size(), 6), 3, true), ValidationError);
}

TEST(Reconstruct, NormMatchesS) {
  const Discretization d = toy(8, 26, 1.0, false);
  const LowRankFactors f = random_factors(d, 3, 1);
  const Matrix gd = reconstruct(f);
  const double norm2 = d.grid().face_weight() * (gd.cwiseAbs2() * d.velocity().w).sum();
  EXPECT_NEAR(std::sqrt(norm2), f.S.norm(), 1e-10 * f.S.norm());
  LowRankFactors z = f;
  z.S.setZero();
  EXPECT_TRUE(reconstruct(z).isZero(0.0));
}

// ---------------------------------------------------------------- substeps vs dense assembly

class SubstepOracle : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(SubstepOracle, KStepBackwardEuler) {
  const auto [nx, nv, r] = GetParam();
  const Discretization d = toy(nx, nv, 0.5, true);
  const LowRankFactors f = random_factors(d, r, 2);
  const Vector rho = smooth_rho(d.grid());
  const double dt = 1e-3, t0 = 0.3, eps = d.eps();
  const Matrix E = oracle::explicit_rhs(d.grid(), d.velocity(), d.coef().sigma_a_face, eps, reconstruct(f), rho,
                                        source_of(d, t0), oracle::Stencil::upwind);
  const Vector denom = (1.0 + dt / (eps * eps) * d.coef().sigma_s_face.array()).inverse().matrix();
  const Matrix K = denom.asDiagonal() * ((reconstruct(f) + dt * E) * d.velocity().w.asDiagonal() * f.V);
  const LowRankFactors out = k_step(d, f, rho, t0, dt, Stepper::backward_euler);
  EXPECT_LT(rel_err(out.X * out.S, K), 1e-12);
  EXPECT_EQ(out.V, f.V);
  EXPECT_LT(orthonormality_defect(d.grid(), d.velocity(), out), 1e-12);
}

TEST_P(SubstepOracle, LStepBackwardEuler) {
  const auto [nx, nv, r] = GetParam();
  const Discretization d = toy(nx, nv, 0.5, true);
  const LowRankFactors f = random_factors(d, r, 3);
  const Vector rho = smooth_rho(d.grid());
  const double dt = 1e-3, t0 = 0.2, eps = d.eps(), wx = d.grid().face_weight();
  const Matrix E = oracle::explicit_rhs(d.grid(), d.velocity(), d.coef().sigma_a_face, eps, reconstruct(f), rho,
                                        source_of(d, t0), oracle::Stencil::central);
  const Matrix A = wx * f.X.transpose() * d.coef().sigma_s_face.asDiagonal() * f.X;
  const Matrix rhs = f.V * f.S.transpose() + dt * (wx * f.X.transpose() * E).transpose();
  const Matrix M = Matrix::Identity(r, r) + dt / (eps * eps) * A;
  const Matrix L = M.transpose().partialPivLu().solve(rhs.transpose()).transpose();
  const LowRankFactors out = l_step(d, f, rho, t0, dt, Stepper::backward_euler);
  EXPECT_LT(rel_err(out.V * out.S.transpose(), L), 1e-12);
  EXPECT_EQ(out.X, f.X);
  EXPECT_LT(orthonormality_defect(d.grid(), d.velocity(), out), 1e-12);
}

TEST_P(SubstepOracle, SStepBackwardEuler) {
  const auto [nx, nv, r] = GetParam();
  const Discretization d = toy(nx, nv, 0.5, true);
  const LowRankFactors f = random_factors(d, r, 4);
  const Vector rho = smooth_rho(d.grid());
  const double dt = 1e-3, t0 = 0.1, eps = d.eps(), wx = d.grid().face_weight();
  const Matrix E = oracle::explicit_rhs(d.grid(), d.velocity(), d.coef().sigma_a_face, eps, reconstruct(f), rho,
                                        source_of(d, t0), oracle::Stencil::central);
  const Matrix A = wx * f.X.transpose() * d.coef().sigma_s_face.asDiagonal() * f.X;
  const Matrix rhs = f.S - dt * wx * f.X.transpose() * E * d.velocity().w.asDiagonal() * f.V;
  const Matrix S = (Matrix::Identity(r, r) - dt / (eps * eps) * A).partialPivLu().solve(rhs);
  const LowRankFactors out = s_step(d, f, rho, t0, dt, Stepper::backward_euler);
  EXPECT_LT(rel_err(out.S, S), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Toy, SubstepOracle,
                         ::testing::Values(std::make_tuple(8, 26, 2), std::make_tuple(4, 6, 6),
                                           std::make_tuple(6, 26, 5)));

TEST(KStep, Ars222MatchesHandWrittenStages) {
  const Discretization d = toy(6, 26, 0.5, true);
  const LowRankFactors f = random_factors(d, 3, 5);
  const Vector rho = smooth_rho(d.grid());
  const double h = 2e-3, t0 = 0.4, eps = d.eps();
  const double gam = 1.0 - std::sqrt(2.0) / 2.0, del = 1.0 - 1.0 / (2.0 * gam);
  const Vector& ss = d.coef().sigma_s_face;
  auto E = [&](const Matrix& K, double t) {
    const Matrix gd = K * f.V.transpose();
    return Matrix(oracle::explicit_rhs(d.grid(), d.velocity(), d.coef().sigma_a_face, eps, gd, rho, source_of(d, t),
                                       oracle::Stencil::upwind) *
                  d.velocity().w.asDiagonal() * f.V);
  };
  auto solve = [&](double a, const Matrix& rhs) {
    return Matrix((1.0 + a / (eps * eps) * ss.array()).inverse().matrix().asDiagonal() * rhs);
  };
  const Matrix K0 = f.X * f.S;
  const Matrix E1 = E(K0, t0);
  const Matrix Y2 = solve(h * gam, K0 + h * gam * E1);
  const Matrix E2 = E(Y2, t0 + gam * h);
  const Matrix I2 = (ss / (eps * eps)).asDiagonal() * Y2;
  const Matrix Y3 = solve(h * gam, K0 + h * (del * E1 + (1 - del) * E2) - h * (1 - gam) * I2);
  const LowRankFactors out = k_step(d, f, rho, t0, h, Stepper::ars222);
  EXPECT_LT(rel_err(out.X * out.S, Y3), 1e-11);
}

// ---------------------------------------------------------------- trivial reductions

TEST(KStep, ConstantBasisDecaysOnly) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const double eps = 0.7;
  const Discretization d(g, load_velocity_set(26), Coefficients::uniform(g, 2.0, 0.0, eps));
  LowRankFactors f;
  f.X = weighted_qr(Matrix::Random(g.face_size(), 1), d.x_weights()).Q;
  f.S = Matrix::Constant(1, 1, 1.3);
  f.V = Matrix::Constant(26, 1, 1.0 / std::sqrt(four_pi));
  const double dt = 0.01;
  const LowRankFactors out = k_step(d, f, smooth_rho(g), 0.0, dt, Stepper::backward_euler);
  const Matrix expect = f.X * f.S / (1.0 + dt * 2.0 / (eps * eps));
  EXPECT_LT(rel_err(out.X * out.S, expect), 1e-12);
}

TEST(LStep, UnitScatteringGramIsIdentity) {
  const Discretization d = toy(8, 26, 1.0, false);
  const LowRankFactors f = random_factors(d, 3, 6);
  const Matrix A = gram_x(d.grid(), f.X, d.coef().sigma_s_face.asDiagonal() * f.X);
  EXPECT_LT((A - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SStep, ScalarReduction) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const double eps = 1.0;
  const Discretization d(g, load_velocity_set(6), Coefficients::uniform(g, 1.0, 0.0, eps));
  LowRankFactors f;
  f.X = Matrix::Constant(g.face_size(), 1, 1.0);  // unit norm on [0,1]^2
  f.V = Matrix::Constant(6, 1, 1.0 / std::sqrt(four_pi));
  f.S = Matrix::Constant(1, 1, 0.8);
  const double dt = 0.1;
  const LowRankFactors out = s_step(d, f, Vector::Zero(g.macro_size()), 0.0, dt, Stepper::backward_euler);
  EXPECT_NEAR(out.S(0, 0), 0.8 / (1.0 - dt / (eps * eps)), 1e-14);
}

TEST(SStep, NearSingularSystemAborts) {
  StaggeredGrid g(0, 1, 0, 1, 8, 8);
  const Discretization d(g, load_velocity_set(6), Coefficients::uniform(g, 1.0, 0.0, 1.0));
  LowRankFactors f;
  f.X = Matrix::Constant(g.face_size(), 1, 1.0);
  f.V = Matrix::Constant(6, 1, 1.0 / std::sqrt(four_pi));
  f.S = Matrix::Constant(1, 1, 0.8);
  try {
    s_step(d, f, Vector::Zero(g.macro_size()), 0.0, 1.0, Stepper::backward_euler);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos);
  }
}

// ---------------------------------------------------------------- diffusive limit of each substep

TEST(DiffusiveLimit, KStep) {
  const Discretization d = toy(8, 26, 1e-8, true, false);
  const LowRankFactors f = random_factors(d, 4, 7);
  const Vector rho = smooth_rho(d.grid());
  const LowRankFactors out = k_step(d, f, rho, 0.0, 1e-3, Stepper::backward_euler);
  const Moments m = moments(d.velocity(), f.V);
  const Vector gx = d_central_rho(d.grid(), rho, Axis::x), gy = d_central_rho(d.grid(), rho, Axis::y);
  const Matrix expect =
      -(d.coef().sigma_s_face.cwiseInverse().asDiagonal() * (gx * m.flux.row(0) + gy * m.flux.row(1)));
  EXPECT_LT(rel_err(out.X * out.S, expect), 1e-6);
}

TEST(DiffusiveLimit, LStep) {
  const Discretization d = toy(8, 26, 1e-8, true, false);
  const LowRankFactors f = random_factors(d, 4, 8);
  const Vector rho = smooth_rho(d.grid());
  const LowRankFactors out = l_step(d, f, rho, 0.0, 1e-3, Stepper::backward_euler);
  const Matrix A = gram_x(d.grid(), f.X, d.coef().sigma_s_face.asDiagonal() * f.X);
  const Vector gx = gram_x(d.grid(), f.X, d_central_rho(d.grid(), rho, Axis::x));
  const Vector gy = gram_x(d.grid(), f.X, d_central_rho(d.grid(), rho, Axis::y));
  const Matrix lhs = out.V * out.S.transpose() * A.transpose();
  const Matrix expect = -(d.velocity().xi * gx.transpose() + d.velocity().eta * gy.transpose());
  EXPECT_LT(rel_err(lhs, expect), 1e-6);
}

TEST(DiffusiveLimit, SStep) {
  const Discretization d = toy(8, 26, 1e-8, true, false);
  const LowRankFactors f = random_factors(d, 4, 9);
  const Vector rho = smooth_rho(d.grid());
  const LowRankFactors out = s_step(d, f, rho, 0.0, 1e-3, Stepper::backward_euler);
  const Matrix A = gram_x(d.grid(), f.X, d.coef().sigma_s_face.asDiagonal() * f.X);
  const Vector gx = d_central_rho(d.grid(), rho, Axis::x), gy = d_central_rho(d.grid(), rho, Axis::y);
  const Matrix vgrad = gx * d.velocity().xi.transpose() + gy * d.velocity().eta.transpose();
  const Matrix expect = -d.grid().face_weight() * f.X.transpose() * vgrad * d.velocity().w.asDiagonal() * f.V;
  EXPECT_LT(rel_err(A * out.S, expect), 1e-6);
}

TEST(DiffusiveLimit, AllOrderingsReachTheFixedPoint) {
  const Discretization d = toy(8, 86, 1e-8, false, false);
  const Vector rho = smooth_rho(d.grid());
  const Matrix g0 = Matrix::Random(d.grid().face_size(), 2) * Matrix::Random(2, d.velocity().size());
  const LowRankFactors f0 = init_factors(d.grid(), d.velocity(), g0, 6, true);
  const Matrix expect = diffusive_g(d, rho);
  for (const std::string& order : all_orderings()) {
    SCOPED_TRACE(order);
    LowRankFactors f = f0;
    for (char c : order) f = apply_substep(c, d, f, rho, 0.0, 1e-3, Stepper::backward_euler, default_seed);
    EXPECT_LT(rel_err(reconstruct(f), expect), 1e-6);
    EXPECT_LT(orthonormality_defect(d.grid(), d.velocity(), f), 1e-10);
  }
}
