#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "vtrack/kalman.hpp"
#include "vtrack/random.hpp"

namespace vtrack {
namespace {

KalmanState cv_state(Vector x, Matrix p, double q = 0.0, double r = 1.0) {
  return KalmanState{std::move(x), std::move(p), MotionModel{MotionKind::cv, 1.0, q, r}};
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

// Plain triple-loop product, independent of Eigen's expression templates.
Matrix naive_mul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

TEST(EkfPredict, ConstantVelocityAdvance) {
  const auto s = ekf_predict(cv_state(vec({0, 0, 1, 0}), Matrix::Identity(4, 4)));
  EXPECT_EQ(s.x, vec({1, 0, 1, 0}));
}

TEST(EkfPredict, CovarianceMatchesDenseOracle) {
  const auto s = ekf_predict(cv_state(vec({0, 0, 1, 0}), Matrix::Identity(4, 4)));
  Matrix a = Matrix::Identity(4, 4);
  a(0, 2) = a(1, 3) = 1.0;
  const Matrix oracle = naive_mul(a, a.transpose());
  Matrix expected(4, 4);
  expected << 2, 0, 1, 0, 0, 2, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1;
  EXPECT_EQ(oracle, expected);
  EXPECT_LT((s.P - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EkfPredict, CtrvStraightLimitMatchesCv) {
  const double speed = 3.0, heading = 0.7;
  KalmanState ctrv{vec({10, 20, speed, heading, 0.0}), Matrix::Identity(5, 5),
                   MotionModel{MotionKind::ctrv, 1.0, 0.0, 1.0}};
  auto cv = cv_state(vec({10, 20, speed * std::cos(heading), speed * std::sin(heading)}),
                     Matrix::Identity(4, 4));
  for (int i = 0; i < 5; ++i) {
    ctrv = ekf_predict(ctrv);
    cv = ekf_predict(cv);
    EXPECT_NEAR(ctrv.x(0), cv.x(0), 1e-12);
    EXPECT_NEAR(ctrv.x(1), cv.x(1), 1e-12);
  }
}

TEST(EkfPredict, CtrvTurnsOnCircle) {
  // quarter circle of radius v/w in 10 steps
  const double w = M_PI / 20.0, v = 2.0;
  KalmanState s{vec({0, 0, v, 0, w}), Matrix::Identity(5, 5), MotionModel{MotionKind::ctrv, 1.0, 0, 1}};
  for (int i = 0; i < 10; ++i) s = ekf_predict(s);
  const double r = v / w;
  EXPECT_NEAR(s.x(0), r, 1e-9);
  EXPECT_NEAR(s.x(1), r, 1e-9);
  EXPECT_NEAR(s.x(3), M_PI / 2.0, 1e-12);
}

TEST(EkfPredict, NonFiniteThrows) {
  const auto s = cv_state(vec({0, 0, std::numeric_limits<double>::infinity(), 0}), Matrix::Identity(4, 4));
  EXPECT_THROW(ekf_predict(s), NumericalError);
}

TEST(CtrvJacobian, MatchesCentralDifferences) {
  const MotionModel m{MotionKind::ctrv, 1.0, 0.0, 1.0};
  Pcg32 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    Vector x = vec({rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(0.1, 10),
                    rng.uniform(-M_PI, M_PI), rng.uniform(-0.3, 0.3)});
    if (trial % 5 == 0) x(4) = rng.uniform(-1e-7, 1e-7);
    const Matrix a = m.jacobian(x);
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
      Vector lo = x, hi = x;
      lo(j) -= h;
      hi(j) += h;
      const Vector fd = (m.transition(hi) - m.transition(lo)) / (2.0 * h);
      for (Eigen::Index i = 0; i < 5; ++i) {
        const double scale = std::max(1.0, std::abs(fd(i)));
        EXPECT_LT(std::abs(a(i, j) - fd(i)) / scale, 1e-5) << "entry " << i << "," << j;
      }
    }
  }
}

TEST(EkfUpdate, ZeroInnovationLeavesStateUnchanged) {
  const auto s = cv_state(vec({3, 4, 1, -1}), Matrix::Identity(4, 4) * 7.0);
  const auto u = ekf_update(s, Vec2(3, 4));
  EXPECT_EQ(u.x, s.x);
}

TEST(EkfUpdate, HugeMeasurementNoiseBarelyMoves) {
  const auto s = cv_state(vec({0, 0, 0, 0}), Matrix::Identity(4, 4), 0.0, 1e12);
  const auto u = ekf_update(s, Vec2(100, -50));
  EXPECT_LT((u.x.head(2) - s.x.head(2)).norm(), 1e-6 * Vec2(100, -50).norm());
}

TEST(EkfUpdate, GainOracle) {
  // K = P H^T (H P H^T + R)^-1 with P = I, R = I: position rows 0.5 I
  const auto s = cv_state(vec({0, 0, 0, 0}), Matrix::Identity(4, 4));
  const auto u = ekf_update(s, Vec2(2, 0));
  EXPECT_NEAR(u.x(0), 1.0, 1e-15);
  EXPECT_NEAR(u.x(1), 0.0, 1e-15);
  EXPECT_NEAR(u.x(2), 0.0, 1e-15);
  EXPECT_NEAR(u.P(0, 0), 0.5, 1e-15);
}

TEST(EkfUpdate, SingularInnovationThrows) {
  KalmanState s = cv_state(vec({0, 0, 0, 0}), Matrix::Zero(4, 4));
  s.model.r_scale = 0.0;
  try {
    ekf_update(s, Vec2(1, 1));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("innovation covariance"), std::string::npos);
  }
}

TEST(Coast, SameAsPredict) {
  const auto s = cv_state(vec({1, 2, 3, 4}), Matrix::Identity(4, 4), 0.5);
  const auto a = coast(s), b = ekf_predict(s);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.P, b.P);
  EXPECT_GE(a.P.trace(), s.P.trace());
}

TEST(Coast, TenStepsClosedForm) {
  auto s = cv_state(vec({5, 7, 1.5, -0.5}), Matrix::Identity(4, 4), 0.1);
  for (int i = 0; i < 10; ++i) {
    const double before = s.P.trace();
    s = coast(s);
    EXPECT_GE(s.P.trace(), before);
  }
  EXPECT_NEAR(s.x(0), 5 + 10 * 1.5, 1e-12);
  EXPECT_NEAR(s.x(1), 7 - 10 * 0.5, 1e-12);
}

TEST(KalmanProperties, CovarianceStaysSymmetricPsd) {
  Pcg32 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto kind = trial % 2 == 0 ? MotionKind::cv : MotionKind::ctrv;
    const MotionModel m{kind, 1.0, rng.uniform(0.0, 2.0), rng.uniform(0.1, 10.0)};
    KalmanState s = initial_state(m, Vec2(rng.uniform(0, 1280), rng.uniform(0, 720)));
    if (kind == MotionKind::ctrv) {
      s.x(2) = rng.uniform(0.5, 5);
      s.x(4) = rng.uniform(-0.05, 0.05);
    }
    for (int i = 0; i < 1000; ++i) {
      s = ekf_predict(s);
      if (rng.uniform() < 0.8) {
        s = ekf_update(s, Vec2(s.x(0) + rng.normal(0, 3), s.x(1) + rng.normal(0, 3)));
      }
      ASSERT_LT((s.P - s.P.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(s.P);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(KalmanProperties, NoiseFreeConstantVelocityConverges) {
  const MotionModel m{MotionKind::cv, 1.0, 0.5, 1.0};
  const Vec2 start(100, 300), v(2.5, -0.75);
  KalmanState s = initial_state(m, start);
  for (int k = 1; k <= 50; ++k) {
    s = ekf_update(ekf_predict(s), Vec2(start + v * k));
  }
  EXPECT_LT((s.position() - (start + v * 50)).norm(), 1e-6);
}

}  // namespace
}  // namespace vtrack
