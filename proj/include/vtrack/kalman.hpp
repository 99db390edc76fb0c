#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "vtrack/config.hpp"
#include "vtrack/core.hpp"
#include "vtrack/error.hpp"

namespace vtrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Transition and observation model of the filter. Measurements are image
// positions (the anchor point); R = r_scale * I.
//
//   cv:   x = (px, py, vx, vy), linear advance by velocity * dt,
//         Q = q_scale * discretized white-noise acceleration.
//   ctrv: x = (px, py, speed, heading, yaw_rate), circular-arc advance,
//         Q from longitudinal and yaw accelerations (yaw variance scaled by
//         kYawNoiseRatio). Series expansions take over for the straight-line
//         limit when |yaw_rate| < kStraightYaw.
struct MotionModel {
  static constexpr double kStraightYaw = 1e-6;
  static constexpr double kYawNoiseRatio = 1e-4;
  static constexpr double kSeriesBound = 1e-3;

  MotionKind kind = MotionKind::cv;
  double dt = 1.0;
  double q_scale = 0.05;
  double r_scale = 4.0;

  static MotionModel from_config(const RunConfig& c) {
    return MotionModel{c.kalman_model, 1.0, c.q_scale, c.r_scale};
  }

  Eigen::Index state_dim() const { return kind == MotionKind::cv ? 4 : 5; }

  static double sinc(double u) {
    if (std::abs(u) < kStraightYaw) return 1.0 - u * u / 6.0;
    return std::sin(u) / u;
  }

  static double sinc_derivative(double u) {
    if (std::abs(u) < kSeriesBound) return -u / 3.0 + u * u * u / 30.0;
    return (u * std::cos(u) - std::sin(u)) / (u * u);
  }

  Vector transition(const Vector& x) const {
    Vector out = x;
    if (kind == MotionKind::cv) {
      out(0) += x(2) * dt;
      out(1) += x(3) * dt;
      return out;
    }
    // Arc chord: v dt sinc(w dt / 2) along the mean heading psi + w dt / 2.
    // Algebraically equal to v / w * (sin(psi + w dt) - sin(psi), ...) and
    // exact in the straight-line limit w -> 0.
    const double v = x(2), psi = x(3), w = x(4);
    const double half = 0.5 * w * dt;
    const double chord = v * dt * sinc(half);
    out(0) += chord * std::cos(psi + half);
    out(1) += chord * std::sin(psi + half);
    out(3) = psi + w * dt;
    return out;
  }

  // Jacobian of transition() at x.
  Matrix jacobian(const Vector& x) const {
    Matrix a = Matrix::Identity(state_dim(), state_dim());
    if (kind == MotionKind::cv) {
      a(0, 2) = dt;
      a(1, 3) = dt;
      return a;
    }
    const double v = x(2), psi = x(3), w = x(4);
    const double half = 0.5 * w * dt;
    const double s = sinc(half), ds = sinc_derivative(half);
    const double c_mid = std::cos(psi + half), s_mid = std::sin(psi + half);
    a(0, 2) = dt * c_mid * s;
    a(0, 3) = -v * dt * s_mid * s;
    a(0, 4) = v * dt * 0.5 * dt * (-s_mid * s + c_mid * ds);
    a(1, 2) = dt * s_mid * s;
    a(1, 3) = v * dt * c_mid * s;
    a(1, 4) = v * dt * 0.5 * dt * (c_mid * s + s_mid * ds);
    a(3, 4) = dt;
    return a;
  }

  Matrix process_noise(const Vector& x) const {
    const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
    if (kind == MotionKind::cv) {
      Matrix q = Matrix::Zero(4, 4);
      for (int axis = 0; axis < 2; ++axis) {
        q(axis, axis) = dt4 / 4.0;
        q(axis, axis + 2) = dt3 / 2.0;
        q(axis + 2, axis) = dt3 / 2.0;
        q(axis + 2, axis + 2) = dt2;
      }
      return q_scale * q;
    }
    Matrix g = Matrix::Zero(5, 2);
    g(0, 0) = dt2 / 2.0 * std::cos(x(3));
    g(1, 0) = dt2 / 2.0 * std::sin(x(3));
    g(2, 0) = dt;
    g(3, 1) = dt2 / 2.0;
    g(4, 1) = dt;
    Eigen::Matrix2d accel = Eigen::Matrix2d::Zero();
    accel(0, 0) = q_scale;
    accel(1, 1) = q_scale * kYawNoiseRatio;
    return g * accel * g.transpose();
  }

  Matrix observation_matrix() const {
    Matrix h = Matrix::Zero(2, state_dim());
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    return h;
  }

  Vector observe(const Vector& x) const { return x.head(2); }

  Matrix measurement_noise() const { return r_scale * Matrix::Identity(2, 2); }
};

struct KalmanState {
  Vector x;
  Matrix P;
  MotionModel model;

  Vec2 position() const { return Vec2(x(0), x(1)); }

  // Image-plane velocity in pixels per frame.
  Vec2 velocity() const {
    if (model.kind == MotionKind::cv) return Vec2(x(2), x(3));
    return Vec2(x(2) * std::cos(x(3)), x(2) * std::sin(x(3)));
  }
};

inline constexpr double kInitialVelocityVariance = 1e3;

// Starts at a measured position with unknown (zero) velocity.
inline KalmanState initial_state(const MotionModel& model, const Vec2& position) {
  KalmanState s{Vector::Zero(model.state_dim()),
                Matrix::Zero(model.state_dim(), model.state_dim()), model};
  s.x(0) = position.x();
  s.x(1) = position.y();
  s.P(0, 0) = model.r_scale;
  s.P(1, 1) = model.r_scale;
  if (model.kind == MotionKind::cv) {
    s.P(2, 2) = kInitialVelocityVariance;
    s.P(3, 3) = kInitialVelocityVariance;
  } else {
    s.P(2, 2) = kInitialVelocityVariance;
    s.P(3, 3) = M_PI * M_PI;
    s.P(4, 4) = 0.1;
  }
  return s;
}

namespace detail {

inline void require_finite(const KalmanState& s, const char* step) {
  if (!s.x.allFinite() || !s.P.allFinite()) {
    throw NumericalError(std::string("non-finite Kalman state after ") + step);
  }
}

}  // namespace detail

inline KalmanState ekf_predict(const KalmanState& s) {
  const Matrix a = s.model.jacobian(s.x);
  KalmanState out = s;
  out.x = s.model.transition(s.x);
  out.P = a * s.P * a.transpose() + s.model.process_noise(s.x);
  out.P = 0.5 * (out.P + out.P.transpose());
  detail::require_finite(out, "predict");
  return out;
}

// A step without measurement. Kept separate from ekf_predict so call sites
// read as what they mean.
inline KalmanState coast(const KalmanState& s) { return ekf_predict(s); }

inline KalmanState ekf_update(const KalmanState& s, const Vector& z) {
  const Matrix h = s.model.observation_matrix();
  if (z.size() != h.rows()) throw std::invalid_argument("measurement dimension mismatch");
  const Matrix ph = s.P * h.transpose();
  const Matrix innovation_cov = h * ph + s.model.measurement_noise();
  const Eigen::FullPivLU<Matrix> lu(innovation_cov);
  if (!lu.isInvertible()) {
    throw NumericalError("innovation covariance S = H P H^T + R is singular");
  }
  // S is symmetric, so K = P H^T S^-1 = (S^-1 H P)^T
  const Matrix gain = lu.solve(ph.transpose()).transpose();
  KalmanState out = s;
  out.x = s.x + gain * (z - s.model.observe(s.x));
  out.P = s.P - gain * h * s.P;
  out.P = 0.5 * (out.P + out.P.transpose());
  detail::require_finite(out, "update");
  return out;
}

inline KalmanState ekf_update(const KalmanState& s, const Vec2& z) {
  return ekf_update(s, Vector(z));
}

}  // namespace vtrack
