#ifndef CBFSWARM_DYNAMICS_HPP
#define CBFSWARM_DYNAMICS_HPP

#include <cmath>
#include <cstddef>
#include <numbers>

#include <Eigen/Core>

namespace cbfswarm {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;
using AgentId = std::size_t;

/// Reduce an angle into [0, 2*pi).
template <typename Scalar>
Scalar normalize_heading(Scalar theta) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar r = std::fmod(theta, two_pi);
  if (r < Scalar(0)) r += two_pi;
  // fmod of a tiny negative value can round up to exactly 2*pi
  if (r >= two_pi) r = Scalar(0);
  return r;
}

/// Reduce an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar r = normalize_heading(a);
  if (r > pi) r -= Scalar(2) * pi;
  return r;
}

template <typename Scalar>
Matrix2<Scalar> rotation(Scalar theta) {
  const Scalar c = std::cos(theta), s = std::sin(theta);
  Matrix2<Scalar> r;
  r << c, -s, s, c;
  return r;
}

/// Planar unicycle pose. `s` is the wheel-axis midpoint, `theta` the heading.
template <typename Scalar>
struct AgentStateT {
  Vector2<Scalar> s = Vector2<Scalar>::Zero();
  Scalar theta = Scalar(0);
  AgentId id = 0;

  bool operator==(const AgentStateT&) const = default;
};

/// Linear and angular velocity (v, w).
template <typename Scalar>
struct ControlInputT {
  Scalar v = Scalar(0);
  Scalar w = Scalar(0);

  Vector2<Scalar> vec() const { return {v, w}; }
  static ControlInputT from(const Vector2<Scalar>& u) { return {u(0), u(1)}; }
  bool finite() const { return std::isfinite(v) && std::isfinite(w); }
  bool operator==(const ControlInputT&) const = default;
};

template <typename Scalar>
struct OffAxisParamsT {
  Scalar l = Scalar(0.2);
};

using AgentState = AgentStateT<double>;
using ControlInput = ControlInputT<double>;
using OffAxisParams = OffAxisParamsT<double>;

/// Off-axis point p and its input map M, so that dp/dt = M u.
template <typename Scalar>
struct OffAxisPoint {
  Vector2<Scalar> p;
  Matrix2<Scalar> M;
};

/// p = s + l R(theta) e1, M = R(theta) diag(1, l).
template <typename Scalar>
OffAxisPoint<Scalar> off_axis_transform(const AgentStateT<Scalar>& state,
                                        const OffAxisParamsT<Scalar>& params) {
  const Matrix2<Scalar> r = rotation(state.theta);
  OffAxisPoint<Scalar> out;
  out.p = state.s + params.l * r.col(0);
  out.M.col(0) = r.col(0);
  out.M.col(1) = params.l * r.col(1);
  return out;
}

template <typename Scalar>
Vector2<Scalar> off_axis_point(const AgentStateT<Scalar>& state,
                               const OffAxisParamsT<Scalar>& params) {
  return state.s + params.l * Vector2<Scalar>(std::cos(state.theta), std::sin(state.theta));
}

namespace detail {
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> unicycle_field(const Eigen::Matrix<Scalar, 3, 1>& x,
                                           const ControlInputT<Scalar>& u) {
  return {u.v * std::cos(x(2)), u.v * std::sin(x(2)), u.w};
}
}  // namespace detail

/// One classical RK4 step of the unicycle with u held constant.
template <typename Scalar>
AgentStateT<Scalar> unicycle_step(const AgentStateT<Scalar>& state, const ControlInputT<Scalar>& u,
                                  Scalar dt) {
  using V3 = Eigen::Matrix<Scalar, 3, 1>;
  const V3 x(state.s(0), state.s(1), state.theta);
  const V3 k1 = detail::unicycle_field(x, u);
  const V3 k2 = detail::unicycle_field<Scalar>(x + Scalar(0.5) * dt * k1, u);
  const V3 k3 = detail::unicycle_field<Scalar>(x + Scalar(0.5) * dt * k2, u);
  const V3 k4 = detail::unicycle_field<Scalar>(x + dt * k3, u);
  const V3 next = x + dt / Scalar(6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);

  AgentStateT<Scalar> out = state;
  out.s = next.template head<2>();
  out.theta = normalize_heading(next(2));
  return out;
}

}  // namespace cbfswarm

#endif  // CBFSWARM_DYNAMICS_HPP
