#ifndef CBFSWARM_BARRIERS_HPP
#define CBFSWARM_BARRIERS_HPP

#include <optional>
#include <utility>

#include "cbfswarm/dynamics.hpp"

namespace cbfswarm {

enum class ObstacleKind { circle, ellipse };

/// Convex obstacle {h < 0}. For circles only radii(0) is used; ellipses are
/// axis aligned with semi-axes (a, b).
template <typename Scalar>
struct ObstacleSpecT {
  ObstacleKind kind = ObstacleKind::circle;
  Vector2<Scalar> center = Vector2<Scalar>::Zero();
  Vector2<Scalar> radii = Vector2<Scalar>::Ones();
  Scalar eta = Scalar(1.5);
  Scalar alpha = Scalar(2);

  bool valid() const {
    const bool radii_ok = kind == ObstacleKind::circle ? radii(0) > 0 : (radii.array() > 0).all();
    return radii_ok && eta > 0 && alpha > 0;
  }
  bool operator==(const ObstacleSpecT&) const = default;
};

enum class RowKind { obstacle, pair };

/// Identifies which CBF a row came from: obstacle(agent, index) or pair(agent, other).
struct RowTag {
  RowKind kind = RowKind::obstacle;
  AgentId agent = 0;
  std::size_t other = 0;
  bool operator==(const RowTag&) const = default;
};

/// g(u) = a.u + b <= 0 on the input of `tag.agent`.
template <typename Scalar>
struct ConstraintRowT {
  Vector2<Scalar> a = Vector2<Scalar>::Zero();
  Scalar b = Scalar(0);
  RowTag tag;

  Scalar eval(const Vector2<Scalar>& u) const { return a.dot(u) + b; }
};

template <typename Scalar>
struct PairSafetyParamsT {
  Scalar d_min = Scalar(1);
  Scalar alpha_c = Scalar(2);
};

using ObstacleSpec = ObstacleSpecT<double>;
using ConstraintRow = ConstraintRowT<double>;
using PairSafetyParams = PairSafetyParamsT<double>;

template <typename Scalar>
struct BarrierValue {
  Scalar h;
  Vector2<Scalar> grad;
};

template <typename Scalar>
BarrierValue<Scalar> barrier_eval(const ObstacleSpecT<Scalar>& obs, const Vector2<Scalar>& p) {
  const Vector2<Scalar> d = p - obs.center;
  if (obs.kind == ObstacleKind::circle) {
    const Scalar r = obs.radii(0);
    return {d.squaredNorm() - r * r, Scalar(2) * d};
  }
  const Vector2<Scalar> inv2 = obs.radii.array().square().inverse();
  return {d.cwiseProduct(d).dot(inv2) - Scalar(1), Scalar(2) * d.cwiseProduct(inv2)};
}

/// Smallest margin on h that keeps a disc of radius r centred l behind p clear
/// of a circular obstacle. Ellipses have no closed form.
template <typename Scalar>
std::optional<Scalar> eta_margin(Scalar r_i, Scalar l, const ObstacleSpecT<Scalar>& obs) {
  if (obs.kind != ObstacleKind::circle) return std::nullopt;
  const Scalar rl = r_i + l;
  return rl * rl + Scalar(2) * obs.radii(0) * rl;
}

/// grad h(p)^T M u >= -alpha (h - eta), written in g-form.
template <typename Scalar>
ConstraintRowT<Scalar> obstacle_constraint_row(const ObstacleSpecT<Scalar>& obs,
                                               const AgentStateT<Scalar>& state,
                                               const OffAxisParamsT<Scalar>& params,
                                               std::size_t obstacle_index = 0) {
  const auto pt = off_axis_transform(state, params);
  const auto bv = barrier_eval(obs, pt.p);
  ConstraintRowT<Scalar> row;
  row.a = -(pt.M.transpose() * bv.grad);
  row.b = -obs.alpha * (bv.h - obs.eta);
  row.tag = {RowKind::obstacle, state.id, obstacle_index};
  return row;
}

template <typename Scalar>
Scalar pair_distance_margin(const Vector2<Scalar>& p_i, const Vector2<Scalar>& p_j, Scalar d_min) {
  return (p_i - p_j).squaredNorm() - d_min * d_min;
}

/// Local halves of the inter-agent CBF. Each row carries the full
/// -alpha_c d offset; the enforced pair condition is row_i + row_j <= 0.
template <typename Scalar>
std::pair<ConstraintRowT<Scalar>, ConstraintRowT<Scalar>> interagent_constraint_rows(
    const AgentStateT<Scalar>& state_i, const AgentStateT<Scalar>& state_j,
    const PairSafetyParamsT<Scalar>& params, const OffAxisParamsT<Scalar>& offaxis) {
  const auto pi = off_axis_transform(state_i, offaxis);
  const auto pj = off_axis_transform(state_j, offaxis);
  const Vector2<Scalar> diff = pi.p - pj.p;
  const Scalar d = pair_distance_margin(pi.p, pj.p, params.d_min);

  ConstraintRowT<Scalar> row_i, row_j;
  row_i.a = Scalar(-2) * (pi.M.transpose() * diff);
  row_i.b = -params.alpha_c * d;
  row_i.tag = {RowKind::pair, state_i.id, state_j.id};
  row_j.a = Scalar(2) * (pj.M.transpose() * diff);
  row_j.b = -params.alpha_c * d;
  row_j.tag = {RowKind::pair, state_j.id, state_i.id};
  return {row_i, row_j};
}

}  // namespace cbfswarm

#endif  // CBFSWARM_BARRIERS_HPP
