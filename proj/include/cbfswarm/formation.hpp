#ifndef CBFSWARM_FORMATION_HPP
#define CBFSWARM_FORMATION_HPP

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbfswarm/dynamics.hpp"
#include "cbfswarm/netgraph.hpp"

namespace cbfswarm {

/// Angular-velocity law.
///  - printed: k_a * beta + k_r/2 sin(2 beta) (beta + h theta) / beta, beta the
///    absolute bearing to the goal.
///  - heading_relative: k_a * alpha + k_r/2 sin(2 alpha), alpha = wrap(beta - theta).
enum class NominalLaw { printed, heading_relative };

template <typename Scalar>
struct NominalGainsT {
  Scalar k_r = Scalar(0.5);
  Scalar k_a = Scalar(1);
  Scalar h_gain = Scalar(1);
  Scalar goal_tol = Scalar(0.3);
  NominalLaw law = NominalLaw::printed;

  bool valid() const { return k_r > 0 && k_a > 0 && h_gain > 0 && goal_tol > 0; }
};
using NominalGains = NominalGainsT<double>;

/// Polar-coordinate unicycle stabilizer steering the off-axis point to `goal`.
/// Inside goal_tol the input is exactly zero.
template <typename Scalar>
ControlInputT<Scalar> nominal_control(const AgentStateT<Scalar>& state,
                                      const Vector2<Scalar>& goal,
                                      const NominalGainsT<Scalar>& gains,
                                      const OffAxisParamsT<Scalar>& offaxis) {
  const Vector2<Scalar> p = off_axis_point(state, offaxis);
  const Vector2<Scalar> d = goal - p;
  const Scalar e = d.norm();
  if (e < gains.goal_tol) return {};

  const Scalar beta = std::atan2(d(1), d(0));
  const Scalar theta = wrap_angle(state.theta);
  const Scalar v = gains.k_r * e * std::cos(wrap_angle(beta - theta));

  if (gains.law == NominalLaw::heading_relative) {
    const Scalar alpha = wrap_angle(beta - theta);
    return {v, gains.k_a * alpha + gains.k_r / Scalar(2) * std::sin(Scalar(2) * alpha)};
  }
  Scalar shaping;
  if (std::abs(beta) < Scalar(1e-9)) {
    // sin(2 beta) / beta -> 2
    shaping = gains.k_r * (beta + gains.h_gain * theta);
  } else {
    shaping = gains.k_r / Scalar(2) * std::sin(Scalar(2) * beta) * (beta + gains.h_gain * theta) / beta;
  }
  return {v, gains.k_a * beta + shaping};
}

struct WaypointPlan {
  std::vector<Vec2> waypoints;
  std::size_t current_index = 0;

  const Vec2& current() const { return waypoints.at(current_index); }
  bool at_last() const { return current_index + 1 >= waypoints.size(); }
};

/// Moves to the next waypoint once the leader is strictly within `tol`;
/// holds at the last one.
WaypointPlan advance_waypoint(WaypointPlan plan, const Vec2& p_leader, double tol);

/// BFS depth from the leader. Throws GraphError if the graph is disconnected.
std::map<AgentId, std::size_t> k_neighborhoods(const CommGraph& graph, AgentId leader);

enum class FormationFrame { world, leader_heading };

struct FollowerSpec {
  std::vector<AgentId> parents;
  Vec2 offset = Vec2::Zero();
  FormationFrame frame = FormationFrame::world;
};

/// Follower targets keyed by agent. The leader has no entry.
struct FormationSpec {
  std::map<AgentId, FollowerSpec> followers;

  /// Every follower needs at least one parent; parents must be neighbors and
  /// strictly closer to the leader. Throws std::invalid_argument.
  void validate(const CommGraph& graph, AgentId leader) const;
};

/// Mean of the parents' off-axis points plus the (possibly rotated) offset.
Vec2 formation_goal(std::span<const Vec2> parent_points, double leader_heading,
                    const FollowerSpec& spec);

Vec2 formation_goal(AgentId i, std::span<const AgentState> parent_states, double leader_heading,
                    const FormationSpec& spec, const OffAxisParams& offaxis);

}  // namespace cbfswarm

#endif  // CBFSWARM_FORMATION_HPP
