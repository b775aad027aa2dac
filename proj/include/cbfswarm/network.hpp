#ifndef CBFSWARM_NETWORK_HPP
#define CBFSWARM_NETWORK_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cbfswarm/barriers.hpp"
#include "cbfswarm/formation.hpp"
#include "cbfswarm/netgraph.hpp"

namespace cbfswarm {

/// Optional proximity gating: rows whose barrier value exceeds the activation
/// threshold get their slope multiplied by `far_alpha_scale`, which keeps
/// them valid CBF conditions but pushes them far from active.
struct ActivationGate {
  double radius = 0.0;  // 0 disables gating
  double far_alpha_scale = 100.0;
  bool enabled() const { return radius > 0.0; }
};

/// Everything about the team that does not change with the state.
struct NetworkModel {
  AgentId leader = 0;
  CommGraph graph;
  std::vector<ConstraintSubgraph> subgraphs;
  MismatchIndex index;
  std::vector<ObstacleSpec> obstacles;
  OffAxisParams offaxis;
  PairSafetyParams pair;
  NominalGains gains;
  std::optional<NominalGains> follower_gains;
  FormationSpec formation;
  ActivationGate gate;
  Mat2 gamma = (Mat2() << 5.0, 0.0, 0.0, 1.0).finished();
  /// Hook for a state-dependent weight Gamma_i(xi_i). Empty means `gamma`.
  std::function<Mat2(const AgentState&)> gamma_fn;

  std::size_t num_agents() const { return graph.size(); }
  const NominalGains& gains_for(AgentId i) const {
    return i != leader && follower_gains ? *follower_gains : gains;
  }
  Mat2 weight(const AgentState& s) const { return gamma_fn ? gamma_fn(s) : gamma; }

  NetworkModel() = default;
  NetworkModel(AgentId leader, CommGraph graph, std::vector<ConstraintSubgraph> subgraphs,
               std::vector<ObstacleSpec> obstacles, OffAxisParams offaxis, PairSafetyParams pair,
               NominalGains gains, FormationSpec formation);
};

/// Agent i's share of the network problem at the current state: its
/// objective (H, u_nom) and its raw rows g_i^k in `index.agent_slots(i)` order.
struct AgentProblem {
  Mat2 H = Mat2::Identity();
  Vec2 u_nom = Vec2::Zero();
  std::vector<ConstraintRow> rows;
};

/// Reads only states of i and its neighbors.
AgentProblem local_problem(const NetworkModel& model, AgentId i, std::span<const AgentState> states,
                           const Vec2& leader_goal);

Vec2 nominal_goal(const NetworkModel& model, AgentId i, std::span<const AgentState> states,
                  const Vec2& leader_goal);

struct NetworkProblem {
  std::vector<AgentProblem> agents;
  /// Raw row of every flat slot.
  const ConstraintRow& row(const MismatchIndex& index, std::size_t flat) const;
};

NetworkProblem build_network_problem(const NetworkModel& model, std::span<const AgentState> states,
                                     const Vec2& leader_goal);

/// Barrier margin of constraint k: h - eta for obstacles, d(p_i, p_j) for pairs.
double constraint_margin(const NetworkModel& model, std::size_t k, std::span<const AgentState> states);

}  // namespace cbfswarm

#endif  // CBFSWARM_NETWORK_HPP
