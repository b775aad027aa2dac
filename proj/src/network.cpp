#include "cbfswarm/network.hpp"

#include <algorithm>

namespace cbfswarm {

NetworkModel::NetworkModel(AgentId leader_, CommGraph graph_, std::vector<ConstraintSubgraph> subgraphs_,
                           std::vector<ObstacleSpec> obstacles_, OffAxisParams offaxis_,
                           PairSafetyParams pair_, NominalGains gains_, FormationSpec formation_)
    : leader(leader_),
      graph(std::move(graph_)),
      subgraphs(std::move(subgraphs_)),
      index(graph, subgraphs),
      obstacles(std::move(obstacles_)),
      offaxis(offaxis_),
      pair(pair_),
      gains(gains_),
      formation(std::move(formation_)) {}

Vec2 nominal_goal(const NetworkModel& model, AgentId i, std::span<const AgentState> states,
                  const Vec2& leader_goal) {
  if (i == model.leader) return leader_goal;
  const FollowerSpec& spec = model.formation.followers.at(i);
  std::vector<Vec2> pts;
  pts.reserve(spec.parents.size());
  for (AgentId j : spec.parents) pts.push_back(off_axis_point(states[j], model.offaxis));
  return formation_goal(pts, states[model.leader].theta, spec);
}

AgentProblem local_problem(const NetworkModel& model, AgentId i, std::span<const AgentState> states,
                           const Vec2& leader_goal) {
  AgentProblem out;
  const Mat2 g = model.weight(states[i]);
  out.H = g.transpose() * g;
  const Vec2 goal = nominal_goal(model, i, states, leader_goal);
  out.u_nom = nominal_control(states[i], goal, model.gains_for(i), model.offaxis).vec();

  const auto& slots = model.index.agent_slots(i);
  out.rows.reserve(slots.size());
  for (std::size_t flat : slots) {
    const auto& sg = model.subgraphs[model.index.slot(flat).constraint];
    if (sg.kind == SubgraphKind::obstacle) {
      ObstacleSpec obs = model.obstacles.at(sg.obstacle);
      if (model.gate.enabled()) {
        const Vec2 p = off_axis_point(states[i], model.offaxis);
        if (barrier_eval(obs, p).h - obs.eta > model.gate.radius) obs.alpha *= model.gate.far_alpha_scale;
      }
      out.rows.push_back(obstacle_constraint_row(obs, states[i], model.offaxis, sg.obstacle));
    } else if (sg.kind == SubgraphKind::pair) {
      const AgentId j = sg.members[0] == i ? sg.members[1] : sg.members[0];
      PairSafetyParams pp = model.pair;
      if (model.gate.enabled()) {
        const double d = pair_distance_margin(off_axis_point(states[i], model.offaxis),
                                              off_axis_point(states[j], model.offaxis), pp.d_min);
        if (d > model.gate.radius) pp.alpha_c *= model.gate.far_alpha_scale;
      }
      out.rows.push_back(interagent_constraint_rows(states[i], states[j], pp, model.offaxis).first);
    } else {
      throw GraphError("group constraints have no CBF row generator");
    }
  }
  return out;
}

const ConstraintRow& NetworkProblem::row(const MismatchIndex& index, std::size_t flat) const {
  const auto& slot = index.slot(flat);
  const auto& own = index.agent_slots(slot.agent);
  const auto pos = static_cast<std::size_t>(std::find(own.begin(), own.end(), flat) - own.begin());
  return agents[slot.agent].rows[pos];
}

NetworkProblem build_network_problem(const NetworkModel& model, std::span<const AgentState> states,
                                     const Vec2& leader_goal) {
  NetworkProblem out;
  out.agents.reserve(states.size());
  for (AgentId i = 0; i < states.size(); ++i) out.agents.push_back(local_problem(model, i, states, leader_goal));
  return out;
}

double constraint_margin(const NetworkModel& model, std::size_t k, std::span<const AgentState> states) {
  const auto& sg = model.subgraphs.at(k);
  if (sg.kind == SubgraphKind::obstacle) {
    const auto& obs = model.obstacles.at(sg.obstacle);
    return barrier_eval(obs, off_axis_point(states[sg.members[0]], model.offaxis)).h - obs.eta;
  }
  return pair_distance_margin(off_axis_point(states[sg.members[0]], model.offaxis),
                              off_axis_point(states[sg.members[1]], model.offaxis), model.pair.d_min);
}

}  // namespace cbfswarm
