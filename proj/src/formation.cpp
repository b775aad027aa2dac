#include "cbfswarm/formation.hpp"

#include <algorithm>
#include <queue>
#include <string>

namespace cbfswarm {

WaypointPlan advance_waypoint(WaypointPlan plan, const Vec2& p_leader, double tol) {
  if (plan.waypoints.empty() || plan.at_last()) return plan;
  if ((p_leader - plan.current()).norm() < tol) ++plan.current_index;
  return plan;
}

std::map<AgentId, std::size_t> k_neighborhoods(const CommGraph& graph, AgentId leader) {
  if (leader >= graph.size()) throw GraphError("leader id out of range");
  std::map<AgentId, std::size_t> depth{{leader, 0}};
  std::queue<AgentId> frontier;
  frontier.push(leader);
  while (!frontier.empty()) {
    const AgentId i = frontier.front();
    frontier.pop();
    for (AgentId j : graph.neighbors(i)) {
      if (depth.emplace(j, depth[i] + 1).second) frontier.push(j);
    }
  }
  if (depth.size() != graph.size()) {
    throw GraphError("communication graph is not connected; followers cannot reach the leader");
  }
  return depth;
}

void FormationSpec::validate(const CommGraph& graph, AgentId leader) const {
  const auto depth = k_neighborhoods(graph, leader);
  for (AgentId i = 0; i < graph.size(); ++i) {
    if (i == leader) continue;
    const auto it = followers.find(i);
    if (it == followers.end()) {
      throw std::invalid_argument("formation: follower " + std::to_string(i) + " has no spec");
    }
    if (it->second.parents.empty()) {
      throw std::invalid_argument("formation: follower " + std::to_string(i) +
                                  " has an empty parent set");
    }
    for (AgentId j : it->second.parents) {
      if (!graph.has_edge(i, j)) {
        throw std::invalid_argument("formation: parent " + std::to_string(j) +
                                    " is not a neighbor of " + std::to_string(i));
      }
      if (depth.at(j) >= depth.at(i)) {
        throw std::invalid_argument("formation: parent " + std::to_string(j) +
                                    " is not closer to the leader than " + std::to_string(i));
      }
    }
  }
  if (followers.count(leader)) throw std::invalid_argument("formation: leader cannot be a follower");
}

Vec2 formation_goal(std::span<const Vec2> parent_points, double leader_heading,
                    const FollowerSpec& spec) {
  if (parent_points.empty()) throw std::invalid_argument("formation_goal: no parents");
  Vec2 mean = Vec2::Zero();
  for (const auto& p : parent_points) mean += p;
  mean /= static_cast<double>(parent_points.size());
  if (spec.frame == FormationFrame::leader_heading) return mean + rotation(leader_heading) * spec.offset;
  return mean + spec.offset;
}

Vec2 formation_goal(AgentId i, std::span<const AgentState> parent_states, double leader_heading,
                    const FormationSpec& spec, const OffAxisParams& offaxis) {
  const FollowerSpec& f = spec.followers.at(i);
  if (parent_states.size() != f.parents.size()) {
    throw std::invalid_argument("formation_goal: parent states do not match the spec");
  }
  std::vector<Vec2> pts;
  pts.reserve(parent_states.size());
  for (const auto& st : parent_states) pts.push_back(off_axis_point(st, offaxis));
  return formation_goal(pts, leader_heading, f);
}

}  // namespace cbfswarm
