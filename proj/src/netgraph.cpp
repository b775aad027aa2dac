#include "cbfswarm/netgraph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <string>

namespace cbfswarm {

Edge canonical_edge(AgentId i, AgentId j) { return i < j ? Edge{i, j} : Edge{j, i}; }

CommGraph::CommGraph(std::size_t n, std::span<const Edge> edges) : n_(n), adj_(n) {
  for (const auto& [a, b] : edges) {
    if (a == b) throw GraphError("self-loop on agent " + std::to_string(a));
    if (a >= n || b >= n) throw GraphError("edge endpoint out of range");
    edges_.push_back(canonical_edge(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  for (const auto& [a, b] : edges_) {
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool CommGraph::has_edge(AgentId i, AgentId j) const {
  if (i >= n_ || j >= n_) return false;
  return std::binary_search(adj_[i].begin(), adj_[i].end(), j);
}

bool CommGraph::connected() const {
  if (n_ == 0) return true;
  std::vector<bool> seen(n_, false);
  std::queue<AgentId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const AgentId i = frontier.front();
    frontier.pop();
    for (AgentId j : adj_[i]) {
      if (!seen[j]) {
        seen[j] = true;
        ++count;
        frontier.push(j);
      }
    }
  }
  return count == n_;
}

CommGraph CommGraph::k_nearest(std::span<const Vec2> positions, std::size_t k) {
  const std::size_t n = positions.size();
  std::vector<Edge> edges;
  std::vector<AgentId> order(n);
  for (AgentId i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), AgentId{0});
    std::stable_sort(order.begin(), order.end(), [&](AgentId a, AgentId b) {
      return (positions[a] - positions[i]).squaredNorm() <
             (positions[b] - positions[i]).squaredNorm();
    });
    std::size_t taken = 0;
    for (AgentId j : order) {
      if (taken == k) break;
      if (j == i) continue;
      edges.push_back(canonical_edge(i, j));
      ++taken;
    }
  }
  return CommGraph(n, edges);
}

std::vector<ConstraintSubgraph> build_subgraphs(
    const CommGraph& graph, std::span<const Edge> pairs,
    const std::vector<std::vector<std::size_t>>& obstacle_assignments) {
  std::vector<Edge> canon;
  canon.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (!graph.has_edge(i, j)) {
      throw GraphError("pair constraint (" + std::to_string(i) + "," + std::to_string(j) +
                       ") is not a communication edge");
    }
    canon.push_back(canonical_edge(i, j));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  std::vector<ConstraintSubgraph> out;
  for (const auto& [i, j] : canon) {
    out.push_back({out.size(), {i, j}, SubgraphKind::pair, 0});
  }
  for (AgentId i = 0; i < obstacle_assignments.size(); ++i) {
    if (i >= graph.size()) throw GraphError("obstacle assignment for unknown agent");
    std::vector<std::size_t> obs = obstacle_assignments[i];
    std::sort(obs.begin(), obs.end());
    obs.erase(std::unique(obs.begin(), obs.end()), obs.end());
    for (std::size_t o : obs) out.push_back({out.size(), {i}, SubgraphKind::obstacle, o});
  }
  return out;
}

MismatchIndex::MismatchIndex(const CommGraph& graph,
                             std::span<const ConstraintSubgraph> subgraphs)
    : per_agent_(graph.size()), per_constraint_(subgraphs.size()) {
  // membership[i] = constraint ids containing i, ascending
  std::vector<std::vector<std::size_t>> membership(graph.size());
  for (std::size_t k = 0; k < subgraphs.size(); ++k) {
    if (subgraphs[k].k != k) throw GraphError("subgraph ids must be 0..p-1 in order");
    for (AgentId i : subgraphs[k].members) {
      if (i >= graph.size()) throw GraphError("subgraph member out of range");
      membership[i].push_back(k);
    }
  }
  std::map<std::pair<AgentId, std::size_t>, std::size_t> lookup;
  for (AgentId i = 0; i < graph.size(); ++i) {
    for (std::size_t k : membership[i]) {
      lookup[{i, k}] = slots_.size();
      per_agent_[i].push_back(slots_.size());
      slots_.push_back({i, k, {}});
    }
  }
  for (std::size_t f = 0; f < slots_.size(); ++f) {
    auto& s = slots_[f];
    for (AgentId j : subgraphs[s.constraint].members) {
      if (j != s.agent && graph.has_edge(s.agent, j)) s.coupled.push_back(lookup.at({j, s.constraint}));
    }
  }
  for (std::size_t k = 0; k < subgraphs.size(); ++k) {
    std::vector<AgentId> members = subgraphs[k].members;
    std::sort(members.begin(), members.end());
    for (AgentId i : members) per_constraint_[k].push_back(lookup.at({i, k}));
  }
}

std::size_t MismatchIndex::flat(AgentId i, std::size_t k) const {
  for (std::size_t f : per_agent_.at(i)) {
    if (slots_[f].constraint == k) return f;
  }
  throw std::out_of_range("agent is not a member of the constraint");
}

double MismatchIndex::mismatch(std::size_t flat,
                               const Eigen::Ref<const Eigen::VectorXd>& z) const {
  double acc = 0.0;
  for (std::size_t other : slots_.at(flat).coupled) acc += z(flat) - z(other);
  return acc;
}

}  // namespace cbfswarm
