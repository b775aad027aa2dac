#ifndef CBFSWARM_NETGRAPH_HPP
#define CBFSWARM_NETGRAPH_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cbfswarm/dynamics.hpp"

namespace cbfswarm {

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Edge = std::pair<AgentId, AgentId>;

/// Undirected communication graph on agents 0..n-1. Edges are stored with i < j.
class CommGraph {
 public:
  CommGraph() = default;
  /// Throws GraphError on self-loops or out-of-range endpoints. Connectivity
  /// is checked separately by `connected()` so partial graphs can be built.
  CommGraph(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<AgentId>& neighbors(AgentId i) const { return adj_.at(i); }
  bool has_edge(AgentId i, AgentId j) const;
  bool connected() const;

  /// Each agent linked to its `k` nearest agents, then symmetrized.
  /// Ties resolve to the lower agent index.
  static CommGraph k_nearest(std::span<const Vec2> positions, std::size_t k = 2);

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<AgentId>> adj_;
};

Edge canonical_edge(AgentId i, AgentId j);

enum class SubgraphKind { pair, obstacle, group };

/// Agents whose inputs enter constraint k. `obstacle` is a singleton, `pair`
/// an edge, `group` any connected member set.
struct ConstraintSubgraph {
  std::size_t k = 0;
  std::vector<AgentId> members;
  SubgraphKind kind = SubgraphKind::pair;
  std::size_t obstacle = 0;  // obstacle index for kind == obstacle

  bool operator==(const ConstraintSubgraph&) const = default;
};

/// Pair subgraphs first (lexicographic), then (agent, obstacle) singletons.
/// Throws GraphError if a pair is not an edge of `graph`.
std::vector<ConstraintSubgraph> build_subgraphs(
    const CommGraph& graph, std::span<const Edge> pairs,
    const std::vector<std::vector<std::size_t>>& obstacle_assignments);

/// Flat layout of the mismatch variables z (and of lambda). Slots are ordered
/// agent-major, and within an agent by constraint id.
class MismatchIndex {
 public:
  struct Slot {
    AgentId agent;
    std::size_t constraint;
    /// Slots of the same constraint held by j in N_i cap V(G_k).
    std::vector<std::size_t> coupled;
    bool operator==(const Slot&) const = default;
  };

  MismatchIndex() = default;
  MismatchIndex(const CommGraph& graph, std::span<const ConstraintSubgraph> subgraphs);

  std::size_t q() const { return slots_.size(); }
  std::size_t num_agents() const { return per_agent_.size(); }
  std::size_t num_constraints() const { return per_constraint_.size(); }

  /// P_i as flat slot indices.
  const std::vector<std::size_t>& agent_slots(AgentId i) const { return per_agent_.at(i); }
  /// Slots of every member of constraint k.
  const std::vector<std::size_t>& constraint_slots(std::size_t k) const {
    return per_constraint_.at(k);
  }
  const Slot& slot(std::size_t flat) const { return slots_.at(flat); }
  const std::vector<Slot>& slots() const { return slots_; }
  /// Throws std::out_of_range if i is not a member of constraint k.
  std::size_t flat(AgentId i, std::size_t k) const;

  /// sum_{j in N_i cap V(G_k)} (z_i^k - z_j^k) for the given slot.
  double mismatch(std::size_t flat, const Eigen::Ref<const Eigen::VectorXd>& z) const;

  bool operator==(const MismatchIndex&) const = default;

 private:
  std::vector<Slot> slots_;
  std::vector<std::vector<std::size_t>> per_agent_;
  std::vector<std::vector<std::size_t>> per_constraint_;
};

/// Convenience matching the free-function spelling used elsewhere.
inline MismatchIndex mismatch_index(const CommGraph& graph,
                                    std::span<const ConstraintSubgraph> subgraphs) {
  return MismatchIndex(graph, subgraphs);
}

}  // namespace cbfswarm

#endif  // CBFSWARM_NETGRAPH_HPP
