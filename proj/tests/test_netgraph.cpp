#include <doctest.h>

#include <random>

#include "cbfswarm/netgraph.hpp"

using namespace cbfswarm;

namespace {

struct Chain {
  CommGraph graph;
  std::vector<ConstraintSubgraph> subgraphs;
  MismatchIndex index;
};

Chain chain() {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  Chain c;
  c.graph = CommGraph(3, edges);
  c.subgraphs = build_subgraphs(c.graph, edges, {{0}, {0}, {0}});
  c.index = MismatchIndex(c.graph, c.subgraphs);
  return c;
}

// Random connected graph, random pairs among its edges, random obstacle sets.
Chain random_instance(std::mt19937_64& rng) {
  const std::size_t n = 2 + rng() % 10;
  std::vector<Edge> edges;
  for (AgentId i = 1; i < n; ++i) edges.emplace_back(rng() % i, i);
  for (int e = 0; e < 8; ++e) {
    const AgentId a = rng() % n, b = rng() % n;
    if (a != b) edges.push_back(canonical_edge(a, b));
  }
  Chain c;
  c.graph = CommGraph(n, edges);
  std::vector<Edge> pairs;
  for (const auto& e : c.graph.edges()) {
    if (rng() % 3) pairs.push_back(e);
  }
  std::vector<std::vector<std::size_t>> obs(n);
  for (auto& o : obs) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (rng() % 2) o.push_back(k);
    }
  }
  c.subgraphs = build_subgraphs(c.graph, pairs, obs);
  c.index = MismatchIndex(c.graph, c.subgraphs);
  return c;
}

}  // namespace

TEST_CASE("chain example counts") {
  const Chain c = chain();
  CHECK(c.subgraphs.size() == 5);
  CHECK(c.index.agent_slots(0).size() == 2);
  CHECK(c.index.agent_slots(1).size() == 3);
  CHECK(c.index.agent_slots(2).size() == 2);
  CHECK(c.index.q() == 7);
  CHECK(c.subgraphs[0].kind == SubgraphKind::pair);
  CHECK(c.subgraphs[0].members == std::vector<AgentId>{0, 1});
  CHECK(c.subgraphs[2].kind == SubgraphKind::obstacle);
}

TEST_CASE("pair coupling and canonical pairs") {
  const Chain c = chain();
  const std::size_t s0 = c.index.flat(0, 0);
  const std::size_t s1 = c.index.flat(1, 0);
  CHECK(c.index.slot(s0).coupled == std::vector<std::size_t>{s1});
  CHECK(c.index.slot(s1).coupled == std::vector<std::size_t>{s0});
  CHECK(c.index.slot(c.index.flat(2, 4)).coupled.empty());

  const std::vector<Edge> both{{0, 1}, {1, 0}};
  const std::vector<Edge> e01{{0, 1}};
  const auto sg = build_subgraphs(CommGraph(2, e01), both, {{}, {}});
  CHECK(sg.size() == 1);

  const std::vector<Edge> bad{{0, 2}};
  CHECK_THROWS_AS(build_subgraphs(chain().graph, bad, {{}, {}, {}}), GraphError);
  CHECK_THROWS_AS(c.index.flat(2, 0), std::out_of_range);
}

TEST_CASE("empty index") {
  const std::vector<Edge> e{{0, 1}};
  const CommGraph g(2, e);
  const MismatchIndex idx(g, build_subgraphs(g, {}, {{}, {}}));
  CHECK(idx.q() == 0);
  CHECK(idx.agent_slots(0).empty());
  CHECK_THROWS_AS(idx.mismatch(0, Eigen::VectorXd()), std::out_of_range);
}

TEST_CASE("mismatch offsets") {
  const Chain c = chain();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(7);
  z(c.index.flat(0, 0)) = 1.0;
  CHECK(c.index.mismatch(c.index.flat(0, 0), z) == 1.0);
  CHECK(c.index.mismatch(c.index.flat(1, 0), z) == -1.0);
  CHECK(c.index.mismatch(c.index.flat(1, 1), z) == 0.0);
}

TEST_CASE("mismatch telescopes over every constraint") {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> N(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Chain c = random_instance(rng);
    Eigen::VectorXd z(static_cast<Eigen::Index>(c.index.q()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = N(rng);
    for (std::size_t k = 0; k < c.index.num_constraints(); ++k) {
      double sum = 0.0;
      for (std::size_t f : c.index.constraint_slots(k)) sum += c.index.mismatch(f, z);
      CHECK(std::abs(sum) <= 1e-12);
    }
  }
}

TEST_CASE("slot layout is a bijection") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Chain c = random_instance(rng);
    std::size_t expected = 0;
    for (AgentId i = 0; i < c.graph.size(); ++i) {
      std::size_t prev_k = 0;
      bool first = true;
      for (std::size_t f : c.index.agent_slots(i)) {
        CHECK(f == expected++);
        const auto& s = c.index.slot(f);
        CHECK(s.agent == i);
        CHECK(c.index.flat(s.agent, s.constraint) == f);
        if (!first) CHECK(s.constraint > prev_k);
        prev_k = s.constraint;
        first = false;
      }
    }
    CHECK(expected == c.index.q());
  }
}

TEST_CASE("layout is deterministic") {
  std::mt19937_64 a(55), b(55);
  for (int trial = 0; trial < 20; ++trial) {
    const Chain x = random_instance(a);
    const Chain y = random_instance(b);
    CHECK(x.subgraphs == y.subgraphs);
    CHECK(x.index == y.index);
  }
}

TEST_CASE("two-nearest graph is symmetric and breaks ties by index") {
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(5, 5)};
  const CommGraph g = CommGraph::k_nearest(pts, 2);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK(g.has_edge(0, 3));  // added by 3, not by 0
  CHECK(g.has_edge(1, 4));
  CHECK(g.has_edge(4, 3));
  for (const auto& [i, j] : g.edges()) CHECK(i < j);
  CHECK(g.connected());
  for (AgentId i = 0; i < g.size(); ++i) {
    for (AgentId j : g.neighbors(i)) CHECK(g.has_edge(j, i));
  }
}

TEST_CASE("graph rejects self loops") {
  const std::vector<Edge> loop{{1, 1}};
  CHECK_THROWS_AS(CommGraph(2, loop), GraphError);
  const std::vector<Edge> out{{0, 3}};
  CHECK_THROWS_AS(CommGraph(2, out), GraphError);
}
