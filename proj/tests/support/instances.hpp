#ifndef CBFSWARM_TESTS_INSTANCES_HPP
#define CBFSWARM_TESTS_INSTANCES_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cbfswarm/qpsolve.hpp"

namespace cbfswarm::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct BruteForceResult {
  bool feasible = false;
  Eigen::VectorXd x;
  Eigen::VectorXd mu;
};

/// Enumerates every linearly independent active set of
/// min 1/2 x'Gx + c'x s.t. Ax + b <= 0 and returns the KKT point.
inline BruteForceResult brute_force_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                                       const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                       double tol = 1e-9) {
  const auto n = G.rows();
  const auto m = A.rows();
  BruteForceResult best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (mask >> r & 1) rows.push_back(r);
    }
    const auto k = static_cast<Eigen::Index>(rows.size());
    if (k > n) continue;
    Eigen::MatrixXd As(k, n);
    Eigen::VectorXd bs(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      As.row(r) = A.row(rows[r]);
      bs(r) = b(rows[r]);
    }
    if (k > 0 && Eigen::FullPivLU<Eigen::MatrixXd>(As).rank() < k) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = G;
    K.topRightCorner(n, k) = As.transpose();
    K.bottomLeftCorner(k, n) = As;
    Eigen::VectorXd rhs(n + k);
    rhs << -c, -bs;
    const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < k; ++r) mu(rows[r]) = sol(n + r);
    if (m > 0 && ((A * x + b).maxCoeff() > tol || mu.minCoeff() < -tol)) continue;
    best.feasible = true;
    best.x = x;
    best.mu = mu;
    return best;
  }
  return best;
}

inline BruteForceResult brute_force_qp(const LocalQP& qp, double tol = 1e-9) {
  const auto m = static_cast<Eigen::Index>(qp.rows.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    A.row(r) = qp.rows[r].a.transpose();
    b(r) = qp.rows[r].b;
  }
  return brute_force_qp(qp.H, -(qp.H * qp.target), A, b, tol);
}

/// A 2-variable QP with 0..6 rows and a random SPD weight. With
/// `force_infeasible` two opposing rows leave an empty strip.
inline LocalQP random_local_qp(Rng& rng, bool force_infeasible = false) {
  LocalQP qp;
  Mat2 g;
  g << uniform(rng, 0.5, 5.0), uniform(rng, -1.0, 1.0), 0.0, uniform(rng, 0.5, 3.0);
  qp.H = g.transpose() * g;
  qp.target = Vec2(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
  const int rows = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int r = 0; r < rows; ++r) {
    ConstraintRow row;
    row.a = Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0));
    row.b = uniform(rng, -2.0, 1.0);
    qp.rows.push_back(row);
  }
  if (force_infeasible) {
    ConstraintRow row;
    row.a = Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)).normalized();
    row.b = uniform(rng, 0.1, 1.0);
    qp.rows.push_back(row);
    row.a = -row.a;
    row.b = uniform(rng, 0.1, 1.0);
    qp.rows.push_back(row);
  }
  qp.mismatch.assign(qp.rows.size(), 0.0);
  return qp;
}

struct NetworkInstance {
  NetworkModel model;
  std::vector<AgentState> states;
  Vec2 goal = Vec2::Zero();
};

/// n agents on a complete graph with every pair constrained and every
/// obstacle assigned to every agent. All margins start strictly positive and
/// the nominal inputs push the team together, so rows tend to be active.
inline NetworkInstance random_network(Rng& rng, std::size_t n, std::size_t obstacles) {
  const OffAxisParams offaxis{0.2};
  const PairSafetyParams pair{1.0, 2.0};
  NetworkInstance inst;
  for (;;) {
    inst.states.clear();
    std::vector<Vec2> pts;
    while (inst.states.size() < n) {
      AgentState s{Vec2(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)), uniform(rng, 0.0, 6.28),
                   inst.states.size()};
      const Vec2 p = off_axis_point(s, offaxis);
      bool ok = true;
      for (const auto& q : pts) ok = ok && pair_distance_margin(p, q, pair.d_min) > 0.05;
      if (!ok) continue;
      inst.states.push_back(s);
      pts.push_back(p);
    }
    std::vector<ObstacleSpec> obs;
    int tries = 0;
    while (obs.size() < obstacles && tries++ < 1000) {
      ObstacleSpec o;
      o.kind = ObstacleKind::circle;
      o.center = Vec2(uniform(rng, -3.5, 3.5), uniform(rng, -3.5, 3.5));
      o.radii = Vec2::Constant(uniform(rng, 0.3, 0.8));
      o.eta = 1.5;
      o.alpha = 2.0;
      bool ok = true;
      for (const auto& p : pts) ok = ok && barrier_eval(o, p).h - o.eta > 0.05;
      if (ok) obs.push_back(o);
    }
    if (obs.size() < obstacles) continue;

    std::vector<Edge> edges;
    for (AgentId i = 0; i < n; ++i) {
      for (AgentId j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    }
    CommGraph graph(n, edges);
    std::vector<std::size_t> all(obstacles);
    for (std::size_t o = 0; o < obstacles; ++o) all[o] = o;
    auto subgraphs = build_subgraphs(graph, edges, std::vector<std::vector<std::size_t>>(n, all));

    FormationSpec formation;
    for (AgentId i = 1; i < n; ++i) {
      FollowerSpec f;
      f.parents = {0};
      f.offset = 0.3 * (pts[0] - pts[i]) + Vec2(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
      formation.followers[i] = f;
    }
    NominalGains gains;
    gains.law = NominalLaw::heading_relative;
    inst.model = NetworkModel(0, std::move(graph), std::move(subgraphs), obs, offaxis, pair, gains, formation);
    inst.goal = pts[std::min<std::size_t>(1, n - 1)] + Vec2(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    return inst;
  }
}

/// Random connected graph of 2..11 agents with a random subset of edges as
/// pair constraints and up to three obstacles per agent.
inline MismatchIndex random_mismatch_index(Rng& rng) {
  const std::size_t n = 2 + rng() % 10;
  std::vector<Edge> edges;
  for (AgentId i = 1; i < n; ++i) edges.emplace_back(rng() % i, i);
  for (int e = 0; e < 8; ++e) {
    const AgentId a = rng() % n, b = rng() % n;
    if (a != b) edges.push_back(canonical_edge(a, b));
  }
  const CommGraph graph(n, edges);
  std::vector<Edge> pairs;
  for (const auto& e : graph.edges()) {
    if (rng() % 3) pairs.push_back(e);
  }
  std::vector<std::vector<std::size_t>> obs(n);
  for (auto& o : obs) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (rng() % 2) o.push_back(k);
    }
  }
  return MismatchIndex(graph, build_subgraphs(graph, pairs, obs));
}

}  // namespace cbfswarm::testing

#endif  // CBFSWARM_TESTS_INSTANCES_HPP
