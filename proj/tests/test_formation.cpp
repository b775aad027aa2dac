#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cbfswarm/formation.hpp"

using namespace cbfswarm;
using std::numbers::pi;

namespace {

// State whose off-axis point (l = 0.2) sits at p.
AgentState at_point(Vec2 p, double theta) {
  return {p - 0.2 * Vec2(std::cos(theta), std::sin(theta)), theta};
}

NominalGains unit_gains(NominalLaw law = NominalLaw::printed) {
  NominalGains g;
  g.k_r = 1.0;
  g.k_a = 1.0;
  g.h_gain = 1.0;
  g.law = law;
  return g;
}

}  // namespace

TEST_CASE("nominal control examples") {
  const OffAxisParams off{0.2};
  for (auto law : {NominalLaw::printed, NominalLaw::heading_relative}) {
    const auto at_goal = nominal_control(at_point({1.0, 1.0}, 0.3), Vec2(1.0, 1.0), unit_gains(law), off);
    CHECK(at_goal.v == 0.0);
    CHECK(at_goal.w == 0.0);

    const auto ahead = nominal_control(at_point({0.0, 0.0}, 0.0), Vec2(1.0, 0.0), unit_gains(law), off);
    CHECK(ahead.v == doctest::Approx(1.0));
    CHECK(std::abs(ahead.w) < 1e-15);

    const auto left = nominal_control(at_point({0.0, 0.0}, 0.0), Vec2(0.0, 1.0), unit_gains(law), off);
    CHECK(std::abs(left.v) < 1e-15);
    CHECK(left.w == doctest::Approx(pi / 2));
  }
}

TEST_CASE("printed law uses the absolute bearing") {
  const OffAxisParams off{0.2};
  const double th = pi / 4;
  const auto u = nominal_control(at_point({0.0, 0.0}, th), Vec2(0.0, 2.0), unit_gains(), off);
  const double beta = pi / 2;
  CHECK(u.v == doctest::Approx(2.0 * std::cos(beta - th)));
  CHECK(u.w == doctest::Approx(beta + 0.5 * std::sin(2 * beta) * (beta + th) / beta));
}

TEST_CASE("heading-relative law wraps the bearing error") {
  const OffAxisParams off{0.2};
  const double th = 3 * pi / 2 + 0.1;  // nearly facing -y; goal straight up
  const auto u = nominal_control(at_point({0.0, 0.0}, th), Vec2(0.0, 2.0),
                                 unit_gains(NominalLaw::heading_relative), off);
  const double alpha = wrap_angle(pi / 2 - th);
  CHECK(std::abs(alpha) <= pi);
  CHECK(u.w == doctest::Approx(alpha + 0.5 * std::sin(2 * alpha)));
  CHECK(u.v < 0.0);
}

TEST_CASE("nominal control is bounded and continuous away from the goal") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  const OffAxisParams off{0.2};
  for (auto law : {NominalLaw::printed, NominalLaw::heading_relative}) {
    NominalGains g;
    g.law = law;
    for (int k = 0; k < 300; ++k) {
      const AgentState s{{U(rng), U(rng)}, std::abs(U(rng)) * 1.2};
      const Vec2 goal(U(rng), U(rng));
      if ((off_axis_point(s, off) - goal).norm() < g.goal_tol + 0.05) continue;
      const Vec2 u = nominal_control(s, goal, g, off).vec();
      CHECK(u.allFinite());
      CHECK(u.norm() < 50.0);
      AgentState s2 = s;
      s2.s += Vec2(1e-7, -1e-7);
      const Vec2 d = goal - off_axis_point(s, off);
      const double beta = std::atan2(d(1), d(0));
      if (std::abs(beta) > 3.1 || std::abs(wrap_angle(beta - s.theta)) > 3.1) continue;
      CHECK((nominal_control(s2, goal, g, off).vec() - u).norm() < 1e-4);
    }
  }
}

TEST_CASE("waypoint advance") {
  WaypointPlan plan{{Vec2(0, 0), Vec2(5, 0)}, 0};
  CHECK(advance_waypoint(plan, Vec2(0.2, 0.0), 0.3).current_index == 1);
  CHECK(advance_waypoint(plan, Vec2(0.31, 0.0), 0.3).current_index == 0);
  plan.current_index = 1;
  CHECK(advance_waypoint(plan, Vec2(5.0, 0.0), 0.3).current_index == 1);
}

TEST_CASE("k-neighborhoods") {
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const auto d = k_neighborhoods(CommGraph(3, path), 0);
  CHECK(d == std::map<AgentId, std::size_t>{{0, 0}, {1, 1}, {2, 2}});

  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  for (const auto& [i, k] : k_neighborhoods(CommGraph(4, star), 0)) CHECK(k == (i == 0 ? 0u : 1u));

  const std::vector<Edge> x{{0, 1}, {1, 2}, {0, 3}, {3, 4}};
  CHECK(k_neighborhoods(CommGraph(5, x), 0) ==
        std::map<AgentId, std::size_t>{{0, 0}, {1, 1}, {2, 2}, {3, 1}, {4, 2}});

  const std::vector<Edge> split{{0, 1}, {2, 3}};
  CHECK_THROWS_AS(k_neighborhoods(CommGraph(4, split), 0), GraphError);
}

TEST_CASE("k-neighborhoods are BFS depths on random graphs") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 9;
    std::vector<Edge> edges;
    for (AgentId i = 1; i < n; ++i) edges.emplace_back(rng() % i, i);
    for (int e = 0; e < 5; ++e) {
      const AgentId a = rng() % n, b = rng() % n;
      if (a != b) edges.push_back(canonical_edge(a, b));
    }
    const CommGraph g(n, edges);
    const AgentId leader = rng() % n;
    const auto depth = k_neighborhoods(g, leader);
    for (AgentId i = 0; i < n; ++i) {
      CHECK((depth.at(i) == 1) == g.has_edge(i, leader));
    }
    for (const auto& [i, j] : g.edges()) {
      CHECK(depth.at(i) <= depth.at(j) + 1);
      CHECK(depth.at(j) <= depth.at(i) + 1);
    }
  }
}

TEST_CASE("formation goal examples") {
  FollowerSpec one{{0}, Vec2(-1.0, -1.0), FormationFrame::world};
  const std::vector<Vec2> p1{Vec2(3.0, 3.0)};
  CHECK(formation_goal(p1, 0.7, one) == Vec2(2.0, 2.0));

  FollowerSpec two{{0, 1}, Vec2(0.0, -1.0), FormationFrame::world};
  const std::vector<Vec2> p2{Vec2(0.0, 0.0), Vec2(2.0, 0.0)};
  CHECK(formation_goal(p2, 0.0, two) == Vec2(1.0, -1.0));

  FollowerSpec rot{{0}, Vec2(1.0, 0.0), FormationFrame::leader_heading};
  const std::vector<Vec2> p3{Vec2(0.0, 0.0)};
  CHECK((formation_goal(p3, pi / 2, rot) - Vec2(0.0, 1.0)).norm() < 1e-15);

  CHECK_THROWS(formation_goal(std::vector<Vec2>{}, 0.0, one));
}

TEST_CASE("formation spec validation") {
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const CommGraph g(3, path);
  FormationSpec ok;
  ok.followers[1] = {{0}, Vec2(1, 0), FormationFrame::world};
  ok.followers[2] = {{1}, Vec2(1, 0), FormationFrame::world};
  CHECK_NOTHROW(ok.validate(g, 0));

  FormationSpec not_neighbor = ok;
  not_neighbor.followers[2].parents = {0};
  CHECK_THROWS(not_neighbor.validate(g, 0));

  FormationSpec empty = ok;
  empty.followers[2].parents.clear();
  CHECK_THROWS(empty.validate(g, 0));

  FormationSpec deeper = ok;
  deeper.followers[1].parents = {2};
  CHECK_THROWS(deeper.validate(g, 0));
}
