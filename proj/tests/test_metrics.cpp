#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cbfswarm/metrics.hpp"

using namespace cbfswarm;
using nlohmann::json;

namespace {

ScenarioConfig two_agents() {
  return parse_scenario_json(json::parse(R"({
    "agents": [{"x_m": 0.0, "y_m": 0.0}, {"x_m": -2.0, "y_m": 0.0}],
    "formation": {"followers": [{"agent": 1, "offset_m": [-2.0, 0.0]}]},
    "obstacles": [{"kind": "circle", "center_m": [0.0, 4.0], "radius_m": 1.0}],
    "waypoints_m": [[3.0, 0.0]]
  })"));
}

// Constant log with the agents frozen at `states`.
TrajectoryLog frozen_log(const ScenarioConfig& c, const std::vector<AgentState>& states, std::size_t steps) {
  const NetworkModel model = make_model(c);
  TrajectoryLog log;
  log.constraints = constraint_infos(model);
  for (std::size_t k = 0; k < steps; ++k) {
    StepRecord st;
    st.t = 0.1 * static_cast<double>(k);
    st.agents = states;
    for (const auto& a : states) st.points.push_back(off_axis_point(a, model.offaxis));
    st.inputs.assign(states.size(), ControlInput{});
    st.held.assign(states.size(), 0);
    for (std::size_t j = 0; j < model.subgraphs.size(); ++j) st.margins.push_back(constraint_margin(model, j, states));
    st.flags.assign(model.subgraphs.size(), 0);
    log.steps.push_back(st);
  }
  return log;
}

}  // namespace

TEST_CASE("exact formation gives zero error") {
  const ScenarioConfig c = two_agents();
  const TrajectoryLog log = frozen_log(c, {{{-0.2, 0.0}, 0.0, 0}, {{-2.2, 0.0}, 0.0, 1}}, 20);
  const MetricsReport m = compute_metrics(log, c);
  REQUIRE(m.followers.size() == 1);
  for (double e : m.followers[0].error) CHECK(e == 0.0);
  CHECK(m.followers[0].max_error == 0.0);
  CHECK(m.followers[0].final_error == 0.0);
}

TEST_CASE("static agent near a circle") {
  const ScenarioConfig c = two_agents();
  const std::vector<AgentState> s{{{-0.2, 0.0}, 0.0, 0}, {{-2.2, 0.0}, 0.0, 1}};
  const MetricsReport m = compute_metrics(frozen_log(c, s, 10), c);
  REQUIRE(m.obstacles.size() == 2);
  const auto& o = m.obstacles[0];
  CHECK(o.agent == 0);
  for (double d : o.distance) CHECK(d == doctest::Approx(4.0 - 1.0));
  CHECK(o.min_distance == doctest::Approx(3.0));
  CHECK(o.min_margin == doctest::Approx(16.0 - 1.0 - 1.5));
  CHECK(m.agent_min_obstacle_margin[0] == o.min_margin);
}

TEST_CASE("agents held at d_min have zero pair margin") {
  const ScenarioConfig c = two_agents();
  const std::vector<AgentState> s{{{-0.2, 0.0}, 0.0, 0}, {{-1.2, 0.0}, 0.0, 1}};
  const MetricsReport m = compute_metrics(frozen_log(c, s, 10), c);
  CHECK(m.min_pair_margin == 0.0);
}

TEST_CASE("min margins equal the raw log") {
  const ScenarioConfig c = two_agents();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  TrajectoryLog log = frozen_log(c, {{{-0.2, 0.0}, 0.0, 0}, {{-2.2, 0.0}, 0.0, 1}}, 50);
  for (auto& st : log.steps) {
    for (auto& mg : st.margins) mg += U(rng);
  }
  const MetricsReport a = compute_metrics(log, c);
  const MetricsReport b = compute_metrics(log, c);
  double pair = 1e300;
  for (const auto& st : log.steps) pair = std::min(pair, st.margins[0]);
  CHECK(std::abs(a.min_pair_margin - pair) <= 1e-12);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("ellipse distance agrees with dense boundary sampling") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-5.0, 5.0);
  std::uniform_real_distribution<double> R(0.3, 3.0);
  for (int k = 0; k < 200; ++k) {
    ObstacleSpec o;
    o.kind = ObstacleKind::ellipse;
    o.center = Vec2(U(rng), U(rng));
    o.radii = Vec2(R(rng), R(rng));
    const Vec2 p(U(rng), U(rng));
    double best = 1e300;
    for (int s = 0; s < 20000; ++s) {
      const double t = 2 * std::numbers::pi * s / 20000.0;
      const Vec2 b = o.center + Vec2(o.radii(0) * std::cos(t), o.radii(1) * std::sin(t));
      best = std::min(best, (b - p).norm());
    }
    const double d = obstacle_distance(o, p);
    CHECK(std::abs(std::abs(d) - best) < 1e-3);
    CHECK((d < 0) == (barrier_eval(o, p).h < 0));
  }
  ObstacleSpec c;
  c.center = Vec2(1.0, 1.0);
  c.radii = Vec2::Constant(2.0);
  CHECK(obstacle_distance(c, Vec2(1.0, 1.5)) == doctest::Approx(-1.5));
}

TEST_CASE("waypoints, segments and deadlocks") {
  const ScenarioConfig c = parse_scenario_json(json::parse(R"({
    "agents": [{"x_m": 0.0, "y_m": 0.0}], "waypoints_m": [[3.0, 0.0], [6.0, 0.0]]
  })"));
  TrajectoryLog log = frozen_log(c, {{{-0.2, 0.0}, 0.0, 0}}, 200);  // t in [0, 19.9], leader 3 m away
  for (std::size_t k = 100; k < 200; ++k) log.steps[k].waypoint_index = 1;
  log.events.push_back({10.0, "waypoint_switch", 0, "1"});
  for (std::size_t k = 0; k < 30; ++k) log.steps[k].inputs[0] = ControlInput{1.0, 0.0};
  const MetricsReport m = compute_metrics(log, c);
  REQUIRE(m.waypoints.size() == 1);
  CHECK(m.waypoints[0].index == 0);
  CHECK(m.waypoints[0].t == 10.0);
  CHECK_FALSE(m.all_waypoints_reached);
  REQUIRE(m.segments.size() == 2);
  CHECK(m.segments[0].t_end == doctest::Approx(9.9));
  CHECK(m.segments[1].t_start == doctest::Approx(10.0));
  REQUIRE(m.deadlocks.size() == 1);
  CHECK(m.deadlocks[0].t_start == doctest::Approx(3.0));
  CHECK(m.deadlocks[0].t_end == doctest::Approx(19.9));

  log.events.push_back({19.0, "waypoint_arrival", 0, "1"});
  CHECK(compute_metrics(log, c).all_waypoints_reached);
}
