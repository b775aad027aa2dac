#include <doctest.h>

#include <string>

#include "cbfswarm/scenario.hpp"

using namespace cbfswarm;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({"agents": [{"x_m": 0.0, "y_m": 0.0}], "waypoints_m": [[3.0, 0.0]]})");
}

json pair_doc() {
  return json::parse(R"({
    "agents": [{"x_m": 0.0, "y_m": 0.0}, {"x_m": -2.0, "y_m": 0.0}],
    "formation": {"followers": [{"agent": 1, "offset_m": [-2.0, 0.0]}]},
    "waypoints_m": [[3.0, 0.0]]
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_scenario_json(doc);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal file fills the defaults") {
  const ScenarioConfig c = parse_scenario_json(minimal());
  CHECK(c.agents.size() == 1);
  CHECK(c.leader == 0);
  CHECK(c.l == 0.2);
  CHECK(c.alpha_c == 2.0);
  CHECK(c.alpha_k == 2.0);
  CHECK(c.d_min == 1.0);
  CHECK(c.eta == 1.5);
  CHECK(c.flow.eps == 0.001);
  CHECK(c.flow.tau == 0.1);
  CHECK(c.flow.dt == 0.001);
  CHECK(c.gamma == (Mat2() << 5.0, 0.0, 0.0, 1.0).finished());
  CHECK(c.gains.goal_tol == 0.3);
  CHECK_FALSE(c.follower_gains.has_value());
  CHECK(c.num_steps() == 60000);
}

TEST_CASE("ellipse without eta is rejected") {
  json doc = minimal();
  doc["obstacles"] = json::parse(R"([{"kind": "ellipse", "center_m": [5, 5], "semi_axes_m": [2, 1]}])");
  CHECK(error_of(doc).find("eta required for ellipse") != std::string::npos);
  doc["obstacles"][0]["eta"] = 0.5;
  CHECK(error_of(doc).empty());
}

TEST_CASE("circle eta may be derived from the robot size") {
  json doc = minimal();
  doc["agents"][0]["radius_m"] = 0.5;
  doc["obstacles"] = json::parse(R"([{"kind": "circle", "center_m": [5, 5], "radius_m": 1.0, "eta": "auto"}])");
  const ScenarioConfig c = parse_scenario_json(doc);
  CHECK(c.obstacles[0].eta == doctest::Approx(1.89));
}

TEST_CASE("serialization round-trips") {
  json doc = pair_doc();
  doc["obstacles"] = json::parse(
      R"([{"kind": "circle", "center_m": [5, 5], "radius_m": 1.0},
          {"kind": "ellipse", "center_m": [0, -4], "semi_axes_m": [3, 1], "eta": 0.4}])");
  doc["follower_gains"] = json::parse(R"({"k_r": 2.0})");
  doc["safety"] = json::parse(R"({"activation_radius": 2.0})");
  const ScenarioConfig a = parse_scenario_json(doc);
  const ScenarioConfig b = parse_scenario_json(to_json(a));
  CHECK(a == b);
  CHECK(to_json(a) == to_json(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(b.follower_gains->k_r == 2.0);
  CHECK(b.follower_gains->goal_tol == a.gains.goal_tol);

  ScenarioConfig c = a;
  c.seed = 7;
  CHECK_FALSE(a == c);
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("d_min below the robot footprint is rejected") {
  json doc = pair_doc();
  doc["safety"] = {{"d_min_m", 0.8}};
  CHECK(error_of(doc).find("d_min") != std::string::npos);
}

TEST_CASE("unsafe initial states need an explicit override") {
  json doc = pair_doc();
  doc["agents"][1]["x_m"] = -0.5;
  CHECK(error_of(doc).find("not strictly safe") != std::string::npos);
  doc["allow_unsafe_start"] = true;
  CHECK(error_of(doc).empty());
}

TEST_CASE("field errors name the field") {
  json doc = minimal();
  doc["agents"][0].erase("y_m");
  CHECK(error_of(doc).find("agents[0].y_m") != std::string::npos);

  doc = minimal();
  doc["flow"] = {{"tau_s", 0.001}};
  CHECK(error_of(doc).find("dt_s") != std::string::npos);

  doc = minimal();
  doc["gains"] = {{"k_r", -1.0}};
  CHECK(error_of(doc).find("gains.k_r") != std::string::npos);

  doc = pair_doc();
  doc["comm_edges"] = json::parse("[[0, 0]]");
  CHECK_FALSE(error_of(doc).empty());

  doc = pair_doc();
  doc["gamma_matrix"] = json::parse("[[1, 0], [0, 0]]");
  CHECK(error_of(doc).find("gamma_matrix") != std::string::npos);
}

TEST_CASE("auto rules build the two-nearest graph") {
  json doc = json::parse(R"({
    "agents": [{"x_m": 0, "y_m": 0}, {"x_m": 2, "y_m": 0}, {"x_m": -2, "y_m": 0}, {"x_m": 0, "y_m": 5}],
    "formation": {"followers": [
      {"agent": 1, "offset_m": [2, 0]}, {"agent": 2, "offset_m": [-2, 0]}, {"agent": 3, "offset_m": [0, 5]}]},
    "waypoints_m": [[3.0, 0.0]]
  })");
  const ScenarioConfig c = parse_scenario_json(doc);
  const CommGraph g = comm_graph(c);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK(pair_list(c) == g.edges());
  const NetworkModel m = make_model(c);
  CHECK(m.subgraphs.size() == g.edges().size());
  CHECK(m.formation.followers.at(3).parents == std::vector<AgentId>{0});
}

#ifdef CBFSWARM_SCENARIO_DIR
TEST_CASE("shipped scenarios parse") {
  for (const char* name : {"scenario_a.json", "scenario_b.json"}) {
    const ScenarioConfig c = parse_scenario(std::string(CBFSWARM_SCENARIO_DIR) + "/" + name);
    CHECK(c.horizon == 120.0);
    CHECK(parse_scenario_json(to_json(c)) == c);
  }
  CHECK_THROWS_AS(parse_scenario("/nonexistent/scenario.json"), ScenarioError);
}
#endif
