#ifndef CBFSWARM_SCENARIO_HPP
#define CBFSWARM_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbfswarm/network.hpp"
#include "cbfswarm/saddleflow.hpp"

namespace cbfswarm {

/// Invalid or inconsistent scenario file. The message names the field.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AgentInit {
  Vec2 s = Vec2::Zero();
  double theta = 0.0;
  double radius = 0.25;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::vector<AgentInit> agents;
  AgentId leader = 0;
  std::optional<std::vector<Edge>> comm_edges;        // nullopt: auto-2-nearest
  std::optional<std::vector<Edge>> pair_constraints;  // nullopt: auto-2-nearest
  std::vector<ObstacleSpec> obstacles;
  std::optional<std::vector<std::vector<std::size_t>>> obstacle_assignment;  // nullopt: all
  FormationSpec formation;
  std::vector<Vec2> waypoints;
  NominalGains gains;
  std::optional<NominalGains> follower_gains;  // nullopt: same as gains
  double l = 0.2;
  double alpha_c = 2.0;
  double alpha_k = 2.0;
  double d_min = 1.0;
  double eta = 1.5;
  ActivationGate gate;
  FlowParams flow;
  double horizon = 60.0;
  Mat2 gamma = (Mat2() << 5.0, 0.0, 0.0, 1.0).finished();
  std::uint64_t seed = 0;
  bool allow_unsafe_start = false;
  double flow_log_period = 1.0;

  std::vector<AgentState> initial_states() const;
  std::size_t num_steps() const;
};

ScenarioConfig parse_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario_json(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioConfig& config);

/// Compares the canonical serialized forms.
bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

/// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

CommGraph comm_graph(const ScenarioConfig& config);
std::vector<Edge> pair_list(const ScenarioConfig& config);
NetworkModel make_model(const ScenarioConfig& config);

}  // namespace cbfswarm

#endif  // CBFSWARM_SCENARIO_HPP
