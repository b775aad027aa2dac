#ifndef CBFSWARM_TRAJECTORY_HPP
#define CBFSWARM_TRAJECTORY_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbfswarm/saddleflow.hpp"
#include "cbfswarm/scenario.hpp"

namespace cbfswarm {

inline constexpr const char* kVersion = "0.1.0";

struct ConstraintInfo {
  SubgraphKind kind = SubgraphKind::pair;
  std::vector<AgentId> members;
  std::size_t obstacle = 0;

  std::string label() const;
  const char* kind_name() const { return kind == SubgraphKind::pair ? "pair" : "obstacle"; }
  bool operator==(const ConstraintInfo&) const = default;
};

/// State at time t together with the input computed (and applied) there.
struct StepRecord {
  double t = 0.0;
  std::size_t waypoint_index = 0;
  std::vector<AgentState> agents;
  std::vector<Vec2> points;
  std::vector<ControlInput> inputs;
  std::vector<char> held;          // per agent: local QP infeasible, input held
  std::vector<double> margins;     // per constraint
  std::vector<char> flags;         // per constraint: aggregated CBF condition violated
};

struct FlowSample {
  double t = 0.0;
  FlowState flow;
};

struct LogEvent {
  double t = 0.0;
  std::string kind;  // waypoint_switch | waypoint_arrival | qp_infeasible
  long agent = -1;
  std::string detail;
  bool operator==(const LogEvent&) const = default;
};

struct LogMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double dt = 0.0;
  std::size_t stride = 1;
};

struct TrajectoryLog {
  LogMeta meta;
  std::vector<ConstraintInfo> constraints;
  std::vector<StepRecord> steps;
  std::vector<FlowSample> flow;
  std::vector<LogEvent> events;
};

std::vector<ConstraintInfo> constraint_infos(const NetworkModel& model);

/// `t,agent,x,y,theta,px,py,v,w`, one row per (step, agent).
std::string trajectory_csv(const TrajectoryLog& log, std::size_t stride = 1);
/// `t,constraint,kind,margin,flag`, one row per (step, constraint).
std::string margins_csv(const TrajectoryLog& log, std::size_t stride = 1);
/// `t,kind,index,value` with kind in {gamma, z, lambda}.
std::string flow_csv(const TrajectoryLog& log);
/// `t,kind,agent,detail`.
std::string events_csv(const TrajectoryLog& log);

/// Writes the four CSVs, meta.json and the resolved scenario.json into `dir`.
void write_run(const std::filesystem::path& dir, const TrajectoryLog& log, const ScenarioConfig& config,
               std::size_t stride = 1);

struct RunData {
  ScenarioConfig config;
  TrajectoryLog log;
};

/// Reads a directory produced by write_run. Held flags and waypoint indices
/// are rebuilt from the event table.
RunData read_run(const std::filesystem::path& dir);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

}  // namespace cbfswarm

#endif  // CBFSWARM_TRAJECTORY_HPP
