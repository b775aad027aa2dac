#ifndef CBFSWARM_METRICS_HPP
#define CBFSWARM_METRICS_HPP

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbfswarm/trajectory.hpp"

namespace cbfswarm {

/// Euclidean distance from p to the obstacle boundary, negative inside.
double obstacle_distance(const ObstacleSpec& obs, const Vec2& p);

struct FollowerMetrics {
  AgentId agent = 0;
  std::vector<double> error;  // per logged step
  double max_error = 0.0;
  double final_error = 0.0;
};

struct ObstacleMetrics {
  AgentId agent = 0;
  std::size_t obstacle = 0;
  std::vector<double> distance;  // per logged step
  double min_margin = 0.0;       // min of h - eta
  double min_distance = 0.0;
};

struct WaypointArrival {
  std::size_t index = 0;
  double t = 0.0;
};

/// A stretch between waypoint switches. `tail_min_error` holds, per
/// follower, the smallest formation error over the last `settle_window`
/// seconds of the segment.
struct SegmentMetrics {
  std::size_t waypoint = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> tail_min_error;
};

struct DeadlockInterval {
  double t_start = 0.0;
  double t_end = 0.0;
};

struct MetricsReport {
  std::vector<double> t;
  std::vector<FollowerMetrics> followers;
  std::vector<ObstacleMetrics> obstacles;
  std::vector<double> agent_min_obstacle_margin;  // +inf when an agent has no obstacle rows
  double min_pair_margin = 0.0;                    // +inf without pair constraints
  std::vector<WaypointArrival> waypoints;
  bool all_waypoints_reached = false;
  std::vector<SegmentMetrics> segments;
  /// Per follower, max formation error over the final `final_window` seconds.
  std::vector<double> final_window_max_error;
  std::vector<DeadlockInterval> deadlocks;
  std::size_t infeasible_steps = 0;
  std::size_t flagged_steps = 0;
  std::optional<double> sup_tracking_error;
};

struct MetricsOptions {
  double settle_window = 5.0;
  double final_window = 10.0;
  double deadlock_speed = 1e-3;
  double deadlock_duration = 5.0;
};

MetricsReport compute_metrics(const TrajectoryLog& log, const ScenarioConfig& config,
                              const MetricsOptions& options = {});

/// Summary without the per-step series.
nlohmann::json to_json(const MetricsReport& report);

}  // namespace cbfswarm

#endif  // CBFSWARM_METRICS_HPP
