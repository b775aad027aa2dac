#include "cbfswarm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbfswarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bisection on the Lagrange parameter of the closest-point problem.
double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double a = n0 / (s + r0);
    const double b = z1 / (s + 1.0);
    g = a * a + b * b - 1.0;
    if (g > 0.0) s0 = s;
    else if (g < 0.0) s1 = s;
    else break;
  }
  return s;
}

// e0 >= e1 > 0, y0, y1 >= 0.
double ellipse_quadrant_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double s = ellipse_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (s + r0);
      const double x1 = y1 / (s + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer = e0 * y0;
  const double denom = e0 * e0 - e1 * e1;
  if (numer < denom) {
    const double xde = numer / denom;
    const double x0 = e0 * xde;
    const double x1 = e1 * std::sqrt(1.0 - xde * xde);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

}  // namespace

double obstacle_distance(const ObstacleSpec& obs, const Vec2& p) {
  const Vec2 d = p - obs.center;
  if (obs.kind == ObstacleKind::circle) return d.norm() - obs.radii(0);
  double e0 = obs.radii(0), e1 = obs.radii(1);
  double y0 = std::abs(d(0)), y1 = std::abs(d(1));
  if (e0 < e1) {
    std::swap(e0, e1);
    std::swap(y0, y1);
  }
  const double dist = ellipse_quadrant_distance(e0, e1, y0, y1);
  const double level = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1);
  return level < 1.0 ? -dist : dist;
}

MetricsReport compute_metrics(const TrajectoryLog& log, const ScenarioConfig& config,
                              const MetricsOptions& options) {
  const NetworkModel model = make_model(config);
  MetricsReport r;
  const std::size_t steps = log.steps.size();
  const std::size_t n = config.agents.size();
  r.t.reserve(steps);
  for (const auto& st : log.steps) r.t.push_back(st.t);

  for (const auto& [agent, spec] : config.formation.followers) {
    FollowerMetrics f;
    f.agent = agent;
    f.error.reserve(steps);
    for (const auto& st : log.steps) {
      std::vector<Vec2> parents;
      for (AgentId j : spec.parents) parents.push_back(st.points[j]);
      const Vec2 q = formation_goal(parents, st.agents[config.leader].theta, spec);
      f.error.push_back((st.points[agent] - q).norm());
    }
    if (steps) {
      f.max_error = *std::max_element(f.error.begin(), f.error.end());
      f.final_error = f.error.back();
    }
    r.followers.push_back(std::move(f));
  }

  r.agent_min_obstacle_margin.assign(n, kInf);
  r.min_pair_margin = kInf;
  for (std::size_t c = 0; c < log.constraints.size(); ++c) {
    const auto& info = log.constraints[c];
    double m = kInf;
    for (const auto& st : log.steps) m = std::min(m, st.margins[c]);
    if (info.kind == SubgraphKind::pair) {
      r.min_pair_margin = std::min(r.min_pair_margin, m);
      continue;
    }
    ObstacleMetrics om;
    om.agent = info.members.at(0);
    om.obstacle = info.obstacle;
    om.min_margin = m;
    om.distance.reserve(steps);
    for (const auto& st : log.steps) {
      om.distance.push_back(obstacle_distance(config.obstacles.at(info.obstacle), st.points[om.agent]));
    }
    om.min_distance = om.distance.empty() ? kInf : *std::min_element(om.distance.begin(), om.distance.end());
    r.agent_min_obstacle_margin[om.agent] = std::min(r.agent_min_obstacle_margin[om.agent], m);
    r.obstacles.push_back(std::move(om));
  }

  for (const auto& e : log.events) {
    if (e.kind == "waypoint_switch") {
      r.waypoints.push_back({std::stoul(e.detail) - 1, e.t});
    } else if (e.kind == "waypoint_arrival") {
      r.waypoints.push_back({std::stoul(e.detail), e.t});
    }
  }
  std::sort(r.waypoints.begin(), r.waypoints.end(),
            [](const WaypointArrival& a, const WaypointArrival& b) { return a.index < b.index; });
  r.all_waypoints_reached = r.waypoints.size() == config.waypoints.size();
  for (std::size_t w = 0; w < r.waypoints.size() && r.all_waypoints_reached; ++w) {
    r.all_waypoints_reached = r.waypoints[w].index == w;
  }

  // Segments between switches; the last segment ends at the final arrival or the horizon.
  std::size_t begin = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    if (k < steps && log.steps[k].waypoint_index == log.steps[begin].waypoint_index) continue;
    SegmentMetrics seg;
    seg.waypoint = log.steps[begin].waypoint_index;
    seg.t_start = log.steps[begin].t;
    seg.t_end = log.steps[k - 1].t;
    for (const auto& f : r.followers) {
      double m = kInf;
      for (std::size_t j = begin; j < k; ++j) {
        if (log.steps[j].t >= seg.t_end - options.settle_window) m = std::min(m, f.error[j]);
      }
      seg.tail_min_error.push_back(m);
    }
    r.segments.push_back(std::move(seg));
    begin = k;
  }
  if (steps) {
    const double t_end = log.steps.back().t;
    for (const auto& f : r.followers) {
      double m = 0.0;
      for (std::size_t j = 0; j < steps; ++j) {
        if (log.steps[j].t >= t_end - options.final_window) m = std::max(m, f.error[j]);
      }
      r.final_window_max_error.push_back(m);
    }
  }

  bool still = false;
  double still_since = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto& st = log.steps[k];
    double speed2 = 0.0;
    for (const auto& u : st.inputs) speed2 += u.vec().squaredNorm();
    const Vec2& wp = config.waypoints.at(st.waypoint_index);
    const bool stuck = std::sqrt(speed2) < options.deadlock_speed &&
                       (st.points[config.leader] - wp).norm() > config.gains.goal_tol;
    if (stuck && !still) {
      still = true;
      still_since = st.t;
    }
    if (still && (!stuck || k + 1 == steps)) {
      const double end = stuck ? st.t : log.steps[k - 1].t;
      if (end - still_since >= options.deadlock_duration) r.deadlocks.push_back({still_since, end});
      still = false;
    }
    r.infeasible_steps += std::any_of(st.held.begin(), st.held.end(), [](char h) { return h != 0; });
    r.flagged_steps += std::any_of(st.flags.begin(), st.flags.end(), [](char h) { return h != 0; });
  }
  return r;
}

nlohmann::json to_json(const MetricsReport& report) {
  using nlohmann::json;
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json followers = json::array();
  for (std::size_t i = 0; i < report.followers.size(); ++i) {
    const auto& f = report.followers[i];
    followers.push_back({{"agent", f.agent},
                         {"max_error_m", f.max_error},
                         {"final_error_m", f.final_error},
                         {"final_window_max_error_m",
                          i < report.final_window_max_error.size() ? report.final_window_max_error[i] : 0.0}});
  }
  json obstacles = json::array();
  for (const auto& o : report.obstacles) {
    obstacles.push_back({{"agent", o.agent},
                         {"obstacle", o.obstacle},
                         {"min_margin", o.min_margin},
                         {"min_distance_m", o.min_distance}});
  }
  json agent_min = json::array();
  for (double m : report.agent_min_obstacle_margin) agent_min.push_back(finite_or_null(m));
  json waypoints = json::array();
  for (const auto& w : report.waypoints) waypoints.push_back({{"index", w.index}, {"t_s", w.t}});
  json segments = json::array();
  for (const auto& s : report.segments) {
    json tails = json::array();
    for (double v : s.tail_min_error) tails.push_back(finite_or_null(v));
    segments.push_back(
        {{"waypoint", s.waypoint}, {"t_start_s", s.t_start}, {"t_end_s", s.t_end}, {"tail_min_error_m", tails}});
  }
  json deadlocks = json::array();
  for (const auto& d : report.deadlocks) deadlocks.push_back({{"t_start_s", d.t_start}, {"t_end_s", d.t_end}});

  json out{{"followers", followers},
           {"obstacles", obstacles},
           {"agent_min_obstacle_margin", agent_min},
           {"min_pair_margin", finite_or_null(report.min_pair_margin)},
           {"waypoints_reached", waypoints},
           {"all_waypoints_reached", report.all_waypoints_reached},
           {"segments", segments},
           {"deadlocks", deadlocks},
           {"deadlock", !report.deadlocks.empty()},
           {"infeasible_steps", report.infeasible_steps},
           {"flagged_steps", report.flagged_steps}};
  if (report.sup_tracking_error) out["sup_tracking_error"] = *report.sup_tracking_error;
  return out;
}

}  // namespace cbfswarm
