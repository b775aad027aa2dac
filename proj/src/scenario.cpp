#include "cbfswarm/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace cbfswarm {

using nlohmann::json;

namespace {

constexpr const char* kAutoRule = "auto-2-nearest";

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ScenarioError(field + ": " + what);
}

double number(const json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + key, "expected a number");
  return v.get<double>();
}

double required_number(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(path + key, "missing required field");
  return number(obj, key, path, 0.0);
}

Vec2 vec2(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(path, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

void positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be finite and > 0");
}

std::vector<Edge> edge_list(const json& v, const std::string& path, std::size_t n) {
  if (!v.is_array()) fail(path, "expected a list of [i, j] pairs or \"" + std::string(kAutoRule) + "\"");
  std::vector<Edge> out;
  for (std::size_t e = 0; e < v.size(); ++e) {
    const auto& pr = v[e];
    const std::string p = path + "[" + std::to_string(e) + "]";
    if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_unsigned() || !pr[1].is_number_unsigned()) {
      fail(p, "expected [i, j] with agent indices");
    }
    const auto i = pr[0].get<std::size_t>(), j = pr[1].get<std::size_t>();
    if (i >= n || j >= n) fail(p, "agent index out of range");
    if (i == j) fail(p, "self-loop");
    out.push_back(canonical_edge(i, j));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

json edges_json(const std::optional<std::vector<Edge>>& edges) {
  if (!edges) return kAutoRule;
  json out = json::array();
  for (const auto& [i, j] : *edges) out.push_back({i, j});
  return out;
}

const char* law_name(NominalLaw law) { return law == NominalLaw::printed ? "printed" : "heading_relative"; }
const char* frame_name(FormationFrame f) { return f == FormationFrame::world ? "world" : "leader_heading"; }

FormationFrame parse_frame(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected \"world\" or \"leader_heading\"");
  const auto s = v.get<std::string>();
  if (s == "world") return FormationFrame::world;
  if (s == "leader_heading") return FormationFrame::leader_heading;
  fail(path, "unknown frame \"" + s + "\"");
}

NominalGains parse_gains(const json& g, const std::string& p, NominalGains out) {
  if (!g.is_object()) fail(p.substr(0, p.size() - 1), "expected an object");
  out.k_r = number(g, "k_r", p, out.k_r);
  out.k_a = number(g, "k_a", p, out.k_a);
  out.h_gain = number(g, "h_gain", p, out.h_gain);
  out.goal_tol = number(g, "goal_tol_m", p, out.goal_tol);
  positive(out.k_r, p + "k_r");
  positive(out.k_a, p + "k_a");
  positive(out.h_gain, p + "h_gain");
  positive(out.goal_tol, p + "goal_tol_m");
  if (g.contains("law")) {
    const auto law = g.at("law").get<std::string>();
    if (law == "printed") out.law = NominalLaw::printed;
    else if (law == "heading_relative") out.law = NominalLaw::heading_relative;
    else fail(p + "law", "expected \"printed\" or \"heading_relative\"");
  }
  return out;
}

json gains_json(const NominalGains& g) {
  return {{"k_r", g.k_r}, {"k_a", g.k_a}, {"h_gain", g.h_gain}, {"goal_tol_m", g.goal_tol}, {"law", law_name(g.law)}};
}

}  // namespace

std::vector<AgentState> ScenarioConfig::initial_states() const {
  std::vector<AgentState> out;
  out.reserve(agents.size());
  for (AgentId i = 0; i < agents.size(); ++i) {
    out.push_back({agents[i].s, normalize_heading(agents[i].theta), i});
  }
  return out;
}

std::size_t ScenarioConfig::num_steps() const {
  return static_cast<std::size_t>(std::llround(horizon / flow.dt));
}

CommGraph comm_graph(const ScenarioConfig& c) {
  if (c.comm_edges) return CommGraph(c.agents.size(), *c.comm_edges);
  std::vector<Vec2> pos;
  for (const auto& a : c.agents) pos.push_back(a.s);
  return CommGraph::k_nearest(pos, 2);
}

std::vector<Edge> pair_list(const ScenarioConfig& c) {
  if (c.pair_constraints) return *c.pair_constraints;
  std::vector<Vec2> pos;
  for (const auto& a : c.agents) pos.push_back(a.s);
  return CommGraph::k_nearest(pos, 2).edges();
}

NetworkModel make_model(const ScenarioConfig& c) {
  CommGraph graph = comm_graph(c);
  const auto pairs = pair_list(c);
  std::vector<std::vector<std::size_t>> assignment;
  if (c.obstacle_assignment) {
    assignment = *c.obstacle_assignment;
  } else {
    std::vector<std::size_t> all(c.obstacles.size());
    for (std::size_t o = 0; o < all.size(); ++o) all[o] = o;
    assignment.assign(c.agents.size(), all);
  }
  auto subgraphs = build_subgraphs(graph, pairs, assignment);
  NetworkModel model(c.leader, std::move(graph), std::move(subgraphs), c.obstacles, OffAxisParams{c.l},
                     PairSafetyParams{c.d_min, c.alpha_c}, c.gains, c.formation);
  model.follower_gains = c.follower_gains;
  model.gate = c.gate;
  model.gamma = c.gamma;
  return model;
}

ScenarioConfig parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  return parse_scenario_json(doc);
}

ScenarioConfig parse_scenario_json(const json& doc) {
  if (!doc.is_object()) fail("<root>", "expected an object");
  ScenarioConfig c;
  if (doc.contains("name")) c.name = doc.at("name").get<std::string>();

  // agents
  if (!doc.contains("agents") || !doc.at("agents").is_array() || doc.at("agents").empty()) {
    fail("agents", "expected a non-empty list");
  }
  for (std::size_t i = 0; i < doc.at("agents").size(); ++i) {
    const auto& a = doc.at("agents")[i];
    const std::string p = "agents[" + std::to_string(i) + "].";
    AgentInit init;
    init.s = {required_number(a, "x_m", p), required_number(a, "y_m", p)};
    init.theta = number(a, "theta_rad", p, 0.0);
    init.radius = number(a, "radius_m", p, init.radius);
    positive(init.radius, p + "radius_m");
    c.agents.push_back(init);
  }
  const std::size_t n = c.agents.size();

  if (doc.contains("leader")) {
    if (!doc.at("leader").is_number_unsigned()) fail("leader", "expected an agent index");
    c.leader = doc.at("leader").get<std::size_t>();
  }
  if (c.leader >= n) fail("leader", "agent index out of range");

  // safety
  const json safety = doc.value("safety", json::object());
  c.l = number(safety, "l_m", "safety.", c.l);
  c.alpha_c = number(safety, "alpha_c", "safety.", c.alpha_c);
  c.alpha_k = number(safety, "alpha_k", "safety.", c.alpha_k);
  c.d_min = number(safety, "d_min_m", "safety.", c.d_min);
  c.eta = number(safety, "eta", "safety.", c.eta);
  c.gate.radius = number(safety, "activation_radius", "safety.", 0.0);
  c.gate.far_alpha_scale = number(safety, "far_alpha_scale", "safety.", c.gate.far_alpha_scale);
  positive(c.l, "safety.l_m");
  positive(c.alpha_c, "safety.alpha_c");
  positive(c.alpha_k, "safety.alpha_k");
  positive(c.d_min, "safety.d_min_m");
  positive(c.eta, "safety.eta");
  if (c.gate.radius < 0.0) fail("safety.activation_radius", "must be >= 0");
  positive(c.gate.far_alpha_scale, "safety.far_alpha_scale");

  // obstacles
  if (doc.contains("obstacles")) {
    const auto& obs = doc.at("obstacles");
    if (!obs.is_array()) fail("obstacles", "expected a list");
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const auto& o = obs[k];
      const std::string p = "obstacles[" + std::to_string(k) + "].";
      ObstacleSpec spec;
      const std::string kind = o.value("kind", "circle");
      if (!o.contains("center_m")) fail(p + "center_m", "missing required field");
      spec.center = vec2(o.at("center_m"), p + "center_m");
      spec.alpha = number(o, "alpha", p, c.alpha_k);
      positive(spec.alpha, p + "alpha");
      if (kind == "circle") {
        spec.kind = ObstacleKind::circle;
        spec.radii = Vec2::Constant(required_number(o, "radius_m", p));
        positive(spec.radii(0), p + "radius_m");
        if (o.contains("eta") && o.at("eta").is_string()) {
          if (o.at("eta").get<std::string>() != "auto") fail(p + "eta", "expected a number or \"auto\"");
          double worst = 0.0;
          for (const auto& a : c.agents) worst = std::max(worst, *eta_margin(a.radius, c.l, spec));
          spec.eta = worst;
        } else {
          spec.eta = number(o, "eta", p, c.eta);
        }
      } else if (kind == "ellipse") {
        spec.kind = ObstacleKind::ellipse;
        if (!o.contains("semi_axes_m")) fail(p + "semi_axes_m", "missing required field");
        spec.radii = vec2(o.at("semi_axes_m"), p + "semi_axes_m");
        positive(spec.radii(0), p + "semi_axes_m[0]");
        positive(spec.radii(1), p + "semi_axes_m[1]");
        if (!o.contains("eta") || !o.at("eta").is_number()) {
          fail(p + "eta", "eta required for ellipse (no closed-form margin)");
        }
        spec.eta = o.at("eta").get<double>();
      } else {
        fail(p + "kind", "unknown obstacle kind \"" + kind + "\"");
      }
      positive(spec.eta, p + "eta");
      c.obstacles.push_back(spec);
    }
  }
  if (doc.contains("obstacle_assignment") && !doc.at("obstacle_assignment").is_string()) {
    const auto& as = doc.at("obstacle_assignment");
    if (!as.is_array() || as.size() != n) fail("obstacle_assignment", "expected one list per agent or \"all\"");
    std::vector<std::vector<std::size_t>> assignment;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> ids;
      for (const auto& v : as[i]) {
        if (!v.is_number_unsigned() || v.get<std::size_t>() >= c.obstacles.size()) {
          fail("obstacle_assignment[" + std::to_string(i) + "]", "obstacle index out of range");
        }
        ids.push_back(v.get<std::size_t>());
      }
      assignment.push_back(ids);
    }
    c.obstacle_assignment = assignment;
  } else if (doc.contains("obstacle_assignment") && doc.at("obstacle_assignment").get<std::string>() != "all") {
    fail("obstacle_assignment", "expected \"all\" or a list");
  }

  // graph and pairs
  auto parse_edges = [&](const char* key) -> std::optional<std::vector<Edge>> {
    if (!doc.contains(key)) return std::nullopt;
    const auto& v = doc.at(key);
    if (v.is_string()) {
      if (v.get<std::string>() != kAutoRule) fail(key, "unknown rule \"" + v.get<std::string>() + "\"");
      return std::nullopt;
    }
    return edge_list(v, key, n);
  };
  c.comm_edges = parse_edges("comm_edges");
  c.pair_constraints = parse_edges("pair_constraints");

  const CommGraph graph = comm_graph(c);
  if (!graph.connected()) fail("comm_edges", "communication graph must be connected");
  for (const auto& [i, j] : pair_list(c)) {
    const std::string p = "pair_constraints(" + std::to_string(i) + "," + std::to_string(j) + ")";
    if (!graph.has_edge(i, j)) fail(p, "pair constraint must be a communication edge");
    if (c.d_min < c.agents[i].radius + c.agents[j].radius + 2.0 * c.l) {
      fail("safety.d_min_m", "d_min must be >= r_i + r_j + 2 l for " + p);
    }
  }

  // gains
  c.gains = parse_gains(doc.value("gains", json::object()), "gains.", c.gains);
  if (doc.contains("follower_gains")) {
    c.follower_gains = parse_gains(doc.at("follower_gains"), "follower_gains.", c.gains);
  }

  // formation
  if (n > 1) {
    if (!doc.contains("formation")) fail("formation", "required when there are followers");
    const auto& f = doc.at("formation");
    const FormationFrame default_frame = f.contains("frame") ? parse_frame(f.at("frame"), "formation.frame")
                                                             : FormationFrame::world;
    if (!f.contains("followers") || !f.at("followers").is_array()) fail("formation.followers", "expected a list");
    const auto depth = k_neighborhoods(graph, c.leader);
    for (std::size_t e = 0; e < f.at("followers").size(); ++e) {
      const auto& fo = f.at("followers")[e];
      const std::string p = "formation.followers[" + std::to_string(e) + "].";
      if (!fo.contains("agent") || !fo.at("agent").is_number_unsigned()) fail(p + "agent", "expected an agent index");
      const auto i = fo.at("agent").get<std::size_t>();
      if (i >= n) fail(p + "agent", "agent index out of range");
      FollowerSpec spec;
      if (!fo.contains("offset_m")) fail(p + "offset_m", "missing required field");
      spec.offset = vec2(fo.at("offset_m"), p + "offset_m");
      spec.frame = fo.contains("frame") ? parse_frame(fo.at("frame"), p + "frame") : default_frame;
      if (fo.contains("parents")) {
        for (const auto& v : fo.at("parents")) {
          if (!v.is_number_unsigned()) fail(p + "parents", "expected agent indices");
          spec.parents.push_back(v.get<std::size_t>());
        }
      } else if (i != c.leader) {
        for (AgentId j : graph.neighbors(i)) {
          if (depth.at(j) + 1 == depth.at(i)) spec.parents.push_back(j);
        }
      }
      if (!c.formation.followers.emplace(i, spec).second) fail(p + "agent", "duplicate follower entry");
    }
    try {
      c.formation.validate(graph, c.leader);
    } catch (const std::invalid_argument& e) {
      fail("formation", e.what());
    }
  }

  // waypoints
  if (!doc.contains("waypoints_m") || !doc.at("waypoints_m").is_array() || doc.at("waypoints_m").empty()) {
    fail("waypoints_m", "expected a non-empty list");
  }
  for (std::size_t w = 0; w < doc.at("waypoints_m").size(); ++w) {
    c.waypoints.push_back(vec2(doc.at("waypoints_m")[w], "waypoints_m[" + std::to_string(w) + "]"));
  }

  // flow
  const json flow = doc.value("flow", json::object());
  c.flow.tau = number(flow, "tau_s", "flow.", c.flow.tau);
  c.flow.eps = number(flow, "eps", "flow.", c.flow.eps);
  c.flow.dt = number(flow, "dt_s", "flow.", c.flow.dt);
  c.flow.warm_tol = number(flow, "warm_tol", "flow.", c.flow.warm_tol);
  c.flow.max_flow_step = number(flow, "max_flow_step", "flow.", c.flow.max_flow_step);
  c.flow.warm_budget = static_cast<std::size_t>(number(flow, "warm_budget", "flow.",
                                                       static_cast<double>(c.flow.warm_budget)));
  try {
    c.flow.validate();
  } catch (const std::invalid_argument& e) {
    fail("flow", e.what());
  }

  c.horizon = number(doc, "horizon_s", "", c.horizon);
  positive(c.horizon, "horizon_s");

  if (doc.contains("gamma_matrix")) {
    const auto& g = doc.at("gamma_matrix");
    if (!g.is_array() || g.size() != 2) fail("gamma_matrix", "expected [[a, b], [c, d]]");
    const Vec2 r0 = vec2(g[0], "gamma_matrix[0]"), r1 = vec2(g[1], "gamma_matrix[1]");
    c.gamma << r0(0), r0(1), r1(0), r1(1);
  }
  const Mat2 H = c.gamma.transpose() * c.gamma;
  if (Eigen::SelfAdjointEigenSolver<Mat2>(H).eigenvalues().minCoeff() <= 1e-10) {
    fail("gamma_matrix", "Gamma' Gamma must be positive definite");
  }

  if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("allow_unsafe_start")) c.allow_unsafe_start = doc.at("allow_unsafe_start").get<bool>();
  if (doc.contains("log")) c.flow_log_period = number(doc.at("log"), "flow_period_s", "log.", c.flow_log_period);
  positive(c.flow_log_period, "log.flow_period_s");

  if (!c.allow_unsafe_start) {
    const NetworkModel model = make_model(c);
    const auto states = c.initial_states();
    for (std::size_t k = 0; k < model.subgraphs.size(); ++k) {
      if (!(constraint_margin(model, k, states) > 0.0)) {
        const auto& sg = model.subgraphs[k];
        const std::string what = sg.kind == SubgraphKind::pair
                                     ? "pair (" + std::to_string(sg.members[0]) + "," + std::to_string(sg.members[1]) + ")"
                                     : "agent " + std::to_string(sg.members[0]) + " vs obstacle " + std::to_string(sg.obstacle);
        fail("agents", "initial state is not strictly safe for " + what);
      }
    }
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;
  json agents = json::array();
  for (const auto& a : c.agents) {
    agents.push_back({{"x_m", a.s(0)}, {"y_m", a.s(1)}, {"theta_rad", a.theta}, {"radius_m", a.radius}});
  }
  doc["agents"] = agents;
  doc["leader"] = c.leader;
  doc["comm_edges"] = edges_json(c.comm_edges);
  doc["pair_constraints"] = edges_json(c.pair_constraints);

  json obs = json::array();
  for (const auto& o : c.obstacles) {
    json j{{"center_m", {o.center(0), o.center(1)}}, {"eta", o.eta}, {"alpha", o.alpha}};
    if (o.kind == ObstacleKind::circle) {
      j["kind"] = "circle";
      j["radius_m"] = o.radii(0);
    } else {
      j["kind"] = "ellipse";
      j["semi_axes_m"] = {o.radii(0), o.radii(1)};
    }
    obs.push_back(j);
  }
  doc["obstacles"] = obs;
  if (c.obstacle_assignment) {
    doc["obstacle_assignment"] = *c.obstacle_assignment;
  } else {
    doc["obstacle_assignment"] = "all";
  }

  json followers = json::array();
  for (const auto& [i, f] : c.formation.followers) {
    followers.push_back({{"agent", i},
                         {"parents", f.parents},
                         {"offset_m", {f.offset(0), f.offset(1)}},
                         {"frame", frame_name(f.frame)}});
  }
  doc["formation"] = {{"followers", followers}};

  json wps = json::array();
  for (const auto& w : c.waypoints) wps.push_back({w(0), w(1)});
  doc["waypoints_m"] = wps;
  doc["gains"] = gains_json(c.gains);
  if (c.follower_gains) doc["follower_gains"] = gains_json(*c.follower_gains);
  doc["safety"] = {{"l_m", c.l},
                   {"alpha_c", c.alpha_c},
                   {"alpha_k", c.alpha_k},
                   {"d_min_m", c.d_min},
                   {"eta", c.eta},
                   {"activation_radius", c.gate.radius},
                   {"far_alpha_scale", c.gate.far_alpha_scale}};
  doc["flow"] = {{"tau_s", c.flow.tau},
                 {"eps", c.flow.eps},
                 {"dt_s", c.flow.dt},
                 {"warm_tol", c.flow.warm_tol},
                 {"max_flow_step", c.flow.max_flow_step},
                 {"warm_budget", c.flow.warm_budget}};
  doc["horizon_s"] = c.horizon;
  doc["gamma_matrix"] = {{c.gamma(0, 0), c.gamma(0, 1)}, {c.gamma(1, 0), c.gamma(1, 1)}};
  doc["seed"] = c.seed;
  doc["allow_unsafe_start"] = c.allow_unsafe_start;
  doc["log"] = {{"flow_period_s", c.flow_log_period}};
  return doc;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) { return to_json(a) == to_json(b); }

std::string config_hash(const ScenarioConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cbfswarm
