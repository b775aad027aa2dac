#include "cbfswarm/trajectory.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace cbfswarm {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string ConstraintInfo::label() const {
  if (kind == SubgraphKind::pair) {
    return "pair(" + std::to_string(members.at(0)) + "," + std::to_string(members.at(1)) + ")";
  }
  return "obstacle(" + std::to_string(members.at(0)) + "," + std::to_string(obstacle) + ")";
}

std::vector<ConstraintInfo> constraint_infos(const NetworkModel& model) {
  std::vector<ConstraintInfo> out;
  for (const auto& sg : model.subgraphs) out.push_back({sg.kind, sg.members, sg.obstacle});
  return out;
}

std::string trajectory_csv(const TrajectoryLog& log, std::size_t stride) {
  std::string out = "t,agent,x,y,theta,px,py,v,w\n";
  for (std::size_t k = 0; k < log.steps.size(); k += std::max<std::size_t>(stride, 1)) {
    const auto& st = log.steps[k];
    const std::string t = format_double(st.t);
    for (std::size_t i = 0; i < st.agents.size(); ++i) {
      const auto& a = st.agents[i];
      out += t + ',' + std::to_string(i) + ',' + format_double(a.s(0)) + ',' + format_double(a.s(1)) + ',' +
             format_double(a.theta) + ',' + format_double(st.points[i](0)) + ',' +
             format_double(st.points[i](1)) + ',' + format_double(st.inputs[i].v) + ',' +
             format_double(st.inputs[i].w) + '\n';
    }
  }
  return out;
}

std::string margins_csv(const TrajectoryLog& log, std::size_t stride) {
  std::string out = "t,constraint,kind,margin,flag\n";
  for (std::size_t k = 0; k < log.steps.size(); k += std::max<std::size_t>(stride, 1)) {
    const auto& st = log.steps[k];
    const std::string t = format_double(st.t);
    for (std::size_t c = 0; c < st.margins.size(); ++c) {
      out += t + ',' + std::to_string(c) + ',' + log.constraints[c].kind_name() + ',' +
             format_double(st.margins[c]) + ',' + (st.flags[c] ? '1' : '0') + '\n';
    }
  }
  return out;
}

std::string flow_csv(const TrajectoryLog& log) {
  std::string out = "t,kind,index,value\n";
  for (const auto& fs : log.flow) {
    const std::string t = format_double(fs.t);
    auto emit = [&](const char* kind, const Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out += t + ',' + kind + ',' + std::to_string(i) + ',' + format_double(v(i)) + '\n';
      }
    };
    emit("gamma", fs.flow.gamma);
    emit("z", fs.flow.z);
    emit("lambda", fs.flow.lambda);
  }
  return out;
}

std::string events_csv(const TrajectoryLog& log) {
  std::string out = "t,kind,agent,detail\n";
  for (const auto& e : log.events) {
    out += format_double(e.t) + ',' + e.kind + ',' + std::to_string(e.agent) + ',' + e.detail + '\n';
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw std::runtime_error("bad number in log: " + s);
  return v;
}

}  // namespace

void write_run(const std::filesystem::path& dir, const TrajectoryLog& log, const ScenarioConfig& config,
               std::size_t stride) {
  std::filesystem::create_directories(dir);
  write_text(dir / "trajectory.csv", trajectory_csv(log, stride));
  write_text(dir / "margins.csv", margins_csv(log, stride));
  write_text(dir / "flow.csv", flow_csv(log));
  write_text(dir / "events.csv", events_csv(log));

  json cons = json::array();
  for (const auto& c : log.constraints) {
    cons.push_back({{"kind", c.kind_name()}, {"members", c.members}, {"obstacle", c.obstacle}});
  }
  const json meta{{"config_hash", log.meta.config_hash}, {"seed", log.meta.seed},
                  {"version", log.meta.version},        {"dt_s", log.meta.dt},
                  {"stride", stride},                   {"constraints", cons}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
  write_text(dir / "scenario.json", to_json(config).dump(2) + "\n");
}

RunData read_run(const std::filesystem::path& dir) {
  RunData run;
  run.config = parse_scenario_json(json::parse(read_text(dir / "scenario.json")));
  const json meta = json::parse(read_text(dir / "meta.json"));
  auto& log = run.log;
  log.meta.config_hash = meta.at("config_hash").get<std::string>();
  log.meta.seed = meta.at("seed").get<std::uint64_t>();
  log.meta.version = meta.at("version").get<std::string>();
  log.meta.dt = meta.at("dt_s").get<double>();
  log.meta.stride = meta.at("stride").get<std::size_t>();
  for (const auto& c : meta.at("constraints")) {
    ConstraintInfo info;
    info.kind = c.at("kind").get<std::string>() == "pair" ? SubgraphKind::pair : SubgraphKind::obstacle;
    info.members = c.at("members").get<std::vector<AgentId>>();
    info.obstacle = c.at("obstacle").get<std::size_t>();
    log.constraints.push_back(info);
  }

  for (const auto& r : parse_csv(read_text(dir / "events.csv"))) {
    log.events.push_back({to_double(r.at(0)), r.at(1), std::stol(r.at(2)), r.size() > 3 ? r[3] : ""});
  }

  const std::size_t n = run.config.agents.size();
  const std::size_t p = log.constraints.size();
  const auto traj = parse_csv(read_text(dir / "trajectory.csv"));
  const auto margins = parse_csv(read_text(dir / "margins.csv"));
  if (traj.size() % n != 0) throw std::runtime_error("trajectory.csv row count is not a multiple of agents");
  const std::size_t steps = traj.size() / n;
  if (margins.size() != steps * p) throw std::runtime_error("margins.csv does not match trajectory.csv");

  std::size_t wp = 0;
  std::size_t next_event = 0;
  std::vector<LogEvent> switches;
  for (const auto& e : log.events) {
    if (e.kind == "waypoint_switch") switches.push_back(e);
  }
  for (std::size_t k = 0; k < steps; ++k) {
    StepRecord st;
    st.t = to_double(traj[k * n][0]);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = traj[k * n + i];
      st.agents.push_back({{to_double(r[2]), to_double(r[3])}, to_double(r[4]), i});
      st.points.emplace_back(to_double(r[5]), to_double(r[6]));
      st.inputs.push_back({to_double(r[7]), to_double(r[8])});
    }
    st.held.assign(n, 0);
    for (const auto& e : log.events) {
      if (e.kind == "qp_infeasible" && e.t == st.t && e.agent >= 0) st.held[static_cast<std::size_t>(e.agent)] = 1;
    }
    while (next_event < switches.size() && switches[next_event].t <= st.t) {
      wp = std::stoul(switches[next_event].detail);
      ++next_event;
    }
    st.waypoint_index = wp;
    for (std::size_t c = 0; c < p; ++c) {
      const auto& r = margins[k * p + c];
      st.margins.push_back(to_double(r[3]));
      st.flags.push_back(r[4] == "1" ? 1 : 0);
    }
    log.steps.push_back(std::move(st));
  }

  const NetworkModel model = make_model(run.config);
  const auto q = static_cast<Eigen::Index>(model.index.q());
  const auto g = static_cast<Eigen::Index>(2 * n);
  std::map<double, FlowState> samples;
  for (const auto& r : parse_csv(read_text(dir / "flow.csv"))) {
    const double t = to_double(r[0]);
    auto [it, fresh] = samples.try_emplace(t);
    if (fresh) it->second = {Eigen::VectorXd::Zero(g), Eigen::VectorXd::Zero(q), Eigen::VectorXd::Zero(q)};
    const auto idx = static_cast<Eigen::Index>(std::stoul(r[2]));
    const double v = to_double(r[3]);
    if (r[1] == "gamma") it->second.gamma(idx) = v;
    else if (r[1] == "z") it->second.z(idx) = v;
    else it->second.lambda(idx) = v;
  }
  for (auto& [t, f] : samples) log.flow.push_back({t, std::move(f)});
  return run;
}

}  // namespace cbfswarm
