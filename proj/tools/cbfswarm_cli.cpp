#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cbfswarm/metrics.hpp"
#include "cbfswarm/simulate.hpp"
#include "cbfswarm/verify.hpp"

namespace fs = std::filesystem;
using namespace cbfswarm;
using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

int cmd_simulate(const std::string& scenario, const fs::path& out, std::size_t stride) {
  const ScenarioConfig config = parse_scenario(scenario);
  SimulationOptions opts;
  opts.threads = AgentExecutor::threads_from_env();
  const TrajectoryLog log = simulate(config, opts);
  write_run(out, log, config, stride);
  const json metrics = to_json(compute_metrics(log, config));
  std::ofstream(out / "metrics.json") << metrics.dump(2) << "\n";
  std::cout << "wrote " << log.steps.size() << " steps to " << out.string() << "\n";
  std::cout << "waypoints reached: " << (metrics["all_waypoints_reached"].get<bool>() ? "all" : "not all")
            << ", infeasible steps: " << metrics["infeasible_steps"] << "\n";
  return 0;
}

int cmd_oracle(const std::string& scenario, std::optional<double> eps_opt, bool coupled) {
  const ScenarioConfig config = parse_scenario(scenario);
  const double eps = eps_opt.value_or(config.flow.eps / 2);
  const NetworkModel model = make_model(config);
  const auto states = config.initial_states();
  const CentralizedSolution sol =
      coupled ? solve_centralized_unregularized(model, states, config.waypoints.front())
              : solve_centralized_regularized(model, states, config.waypoints.front(), eps);
  json doc{{"eps", coupled ? 0.0 : eps},
           {"status", sol.status == QPStatus::optimal ? "optimal" : "infeasible"},
           {"u", vec_json(sol.u)},
           {"z", vec_json(sol.z)},
           {"lambda", vec_json(sol.lambda)},
           {"objective", sol.objective},
           {"kkt_residual", sol.kkt_residual}};
  std::cout << doc.dump(2) << "\n";
  return sol.status == QPStatus::optimal ? 0 : 1;
}

int cmd_verify(const std::string& scenario, bool tracking) {
  const ScenarioConfig config = parse_scenario(scenario);
  VerifyOptions opts;
  opts.tracking_comparison = tracking;
  bool ok = true;
  for (const auto& c : run_verify(config, opts)) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    ok = ok && c.pass;
  }
  return ok ? 0 : 1;
}

int cmd_plot_data(const fs::path& run_dir, fs::path out) {
  if (out.empty()) out = run_dir;
  fs::create_directories(out);
  const RunData run = read_run(run_dir);
  const MetricsReport m = compute_metrics(run.log, run.config);

  std::ofstream fe(out / "formation_error.csv");
  fe << "t,agent,error\n";
  for (const auto& f : m.followers) {
    for (std::size_t k = 0; k < m.t.size(); ++k) {
      fe << format_double(m.t[k]) << ',' << f.agent << ',' << format_double(f.error[k]) << '\n';
    }
  }
  std::ofstream od(out / "obstacle_distance.csv");
  od << "t,agent,obstacle,distance\n";
  for (const auto& o : m.obstacles) {
    for (std::size_t k = 0; k < m.t.size(); ++k) {
      od << format_double(m.t[k]) << ',' << o.agent << ',' << o.obstacle << ','
         << format_double(o.distance[k]) << '\n';
    }
  }
  std::cout << "wrote formation_error.csv and obstacle_distance.csv to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed CBF navigation for unicycle teams"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  std::size_t stride = 1;
  auto* sim = app.add_subcommand("simulate", "Run a scenario and write logs and metrics");
  sim->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--stride", stride, "Write every n-th step")->check(CLI::PositiveNumber);

  std::optional<double> eps;
  bool coupled = false;
  auto* orc = app.add_subcommand("oracle", "Centralized solution at the initial state");
  orc->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  orc->add_option("--eps", eps, "Regularization coefficient (default: flow eps / 2)")->check(CLI::PositiveNumber);
  orc->add_flag("--coupled", coupled, "Solve the coupled problem without mismatch variables");

  bool no_tracking = false;
  auto* ver = app.add_subcommand("verify", "Run the invariant checks on a scenario");
  ver->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  ver->add_flag("--no-tracking", no_tracking, "Skip the tau comparison run");

  std::string run_dir;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot-data", "Tidy CSVs for formation error and obstacle distance");
  plot->add_option("run-dir", run_dir, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", plot_out, "Output directory (default: run-dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(scenario, out_dir, stride);
    if (*orc) return cmd_oracle(scenario, eps, coupled);
    if (*ver) return cmd_verify(scenario, !no_tracking);
    if (*plot) return cmd_plot_data(run_dir, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
