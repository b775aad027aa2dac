#include "cbfswarm/simulate.hpp"

#include <cmath>
#include <memory>

namespace cbfswarm {

double aggregated_residual(const NetworkModel& model, const NetworkProblem& problem, std::size_t k,
                           std::span<const ControlInput> inputs) {
  double sum = 0.0;
  for (std::size_t flat : model.index.constraint_slots(k)) {
    const AgentId i = model.index.slot(flat).agent;
    sum += problem.row(model.index, flat).eval(inputs[i].vec());
  }
  return sum;
}

TrajectoryLog simulate(const ScenarioConfig& config, const SimulationOptions& options) {
  const NetworkModel model = make_model(config);
  const FlowParams& params = config.flow;

  TrajectoryLog log;
  log.meta.config_hash = config_hash(config);
  log.meta.seed = config.seed;
  log.meta.dt = params.dt;
  log.constraints = constraint_infos(model);

  WorldState world;
  world.agents = config.initial_states();
  world.plan.waypoints = config.waypoints;
  world.flow = warm_start(world.agents, model, params, world.plan.current());
  world.last_input.assign(world.agents.size(), ControlInput{});

  std::unique_ptr<AgentExecutor> exec;
  if (options.threads > 1) exec = std::make_unique<AgentExecutor>(options.threads);

  const std::size_t steps = config.num_steps();
  const std::size_t p = model.subgraphs.size();
  const std::size_t flow_every =
      config.flow_log_period > 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.flow_log_period / params.dt)))
          : 0;
  const Vec2& last_wp = config.waypoints.back();
  bool arrived = false;

  for (std::size_t k = 0;; ++k) {
    const ControlRound round = control_round(world, model, exec.get());

    StepRecord rec;
    rec.t = world.t;
    rec.waypoint_index = world.plan.current_index;
    rec.agents = world.agents;
    for (const auto& a : world.agents) rec.points.push_back(off_axis_point(a, model.offaxis));
    rec.inputs = round.inputs;
    rec.held = round.held;
    rec.margins.resize(p);
    rec.flags.resize(p);
    for (std::size_t c = 0; c < p; ++c) {
      rec.margins[c] = constraint_margin(model, c, world.agents);
      rec.flags[c] = aggregated_residual(model, round.problem, c, round.inputs) > 1e-9 ? 1 : 0;
    }
    for (std::size_t i = 0; i < round.held.size(); ++i) {
      if (round.held[i]) log.events.push_back({world.t, "qp_infeasible", static_cast<long>(i), ""});
    }
    if (!arrived && world.plan.at_last() &&
        (rec.points[model.leader] - last_wp).norm() < config.gains.goal_tol) {
      arrived = true;
      log.events.push_back({world.t, "waypoint_arrival", static_cast<long>(model.leader),
                            std::to_string(world.plan.current_index)});
    }
    if (flow_every && k % flow_every == 0) log.flow.push_back({world.t, world.flow});
    log.steps.push_back(std::move(rec));
    if (options.observer) options.observer(world, round);
    if (k == steps) break;

    const std::size_t before = world.plan.current_index;
    world = advance(world, model, params, round);
    world.t = static_cast<double>(k + 1) * params.dt;
    if (world.plan.current_index != before) {
      log.events.push_back({world.t, "waypoint_switch", static_cast<long>(model.leader),
                            std::to_string(world.plan.current_index)});
    }
  }
  return log;
}

}  // namespace cbfswarm
