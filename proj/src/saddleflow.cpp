#include "cbfswarm/saddleflow.hpp"

#include <cmath>
#include <sstream>

namespace cbfswarm {

FlowState FlowState::zeros(std::size_t agents, std::size_t q) {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * agents)),
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q)),
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q))};
}

void FlowParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(tau > 0.0, "tau_s must be > 0");
  require(eps > 0.0, "eps must be > 0");
  require(dt > 0.0, "dt_s must be > 0");
  require(dt <= tau / 10.0 * (1.0 + 1e-12), "dt_s must be <= tau_s / 10");
  require(warm_tol > 0.0, "warm_tol must be > 0");
  require(max_flow_step > 0.0, "max_flow_step must be > 0");
  require(warm_budget > 0, "warm_budget must be > 0");
}

std::size_t FlowParams::substeps() const {
  const double ratio = dt / (max_flow_step * tau);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-12)));
}

double FlowDerivative::max_abs() const {
  double m = 0.0;
  if (gamma.size()) m = std::max(m, gamma.cwiseAbs().maxCoeff());
  if (z.size()) m = std::max(m, z.cwiseAbs().maxCoeff());
  if (lambda.size()) m = std::max(m, lambda.cwiseAbs().maxCoeff());
  return m;
}

FlowDerivative fast_flow_rhs(const FlowState& flow, const NetworkProblem& problem,
                             const MismatchIndex& index, double tau, double eps) {
  FlowDerivative d{Eigen::VectorXd::Zero(flow.gamma.size()), Eigen::VectorXd::Zero(flow.z.size()),
                   Eigen::VectorXd::Zero(flow.lambda.size())};
  for (AgentId i = 0; i < problem.agents.size(); ++i) {
    const auto& ap = problem.agents[i];
    const auto seg = static_cast<Eigen::Index>(2 * i);
    const Vec2 g = flow.gamma.segment<2>(seg);
    Vec2 grad = ap.H * (g - ap.u_nom);
    const auto& slots = index.agent_slots(i);
    for (std::size_t r = 0; r < slots.size(); ++r) {
      const std::size_t s = slots[r];
      const auto& row = ap.rows[r];
      grad += flow.lambda(static_cast<Eigen::Index>(s)) * row.a;

      double dz = -eps * flow.z(static_cast<Eigen::Index>(s));
      double residual = row.eval(g);
      for (std::size_t c : index.slot(s).coupled) {
        dz -= flow.lambda(static_cast<Eigen::Index>(s)) - flow.lambda(static_cast<Eigen::Index>(c));
        residual += flow.z(static_cast<Eigen::Index>(s)) - flow.z(static_cast<Eigen::Index>(c));
      }
      d.z(static_cast<Eigen::Index>(s)) = dz / tau;
      d.lambda(static_cast<Eigen::Index>(s)) = projected(residual, flow.lambda(static_cast<Eigen::Index>(s))) / tau;
    }
    d.gamma.segment<2>(seg) = -grad / tau;
  }
  return d;
}

namespace {

void euler_update(FlowState& flow, const FlowDerivative& d, double h) {
  flow.gamma += h * d.gamma;
  flow.z += h * d.z;
  flow.lambda = (flow.lambda + h * d.lambda).cwiseMax(0.0);
}

}  // namespace

ControlRound control_round(const WorldState& world, const NetworkModel& model, AgentExecutor* exec) {
  const std::size_t n = world.agents.size();
  ControlRound round;
  round.problem.agents.resize(n);
  round.inputs.resize(n);
  round.held.assign(n, 0);
  auto job = [&](std::size_t i) {
    round.problem.agents[i] = local_problem(model, i, world.agents, world.plan.current());
    const LocalQP qp = assemble_local_qp(round.problem.agents[i], model.index, i, world.flow.z);
    const QPSolution sol = solve_qp(qp);
    if (sol.optimal()) {
      round.inputs[i] = ControlInput::from(sol.u);
    } else {
      round.inputs[i] = i < world.last_input.size() ? world.last_input[i] : ControlInput{};
      round.held[i] = 1;
    }
  };
  if (exec) {
    exec->run(n, job);
  } else {
    for (std::size_t i = 0; i < n; ++i) job(i);
  }
  return round;
}

WorldState advance(const WorldState& world, const NetworkModel& model, const FlowParams& params,
                   const ControlRound& round) {
  if (params.dt == 0.0) return world;
  WorldState next = world;

  const std::size_t sub = params.substeps();
  const double h = params.dt / static_cast<double>(sub);
  for (std::size_t k = 0; k < sub; ++k) {
    euler_update(next.flow, fast_flow_rhs(next.flow, round.problem, model.index, params.tau, params.eps), h);
  }
  for (std::size_t i = 0; i < next.agents.size(); ++i) {
    next.agents[i] = unicycle_step(world.agents[i], round.inputs[i], params.dt);
  }
  next.last_input = round.inputs;
  next.plan = advance_waypoint(world.plan, off_axis_point(next.agents[model.leader], model.offaxis),
                               model.gains.goal_tol);
  next.t = world.t + params.dt;
  return next;
}

WorldState flow_step(const WorldState& world, const NetworkModel& model, const FlowParams& params,
                     AgentExecutor* exec, ControlRound* round_out) {
  if (params.dt == 0.0) return world;
  ControlRound round = control_round(world, model, exec);
  WorldState next = advance(world, model, params, round);
  if (round_out) *round_out = std::move(round);
  return next;
}

FlowState warm_start(std::span<const AgentState> agents, const NetworkModel& model,
                     const FlowParams& params, const Vec2& leader_goal) {
  const NetworkProblem problem = build_network_problem(model, agents, leader_goal);
  FlowState flow = FlowState::zeros(agents.size(), model.index.q());
  for (AgentId i = 0; i < agents.size(); ++i) {
    flow.gamma.segment<2>(static_cast<Eigen::Index>(2 * i)) = problem.agents[i].u_nom;
  }
  const double h = std::min(params.dt, params.max_flow_step * params.tau);
  double residual = 0.0;
  for (std::size_t it = 0; it < params.warm_budget; ++it) {
    const FlowDerivative d = fast_flow_rhs(flow, problem, model.index, params.tau, params.eps);
    residual = d.max_abs() * params.tau;
    if (residual < params.warm_tol) return flow;
    euler_update(flow, d, h);
  }
  std::ostringstream msg;
  msg << "warm start did not converge within " << params.warm_budget << " steps (residual "
      << residual << ", tolerance " << params.warm_tol << ")";
  throw FlowError(msg.str());
}

}  // namespace cbfswarm
