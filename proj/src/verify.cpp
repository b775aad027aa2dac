#include "cbfswarm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cbfswarm {

double equivalence_gap(const NetworkModel& model, const NetworkProblem& problem, double eps) {
  const CentralizedSolution reg = solve_centralized_regularized(model, problem, eps);
  const CentralizedSolution coupled = solve_centralized_unregularized(model, problem);
  if (coupled.status != QPStatus::optimal) throw OracleError("coupled problem is not solvable");
  return (reg.u - coupled.u).lpNorm<Eigen::Infinity>();
}

std::vector<double> sensitivity_sweep(const NetworkModel& model, const NetworkProblem& problem,
                                      const std::vector<double>& eps) {
  const CentralizedSolution coupled = solve_centralized_unregularized(model, problem);
  if (coupled.status != QPStatus::optimal) throw OracleError("coupled problem is not solvable");
  std::vector<double> out;
  out.reserve(eps.size());
  for (double e : eps) out.push_back((solve_centralized_regularized(model, problem, e).u - coupled.u).norm());
  return out;
}

bool non_increasing(const std::vector<double>& values, double slack) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[k - 1] + slack) return false;
  }
  return true;
}

std::vector<TrackingSample> tracking_errors(const TrajectoryLog& log, const ScenarioConfig& config,
                                            double period) {
  const NetworkModel model = make_model(config);
  const double oracle_eps = config.flow.eps / 2.0;
  const auto every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period / config.flow.dt)));
  std::vector<TrackingSample> out;
  for (std::size_t k = 0; k < log.steps.size(); k += every) {
    const auto& st = log.steps[k];
    const Vec2& goal = config.waypoints.at(st.waypoint_index);
    const CentralizedSolution sol = solve_centralized_regularized(model, st.agents, goal, oracle_eps);
    double e2 = 0.0;
    for (AgentId i = 0; i < st.inputs.size(); ++i) e2 += (st.inputs[i].vec() - sol.agent_input(i)).squaredNorm();
    out.push_back({st.t, std::sqrt(e2)});
  }
  return out;
}

double sup_error(const std::vector<TrackingSample>& samples) {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.error);
  return m;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

struct RunSummary {
  TrajectoryLog log;
  double min_lambda = 0.0;
};

RunSummary run(const ScenarioConfig& config) {
  RunSummary r;
  SimulationOptions opts;
  opts.observer = [&](const WorldState& w, const ControlRound&) {
    if (w.flow.lambda.size()) r.min_lambda = std::min(r.min_lambda, w.flow.lambda.minCoeff());
  };
  r.log = simulate(config, opts);
  return r;
}

}  // namespace

std::vector<CheckResult> run_verify(const ScenarioConfig& config, const VerifyOptions& options) {
  std::vector<CheckResult> out;
  const NetworkModel model = make_model(config);
  const auto states0 = config.initial_states();
  const NetworkProblem p0 = build_network_problem(model, states0, config.waypoints.front());

  const RunSummary base = run(config);

  {
    CheckResult c{"equivalence", true, ""};
    double worst = 0.0;
    const auto every = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(options.equivalence_period / config.flow.dt)));
    std::size_t samples = 0;
    for (std::size_t k = 0; k < base.log.steps.size(); k += every, ++samples) {
      const auto& st = base.log.steps[k];
      const NetworkProblem p = build_network_problem(model, st.agents, config.waypoints.at(st.waypoint_index));
      try {
        worst = std::max(worst, equivalence_gap(model, p));
      } catch (const OracleError& e) {
        c.pass = false;
        c.detail = "t=" + fmt(st.t) + ": " + e.what();
        break;
      }
    }
    if (c.pass) {
      c.pass = worst <= options.equivalence_tol;
      c.detail = "max gap " + fmt(worst) + " over " + std::to_string(samples) + " states";
    }
    out.push_back(c);
  }

  {
    CheckResult c{"sensitivity", false, ""};
    try {
      const auto errs = sensitivity_sweep(model, p0, {1e-1, 1e-2, 1e-3, 1e-4});
      c.pass = non_increasing(errs) && errs.back() <= options.sensitivity_tol;
      c.detail = "errors";
      for (double e : errs) c.detail += " " + fmt(e);
    } catch (const OracleError& e) {
      c.detail = e.what();
    }
    out.push_back(c);
  }

  {
    double obs = 0.0, pair = 0.0;
    bool any_obs = false, any_pair = false;
    for (std::size_t k = 0; k < base.log.constraints.size(); ++k) {
      for (const auto& st : base.log.steps) {
        if (base.log.constraints[k].kind == SubgraphKind::pair) {
          pair = any_pair ? std::min(pair, st.margins[k]) : st.margins[k];
          any_pair = true;
        } else {
          obs = any_obs ? std::min(obs, st.margins[k]) : st.margins[k];
          any_obs = true;
        }
      }
    }
    const bool ok = (!any_obs || obs >= -options.safety_tol) && (!any_pair || pair >= -options.safety_tol);
    out.push_back({"safety", ok,
                   "min obstacle margin " + (any_obs ? fmt(obs) : std::string("n/a")) + ", min pair margin " +
                       (any_pair ? fmt(pair) : std::string("n/a"))});
    out.push_back({"multipliers", base.min_lambda >= 0.0, "min lambda " + fmt(base.min_lambda)});
  }

  if (options.tracking_comparison) {
    ScenarioConfig fast = config;
    fast.flow.tau = config.flow.tau / 10.0;
    fast.flow.dt = std::min(config.flow.dt, fast.flow.tau / 10.0);
    const double slow_sup = sup_error(tracking_errors(base.log, config));
    const double fast_sup = sup_error(tracking_errors(run(fast).log, fast));
    out.push_back({"tracking", fast_sup < slow_sup,
                   "sup error tau=" + fmt(config.flow.tau) + ": " + fmt(slow_sup) + ", tau=" +
                       fmt(fast.flow.tau) + ": " + fmt(fast_sup)});
  }
  return out;
}

}  // namespace cbfswarm
