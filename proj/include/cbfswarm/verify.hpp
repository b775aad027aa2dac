#ifndef CBFSWARM_VERIFY_HPP
#define CBFSWARM_VERIFY_HPP

#include <string>
#include <vector>

#include "cbfswarm/simulate.hpp"

namespace cbfswarm {

/// Max-norm gap between the u-part of the regularized (u, z) solution and
/// the coupled problem's solution.
double equivalence_gap(const NetworkModel& model, const NetworkProblem& problem, double eps = 1e-8);

/// ||u^eps - u*|| (Euclidean, stacked) for each eps.
std::vector<double> sensitivity_sweep(const NetworkModel& model, const NetworkProblem& problem,
                                      const std::vector<double>& eps);

/// Non-increasing up to `slack`.
bool non_increasing(const std::vector<double>& values, double slack = 1e-12);

struct TrackingSample {
  double t = 0.0;
  double error = 0.0;
};

/// ||u_applied(t) - u^{*,eps'}(xi(t))|| at every `period` seconds of the log,
/// with eps' the oracle coefficient matching the flow's eps.
std::vector<TrackingSample> tracking_errors(const TrajectoryLog& log, const ScenarioConfig& config,
                                            double period = 1.0);
double sup_error(const std::vector<TrackingSample>& samples);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  double safety_tol = 1e-3;
  double equivalence_tol = 1e-6;
  double sensitivity_tol = 1e-3;
  double equivalence_period = 10.0;
  bool tracking_comparison = true;
};

/// Equivalence at sampled states, sensitivity sweep at the initial state,
/// safety margins and multiplier sign over a run, and the tracking trend
/// between tau and tau / 10.
std::vector<CheckResult> run_verify(const ScenarioConfig& config, const VerifyOptions& options = {});

}  // namespace cbfswarm

#endif  // CBFSWARM_VERIFY_HPP
