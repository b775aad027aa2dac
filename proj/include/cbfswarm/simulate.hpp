#ifndef CBFSWARM_SIMULATE_HPP
#define CBFSWARM_SIMULATE_HPP

#include <functional>

#include "cbfswarm/trajectory.hpp"

namespace cbfswarm {

struct SimulationOptions {
  std::size_t threads = 1;
  /// Called after every recorded step with the pre-step world and its round.
  std::function<void(const WorldState&, const ControlRound&)> observer;
};

/// Warm start at the initial state, then the synchronous loop over the
/// horizon. Records num_steps() + 1 steps.
TrajectoryLog simulate(const ScenarioConfig& config, const SimulationOptions& options = {});

/// Sum over the members of constraint k of g_i^k(xi, u_i).
double aggregated_residual(const NetworkModel& model, const NetworkProblem& problem, std::size_t k,
                           std::span<const ControlInput> inputs);

}  // namespace cbfswarm

#endif  // CBFSWARM_SIMULATE_HPP
