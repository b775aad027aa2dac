#ifndef CBFSWARM_SADDLEFLOW_HPP
#define CBFSWARM_SADDLEFLOW_HPP

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cbfswarm/executor.hpp"
#include "cbfswarm/network.hpp"
#include "cbfswarm/qpsolve.hpp"

namespace cbfswarm {

/// Fast variables: auxiliary primal gamma (2 per agent), mismatch z and
/// multipliers lambda (both in MismatchIndex layout, lambda >= 0).
struct FlowState {
  Eigen::VectorXd gamma;
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;

  static FlowState zeros(std::size_t agents, std::size_t q);
  bool operator==(const FlowState& o) const {
    return gamma == o.gamma && z == o.z && lambda == o.lambda;
  }
};

struct FlowParams {
  double tau = 0.1;
  double eps = 1e-3;
  double dt = 1e-3;
  double warm_tol = 1e-6;
  /// Largest Euler step of the fast flow in units of tau. Plant steps that
  /// exceed it are split into equal flow substeps.
  double max_flow_step = 0.05;
  std::size_t warm_budget = 10'000'000;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::size_t substeps() const;
};

/// Time derivatives of (gamma, z, lambda), already divided by tau.
struct FlowDerivative {
  Eigen::VectorXd gamma;
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;

  double max_abs() const;
};

/// [a]^+_b: a when b > 0, max(0, a) when b == 0.
inline double projected(double a, double b) { return b > 0.0 ? a : std::max(0.0, a); }

/// Right-hand side of the projected saddle-point flow of the regularized
/// (u, z) problem. The flow's z-damping is -eps z, so its equilibrium is the
/// oracle solution with regularization coefficient eps / 2.
FlowDerivative fast_flow_rhs(const FlowState& flow, const NetworkProblem& problem,
                             const MismatchIndex& index, double tau, double eps);

struct WorldState {
  FlowState flow;
  std::vector<AgentState> agents;
  WaypointPlan plan;
  double t = 0.0;
  /// Input applied on the previous step, held when a local QP is infeasible.
  std::vector<ControlInput> last_input;
};

struct ControlRound {
  NetworkProblem problem;
  std::vector<ControlInput> inputs;
  std::vector<char> held;  // 1 where the local QP was infeasible
};

/// Every agent assembles and solves its local QP at the current (xi, z).
ControlRound control_round(const WorldState& world, const NetworkModel& model,
                           AgentExecutor* exec = nullptr);

/// Advances plant (RK4, inputs held over dt), flow (forward Euler + orthant
/// projection of lambda) and the waypoint plan from the same pre-step values.
WorldState advance(const WorldState& world, const NetworkModel& model, const FlowParams& params,
                   const ControlRound& round);

/// One synchronous round: control_round followed by advance.
WorldState flow_step(const WorldState& world, const NetworkModel& model, const FlowParams& params,
                     AgentExecutor* exec = nullptr, ControlRound* round_out = nullptr);

class FlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the fast flow with the state frozen until max|rhs| * tau < warm_tol.
/// Starts from gamma = u_nom, z = 0, lambda = 0. Throws FlowError when the
/// budget runs out.
FlowState warm_start(std::span<const AgentState> agents, const NetworkModel& model,
                     const FlowParams& params, const Vec2& leader_goal);

}  // namespace cbfswarm

#endif  // CBFSWARM_SADDLEFLOW_HPP
