#ifndef CBFSWARM_QPSOLVE_HPP
#define CBFSWARM_QPSOLVE_HPP

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cbfswarm/dense_qp.hpp"
#include "cbfswarm/network.hpp"

namespace cbfswarm {

/// min 1/2 (u - target)' H (u - target)  s.t.  a_k.u + b_k <= 0, with b_k
/// already shifted by the mismatch offset c_k.
struct LocalQP {
  Mat2 H = Mat2::Identity();
  Vec2 target = Vec2::Zero();
  std::vector<ConstraintRow> rows;
  std::vector<double> mismatch;  // c_k per row
};

struct QPSolution {
  Vec2 u = Vec2::Zero();
  std::vector<double> multipliers;
  QPStatus status = QPStatus::infeasible;

  bool optimal() const { return status == QPStatus::optimal; }
};

LocalQP assemble_local_qp(const AgentProblem& agent, const MismatchIndex& index, AgentId i,
                          const Eigen::Ref<const Eigen::VectorXd>& z);

/// Builds agent i's QP from the states of i and its neighbors only.
LocalQP assemble_local_qp(AgentId i, std::span<const AgentState> states, const Eigen::VectorXd& z,
                          const NetworkModel& model, const Vec2& leader_goal);

QPSolution solve_qp(const LocalQP& qp);

KKTResidual<double> kkt_residual(const LocalQP& qp, const QPSolution& sol);

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solution of the coupled network problem. For the regularized (u, z)
/// problem `z` and `lambda` follow the MismatchIndex layout; for the
/// unregularized problem `z` is empty and `lambda` has one entry per
/// constraint subgraph.
struct CentralizedSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd z;
  Eigen::VectorXd lambda;
  double objective = 0.0;
  double kkt_residual = 0.0;
  QPStatus status = QPStatus::infeasible;

  Vec2 agent_input(AgentId i) const { return u.segment<2>(2 * static_cast<Eigen::Index>(i)); }
};

/// min sum_i f_i(u_i) + eps * sum z^2 subject to the per-slot mismatch rows.
/// Throws OracleError if the solve does not certify.
CentralizedSolution solve_centralized_regularized(const NetworkModel& model, const NetworkProblem& problem,
                                                  double eps);
CentralizedSolution solve_centralized_regularized(const NetworkModel& model,
                                                  std::span<const AgentState> states,
                                                  const Vec2& leader_goal, double eps);

/// min sum_i f_i(u_i) subject to sum_{i in G_k} g_i^k(u_i) <= 0 directly over u.
/// Infeasibility is reported through `status`.
CentralizedSolution solve_centralized_unregularized(const NetworkModel& model,
                                                    const NetworkProblem& problem);
CentralizedSolution solve_centralized_unregularized(const NetworkModel& model,
                                                    std::span<const AgentState> states,
                                                    const Vec2& leader_goal);

}  // namespace cbfswarm

#endif  // CBFSWARM_QPSOLVE_HPP
