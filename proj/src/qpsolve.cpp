#include "cbfswarm/qpsolve.hpp"

#include <sstream>

namespace cbfswarm {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Relative KKT acceptance for the centralized oracles.
constexpr double kOracleKKTTol = 1e-8;

double scale_of(const Mat& G, const Vec& c, const Mat& A, const Vec& b) {
  double s = 1.0;
  if (G.size()) s = std::max(s, G.cwiseAbs().maxCoeff());
  if (c.size()) s = std::max(s, c.cwiseAbs().maxCoeff());
  if (A.size()) s = std::max(s, A.cwiseAbs().maxCoeff());
  if (b.size()) s = std::max(s, b.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

LocalQP assemble_local_qp(const AgentProblem& agent, const MismatchIndex& index, AgentId i,
                          const Eigen::Ref<const Eigen::VectorXd>& z) {
  LocalQP qp;
  qp.H = agent.H;
  qp.target = agent.u_nom;
  const auto& slots = index.agent_slots(i);
  qp.rows = agent.rows;
  qp.mismatch.resize(slots.size());
  for (std::size_t r = 0; r < slots.size(); ++r) {
    qp.mismatch[r] = z.size() ? index.mismatch(slots[r], z) : 0.0;
    qp.rows[r].b += qp.mismatch[r];
  }
  return qp;
}

LocalQP assemble_local_qp(AgentId i, std::span<const AgentState> states, const Eigen::VectorXd& z,
                          const NetworkModel& model, const Vec2& leader_goal) {
  if (static_cast<std::size_t>(z.size()) != model.index.q()) {
    throw std::invalid_argument("assemble_local_qp: z has the wrong dimension");
  }
  return assemble_local_qp(local_problem(model, i, states, leader_goal), model.index, i, z);
}

QPSolution solve_qp(const LocalQP& qp) {
  const auto m = static_cast<Eigen::Index>(qp.rows.size());
  Mat A(m, 2);
  Vec b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    A.row(r) = qp.rows[static_cast<std::size_t>(r)].a.transpose();
    b(r) = qp.rows[static_cast<std::size_t>(r)].b;
  }
  const Mat G = qp.H;
  const Vec c = -(qp.H * qp.target);
  const auto res = DualActiveSetQP<double>().solve(G, c, A, b);

  QPSolution sol;
  sol.status = res.status;
  if (res.x.size() == 2) sol.u = res.x;
  sol.multipliers.assign(res.multipliers.data(), res.multipliers.data() + res.multipliers.size());
  return sol;
}

KKTResidual<double> kkt_residual(const LocalQP& qp, const QPSolution& sol) {
  const auto m = static_cast<Eigen::Index>(qp.rows.size());
  Mat A(m, 2);
  Vec b(m), mu(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    A.row(r) = qp.rows[static_cast<std::size_t>(r)].a.transpose();
    b(r) = qp.rows[static_cast<std::size_t>(r)].b;
    mu(r) = sol.multipliers.empty() ? 0.0 : sol.multipliers[static_cast<std::size_t>(r)];
  }
  return kkt_residual<double>(qp.H, -(qp.H * qp.target), A, b, Vec(sol.u), mu);
}

CentralizedSolution solve_centralized_regularized(const NetworkModel& model, const NetworkProblem& problem,
                                                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("regularization eps must be positive");
  const auto& index = model.index;
  const auto N = static_cast<Eigen::Index>(problem.agents.size());
  const auto q = static_cast<Eigen::Index>(index.q());
  const Eigen::Index n = 2 * N + q;

  Mat G = Mat::Zero(n, n);
  Vec c = Vec::Zero(n);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& ap = problem.agents[static_cast<std::size_t>(i)];
    G.block<2, 2>(2 * i, 2 * i) = ap.H;
    c.segment<2>(2 * i) = -(ap.H * ap.u_nom);
  }
  G.bottomRightCorner(q, q).diagonal().setConstant(2.0 * eps);

  Mat A = Mat::Zero(q, n);
  Vec b(q);
  for (Eigen::Index s = 0; s < q; ++s) {
    const auto& slot = index.slot(static_cast<std::size_t>(s));
    const auto& row = problem.row(index, static_cast<std::size_t>(s));
    A.block<1, 2>(s, 2 * static_cast<Eigen::Index>(slot.agent)) = row.a.transpose();
    for (std::size_t other : slot.coupled) {
      A(s, 2 * N + s) += 1.0;
      A(s, 2 * N + static_cast<Eigen::Index>(other)) -= 1.0;
    }
    b(s) = row.b;
  }

  const auto res = DualActiveSetQP<double>().solve(G, c, A, b);
  CentralizedSolution sol;
  sol.status = res.status;
  if (res.status != QPStatus::optimal) {
    throw OracleError("regularized network problem did not solve (status " +
                      std::to_string(static_cast<int>(res.status)) + ")");
  }
  sol.u = res.x.head(2 * N);
  sol.z = res.x.tail(q);
  sol.lambda = res.multipliers;
  const auto kkt = kkt_residual<double>(G, c, A, b, res.x, res.multipliers);
  sol.kkt_residual = kkt.max();
  if (sol.kkt_residual > kOracleKKTTol * scale_of(G, c, A, b)) {
    std::ostringstream msg;
    msg << "regularized oracle KKT residual " << sol.kkt_residual << " exceeds tolerance";
    throw OracleError(msg.str());
  }
  sol.objective = 0.5 * res.x.dot(G * res.x) + c.dot(res.x);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& ap = problem.agents[static_cast<std::size_t>(i)];
    sol.objective += 0.5 * ap.u_nom.dot(ap.H * ap.u_nom);
  }
  return sol;
}

CentralizedSolution solve_centralized_regularized(const NetworkModel& model,
                                                  std::span<const AgentState> states,
                                                  const Vec2& leader_goal, double eps) {
  return solve_centralized_regularized(model, build_network_problem(model, states, leader_goal), eps);
}

CentralizedSolution solve_centralized_unregularized(const NetworkModel& model,
                                                    const NetworkProblem& problem) {
  const auto& index = model.index;
  const auto N = static_cast<Eigen::Index>(problem.agents.size());
  const auto p = static_cast<Eigen::Index>(index.num_constraints());
  const Eigen::Index n = 2 * N;

  Mat G = Mat::Zero(n, n);
  Vec c = Vec::Zero(n);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& ap = problem.agents[static_cast<std::size_t>(i)];
    G.block<2, 2>(2 * i, 2 * i) = ap.H;
    c.segment<2>(2 * i) = -(ap.H * ap.u_nom);
  }
  Mat A = Mat::Zero(p, n);
  Vec b = Vec::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    for (std::size_t s : index.constraint_slots(static_cast<std::size_t>(k))) {
      const auto& row = problem.row(index, s);
      A.block<1, 2>(k, 2 * static_cast<Eigen::Index>(index.slot(s).agent)) += row.a.transpose();
      b(k) += row.b;
    }
  }

  const auto res = DualActiveSetQP<double>().solve(G, c, A, b);
  CentralizedSolution sol;
  sol.status = res.status;
  if (res.status != QPStatus::optimal) return sol;
  sol.u = res.x;
  sol.lambda = res.multipliers;
  sol.kkt_residual = kkt_residual<double>(G, c, A, b, res.x, res.multipliers).max();
  sol.objective = 0.5 * res.x.dot(G * res.x) + c.dot(res.x);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& ap = problem.agents[static_cast<std::size_t>(i)];
    sol.objective += 0.5 * ap.u_nom.dot(ap.H * ap.u_nom);
  }
  return sol;
}

CentralizedSolution solve_centralized_unregularized(const NetworkModel& model,
                                                    std::span<const AgentState> states,
                                                    const Vec2& leader_goal) {
  return solve_centralized_unregularized(model, build_network_problem(model, states, leader_goal));
}

}  // namespace cbfswarm
