#ifndef CBFSWARM_DENSE_QP_HPP
#define CBFSWARM_DENSE_QP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

namespace cbfswarm {

enum class QPStatus { optimal, infeasible, iteration_limit };

template <typename Scalar>
struct DenseQPResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> multipliers;  // one per row, zero when inactive
  std::vector<int> active;                                // rows in the final active set
  QPStatus status = QPStatus::infeasible;
  int iterations = 0;
};

template <typename Scalar>
struct KKTResidual {
  Scalar stationarity = 0;
  Scalar primal = 0;
  Scalar dual = 0;
  Scalar complementarity = 0;

  Scalar max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

/// Residuals of min 1/2 x'Gx + c'x s.t. A x + b <= 0 at (x, mu).
template <typename Scalar>
KKTResidual<Scalar> kkt_residual(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& G,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu) {
  KKTResidual<Scalar> r;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad = G * x + c;
  if (A.rows() > 0) grad += A.transpose() * mu;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : Scalar(0);
  if (A.rows() > 0) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g = A * x + b;
    r.primal = std::max(Scalar(0), g.maxCoeff());
    r.dual = std::max(Scalar(0), -mu.minCoeff());
    r.complementarity = mu.cwiseProduct(g).cwiseAbs().maxCoeff();
  }
  return r;
}

/// Dual active-set method for strictly convex QPs
///
///     min 1/2 x'Gx + c'x   s.t.   A x + b <= 0,
///
/// starting from the unconstrained minimizer and adding violated rows one at a
/// time while keeping dual feasibility. The most violated row enters; exact
/// ties go to the lowest row index. Infeasibility is detected when a violated
/// row is linearly dependent on the active set and no active multiplier can be
/// released.
///
/// The projections onto the active set are rebuilt from a Householder QR of
/// L^{-1} N on every change, where G = L L'. Problems here have at most a few
/// dozen variables, so there is no incremental factor update.
template <typename Scalar>
class DualActiveSetQP {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit DualActiveSetQP(int max_iterations = -1) : max_iterations_(max_iterations) {}

  /// G must be symmetric positive definite; otherwise the result is `infeasible`
  /// with an empty x.
  DenseQPResult<Scalar> solve(const Mat& G, const Vec& c, const Mat& A, const Vec& b) const {
    const Eigen::Index n = G.rows();
    const Eigen::Index m = A.rows();
    DenseQPResult<Scalar> res;
    res.multipliers = Vec::Zero(m);

    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) return res;
    const Mat L = llt.matrixL();

    Vec x = llt.solve(-c);
    std::vector<int> active;
    std::vector<Scalar> u;  // multipliers of `active`
    std::vector<char> in_active(static_cast<std::size_t>(m), 0);

    const int cap = max_iterations_ > 0 ? max_iterations_ : 50 * static_cast<int>(n + m) + 100;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();

    auto violation_tol = [&](Eigen::Index j) {
      return Scalar(1e3) * eps * (Scalar(1) + std::abs(b(j)) + A.row(j).norm() * x.norm());
    };
    // GI works with n'x >= b0; our rows are a'x + b <= 0, so n = -a and s = -(a'x + b).
    auto slack = [&](Eigen::Index j) { return -(A.row(j).dot(x) + b(j)); };

    int iter = 0;
    while (true) {
      int p = -1;
      Scalar worst = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (in_active[static_cast<std::size_t>(j)]) continue;
        const Scalar s = slack(j);
        if (s < -violation_tol(j) && (p < 0 || s < worst)) {
          p = static_cast<int>(j);
          worst = s;
        }
      }
      if (p < 0) {
        res.status = QPStatus::optimal;
        break;
      }

      const Vec np = -A.row(p).transpose();
      Scalar up = 0;
      Scalar sp = slack(p);
      bool added = false;
      while (!added) {
        if (++iter > cap) {
          res.status = QPStatus::iteration_limit;
          res.x = x;
          res.iterations = iter;
          return res;
        }
        const Eigen::Index k = static_cast<Eigen::Index>(active.size());
        Vec d = L.template triangularView<Eigen::Lower>().solve(np);
        Vec z;
        Vec r(k);
        Scalar dnorm = d.norm();
        Scalar d2norm;
        if (k == 0) {
          z = L.transpose().template triangularView<Eigen::Upper>().solve(d);
          d2norm = dnorm;
        } else {
          Mat N(n, k);
          for (Eigen::Index a = 0; a < k; ++a) N.col(a) = -A.row(active[static_cast<std::size_t>(a)]).transpose();
          const Mat B = L.template triangularView<Eigen::Lower>().solve(N);
          Eigen::HouseholderQR<Mat> qr(B);
          const Mat Q = qr.householderQ();
          const Mat R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
          const Vec dq = Q.transpose() * d;
          r = R.template triangularView<Eigen::Upper>().solve(dq.head(k));
          const Vec d2 = Q.rightCols(n - k) * dq.tail(n - k);
          d2norm = d2.norm();
          z = L.transpose().template triangularView<Eigen::Upper>().solve(d2);
        }
        const bool z_zero = d2norm <= Scalar(1e4) * eps * std::max(dnorm, Scalar(1));

        // partial (dual) step length: first active multiplier to hit zero
        Scalar t1 = std::numeric_limits<Scalar>::infinity();
        int l = -1;
        for (Eigen::Index a = 0; a < k; ++a) {
          if (r(a) > Scalar(0)) {
            const Scalar ratio = u[static_cast<std::size_t>(a)] / r(a);
            if (ratio < t1) {
              t1 = ratio;
              l = static_cast<int>(a);
            }
          }
        }
        Scalar t2 = std::numeric_limits<Scalar>::infinity();
        if (!z_zero) t2 = -sp / z.dot(np);

        if (!std::isfinite(t1) && !std::isfinite(t2)) {
          res.status = QPStatus::infeasible;
          res.x = x;
          res.iterations = iter;
          return res;
        }
        if (!std::isfinite(t2)) {
          for (Eigen::Index a = 0; a < k; ++a) u[static_cast<std::size_t>(a)] -= t1 * r(a);
          up += t1;
          drop(active, u, in_active, l);
          continue;
        }
        const Scalar t = std::min(t1, t2);
        x += t * z;
        for (Eigen::Index a = 0; a < k; ++a) u[static_cast<std::size_t>(a)] -= t * r(a);
        up += t;
        if (t2 <= t1) {
          active.push_back(p);
          u.push_back(up);
          in_active[static_cast<std::size_t>(p)] = 1;
          added = true;
        } else {
          drop(active, u, in_active, l);
          sp = slack(p);
        }
      }
    }

    res.x = x;
    res.iterations = iter;
    res.active = active;
    for (std::size_t a = 0; a < active.size(); ++a) res.multipliers(active[a]) = std::max(u[a], Scalar(0));
    return res;
  }

 private:
  static void drop(std::vector<int>& active, std::vector<Scalar>& u, std::vector<char>& in_active, int l) {
    in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(l)])] = 0;
    active.erase(active.begin() + l);
    u.erase(u.begin() + l);
  }

  int max_iterations_;
};

}  // namespace cbfswarm

#endif  // CBFSWARM_DENSE_QP_HPP
