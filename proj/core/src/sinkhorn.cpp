#include "eot/sinkhorn.hpp"

#include <cmath>
#include <limits>

#include "eot/errors.hpp"

namespace eot {

Eigen::MatrixXd CostSpec::matrix(const DiscreteMeasure& P,
                                 const DiscreteMeasure& Q) {
  const Eigen::Index n = P.size(), m = Q.size();
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      c(i, j) = evaluate(P.points().row(i), Q.points().row(j));
  return c;
}

namespace {

// log sum_k exp(v_k) with max subtraction.
double log_sum_exp(const Eigen::VectorXd& v) {
  const double vmax = v.maxCoeff();
  return vmax + std::log((v.array() - vmax).exp().sum());
}

Eigen::MatrixXd coupling_density(const Eigen::VectorXd& f,
                                 const Eigen::VectorXd& g,
                                 const Eigen::MatrixXd& cost, double eps) {
  return (((-cost).colwise() + f).rowwise() + g.transpose()).array() / eps;
}

double marginal_residual(const Eigen::MatrixXd& xi, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& q) {
  const double row = ((xi * q).array() - 1.0).abs().maxCoeff();
  const double col = ((xi.transpose() * p).array() - 1.0).abs().maxCoeff();
  return std::max(row, col);
}

}  // namespace

SinkhornSolution solve(const DiscreteMeasure& P, const DiscreteMeasure& Q,
                       const SolveOptions& opts) {
  if (P.dim() != Q.dim())
    throw DimensionMismatch("solve: P and Q have different dimensions");
  if (!(opts.epsilon > 0.0) || !(opts.tol > 0.0))
    throw Error("solve: epsilon and tol must be positive");

  const Eigen::Index n = P.size(), m = Q.size();
  const Eigen::VectorXd& p = P.weights();
  const Eigen::VectorXd& q = Q.weights();
  const double eps = opts.epsilon;
  const Eigen::MatrixXd cost = CostSpec::matrix(P, Q);
  const Eigen::VectorXd logp = p.array().log();
  const Eigen::VectorXd logq = q.array().log();

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd gnew(m), scratch(std::max(n, m));

  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  bool converged = false;
  while (it < opts.max_iter) {
    ++it;
    // f_i = -eps * LSE_j( log q_j + (g_j - c_ij)/eps )
    for (Eigen::Index i = 0; i < n; ++i) {
      scratch.head(m) = logq + (g - cost.row(i).transpose()) / eps;
      f[i] = -eps * log_sum_exp(scratch.head(m));
    }
    // g_j = -eps * LSE_i( log p_i + (f_i - c_ij)/eps )
    for (Eigen::Index j = 0; j < m; ++j) {
      scratch.head(n) = logp + (f - cost.col(j)) / eps;
      gnew[j] = -eps * log_sum_exp(scratch.head(n));
    }
    const double delta = (gnew - g).cwiseAbs().maxCoeff();
    g = gnew;
    const Eigen::MatrixXd xi =
        coupling_density(f, g, cost, eps).array().exp();
    residual = marginal_residual(xi, p, q);
    // Slight margin on the residual so the bound survives re-evaluation
    // under a different summation order.
    if (delta <= opts.tol && residual <= 0.999 * opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence(residual, it);

  // Fix the gauge E_Q g = 0, compensating through f.
  const double shift = q.dot(g);
  g.array() -= shift;
  f.array() += shift;

  SinkhornSolution sol;
  sol.f = std::move(f);
  sol.g = std::move(g);
  sol.epsilon = eps;
  sol.xi = coupling_density(sol.f, sol.g, cost, eps).array().exp();
  sol.cost = p.dot(sol.f) + q.dot(sol.g);
  sol.iterations = it;
  sol.residual = marginal_residual(sol.xi, p, q);
  return sol;
}

namespace {

void check_solution_shape(const SinkhornSolution& sol,
                          const DiscreteMeasure& P,
                          const DiscreteMeasure& Q) {
  if (sol.xi.rows() != P.size() || sol.xi.cols() != Q.size())
    throw DimensionMismatch("solution does not match the given measures");
}

}  // namespace

double primal_value(const SinkhornSolution& sol, const DiscreteMeasure& P,
                    const DiscreteMeasure& Q) {
  check_solution_shape(sol, P, Q);
  const Eigen::MatrixXd cost = CostSpec::matrix(P, Q);
  const Eigen::MatrixXd pi =
      P.weights() * Q.weights().transpose();  // outer p_i q_j
  double transport = 0.0, entropy = 0.0;
  for (Eigen::Index i = 0; i < P.size(); ++i) {
    for (Eigen::Index j = 0; j < Q.size(); ++j) {
      const double mass = pi(i, j) * sol.xi(i, j);
      transport += mass * cost(i, j);
      entropy += mass * std::log(sol.xi(i, j));
    }
  }
  return transport + sol.epsilon * entropy;
}

double sinkhorn_cost(const SinkhornSolution& sol, const DiscreteMeasure& P,
                     const DiscreteMeasure& Q) {
  check_solution_shape(sol, P, Q);
  const Eigen::MatrixXd cost = CostSpec::matrix(P, Q);
  return P.weights().dot((sol.xi.cwiseProduct(cost)) * Q.weights());
}

double evaluate_f_extension(const SinkhornSolution& sol,
                            const DiscreteMeasure& Q,
                            const Eigen::RowVectorXd& x) {
  Eigen::VectorXd v(Q.size());
  for (Eigen::Index j = 0; j < Q.size(); ++j)
    v[j] = std::log(Q.weights()[j]) +
           (sol.g[j] - CostSpec::evaluate(x, Q.points().row(j))) / sol.epsilon;
  const double vmax = v.maxCoeff();
  return -sol.epsilon * (vmax + std::log((v.array() - vmax).exp().sum()));
}

double evaluate_g_extension(const SinkhornSolution& sol,
                            const DiscreteMeasure& P,
                            const Eigen::RowVectorXd& y) {
  Eigen::VectorXd v(P.size());
  for (Eigen::Index i = 0; i < P.size(); ++i)
    v[i] = std::log(P.weights()[i]) +
           (sol.f[i] - CostSpec::evaluate(P.points().row(i), y)) / sol.epsilon;
  const double vmax = v.maxCoeff();
  return -sol.epsilon * (vmax + std::log((v.array() - vmax).exp().sum()));
}

DivergenceResult sinkhorn_divergence(const DiscreteMeasure& P,
                                     const DiscreteMeasure& Q,
                                     const SolveOptions& opts) {
  DivergenceResult result;
  result.pq = solve(P, Q, opts);
  result.pp = solve(P, P, opts);
  result.qq = solve(Q, Q, opts);
  result.value =
      result.pq.cost - 0.5 * (result.pp.cost + result.qq.cost);
  return result;
}

}  // namespace eot
