#ifndef EOT_SINKHORN_HPP
#define EOT_SINKHORN_HPP

#include <Eigen/Dense>
#include <cstddef>

#include "eot/measure.hpp"

namespace eot {

/// Ground cost of the transport problem. Fixed to c(x,y) = 0.5*|x-y|^2,
/// which is symmetric, nonnegative and vanishes on the diagonal.
struct CostSpec {
  static double evaluate(const Eigen::RowVectorXd& x,
                         const Eigen::RowVectorXd& y) {
    return 0.5 * (x - y).squaredNorm();
  }
  /// Dense n x m matrix c(x_i, y_j).
  static Eigen::MatrixXd matrix(const DiscreteMeasure& P,
                                const DiscreteMeasure& Q);
};

struct SolveOptions {
  double epsilon = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
};

/// Optimal entropic dual pair and derived quantities for a solved (P,Q)
/// instance. Gauge: the Q-mean of g is zero, per the normalization the
/// limit theorems are stated in.
///
/// xi(i,j) = exp((f_i + g_j - c_ij)/epsilon) is the coupling density with
/// respect to P x Q; the plan itself is pi_ij = p_i q_j xi_ij.
struct SinkhornSolution {
  Eigen::VectorXd f;      // potential at P-atoms
  Eigen::VectorXd g;      // potential at Q-atoms, E_Q g = 0
  double epsilon = 1.0;
  double cost = 0.0;      // dual value = E_P f + E_Q g
  Eigen::MatrixXd xi;     // n x m coupling density
  std::size_t iterations = 0;
  double residual = 0.0;  // final sup-norm marginal residual
};

/// Runs the alternating log-domain dual updates until the sup-norm change
/// of g and the marginal residual both drop below opts.tol.
/// Throws DimensionMismatch and NoConvergence (carrying the residual).
SinkhornSolution solve(const DiscreteMeasure& P, const DiscreteMeasure& Q,
                       const SolveOptions& opts);

/// Primal objective: transport term plus epsilon times the relative
/// entropy of the plan. Equals the dual value up to ~10x solver tolerance.
double primal_value(const SinkhornSolution& sol, const DiscreteMeasure& P,
                    const DiscreteMeasure& Q);

/// Expected ground cost under the optimal plan (d_S).
double sinkhorn_cost(const SinkhornSolution& sol, const DiscreteMeasure& P,
                     const DiscreteMeasure& Q);

/// Evaluates the unique smooth extension of the f-potential at an
/// arbitrary point x: -eps*log sum_j q_j exp((g_j - c(x,y_j))/eps).
double evaluate_f_extension(const SinkhornSolution& sol,
                            const DiscreteMeasure& Q,
                            const Eigen::RowVectorXd& x);

/// Same for g, integrating against P.
double evaluate_g_extension(const SinkhornSolution& sol,
                            const DiscreteMeasure& P,
                            const Eigen::RowVectorXd& y);

/// Divergence value together with the three solves it is made of.
struct DivergenceResult {
  double value = 0.0;
  SinkhornSolution pq;
  SinkhornSolution pp;
  SinkhornSolution qq;
};

/// D_eps(P,Q) = S(P,Q) - (S(P,P) + S(Q,Q))/2, retaining all three
/// solutions for downstream inference.
DivergenceResult sinkhorn_divergence(const DiscreteMeasure& P,
                                     const DiscreteMeasure& Q,
                                     const SolveOptions& opts);

}  // namespace eot

#endif  // EOT_SINKHORN_HPP
