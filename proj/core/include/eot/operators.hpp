#ifndef EOT_OPERATORS_HPP
#define EOT_OPERATORS_HPP

#include <Eigen/Dense>
#include <vector>

#include "eot/sinkhorn.hpp"

namespace eot {

/// Dense realizations of the kernel integral operators of a solved
/// instance, acting on functions sampled at the atoms.
///
///   (KQ b)_i = sum_j xi_ij q_j b_j   maps Q-functions to P-functions,
///   (KP a)_j = sum_i xi_ij p_i a_i   maps P-functions to Q-functions.
///
/// Constants are fixed points of both (unit row sums), and the pair is
/// adjoint under the weighted pairings: <a, KQ b>_P = <b, KP a>_Q.
struct KernelOperators {
  Eigen::MatrixXd KQ;  // n x m
  Eigen::MatrixXd KP;  // m x n
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  double epsilon = 1.0;
  bool self_transport = false;  // P and Q share atoms and weights
};

/// Builds the operator matrices from a converged solution.
KernelOperators build_operators(const SinkhornSolution& sol,
                                const DiscreteMeasure& P,
                                const DiscreteMeasure& Q);

/// Solves (I - K) u = v on the subspace of w-centered vectors, where the
/// kernel of (I - K) is exactly the constants. The factorized matrix is
/// the rank-one deflation (I - K + 1 w^T), which is invertible and agrees
/// with (I - K) on centered inputs.
class DeflatedSolver {
 public:
  /// K must preserve the w-weighted mean (w^T K = w^T up to tolerance).
  /// Throws SingularSystem when the deflated matrix is not invertible.
  DeflatedSolver(const Eigen::MatrixXd& K, Eigen::VectorXd w);

  /// Throws NotCentered unless |w . v| <= 1e-8. The returned solution is
  /// re-centered so its weighted mean is zero to machine precision.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

  /// Columnwise deflated solve without the centering check. Constant
  /// components of a column pass through unchanged; on centered columns
  /// this is exactly the resolvent.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rhs) const;

  const Eigen::VectorXd& weight() const { return w_; }

 private:
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd w_;
};

enum class ResolventSide {
  X,  // (I - KQ KP) on P-functions
  Y,  // (I - KP KQ) on Q-functions
};

/// Factorized Fredholm system (I - composite) for one side.
class ResolventSystem {
 public:
  ResolventSystem(const KernelOperators& ops, ResolventSide side);

  ResolventSide side() const { return side_; }
  const DeflatedSolver& solver() const { return solver_; }

 private:
  ResolventSide side_;
  DeflatedSolver solver_;
};

/// Resolvent applied to a centered function-vector; see DeflatedSolver.
Eigen::VectorXd resolvent_solve(const KernelOperators& ops,
                                ResolventSide side, const Eigen::VectorXd& v);

enum class SpectrumKind {
  CompositeX,  // KQ KP
  CompositeY,  // KP KQ
  SelfA,       // KP of a self-transport instance
};

/// Real eigenvalues, descending. The leading eigenvalue is 1 (constants);
/// the rest lie in (-1,1), and in (0,1) for self-transport operators.
/// Balances with D^{1/2} K D^{-1/2} before the symmetric eigensolve and
/// warns on stderr when the symmetrization residual exceeds 1e-8.
/// Throws NotSelfTransport when SelfA is requested for distinct measures.
std::vector<double> operator_spectrum(const KernelOperators& ops,
                                      SpectrumKind which);

}  // namespace eot

#endif  // EOT_OPERATORS_HPP
