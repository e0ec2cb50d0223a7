#include "eot/operators.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "eot/errors.hpp"

namespace eot {

KernelOperators build_operators(const SinkhornSolution& sol,
                                const DiscreteMeasure& P,
                                const DiscreteMeasure& Q) {
  if (sol.xi.rows() != P.size() || sol.xi.cols() != Q.size())
    throw DimensionMismatch("solution does not match the given measures");
  KernelOperators ops;
  ops.p = P.weights();
  ops.q = Q.weights();
  ops.epsilon = sol.epsilon;
  ops.KQ = sol.xi * ops.q.asDiagonal();
  ops.KP = sol.xi.transpose() * ops.p.asDiagonal();
  ops.self_transport = P.same_support(Q);
  return ops;
}

DeflatedSolver::DeflatedSolver(const Eigen::MatrixXd& K, Eigen::VectorXd w)
    : w_(std::move(w)) {
  Eigen::MatrixXd deflated = -K;
  deflated.diagonal().array() += 1.0;
  deflated += Eigen::VectorXd::Ones(K.rows()) * w_.transpose();
  lu_.compute(deflated);
  if (!lu_.isInvertible())
    throw SingularSystem("deflated Fredholm matrix is singular");
}

Eigen::VectorXd DeflatedSolver::solve(const Eigen::VectorXd& v) const {
  if (std::abs(w_.dot(v)) > 1e-8)
    throw NotCentered("resolvent right-hand side is not centered");
  Eigen::VectorXd u = lu_.solve(v);
  u.array() -= w_.dot(u);
  return u;
}

Eigen::MatrixXd DeflatedSolver::apply(const Eigen::MatrixXd& rhs) const {
  return lu_.solve(rhs);
}

ResolventSystem::ResolventSystem(const KernelOperators& ops,
                                 ResolventSide side)
    : side_(side),
      solver_(side == ResolventSide::X
                  ? Eigen::MatrixXd(ops.KQ * ops.KP)
                  : Eigen::MatrixXd(ops.KP * ops.KQ),
              side == ResolventSide::X ? ops.p : ops.q) {}

Eigen::VectorXd resolvent_solve(const KernelOperators& ops,
                                ResolventSide side,
                                const Eigen::VectorXd& v) {
  return ResolventSystem(ops, side).solver().solve(v);
}

std::vector<double> operator_spectrum(const KernelOperators& ops,
                                      SpectrumKind which) {
  Eigen::MatrixXd K;
  Eigen::VectorXd d;
  switch (which) {
    case SpectrumKind::CompositeX:
      K = ops.KQ * ops.KP;
      d = ops.p;
      break;
    case SpectrumKind::CompositeY:
      K = ops.KP * ops.KQ;
      d = ops.q;
      break;
    case SpectrumKind::SelfA:
      if (!ops.self_transport)
        throw NotSelfTransport(
            "self-transport spectrum requested with P != Q");
      K = ops.KP;
      d = ops.p;
      break;
  }
  // Similarity transform D^(1/2) K D^(-1/2) is symmetric for these kernels.
  const Eigen::VectorXd sqrt_d = d.array().sqrt();
  const Eigen::MatrixXd balanced = sqrt_d.asDiagonal() * K *
                                   sqrt_d.cwiseInverse().asDiagonal();
  const double asym = (balanced - balanced.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8)
    std::cerr << "warning: operator symmetrization residual " << asym
              << " exceeds 1e-8\n";
  const Eigen::MatrixXd sym = 0.5 * (balanced + balanced.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  std::vector<double> values(eig.eigenvalues().data(),
                             eig.eigenvalues().data() + sym.rows());
  std::sort(values.begin(), values.end(), std::greater<double>());
  return values;
}

}  // namespace eot
