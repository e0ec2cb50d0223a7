#ifndef EOT_TESTS_HELPERS_HPP
#define EOT_TESTS_HELPERS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "eot/measure.hpp"
#include "eot/rng.hpp"
#include "oracle.hpp"

namespace testutil {

/// Random measure with `atoms` atoms in [0, span]^dim and weights bounded
/// away from zero.
inline eot::DiscreteMeasure random_measure(eot::Rng& rng, int atoms, int dim,
                                           double span = 2.0) {
  Eigen::MatrixXd points(atoms, dim);
  Eigen::VectorXd weights(atoms);
  for (int i = 0; i < atoms; ++i) {
    for (int c = 0; c < dim; ++c) points(i, c) = span * rng.next_double();
    weights[i] = 0.1 + rng.next_double();
  }
  weights /= weights.sum();
  return eot::DiscreteMeasure(std::move(points), std::move(weights));
}

inline oracle::Instance to_instance(const eot::DiscreteMeasure& P,
                                    const eot::DiscreteMeasure& Q) {
  oracle::Instance inst;
  const auto fill = [](const eot::DiscreteMeasure& mu, oracle::Mat& x,
                       oracle::Vec& w) {
    x.assign(std::size_t(mu.size()), oracle::Vec(std::size_t(mu.dim())));
    w.resize(std::size_t(mu.size()));
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      for (Eigen::Index c = 0; c < mu.dim(); ++c)
        x[std::size_t(i)][std::size_t(c)] = mu.points()(i, c);
      w[std::size_t(i)] = mu.weights()[i];
    }
  };
  fill(P, inst.px, inst.pw);
  fill(Q, inst.qx, inst.qw);
  return inst;
}

/// Closed-form constants of the symmetric two-atom instance
/// P = Q = (delta_0 + delta_1)/2 at epsilon = 1.
struct TwoAtomClosedForm {
  double f = -std::log(0.5 * (1.0 + std::exp(-0.5)));  // = S_1(P,Q), g = 0
  double xi_diag = std::exp(-std::log(0.5 * (1.0 + std::exp(-0.5))));
  double xi_off = xi_diag * std::exp(-0.5);
  double a = 0.5 * (xi_diag - xi_off);  // centered eigenvalue of A
};

inline eot::DiscreteMeasure two_atom_uniform() {
  Eigen::MatrixXd points(2, 1);
  points << 0.0, 1.0;
  return eot::DiscreteMeasure(points, Eigen::VectorXd::Constant(2, 0.5));
}

inline eot::DiscreteMeasure single_atom(double x) {
  Eigen::MatrixXd points(1, 1);
  points << x;
  return eot::DiscreteMeasure(points, Eigen::VectorXd::Ones(1));
}

inline eot::DiscreteMeasure measure_1d(std::vector<double> xs,
                                       std::vector<double> ws) {
  Eigen::MatrixXd points(Eigen::Index(xs.size()), 1);
  Eigen::VectorXd weights(Eigen::Index(ws.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    points(Eigen::Index(i), 0) = xs[i];
    weights[Eigen::Index(i)] = ws[i];
  }
  return eot::DiscreteMeasure(points, weights);
}

}  // namespace testutil

#endif  // EOT_TESTS_HELPERS_HPP
