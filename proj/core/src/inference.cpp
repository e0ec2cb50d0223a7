#include "eot/inference.hpp"

#include <algorithm>
#include <cmath>

#include "eot/errors.hpp"
#include "eot/stats.hpp"

namespace eot {

FunctionalSpec FunctionalSpec::half_squared_distance() {
  FunctionalSpec spec;
  spec.kind = Kind::HalfSquaredDistance;
  return spec;
}

FunctionalSpec FunctionalSpec::threshold_indicator(double t) {
  if (t < 0.0) throw Error("threshold indicator requires t >= 0");
  FunctionalSpec spec;
  spec.kind = Kind::ThresholdIndicator;
  spec.threshold = t;
  return spec;
}

FunctionalSpec FunctionalSpec::constant_value(double c) {
  FunctionalSpec spec;
  spec.kind = Kind::Constant;
  spec.constant = c;
  return spec;
}

FunctionalSpec FunctionalSpec::explicit_matrix(Eigen::MatrixXd values) {
  FunctionalSpec spec;
  spec.kind = Kind::ExplicitMatrix;
  spec.matrix = std::move(values);
  return spec;
}

Eigen::MatrixXd FunctionalSpec::materialize(const DiscreteMeasure& P,
                                            const DiscreteMeasure& Q) const {
  const Eigen::Index n = P.size(), m = Q.size();
  switch (kind) {
    case Kind::HalfSquaredDistance:
      return CostSpec::matrix(P, Q);
    case Kind::ThresholdIndicator: {
      Eigen::MatrixXd eta(n, m);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          eta(i, j) = (P.points().row(i) - Q.points().row(j)).squaredNorm() <=
                              threshold
                          ? 1.0
                          : 0.0;
      return eta;
    }
    case Kind::Constant:
      return Eigen::MatrixXd::Constant(n, m, constant);
    case Kind::ExplicitMatrix:
      if (matrix.rows() != n || matrix.cols() != m)
        throw DimensionMismatch("explicit eta matrix does not match supports");
      return matrix;
  }
  throw Error("unreachable");
}

InferenceReport make_report(double estimate, double sigma2, double rate,
                            double level, std::optional<double> lambda) {
  if (!(level > 0.0 && level < 1.0))
    throw Error("confidence level must lie in (0,1)");
  InferenceReport report;
  report.estimate = estimate;
  report.sigma2 = sigma2;
  report.rate = rate;
  report.level = level;
  report.lambda = lambda;
  const double z = normal_quantile(1.0 - 0.5 * (1.0 - level));
  const double half = z * std::sqrt(std::max(sigma2, 0.0) / rate);
  report.ci_low = estimate - half;
  report.ci_high = estimate + half;
  return report;
}

EtaMarginals eta_marginals(const Eigen::MatrixXd& eta,
                           const SinkhornSolution& sol,
                           const DiscreteMeasure& P,
                           const DiscreteMeasure& Q) {
  if (eta.rows() != P.size() || eta.cols() != Q.size())
    throw DimensionMismatch("eta matrix does not match supports");
  EtaMarginals out;
  out.x_part = sol.xi.cwiseProduct(eta) * Q.weights();
  out.y_part = sol.xi.cwiseProduct(eta).transpose() * P.weights();
  return out;
}

namespace {

Eigen::VectorXd centered(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return v.array() - w.dot(v);
}

}  // namespace

double functional_variance(const Eigen::MatrixXd& eta,
                           const SinkhornSolution& sol,
                           const KernelOperators& ops,
                           std::optional<double> lambda) {
  if (lambda && !(*lambda > 0.0 && *lambda < 1.0))
    throw Error("lambda must lie in (0,1)");
  if (eta.rows() != sol.xi.rows() || eta.cols() != sol.xi.cols())
    throw DimensionMismatch("eta matrix does not match the solution");

  // eta marginals straight from the solution matrices.
  const Eigen::VectorXd eta_x = sol.xi.cwiseProduct(eta) * ops.q;
  const Eigen::VectorXd eta_y =
      sol.xi.cwiseProduct(eta).transpose() * ops.p;

  const Eigen::VectorXd rhs_x = centered(eta_x - ops.KQ * eta_y, ops.p);
  const Eigen::VectorXd u_x =
      ResolventSystem(ops, ResolventSide::X).solver().solve(rhs_x);
  const double var_p = weighted_variance(ops.p, u_x);
  if (!lambda) return var_p;

  const Eigen::VectorXd rhs_y = centered(eta_y - ops.KP * eta_x, ops.q);
  const Eigen::VectorXd u_y =
      ResolventSystem(ops, ResolventSide::Y).solver().solve(rhs_y);
  const double var_q = weighted_variance(ops.q, u_y);
  return *lambda * var_p + (1.0 - *lambda) * var_q;
}

InferenceReport functional_ci(const FunctionalSpec& eta,
                              const DiscreteMeasure& P,
                              const DiscreteMeasure& Q, double level,
                              const SampleSizes& sizes,
                              const SolveOptions& opts) {
  const SinkhornSolution sol = solve(P, Q, opts);
  const Eigen::MatrixXd eta_values = eta.materialize(P, Q);
  const double estimate =
      P.weights().dot(sol.xi.cwiseProduct(eta_values) * Q.weights());
  const KernelOperators ops = build_operators(sol, P, Q);
  const double sigma2 =
      functional_variance(eta_values, sol, ops, sizes.lambda());
  return make_report(estimate, sigma2, sizes.rate(), level, sizes.lambda());
}

double cost_variance_one_sample(const SinkhornSolution& sol,
                                const DiscreteMeasure& P) {
  return weighted_variance(P.weights(), sol.f);
}

H1Variance divergence_h1_variance(const DiscreteMeasure& P,
                                  const DiscreteMeasure& Q,
                                  std::optional<double> lambda,
                                  const SolveOptions& opts) {
  if (lambda && !(*lambda > 0.0 && *lambda < 1.0))
    throw Error("lambda must lie in (0,1)");
  H1Variance out;
  out.divergence = sinkhorn_divergence(P, Q, opts);
  // psi_P at P-atoms; the Q-side influence function f_{Q,P} equals g_PQ up
  // to a constant shift, which the variance ignores.
  out.psi_p = out.divergence.pq.f -
              0.5 * (out.divergence.pp.f + out.divergence.pp.g);
  out.psi_q = out.divergence.pq.g -
              0.5 * (out.divergence.qq.f + out.divergence.qq.g);
  const double var_p = weighted_variance(P.weights(), out.psi_p);
  if (!lambda) {
    out.sigma2 = var_p;
  } else {
    const double var_q = weighted_variance(Q.weights(), out.psi_q);
    out.sigma2 = *lambda * var_p + (1.0 - *lambda) * var_q;
  }
  return out;
}

namespace {

// Symmetric PSD square root, eigenvalues clipped at zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd roots =
      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

H0Spectrum h0_limit_spectrum(const DiscreteMeasure& P,
                             const SolveOptions& opts) {
  const SinkhornSolution sol = solve(P, P, opts);
  const Eigen::Index n = P.size();
  const Eigen::VectorXd& p = P.weights();

  H0Spectrum spectrum;
  if (n == 1) return spectrum;  // Sigma_P = 0, the limit is identically 0

  const Eigen::MatrixXd a = sol.xi.transpose() * p.asDiagonal();
  const DeflatedSolver resolvent(Eigen::MatrixXd(a * a), p);
  const Eigen::MatrixXd m_matrix =
      resolvent.apply((Eigen::MatrixXd::Identity(n, n) + 2.0 * a) * sol.xi);

  Eigen::MatrixXd sigma_p = -p * p.transpose();
  sigma_p.diagonal() += p;
  const Eigen::MatrixXd root = psd_sqrt(sigma_p);

  const Eigen::MatrixXd b = 0.25 * root * m_matrix * root;
  const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-6)
    throw NonSymmetric("H0 quadratic form symmetrization residual " +
                       std::to_string(asym));
  const Eigen::MatrixXd sym = 0.5 * (b + b.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  std::vector<double> weights;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mu = eig.eigenvalues()[i];
    if (mu < -1e-10)
      throw NonSymmetric("H0 spectrum has negative weight " +
                         std::to_string(mu));
    if (mu < 0.0) mu = 0.0;
    weights.push_back(mu);
  }
  std::sort(weights.begin(), weights.end(), std::greater<double>());
  const double floor = 1e-12 * std::max(1.0, weights.front());
  while (!weights.empty() && weights.back() <= floor) weights.pop_back();
  spectrum.weights = std::move(weights);
  return spectrum;
}

std::vector<double> h0_limit_sample(const H0Spectrum& spectrum,
                                    std::size_t draws, Rng& rng) {
  if (draws < 1) throw Error("h0_limit_sample: draws must be >= 1");
  std::vector<double> out(draws, 0.0);
  for (std::size_t k = 0; k < draws; ++k) {
    double acc = 0.0;
    for (double mu : spectrum.weights) {
      const double z = rng.next_normal();
      acc += mu * z * z;
    }
    out[k] = acc;
  }
  return out;
}

namespace {

H0TestResult h0_test_impl(double observed, double rate,
                          const DiscreteMeasure& plug_in, std::size_t draws,
                          Rng& rng, const SolveOptions& opts) {
  H0TestResult result;
  result.observed = observed;
  result.rate = rate;
  result.spectrum = h0_limit_spectrum(plug_in, opts);
  if (result.spectrum.weights.empty()) {
    // Point mass at zero.
    result.p_value = observed <= 1e-9 ? 1.0 : 0.0;
    result.mc_stderr = 0.0;
    return result;
  }
  const std::vector<double> samples =
      h0_limit_sample(result.spectrum, draws, rng);
  std::size_t exceed = 0;
  for (double s : samples) exceed += (s >= observed);
  result.p_value = double(exceed) / double(draws);
  result.mc_stderr =
      std::sqrt(result.p_value * (1.0 - result.p_value) / double(draws));
  return result;
}

}  // namespace

H0TestResult h0_test_one_sample(const DiscreteMeasure& empirical,
                                std::size_t n,
                                const DiscreteMeasure& reference,
                                std::size_t draws, Rng& rng,
                                const SolveOptions& opts) {
  const DivergenceResult div = sinkhorn_divergence(empirical, reference, opts);
  return h0_test_impl(double(n) * div.value, double(n), empirical, draws, rng,
                      opts);
}

H0TestResult h0_test_two_sample(const DiscreteMeasure& empirical_p,
                                std::size_t n,
                                const DiscreteMeasure& empirical_q,
                                std::size_t m, std::size_t draws, Rng& rng,
                                const SolveOptions& opts) {
  const DivergenceResult div =
      sinkhorn_divergence(empirical_p, empirical_q, opts);
  const double rate = double(n) * double(m) / double(n + m);

  // Pooled plug-in measure; the constructor merges shared atoms.
  const Eigen::Index np = empirical_p.size(), nq = empirical_q.size();
  Eigen::MatrixXd points(np + nq, empirical_p.dim());
  Eigen::VectorXd weights(np + nq);
  const double wp = double(n) / double(n + m);
  points.topRows(np) = empirical_p.points();
  weights.head(np) = wp * empirical_p.weights();
  points.bottomRows(nq) = empirical_q.points();
  weights.tail(nq) = (1.0 - wp) * empirical_q.weights();
  const DiscreteMeasure pooled(std::move(points), std::move(weights));

  return h0_test_impl(rate * div.value, rate, pooled, draws, rng, opts);
}

BaseCovariance gaussian_base_covariance(const SinkhornSolution& sol,
                                        const DiscreteMeasure& P,
                                        const DiscreteMeasure& Q) {
  BaseCovariance base;
  base.cov_qatoms =
      sol.xi.transpose() * P.weights().asDiagonal() * sol.xi -
      Eigen::MatrixXd::Ones(Q.size(), Q.size());
  base.cov_patoms = sol.xi * Q.weights().asDiagonal() * sol.xi.transpose() -
                    Eigen::MatrixXd::Ones(P.size(), P.size());
  return base;
}

PotentialCovariance potential_covariance(const SinkhornSolution& sol,
                                         const KernelOperators& ops,
                                         const DiscreteMeasure& P,
                                         const DiscreteMeasure& Q,
                                         std::optional<double> lambda) {
  if (lambda && !(*lambda > 0.0 && *lambda < 1.0))
    throw Error("lambda must lie in (0,1)");
  const BaseCovariance base = gaussian_base_covariance(sol, P, Q);
  const ResolventSystem rx(ops, ResolventSide::X);
  const ResolventSystem ry(ops, ResolventSide::Y);

  // f-limit = sqrt(l) Rx KQ G_P - sqrt(1-l) Rx G_Q
  // g-limit = sqrt(1-l) KP Rx G_Q - sqrt(l) Ry G_P
  // (one-sample: f = -Rx KQ G_P, g = +Ry G_P), with C_P = Cov(G_P) at
  // Q-atoms and C_Q = Cov(G_Q) at P-atoms.
  const Eigen::MatrixXd map_f_p = rx.solver().apply(ops.KQ);        // n x m
  const Eigen::MatrixXd ry_cp = ry.solver().apply(base.cov_qatoms); // m x m
  const Eigen::MatrixXd ry_cp_ry =
      ry.solver().apply(ry_cp.transpose()).transpose();             // m x m
  const Eigen::MatrixXd fp_cp_fp =
      map_f_p * base.cov_qatoms * map_f_p.transpose();              // n x n
  const Eigen::MatrixXd cross_p = -map_f_p * ry_cp.transpose();     // n x m

  PotentialCovariance cov;
  if (!lambda) {
    cov.cov_f = fp_cp_fp;
    cov.cov_g = ry_cp_ry;
    cov.cross = cross_p;
  } else {
    const Eigen::MatrixXd rx_cq = rx.solver().apply(base.cov_patoms);
    const Eigen::MatrixXd rx_cq_rx =
        rx.solver().apply(rx_cq.transpose()).transpose();           // n x n
    const double l = *lambda;
    cov.cov_f = l * fp_cp_fp + (1.0 - l) * rx_cq_rx;
    cov.cov_g = l * ry_cp_ry +
                (1.0 - l) * ops.KP * rx_cq_rx * ops.KP.transpose();
    cov.cross = l * cross_p - (1.0 - l) * rx_cq_rx * ops.KP.transpose();
  }
  cov.cov_f = 0.5 * (cov.cov_f + cov.cov_f.transpose()).eval();
  cov.cov_g = 0.5 * (cov.cov_g + cov.cov_g.transpose()).eval();
  return cov;
}

}  // namespace eot
