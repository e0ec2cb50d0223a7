#ifndef EOT_INFERENCE_HPP
#define EOT_INFERENCE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "eot/operators.hpp"
#include "eot/rng.hpp"
#include "eot/sinkhorn.hpp"

namespace eot {

/// A square-integrable test function eta(x,y) evaluated on the product of
/// two supports. Threshold indicators use the squared distance |x-y|^2.
struct FunctionalSpec {
  enum class Kind {
    HalfSquaredDistance,  // eta = c(x,y), recovers the transport cost d_S
    ThresholdIndicator,   // eta = 1{|x-y|^2 <= t}, recovers RCol(pi, t)
    Constant,
    ExplicitMatrix,
  };

  Kind kind = Kind::HalfSquaredDistance;
  double threshold = 0.0;
  double constant = 0.0;
  Eigen::MatrixXd matrix;

  static FunctionalSpec half_squared_distance();
  static FunctionalSpec threshold_indicator(double t);
  static FunctionalSpec constant_value(double c);
  static FunctionalSpec explicit_matrix(Eigen::MatrixXd values);

  /// Dense eta_ij = eta(x_i, y_j). Throws DimensionMismatch when an
  /// explicit matrix does not match the supports.
  Eigen::MatrixXd materialize(const DiscreteMeasure& P,
                              const DiscreteMeasure& Q) const;
};

/// Sample sizes behind a plug-in estimate. An absent m means one-sample
/// (Q known exactly): rate n and pure P-variance. Otherwise the rate is
/// nm/(n+m) and the P-side weight is lambda = m/(n+m).
struct SampleSizes {
  std::size_t n = 0;
  std::optional<std::size_t> m;

  double rate() const {
    if (!m) return double(n);
    return double(n) * double(*m) / double(n + *m);
  }
  std::optional<double> lambda() const {
    if (!m) return std::nullopt;
    return double(*m) / double(n + *m);
  }
};

/// Point estimate with its asymptotic variance and normal confidence
/// interval at the given rate.
struct InferenceReport {
  double estimate = 0.0;
  double sigma2 = 0.0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.0;
  std::optional<double> lambda;  // absent in the one-sample case
};

/// Builds the +-z*sqrt(sigma2/rate) interval around an estimate.
InferenceReport make_report(double estimate, double sigma2, double rate,
                            double level, std::optional<double> lambda);

/// Conditional means of eta under the coupling density:
///   x_part_i = sum_j q_j xi_ij eta_ij,  y_part_j = sum_i p_i xi_ij eta_ij.
/// Their weighted totals both equal the plan integral of eta.
struct EtaMarginals {
  Eigen::VectorXd x_part;  // at P-atoms
  Eigen::VectorXd y_part;  // at Q-atoms
};
EtaMarginals eta_marginals(const Eigen::MatrixXd& eta,
                           const SinkhornSolution& sol,
                           const DiscreteMeasure& P,
                           const DiscreteMeasure& Q);

/// Asymptotic variance of the plan functional int eta d pi:
///   lambda * Var_P[(I - KQ KP)^{-1}(eta_x - KQ eta_y)]
///   + (1-lambda) * Var_Q[(I - KP KQ)^{-1}(eta_y - KP eta_x)],
/// with the one-sample case keeping only the P term. Resolvent inputs are
/// centered before solving.
double functional_variance(const Eigen::MatrixXd& eta,
                           const SinkhornSolution& sol,
                           const KernelOperators& ops,
                           std::optional<double> lambda);

/// Full plug-in pipeline: solve, estimate int eta d pi, attach the CLT
/// interval for the given sample sizes.
InferenceReport functional_ci(const FunctionalSpec& eta,
                              const DiscreteMeasure& P,
                              const DiscreteMeasure& Q, double level,
                              const SampleSizes& sizes,
                              const SolveOptions& opts);

/// Variance of the one-sample cost limit: Var_P(f).
double cost_variance_one_sample(const SinkhornSolution& sol,
                                const DiscreteMeasure& P);

/// Divergence inference under H1 (distinct measures). The influence
/// function on the P side is psi_P = f_PQ - (f_PP + g_PP)/2 at P-atoms;
/// on the Q side the role-swapped analogue, assembled from g_PQ.
struct H1Variance {
  double sigma2 = 0.0;
  Eigen::VectorXd psi_p;
  Eigen::VectorXd psi_q;
  DivergenceResult divergence;
};
H1Variance divergence_h1_variance(const DiscreteMeasure& P,
                                  const DiscreteMeasure& Q,
                                  std::optional<double> lambda,
                                  const SolveOptions& opts);

/// Weights of the chi-square mixture that the scaled divergence converges
/// to under H0. Empty when the limit is identically zero.
struct H0Spectrum {
  std::vector<double> weights;  // nonnegative, descending

  double sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Diagonalizes the degenerate-limit quadratic form of the self-transport
/// instance: with A the self kernel matrix, Xi the coupling density and
/// Sigma_P = diag(p) - p p^T, the weights are the nonzero eigenvalues of
///   (1/4) Sigma_P^{1/2} (I - A^2)^{-1}(I + 2A) Xi Sigma_P^{1/2}
/// after symmetrization. Eigenvalues in [-1e-10, 0) are clipped to zero;
/// anything more negative throws NonSymmetric, as does a symmetrization
/// residual above 1e-6.
H0Spectrum h0_limit_spectrum(const DiscreteMeasure& P,
                             const SolveOptions& opts);

/// Draws from the limit law sum_j mu_j N_j^2.
std::vector<double> h0_limit_sample(const H0Spectrum& spectrum,
                                    std::size_t draws, Rng& rng);

struct H0TestResult {
  double observed = 0.0;  // rate-scaled divergence
  H0Spectrum spectrum;
  double p_value = 1.0;
  double mc_stderr = 0.0;
  double rate = 0.0;
};

/// One-sample test of H0: sample distribution equals `reference`.
/// Observed statistic n * D(P_n, reference); the spectrum is the plug-in
/// from the empirical measure. An empty spectrum is a point mass at zero.
H0TestResult h0_test_one_sample(const DiscreteMeasure& empirical,
                                std::size_t n,
                                const DiscreteMeasure& reference,
                                std::size_t draws, Rng& rng,
                                const SolveOptions& opts);

/// Two-sample test: observed nm/(n+m) * D(P_n, Q_m), spectrum from the
/// pooled measure. The mixture law is lambda-free because the combined
/// Gaussian sqrt(l)N + sqrt(1-l)N' is again standard.
H0TestResult h0_test_two_sample(const DiscreteMeasure& empirical_p,
                                std::size_t n,
                                const DiscreteMeasure& empirical_q,
                                std::size_t m, std::size_t draws, Rng& rng,
                                const SolveOptions& opts);

/// Covariance matrices of the limiting Gaussian processes of the
/// potentials, at the atoms.
struct PotentialCovariance {
  Eigen::MatrixXd cov_f;  // n x n
  Eigen::MatrixXd cov_g;  // m x m
  Eigen::MatrixXd cross;  // n x m
};

/// Base covariances of the sampling processes before the resolvent maps:
/// cov_qatoms[j,k] = sum_i p_i xi_ij xi_ik - 1 (process of the P-sample,
/// living at Q-atoms) and cov_patoms with the roles swapped. Both have
/// zero weighted row sums against the opposite marginal.
struct BaseCovariance {
  Eigen::MatrixXd cov_qatoms;  // m x m
  Eigen::MatrixXd cov_patoms;  // n x n
};
BaseCovariance gaussian_base_covariance(const SinkhornSolution& sol,
                                        const DiscreteMeasure& P,
                                        const DiscreteMeasure& Q);

/// Pushes the base covariances through the resolvent maps of the
/// potential limit theorem, lambda-weighted (two-sample) or one-sample.
PotentialCovariance potential_covariance(const SinkhornSolution& sol,
                                         const KernelOperators& ops,
                                         const DiscreteMeasure& P,
                                         const DiscreteMeasure& Q,
                                         std::optional<double> lambda);

}  // namespace eot

#endif  // EOT_INFERENCE_HPP
