#ifndef EOT_MONTECARLO_HPP
#define EOT_MONTECARLO_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "eot/inference.hpp"
#include "eot/measure.hpp"
#include "eot/stats.hpp"

namespace eot {

enum class StatisticKind {
  Cost,                // one-sample S_eps(P_n, Q), rate sqrt(n)
  PotentialAtAtom,     // f_hat at a chosen truth atom
  Functional,          // int eta d pi_hat
  Divergence,          // D_eps under H1
  ScaledDivergenceH0,  // rate * D_eps with both samples from truth_p
};

struct StatisticSpec {
  StatisticKind kind = StatisticKind::Cost;
  Eigen::Index atom = 0;  // PotentialAtAtom only
  FunctionalSpec eta;     // Functional only
};

/// Replication study of one limit law. truth_q is the known second
/// marginal (required except under the H0 statistic, where both samples
/// come from truth_p). An absent m selects the one-sample regime.
struct SimulationConfig {
  std::optional<DiscreteMeasure> truth_p;
  std::optional<DiscreteMeasure> truth_q;
  StatisticSpec statistic;
  double epsilon = 1.0;
  std::size_t n = 0;
  std::optional<std::size_t> m;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  double level = 0.95;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::size_t threads = 0;            // 0: hardware concurrency
  std::size_t mixture_draws = 100000; // H0 reference sample size
  bool compute_coverage = true;
  bool keep_replicates = false;
};

struct ReplicationReport {
  std::size_t replications = 0;
  std::size_t skipped = 0;  // replicates lost to NoConvergence
  double truth_value = 0.0;
  double mean_estimate = 0.0;
  double empirical_variance = 0.0;
  double predicted_variance = 0.0;
  std::optional<double> variance_ratio;
  std::optional<double> ks_statistic;
  std::optional<double> coverage;
  double rate = 0.0;
  std::optional<double> lambda;
  double level = 0.95;
  // Present for the H0 statistic only.
  std::optional<H0Spectrum> spectrum;
  std::optional<double> spectrum_sum;
  std::optional<double> mean_scaled;
  std::vector<double> replicates;  // raw per-replicate values when kept
};

/// Runs the study. Deterministic for a fixed seed: replicate r draws from
/// the substream keyed by (seed, r), so serial and parallel execution
/// produce identical reports. Throws ConfigError on invalid configs;
/// replicate-level NoConvergence is counted in `skipped`.
ReplicationReport run_replications(const SimulationConfig& cfg);

}  // namespace eot

#endif  // EOT_MONTECARLO_HPP
