#include "eot/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "eot/errors.hpp"

namespace eot {

namespace {

struct ReplicateOutcome {
  double value = 0.0;       // raw statistic
  double sigma2_hat = 0.0;  // plug-in variance for the coverage check
  bool has_sigma2 = false;
  bool skipped = false;
};

struct Context {
  const SimulationConfig& cfg;
  const DiscreteMeasure& truth_p;
  const DiscreteMeasure* truth_q;  // null only for the H0 statistic
  SolveOptions replicate_opts;
  Eigen::MatrixXd eta_full;  // Functional statistic, on the truth supports
  double rate = 0.0;
  std::optional<double> lambda;
  bool two_sample = false;
};

double plan_integral(const SinkhornSolution& sol, const DiscreteMeasure& P,
                     const DiscreteMeasure& Q, const Eigen::MatrixXd& eta) {
  return P.weights().dot(sol.xi.cwiseProduct(eta) * Q.weights());
}

// Re-gauges a two-sample solution against the population Q: returns the
// shift E_Q g_hat evaluated through the smooth extension of g_hat.
double population_gauge_shift(const SinkhornSolution& sol,
                              const DiscreteMeasure& sample_p,
                              const DiscreteMeasure& population_q) {
  double shift = 0.0;
  for (Eigen::Index j = 0; j < population_q.size(); ++j)
    shift += population_q.weights()[j] *
             evaluate_g_extension(sol, sample_p, population_q.points().row(j));
  return shift;
}

ReplicateOutcome run_one(const Context& ctx, std::size_t index) {
  ReplicateOutcome out;
  Rng rng(ctx.cfg.seed, index);
  const std::size_t n = ctx.cfg.n;

  std::vector<Eigen::Index> alive_p, alive_q;
  try {
    const SampleBatch batch_p = sample_batch(ctx.truth_p, n, rng);
    const DiscreteMeasure p_hat =
        empirical_from_counts(ctx.truth_p, batch_p.counts(), n, &alive_p);

    const bool h0 = ctx.cfg.statistic.kind == StatisticKind::ScaledDivergenceH0;
    const DiscreteMeasure* q_ref = h0 ? &ctx.truth_p : ctx.truth_q;
    std::optional<DiscreteMeasure> q_hat;
    if (ctx.two_sample) {
      const std::size_t m = *ctx.cfg.m;
      const SampleBatch batch_q = sample_batch(*q_ref, m, rng);
      q_hat = empirical_from_counts(*q_ref, batch_q.counts(), m, &alive_q);
    }
    const DiscreteMeasure& q_side = ctx.two_sample ? *q_hat : *q_ref;
    if (!ctx.two_sample)
      for (Eigen::Index j = 0; j < q_side.size(); ++j) alive_q.push_back(j);

    switch (ctx.cfg.statistic.kind) {
      case StatisticKind::Cost: {
        const SinkhornSolution sol = solve(p_hat, q_side, ctx.replicate_opts);
        out.value = sol.cost;
        if (ctx.cfg.compute_coverage) {
          out.sigma2_hat = cost_variance_one_sample(sol, p_hat);
          out.has_sigma2 = true;
        }
        break;
      }
      case StatisticKind::PotentialAtAtom: {
        SinkhornSolution sol = solve(p_hat, q_side, ctx.replicate_opts);
        double value = evaluate_f_extension(
            sol, q_side, ctx.truth_p.points().row(ctx.cfg.statistic.atom));
        if (ctx.two_sample)
          value += population_gauge_shift(sol, p_hat, *ctx.truth_q);
        out.value = value;
        break;
      }
      case StatisticKind::Functional: {
        const SinkhornSolution sol = solve(p_hat, q_side, ctx.replicate_opts);
        const Eigen::MatrixXd eta_sub =
            ctx.eta_full(alive_p, alive_q);
        out.value = plan_integral(sol, p_hat, q_side, eta_sub);
        if (ctx.cfg.compute_coverage) {
          const KernelOperators ops = build_operators(sol, p_hat, q_side);
          out.sigma2_hat =
              functional_variance(eta_sub, sol, ops, ctx.lambda);
          out.has_sigma2 = true;
        }
        break;
      }
      case StatisticKind::Divergence: {
        if (ctx.cfg.compute_coverage) {
          const H1Variance h1 = divergence_h1_variance(
              p_hat, q_side, ctx.lambda, ctx.replicate_opts);
          out.value = h1.divergence.value;
          out.sigma2_hat = h1.sigma2;
          out.has_sigma2 = true;
        } else {
          out.value =
              sinkhorn_divergence(p_hat, q_side, ctx.replicate_opts).value;
        }
        break;
      }
      case StatisticKind::ScaledDivergenceH0: {
        out.value = ctx.rate *
                    sinkhorn_divergence(p_hat, q_side, ctx.replicate_opts)
                        .value;
        break;
      }
    }
  } catch (const NoConvergence&) {
    out.skipped = true;
  }
  return out;
}

void validate(const SimulationConfig& cfg) {
  if (!cfg.truth_p) throw ConfigError("simulation requires truth_p");
  if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
  if (cfg.n < 2) throw ConfigError("sample size n must be >= 2");
  if (cfg.m && *cfg.m < 2) throw ConfigError("sample size m must be >= 2");
  if (!(cfg.level > 0.0 && cfg.level < 1.0))
    throw ConfigError("level must lie in (0,1)");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");

  const bool h0 = cfg.statistic.kind == StatisticKind::ScaledDivergenceH0;
  if (h0) {
    if (cfg.truth_q && !cfg.truth_q->same_support(*cfg.truth_p))
      throw ConfigError("the H0 statistic draws both samples from truth_p");
  } else if (!cfg.truth_q) {
    throw ConfigError("this statistic requires truth_q");
  }
  if (cfg.statistic.kind == StatisticKind::Cost && cfg.m)
    throw ConfigError("the cost limit is one-sample only; drop m");
  if (cfg.statistic.kind == StatisticKind::PotentialAtAtom &&
      (cfg.statistic.atom < 0 || cfg.statistic.atom >= cfg.truth_p->size()))
    throw ConfigError("potential atom index out of range");
}

}  // namespace

ReplicationReport run_replications(const SimulationConfig& cfg) {
  validate(cfg);
  const DiscreteMeasure& truth_p = *cfg.truth_p;
  const bool h0 = cfg.statistic.kind == StatisticKind::ScaledDivergenceH0;
  const DiscreteMeasure* truth_q = cfg.truth_q ? &*cfg.truth_q : nullptr;

  Context ctx{cfg,
              truth_p,
              truth_q,
              SolveOptions{cfg.epsilon, cfg.tol, cfg.max_iter},
              {},
              0.0,
              std::nullopt,
              cfg.m.has_value()};
  ctx.rate = cfg.m ? double(cfg.n) * double(*cfg.m) / double(cfg.n + *cfg.m)
                   : double(cfg.n);
  if (cfg.m) ctx.lambda = double(*cfg.m) / double(cfg.n + *cfg.m);

  // Population quantities once, at tight tolerance.
  const SolveOptions truth_opts{cfg.epsilon, 1e-12, cfg.max_iter};
  double truth_value = 0.0;
  double predicted = 0.0;
  std::optional<H0Spectrum> spectrum;
  switch (cfg.statistic.kind) {
    case StatisticKind::Cost: {
      const SinkhornSolution sol = solve(truth_p, *truth_q, truth_opts);
      truth_value = sol.cost;
      predicted = cost_variance_one_sample(sol, truth_p);
      break;
    }
    case StatisticKind::PotentialAtAtom: {
      const SinkhornSolution sol = solve(truth_p, *truth_q, truth_opts);
      truth_value = sol.f[cfg.statistic.atom];
      const KernelOperators ops = build_operators(sol, truth_p, *truth_q);
      const PotentialCovariance cov =
          potential_covariance(sol, ops, truth_p, *truth_q, ctx.lambda);
      predicted = cov.cov_f(cfg.statistic.atom, cfg.statistic.atom);
      break;
    }
    case StatisticKind::Functional: {
      const SinkhornSolution sol = solve(truth_p, *truth_q, truth_opts);
      ctx.eta_full = cfg.statistic.eta.materialize(truth_p, *truth_q);
      truth_value = plan_integral(sol, truth_p, *truth_q, ctx.eta_full);
      const KernelOperators ops = build_operators(sol, truth_p, *truth_q);
      predicted = functional_variance(ctx.eta_full, sol, ops, ctx.lambda);
      break;
    }
    case StatisticKind::Divergence: {
      const H1Variance h1 =
          divergence_h1_variance(truth_p, *truth_q, ctx.lambda, truth_opts);
      truth_value = h1.divergence.value;
      predicted = h1.sigma2;
      break;
    }
    case StatisticKind::ScaledDivergenceH0: {
      truth_value = 0.0;
      spectrum = h0_limit_spectrum(truth_p, truth_opts);
      for (double mu : spectrum->weights) predicted += 2.0 * mu * mu;
      break;
    }
  }

  // Replicates; outcome slots are indexed, so thread count cannot change
  // the aggregate.
  std::vector<ReplicateOutcome> outcomes(cfg.replications);
  const std::size_t workers =
      std::max<std::size_t>(1, cfg.threads ? cfg.threads
                                           : std::thread::hardware_concurrency());
  if (workers == 1 || cfg.replications == 1) {
    for (std::size_t r = 0; r < cfg.replications; ++r)
      outcomes[r] = run_one(ctx, r);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (cfg.replications + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(cfg.replications, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        for (std::size_t r = lo; r < hi; ++r) outcomes[r] = run_one(ctx, r);
      });
    }
    for (auto& t : pool) t.join();
  }

  ReplicationReport report;
  report.replications = cfg.replications;
  report.truth_value = truth_value;
  report.predicted_variance = predicted;
  report.rate = ctx.rate;
  report.lambda = ctx.lambda;
  report.level = cfg.level;

  std::vector<double> values;
  values.reserve(cfg.replications);
  std::size_t covered = 0, with_ci = 0;
  const double z = normal_quantile(1.0 - 0.5 * (1.0 - cfg.level));
  for (const ReplicateOutcome& out : outcomes) {
    if (out.skipped) {
      ++report.skipped;
      continue;
    }
    values.push_back(out.value);
    if (out.has_sigma2) {
      ++with_ci;
      const double half =
          z * std::sqrt(std::max(out.sigma2_hat, 0.0) / ctx.rate);
      covered += (truth_value >= out.value - half &&
                  truth_value <= out.value + half);
    }
  }
  if (values.empty()) throw Error("all replicates failed to converge");
  if (cfg.keep_replicates) report.replicates = values;

  const double count = double(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= count;
  report.mean_estimate = mean;

  // Standardized replicate sequence: sqrt(rate)(est - truth) for the
  // Gaussian laws, the raw rate-scaled value for the H0 mixture.
  std::vector<double> standardized;
  standardized.reserve(values.size());
  if (h0) {
    standardized = values;
  } else {
    for (double v : values)
      standardized.push_back(std::sqrt(ctx.rate) * (v - truth_value));
  }
  double smean = 0.0;
  for (double s : standardized) smean += s;
  smean /= count;
  double svar = 0.0;
  for (double s : standardized) svar += (s - smean) * (s - smean);
  svar /= std::max(1.0, count - 1.0);
  report.empirical_variance = svar;
  if (predicted > 1e-14)
    report.variance_ratio = svar / predicted;

  if (h0) {
    report.spectrum = spectrum;
    report.spectrum_sum = spectrum->sum();
    report.mean_scaled = smean;
    if (!spectrum->weights.empty() && cfg.mixture_draws > 0) {
      Rng mix_rng(cfg.seed, (std::uint64_t(1) << 32) + 0x4d495854ULL);
      const std::vector<double> reference =
          h0_limit_sample(*spectrum, cfg.mixture_draws, mix_rng);
      report.ks_statistic = ks_distance(standardized, reference);
    }
  } else if (predicted > 1e-14) {
    const double sd = std::sqrt(predicted);
    std::vector<double> zscores;
    zscores.reserve(standardized.size());
    for (double s : standardized) zscores.push_back(s / sd);
    report.ks_statistic = ks_distance_normal(zscores);
  }
  if (with_ci > 0) report.coverage = double(covered) / double(with_ci);
  return report;
}

}  // namespace eot
