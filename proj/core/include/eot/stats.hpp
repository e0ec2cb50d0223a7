#ifndef EOT_STATS_HPP
#define EOT_STATS_HPP

#include <Eigen/Dense>
#include <vector>

namespace eot {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile, accurate to better than 1e-9 on (0,1).
double normal_quantile(double p);

/// Variance of v under the probability weights w (two-pass, weighted).
double weighted_variance(const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& values);

/// Mean of v under the probability weights w.
double weighted_mean(const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& values);

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of
/// `sample` and the standard normal CDF. Throws EmptySample.
double ks_distance_normal(std::vector<double> sample);

/// Two-sided Kolmogorov-Smirnov distance between two empirical CDFs.
/// Throws EmptySample if either list is empty.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace eot

#endif  // EOT_STATS_HPP
