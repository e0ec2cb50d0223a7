#ifndef EOT_MEASURE_HPP
#define EOT_MEASURE_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "eot/rng.hpp"

namespace eot {

/// A finitely supported probability measure on R^d.
///
/// Invariants established at construction:
///  - all weights strictly positive, summing to 1 (renormalized when the
///    raw sum is within 1e-9 of 1, rejected otherwise);
///  - points pairwise distinct; duplicates (equal within 1e-12 per
///    coordinate) are merged by summing their weights;
///  - every point has the same dimension.
/// Instances are immutable after construction and safe to share.
class DiscreteMeasure {
 public:
  /// `points`: one atom per row. Throws InvalidMeasure on violated input.
  DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights);

  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }

  bool same_support(const DiscreteMeasure& other, double tol = 1e-12) const;

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

/// Atom indices of an i.i.d. sample drawn from a ground-truth measure.
struct SampleBatch {
  std::vector<std::size_t> draws;
  const DiscreteMeasure* source = nullptr;
  std::size_t n = 0;

  /// Multinomial counts per source atom.
  std::vector<std::size_t> counts() const;
};

enum class MeasureFormat { Csv, Json };

/// Reads a measure from disk. CSV rows are `x_1,...,x_d,weight` with no
/// header; JSON documents are {"points": [[...]], "weights": [...]}.
/// Throws ParseError / InvalidMeasure.
DiscreteMeasure load_measure(const std::string& path, MeasureFormat format);

/// Writes a measure with 17 significant digits so a load round-trips
/// bit-exactly.
void save_measure(const DiscreteMeasure& measure, const std::string& path,
                  MeasureFormat format);

/// Draws n i.i.d. atoms from `truth`.
SampleBatch sample_batch(const DiscreteMeasure& truth, std::size_t n,
                         Rng& rng);

/// Empirical measure of an i.i.d. sample of size n: the atoms of `truth`
/// that received a positive count, weighted count/n.
DiscreteMeasure empirical_from_sample(const DiscreteMeasure& truth,
                                      std::size_t n, Rng& rng);

/// As empirical_from_sample, but also reports which truth atoms survived
/// (`alive[k]` = index into truth of the k-th atom of the result).
DiscreteMeasure empirical_from_counts(const DiscreteMeasure& truth,
                                      const std::vector<std::size_t>& counts,
                                      std::size_t n,
                                      std::vector<Eigen::Index>* alive);

}  // namespace eot

#endif  // EOT_MEASURE_HPP
