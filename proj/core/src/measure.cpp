#include "eot/measure.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "eot/errors.hpp"

namespace eot {

namespace {

constexpr double kMergeTol = 1e-12;     // per-coordinate duplicate merge
constexpr double kSumTol = 1e-9;        // acceptable drift of the weight sum
constexpr double kMinWeight = 1e-15;    // log-domain solver divides by weights

bool points_equal(const Eigen::MatrixXd& pts, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < pts.cols(); ++c)
    if (std::abs(pts(a, c) - pts(b, c)) > kMergeTol) return false;
  return true;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd points,
                                 Eigen::VectorXd weights) {
  if (points.rows() == 0) throw InvalidMeasure("measure has no atoms");
  if (points.rows() != weights.size())
    throw InvalidMeasure("points/weights length mismatch");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] <= 0.0)
      throw InvalidMeasure("weights must be strictly positive and finite");
    for (Eigen::Index c = 0; c < points.cols(); ++c)
      if (!std::isfinite(points(i, c)))
        throw InvalidMeasure("points must be finite");
  }

  const double sum = weights.sum();
  if (std::abs(sum - 1.0) > kSumTol)
    throw InvalidMeasure("weights sum to " + std::to_string(sum) +
                         ", expected 1 within 1e-9");
  weights /= sum;

  // Merge numerically identical atoms, first occurrence wins the slot.
  std::vector<Eigen::Index> keep;
  std::vector<double> merged;
  keep.reserve(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    bool found = false;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      if (points_equal(points, keep[k], i)) {
        merged[k] += weights[i];
        found = true;
        break;
      }
    }
    if (!found) {
      keep.push_back(i);
      merged.push_back(weights[i]);
    }
  }

  points_.resize(Eigen::Index(keep.size()), points.cols());
  weights_.resize(Eigen::Index(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    points_.row(Eigen::Index(k)) = points.row(keep[k]);
    if (merged[k] < kMinWeight)
      throw InvalidMeasure("atom weight below 1e-15 after merge");
    weights_[Eigen::Index(k)] = merged[k];
  }
}

bool DiscreteMeasure::same_support(const DiscreteMeasure& other,
                                   double tol) const {
  if (size() != other.size() || dim() != other.dim()) return false;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (std::abs(weights_[i] - other.weights_[i]) > tol) return false;
    for (Eigen::Index c = 0; c < dim(); ++c)
      if (std::abs(points_(i, c) - other.points_(i, c)) > tol) return false;
  }
  return true;
}

std::vector<std::size_t> SampleBatch::counts() const {
  std::vector<std::size_t> out(std::size_t(source->size()), 0);
  for (std::size_t idx : draws) ++out[idx];
  return out;
}

namespace {

DiscreteMeasure load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(unsigned(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": malformed cell '" + cell + "'");
      }
    }
    if (row.size() < 2)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected d coordinates and a weight");
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidMeasure(path + ": empty measure file");

  const Eigen::Index d = Eigen::Index(rows.front().size()) - 1;
  Eigen::MatrixXd points(Eigen::Index(rows.size()), d);
  Eigen::VectorXd weights(Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index c = 0; c < d; ++c) points(Eigen::Index(i), c) = rows[i][std::size_t(c)];
    weights[Eigen::Index(i)] = rows[i].back();
  }
  return DiscreteMeasure(std::move(points), std::move(weights));
}

DiscreteMeasure load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.contains("points") || !doc.contains("weights"))
    throw ParseError(path + ": expected keys 'points' and 'weights'");
  const auto& jp = doc["points"];
  const auto& jw = doc["weights"];
  if (!jp.is_array() || !jw.is_array() || jp.empty())
    throw ParseError(path + ": 'points' and 'weights' must be arrays");
  const Eigen::Index k = Eigen::Index(jp.size());
  if (Eigen::Index(jw.size()) != k)
    throw ParseError(path + ": points/weights length mismatch");
  const Eigen::Index d = Eigen::Index(jp[0].size());
  Eigen::MatrixXd points(k, d);
  Eigen::VectorXd weights(k);
  try {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (Eigen::Index(jp[std::size_t(i)].size()) != d)
        throw ParseError(path + ": ragged point list");
      for (Eigen::Index c = 0; c < d; ++c)
        points(i, c) = jp[std::size_t(i)][std::size_t(c)].get<double>();
      weights[i] = jw[std::size_t(i)].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return DiscreteMeasure(std::move(points), std::move(weights));
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

DiscreteMeasure load_measure(const std::string& path, MeasureFormat format) {
  return format == MeasureFormat::Csv ? load_csv(path) : load_json(path);
}

void save_measure(const DiscreteMeasure& measure, const std::string& path,
                  MeasureFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  if (format == MeasureFormat::Csv) {
    for (Eigen::Index i = 0; i < measure.size(); ++i) {
      for (Eigen::Index c = 0; c < measure.dim(); ++c)
        out << fmt17(measure.points()(i, c)) << ',';
      out << fmt17(measure.weights()[i]) << '\n';
    }
  } else {
    out << "{\"points\": [";
    for (Eigen::Index i = 0; i < measure.size(); ++i) {
      out << (i ? ", [" : "[");
      for (Eigen::Index c = 0; c < measure.dim(); ++c)
        out << (c ? "," : "") << fmt17(measure.points()(i, c));
      out << ']';
    }
    out << "], \"weights\": [";
    for (Eigen::Index i = 0; i < measure.size(); ++i)
      out << (i ? "," : "") << fmt17(measure.weights()[i]);
    out << "]}\n";
  }
}

SampleBatch sample_batch(const DiscreteMeasure& truth, std::size_t n,
                         Rng& rng) {
  if (n < 1) throw InvalidMeasure("sample size must be >= 1");
  std::vector<double> cumulative(std::size_t(truth.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    acc += truth.weights()[i];
    cumulative[std::size_t(i)] = acc;
  }
  cumulative.back() = 1.0;

  SampleBatch batch;
  batch.source = &truth;
  batch.n = n;
  batch.draws.resize(n);
  for (std::size_t k = 0; k < n; ++k) batch.draws[k] = rng.next_index(cumulative);
  return batch;
}

DiscreteMeasure empirical_from_counts(const DiscreteMeasure& truth,
                                      const std::vector<std::size_t>& counts,
                                      std::size_t n,
                                      std::vector<Eigen::Index>* alive) {
  Eigen::Index survivors = 0;
  for (std::size_t c : counts) survivors += (c > 0);
  Eigen::MatrixXd points(survivors, truth.dim());
  Eigen::VectorXd weights(survivors);
  if (alive) alive->clear();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (counts[std::size_t(i)] == 0) continue;
    points.row(k) = truth.points().row(i);
    weights[k] = double(counts[std::size_t(i)]) / double(n);
    if (alive) alive->push_back(i);
    ++k;
  }
  return DiscreteMeasure(std::move(points), std::move(weights));
}

DiscreteMeasure empirical_from_sample(const DiscreteMeasure& truth,
                                      std::size_t n, Rng& rng) {
  const SampleBatch batch = sample_batch(truth, n, rng);
  return empirical_from_counts(truth, batch.counts(), n, nullptr);
}

}  // namespace eot
