#include "eot/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "eot/errors.hpp"

namespace eot {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json optional_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

json to_json(const SinkhornSolution& sol) {
  return json{{"schema_version", kSchemaVersion},
              {"f", vector_to_json(sol.f)},
              {"g", vector_to_json(sol.g)},
              {"epsilon", sol.epsilon},
              {"cost", sol.cost},
              {"residual", sol.residual},
              {"iterations", sol.iterations}};
}

json to_json(const InferenceReport& report) {
  return json{{"schema_version", kSchemaVersion},
              {"estimate", report.estimate},
              {"sigma2", report.sigma2},
              {"rate", report.rate},
              {"ci_low", report.ci_low},
              {"ci_high", report.ci_high},
              {"level", report.level},
              {"lambda", optional_to_json(report.lambda)}};
}

json to_json(const H0Spectrum& spectrum) {
  return json{{"schema_version", kSchemaVersion},
              {"weights", spectrum.weights},
              {"sum", spectrum.sum()}};
}

json to_json(const H0TestResult& result) {
  return json{{"schema_version", kSchemaVersion},
              {"observed", result.observed},
              {"spectrum", result.spectrum.weights},
              {"p_value", result.p_value},
              {"mc_stderr", result.mc_stderr},
              {"rate", result.rate}};
}

json to_json(const ReplicationReport& report) {
  json out{{"schema_version", kSchemaVersion},
           {"replications", report.replications},
           {"skipped", report.skipped},
           {"truth_value", report.truth_value},
           {"mean_estimate", report.mean_estimate},
           {"empirical_variance", report.empirical_variance},
           {"predicted_variance", report.predicted_variance},
           {"variance_ratio", optional_to_json(report.variance_ratio)},
           {"ks_statistic", optional_to_json(report.ks_statistic)},
           {"coverage", optional_to_json(report.coverage)},
           {"rate", report.rate},
           {"lambda", optional_to_json(report.lambda)},
           {"level", report.level}};
  if (report.spectrum) {
    out["spectrum"] = report.spectrum->weights;
    out["spectrum_sum"] = optional_to_json(report.spectrum_sum);
    out["mean_scaled"] = optional_to_json(report.mean_scaled);
  }
  if (!report.replicates.empty()) out["replicates"] = report.replicates;
  return out;
}

namespace {

DiscreteMeasure parse_measure_field(const json& value) {
  if (value.is_string()) {
    const std::string path = value.get<std::string>();
    const bool is_json = path.size() >= 5 &&
                         path.compare(path.size() - 5, 5, ".json") == 0;
    return load_measure(path,
                        is_json ? MeasureFormat::Json : MeasureFormat::Csv);
  }
  if (!value.is_object() || !value.contains("points") ||
      !value.contains("weights"))
    throw ConfigError("measure must be a path or {points, weights}");
  const auto& jp = value["points"];
  const auto& jw = value["weights"];
  if (!jp.is_array() || jp.empty() || !jw.is_array())
    throw ConfigError("measure points/weights must be non-empty arrays");
  const Eigen::Index k = Eigen::Index(jp.size());
  const Eigen::Index d = Eigen::Index(jp[0].size());
  Eigen::MatrixXd points(k, d);
  Eigen::VectorXd weights(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (Eigen::Index(jp[std::size_t(i)].size()) != d)
      throw ConfigError("ragged measure point list");
    for (Eigen::Index c = 0; c < d; ++c)
      points(i, c) = jp[std::size_t(i)][std::size_t(c)].get<double>();
    weights[i] = jw[std::size_t(i)].get<double>();
  }
  return DiscreteMeasure(std::move(points), std::move(weights));
}

}  // namespace

FunctionalSpec parse_functional_spec(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind"))
    throw ConfigError("eta spec requires a 'kind'");
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "half-squared-distance")
    return FunctionalSpec::half_squared_distance();
  if (kind == "threshold-indicator") {
    if (!doc.contains("t")) throw ConfigError("threshold-indicator needs 't'");
    return FunctionalSpec::threshold_indicator(doc["t"].get<double>());
  }
  if (kind == "constant") {
    if (!doc.contains("c")) throw ConfigError("constant eta needs 'c'");
    return FunctionalSpec::constant_value(doc["c"].get<double>());
  }
  if (kind == "explicit-matrix") {
    if (doc.contains("file"))
      return FunctionalSpec::explicit_matrix(
          read_matrix_csv(doc["file"].get<std::string>()));
    if (!doc.contains("values"))
      throw ConfigError("explicit-matrix eta needs 'values' or 'file'");
    const auto& jm = doc["values"];
    if (!jm.is_array() || jm.empty())
      throw ConfigError("eta values must be a non-empty 2d array");
    const Eigen::Index rows = Eigen::Index(jm.size());
    const Eigen::Index cols = Eigen::Index(jm[0].size());
    Eigen::MatrixXd values(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (Eigen::Index(jm[std::size_t(i)].size()) != cols)
        throw ConfigError("ragged eta value matrix");
      for (Eigen::Index j = 0; j < cols; ++j)
        values(i, j) = jm[std::size_t(i)][std::size_t(j)].get<double>();
    }
    return FunctionalSpec::explicit_matrix(std::move(values));
  }
  throw ConfigError("unknown eta kind '" + kind + "'");
}

SimulationConfig parse_simulation_config(const json& doc) {
  SimulationConfig cfg;
  try {
    if (!doc.contains("truth_p")) throw ConfigError("config needs truth_p");
    cfg.truth_p = parse_measure_field(doc["truth_p"]);
    if (doc.contains("truth_q") && !doc["truth_q"].is_null())
      cfg.truth_q = parse_measure_field(doc["truth_q"]);

    if (!doc.contains("statistic"))
      throw ConfigError("config needs a statistic");
    const auto& js = doc["statistic"];
    const std::string kind =
        js.is_string() ? js.get<std::string>() : js.at("kind").get<std::string>();
    if (kind == "cost") {
      cfg.statistic.kind = StatisticKind::Cost;
    } else if (kind == "potential-at-atom") {
      cfg.statistic.kind = StatisticKind::PotentialAtAtom;
      cfg.statistic.atom = js.at("atom").get<Eigen::Index>();
    } else if (kind == "functional") {
      cfg.statistic.kind = StatisticKind::Functional;
      cfg.statistic.eta = parse_functional_spec(js.at("eta"));
    } else if (kind == "divergence") {
      cfg.statistic.kind = StatisticKind::Divergence;
    } else if (kind == "scaled-divergence-h0") {
      cfg.statistic.kind = StatisticKind::ScaledDivergenceH0;
    } else {
      throw ConfigError("unknown statistic kind '" + kind + "'");
    }

    cfg.epsilon = doc.value("epsilon", 1.0);
    cfg.n = doc.at("n").get<std::size_t>();
    if (doc.contains("m") && !doc["m"].is_null())
      cfg.m = doc["m"].get<std::size_t>();
    cfg.replications = doc.at("replications").get<std::size_t>();
    cfg.seed = doc.value("seed", std::uint64_t(0));
    cfg.level = doc.value("level", 0.95);
    cfg.tol = doc.value("tol", 1e-10);
    cfg.max_iter = doc.value("max_iter", std::size_t(100000));
    cfg.threads = doc.value("threads", std::size_t(0));
    cfg.mixture_draws = doc.value("mixture_draws", std::size_t(100000));
    cfg.compute_coverage = doc.value("coverage", true);
    cfg.keep_replicates = doc.value("keep_replicates", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad simulation config: ") + e.what());
  }
  return cfg;
}

SimulationConfig load_simulation_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_simulation_config(doc);
}

void write_matrix_csv(const Eigen::MatrixXd& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  char buf[32];
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
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
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": malformed cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix file");
  Eigen::MatrixXd out(Eigen::Index(rows.size()),
                      Eigen::Index(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      out(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  return out;
}

}  // namespace eot
