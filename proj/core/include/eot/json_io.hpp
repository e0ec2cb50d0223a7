#ifndef EOT_JSON_IO_HPP
#define EOT_JSON_IO_HPP

#include <string>

#include "json.hpp"

#include "eot/inference.hpp"
#include "eot/montecarlo.hpp"
#include "eot/sinkhorn.hpp"

namespace eot {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const SinkhornSolution& sol);
nlohmann::json to_json(const InferenceReport& report);
nlohmann::json to_json(const H0Spectrum& spectrum);
nlohmann::json to_json(const H0TestResult& result);
nlohmann::json to_json(const ReplicationReport& report);

/// Parses a simulation config document. Measures may be inline
/// {"points": ..., "weights": ...} objects or file-path strings.
SimulationConfig parse_simulation_config(const nlohmann::json& doc);
SimulationConfig load_simulation_config(const std::string& path);

/// Parses an eta descriptor: {"kind": "half-squared-distance"} |
/// {"kind":"threshold-indicator","t":..} | {"kind":"constant","c":..} |
/// {"kind":"explicit-matrix","values":[[..]] | "file": "eta.csv"}.
FunctionalSpec parse_functional_spec(const nlohmann::json& doc);

/// Dense matrix as CSV with 17 significant digits.
void write_matrix_csv(const Eigen::MatrixXd& matrix, const std::string& path);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace eot

#endif  // EOT_JSON_IO_HPP
