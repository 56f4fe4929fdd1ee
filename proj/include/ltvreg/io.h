#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ltvreg/simulator.h"

namespace ltvreg {

using Json = nlohmann::json;

/// Rows every `every` steps plus the last one, numbers as %.17g. Header
/// `t,w1..,x1..,xi1..,u,e`.
std::string TraceCsv(const SimulationTrace& trace, int every = 10);

Json MetricsJson(const Metrics& m, const Vector& mu, const std::string& config_hash);

/// Columns t, Pi_11 .. Pi_{n rho} (row major), R_1 .. R_rho.
std::string RegulatorCsv(const RegulatorSolution& sol, int every = 10);
/// Residuals and flags of a regulator solve.
Json RegulatorJson(const RegulatorSolution& sol);

/// Columns t, <name>_11 .. (row major) for a signal sampled on `grid`.
std::string GridCsv(const std::string& name, const MatrixSignal& signal,
                    const TimeGrid& grid, int every = 10);

Json MatrixToJson(const Matrix& m);
/// Inverse of MatrixToJson; bit-exact for finite entries.
Matrix MatrixFromJson(const Json& j);

Json InternalModelJson(const InternalModel& im);
Json RealizationJson(const CanonicalRealization& cr);
Json ControllerJson(const Controller& c);

/// Writes the whole string, creating parent directories.
void WriteText(const std::string& path, const std::string& text);
void WriteJson(const std::string& path, const Json& j);

}  // namespace ltvreg
