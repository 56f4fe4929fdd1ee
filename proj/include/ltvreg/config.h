#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ltvreg/expression.h"
#include "ltvreg/ltv_core.h"

namespace ltvreg {

/// Bad configuration text or inconsistent declarations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ChannelSpec {
  std::string coord;
  /// A, B, C, P, Q or a normal-form part: alpha, beta, eta, b, Pu, Pl.
  std::string target;
  MatrixExpr E;

  bool operator==(const ChannelSpec&) const = default;
};

/// Everything one experiment needs. Text format, one `key = value` per
/// line, `#` starts a comment:
///
///   S = [[0, 1], [-1, 0]]
///   A = [[1, -2.6], [1, -1]]      (or alpha/beta/eta/b with relative_degree)
///   mu.mu3 = 0.7                   coordinate and its box radius
///   channel.mu3.Q = [-1, 0]
///   controller = interaction_robust
///   w0 = [0.5, -1]
struct ExperimentConfig {
  std::string name{"experiment"};
  std::uint64_t seed{42};

  MatrixExpr S;
  double t0{0.0};
  /// > 0 declares the nominal plant to be in normal form.
  int relative_degree{0};
  /// Present plant matrices, keyed A, B, C, alpha, beta, eta, b, P, Q.
  std::vector<std::pair<std::string, MatrixExpr>> plant;
  std::vector<std::pair<std::string, double>> coords;
  std::vector<ChannelSpec> channels;

  std::string recipe{"nominal"};  // nominal | interaction_robust | plant_approx
  int k_b{0};
  int k_eta{0};
  double alpha_cr{4.0};
  double k{20.0};
  double g{200.0};
  /// Empty selects the binomial coefficients.
  std::vector<double> d;
  /// Empty selects poles -1 .. -(r-1).
  std::vector<double> K;
  bool autotune{false};
  double max_condition{1e8};
  bool require_observability{true};
  /// Zero keeps the model unreduced.
  double reduce_tol{0.0};

  /// Empty vectors mean zeros.
  std::vector<double> mu;
  std::vector<double> w0;
  std::vector<double> x0;
  double horizon{50.0};
  double step{1e-3};

  std::string out{"out"};
  std::vector<std::string> formats{"csv", "json"};

  bool operator==(const ExperimentConfig&) const = default;

  bool normal_form() const;
  const MatrixExpr* Find(const std::string& key) const;
  int n() const;
  int rho() const { return S.rows; }
};

/// Parses and runs the dimension audit. Throws ConfigError.
ExperimentConfig ParseConfig(std::string_view text);
ExperimentConfig LoadConfig(const std::string& path);
/// Canonical text: fixed key order, shortest round-trip numbers.
std::string SerializeConfig(const ExperimentConfig& cfg);
/// Hex SHA-256 of the canonical text.
std::string ConfigHash(const ExperimentConfig& cfg);

/// Mutual consistency of all declared sizes. Throws ConfigError.
void CheckDimensions(const ExperimentConfig& cfg);

/// Built-in configurations: "interaction" and "plant".
ExperimentConfig BuiltinConfig(const std::string& id);

Exosystem BuildExosystem(const ExperimentConfig& cfg);
UncertainPlant BuildUncertainPlant(const ExperimentConfig& cfg);
/// mu, w0 and x0 with empty entries expanded to zeros.
Vector MuOf(const ExperimentConfig& cfg);
Vector W0Of(const ExperimentConfig& cfg);
Vector X0Of(const ExperimentConfig& cfg);

}  // namespace ltvreg
