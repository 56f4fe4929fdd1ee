#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ltvreg/pipeline.h"

namespace ltvreg {

/// Outcome of one executable property.
struct CheckResult {
  std::string suite;
  std::string name;
  bool pass{false};
  /// Measured quantity and the threshold it was held against.
  double value{0.0};
  double tolerance{0.0};
  std::string detail;
  double seconds{0.0};
};

/// Random minimum-phase plant in normal form, with constant (LTI) or
/// modulated (LTV) entries.
struct RandomInstance {
  Plant plant;
  Exosystem exo;
  int r{1};
};
RandomInstance RandomMinimumPhase(std::mt19937_64& rng, bool time_varying, double horizon);

/// The suites are core, regulator, im, stabilizer and sim.
const std::vector<std::string>& SuiteNames();
/// "all" runs every suite. Throws std::invalid_argument on unknown names.
std::vector<CheckResult> RunSuite(const std::string& suite, std::uint64_t seed = 42);

Json ChecksJson(const std::vector<CheckResult>& results);
std::string ChecksText(const std::vector<CheckResult>& results);

/// Individual properties, shared with the acceptance runner.
CheckResult CheckCocycle(std::uint64_t seed);
CheckResult CheckDerivativeConsistency();
CheckResult CheckChainIdentity(std::uint64_t seed);
CheckResult CheckStackIdentity();

CheckResult CheckOracleEquivalence(std::uint64_t seed, int instances = 20);
CheckResult CheckRegulatorResiduals(std::uint64_t seed, int instances = 20);
CheckResult CheckClosedFormPi();
CheckResult CheckAsymptoticUniqueness();
CheckResult CheckPathAgreement();
CheckResult CheckResonanceFlag();

CheckResult CheckInteractionExactness();
CheckResult CheckInteractionPropagation();
CheckResult CheckTruncationBound(std::uint64_t seed, int instances = 10);
CheckResult CheckScalarBounds();
/// id is "interaction" or "plant"; the realization is built without its
/// guards so the conditioning can be measured.
CheckResult CheckRealization(const std::string& id);
CheckResult CheckRealizationInvariance();
CheckResult CheckReductionSoundness();

CheckResult CheckClosedLoopRegulatorEquations();
CheckResult CheckGainMonotonicity();
CheckResult CheckControllerStructure();

CheckResult CheckStepHalving(const std::string& id);
CheckResult CheckCoordinateChange();
CheckResult CheckErrorIdentity();
CheckResult CheckRegulationConsistency();
CheckResult CheckDeterminism();
CheckResult CheckClosedLoopUas();
CheckResult CheckGramProbe();

/// Both controllers of a built-in example, simulated at its config.
struct ExampleOutcome {
  std::string id;
  bool pass{false};
  /// Tail errors; negative when that run failed.
  double nominal_tail{-1.0};
  double robust_tail{-1.0};
  std::string robust_error;
  /// Plant example only: ratio with the realization guards bypassed.
  double bypass_ratio{-1.0};
  std::vector<std::string> lines;
  double seconds{0.0};
};
/// Runs "interaction" or "plant". Writes artifacts under out_dir unless
/// empty. step <= 0 keeps the config's step.
ExampleOutcome RunExample(const std::string& id, const std::string& out_dir,
                          std::uint64_t seed = 42, double step = -1.0,
                          bool bypass_diagnostic = true);

}  // namespace ltvreg
