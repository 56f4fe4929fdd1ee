#pragma once

#include <optional>
#include <string>

#include "ltvreg/config.h"
#include "ltvreg/io.h"
#include "ltvreg/simulator.h"

namespace ltvreg {

/// Everything built from a config before simulation.
struct Synthesis {
  ExperimentConfig cfg;
  UncertainPlant plant;
  Exosystem exo;
  TimeGrid grid;
  int r{0};
  RegulatorSolution nominal;
  InternalModel im;
  std::optional<ApproxIMReport> approx;
  std::optional<ReductionReport> reduction;
  CanonicalRealization realization;
  Controller controller;
  std::optional<AutotuneResult> autotune;
};

/// Regulator solve, internal model per recipe, optional reduction,
/// canonical realization and controller. Throws std::runtime_error when a
/// stage refuses (observability, conditioning, smallness, autotune).
Synthesis Synthesize(const ExperimentConfig& cfg);

struct RunResult {
  Synthesis syn;
  ClosedLoopSystem loop;
  SimulationTrace trace;
  Metrics metrics;
  std::string config_hash;
};

/// Synthesis followed by the simulation at the config's mu.
RunResult RunExperiment(const ExperimentConfig& cfg);

/// Files under `dir`: regulator, model and controller manifests for
/// synthesis; trace and metrics for runs. Honours cfg.formats.
void WriteSynthesisArtifacts(const Synthesis& syn, const std::string& dir);
void WriteRunArtifacts(const RunResult& run, const std::string& dir);

}  // namespace ltvreg
