// Command-line front end. Exit codes: 0 success, 1 a criterion or synthesis
// stage failed, 2 usage or configuration error.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ltvreg/checks.h"

namespace {

using namespace ltvreg;

struct Globals {
  std::string out;
  std::uint64_t seed{42};
  std::optional<double> step;
};

ExperimentConfig Load(const std::string& path, const Globals& g, bool seed_given) {
  ExperimentConfig cfg = LoadConfig(path);
  if (seed_given) cfg.seed = g.seed;
  if (g.step) cfg.step = *g.step;
  if (!g.out.empty()) cfg.out = g.out;
  return cfg;
}

std::string CsvSafe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n') c = ';';
  }
  return s;
}

int Sweep(ExperimentConfig cfg, const std::string& axis, const std::vector<double>& values) {
  std::string csv = "value,tail_sup_error,bound_R,status\n";
  std::cout << csv;
  for (double v : values) {
    ExperimentConfig c = cfg;
    if (axis == "k_b") c.k_b = static_cast<int>(v);
    if (axis == "k_eta") c.k_eta = static_cast<int>(v);
    if (axis == "g") c.g = v;
    if (axis == "k") c.k = v;
    char row[256];
    try {
      const RunResult run = RunExperiment(c);
      const double bound = run.syn.approx ? run.syn.approx->bound_R : NAN;
      std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,ok\n", v, run.metrics.tail_sup_error, bound);
    } catch (const std::runtime_error& e) {
      std::snprintf(row, sizeof row, "%.17g,nan,nan,%s\n", v, CsvSafe(e.what()).substr(0, 180).c_str());
    }
    std::cout << row << std::flush;
    csv += row;
  }
  WriteText((std::filesystem::path(cfg.out) / ("sweep_" + axis + ".csv")).string(), csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust output regulation for linear time-varying plants"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--out", g.out, "Output directory (default: the config's, or out/)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for randomized probes");
  app.add_option("--step", g.step, "Integration step override")->check(CLI::PositiveNumber);

  std::string example, config_path, axis, suite;
  std::vector<double> values;
  auto* reproduce = app.add_subcommand("reproduce", "Run a built-in example and judge its thresholds");
  reproduce->add_option("example", example, "interaction or plant")->required();
  auto* synth = app.add_subcommand("synth", "Synthesize the internal model and controller");
  synth->add_option("config", config_path)->required();
  auto* simulate = app.add_subcommand("simulate", "Synthesize and simulate the closed loop");
  simulate->add_option("config", config_path)->required();
  auto* sweep = app.add_subcommand("sweep", "Tail error along one parameter axis");
  sweep->add_option("config", config_path)->required();
  sweep->add_option("--axis", axis)->required()->check(CLI::IsMember({"k_b", "k_eta", "g", "k"}));
  sweep->add_option("--values", values)->required()->expected(1, -1);
  auto* check = app.add_subcommand("check", "Run executable property suites");
  check->add_option("suite", suite, "core, regulator, im, stabilizer, sim or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const bool seed_given = seed_opt->count() > 0;

  try {
    if (*reproduce) {
      const std::string out = g.out.empty() ? "out" : g.out;
      const ExampleOutcome o = RunExample(example, out, g.seed, g.step.value_or(-1.0));
      for (const std::string& line : o.lines) std::cout << line << "\n";
      std::cout << example << ": " << (o.pass ? "PASS" : "FAIL") << " in " << o.seconds << " s\n";
      return o.pass ? 0 : 1;
    }
    if (*synth) {
      const ExperimentConfig cfg = Load(config_path, g, seed_given);
      const Synthesis s = Synthesize(cfg);
      WriteSynthesisArtifacts(s, cfg.out);
      std::cout << "nu " << s.im.nu() << ", controller dimension " << s.controller.dim()
                << ", max cond(L) " << s.realization.max_condition << ", written to " << cfg.out
                << "\n";
      return 0;
    }
    if (*simulate) {
      const ExperimentConfig cfg = Load(config_path, g, seed_given);
      const RunResult run = RunExperiment(cfg);
      WriteRunArtifacts(run, cfg.out);
      std::cout << MetricsJson(run.metrics, run.trace.mu, run.config_hash).dump(2) << "\n";
      return 0;
    }
    if (*sweep) {
      return Sweep(Load(config_path, g, seed_given), axis, values);
    }
    if (*check) {
      const std::vector<CheckResult> results = RunSuite(suite, g.seed);
      const std::string out = g.out.empty() ? "out" : g.out;
      WriteJson((std::filesystem::path(out) / ("checks_" + suite + ".json")).string(),
                ChecksJson(results));
      std::cout << ChecksText(results);
      for (const CheckResult& r : results) {
        if (!r.pass) return 1;
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
