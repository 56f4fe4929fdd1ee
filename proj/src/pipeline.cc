#include "ltvreg/pipeline.h"

#include <filesystem>
#include <stdexcept>

namespace ltvreg {

namespace {

RegulatorOptions RegOptions(const ExperimentConfig& cfg) {
  RegulatorOptions o;
  o.t0 = cfg.t0;
  o.horizon = cfg.horizon;
  o.step = cfg.step;
  o.seed = cfg.seed;
  return o;
}

std::vector<Vector> ProbeMus(const UncertainPlant& up) {
  std::vector<Vector> mus = up.Corners();
  if (up.dim_mu() > 0) mus.push_back(Vector::Zero(up.dim_mu()));
  return mus;
}

HighGainParams Gains(const ExperimentConfig& cfg, int r, int sign_b) {
  HighGainParams p;
  p.k = cfg.k;
  p.g = cfg.g;
  p.d = cfg.d.empty() ? DefaultHurwitz(r) : cfg.d;
  if (cfg.K.empty()) {
    p.K = DefaultBrunovskyGain(r);
  } else {
    p.K = Matrix(1, r - 1);
    for (int j = 0; j < r - 1; ++j) p.K(0, j) = cfg.K[j];
  }
  p.sign_b = sign_b;
  return p;
}

bool Wants(const ExperimentConfig& cfg, const std::string& fmt) {
  for (const auto& f : cfg.formats) {
    if (f == fmt) return true;
  }
  return false;
}

std::string Join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

Synthesis Synthesize(const ExperimentConfig& cfg) {
  CheckDimensions(cfg);
  Synthesis s;
  s.cfg = cfg;
  s.plant = BuildUncertainPlant(cfg);
  s.exo = BuildExosystem(cfg);
  const double t1 = cfg.t0 + cfg.horizon;
  const RelativeDegree rd = ComputeRelativeDegree(s.plant.nominal, cfg.t0, t1);
  if (cfg.relative_degree > 0 && rd.r != cfg.relative_degree) {
    throw std::runtime_error("declared relative degree " + std::to_string(cfg.relative_degree) +
                             " but the plant has " + std::to_string(rd.r));
  }
  s.r = rd.r;
  if (!cfg.d.empty() && static_cast<int>(cfg.d.size()) != s.r) {
    throw std::invalid_argument("d must have " + std::to_string(s.r) + " entries");
  }
  if (!cfg.K.empty() && static_cast<int>(cfg.K.size()) != s.r - 1) {
    throw std::invalid_argument("K must have " + std::to_string(s.r - 1) + " entries");
  }
  const RegulatorOptions ropt = RegOptions(cfg);

  if (cfg.recipe == "interaction_robust") {
    InteractionComponents comp = SolveInteractionComponents(s.plant, s.exo, ropt);
    s.im = InteractionRobustIM(comp.nominal.RSignal(), comp.R_mu, s.exo.S, s.plant.coords,
                               cfg.t0);
    s.nominal = std::move(comp.nominal);
  } else {
    s.nominal = SolveRegulator(s.plant.nominal, s.exo, ropt);
    if (cfg.recipe == "plant_approx") {
      PlantApproxOptions o;
      o.k_b = cfg.k_b;
      o.k_eta = cfg.k_eta;
      o.t0 = cfg.t0;
      o.horizon = cfg.horizon;
      o.step = cfg.step;
      o.seed = cfg.seed;
      PlantApproxResult res = PlantApproxIM(s.plant, s.exo, o);
      s.im = std::move(res.im);
      s.approx = res.report;
    } else {
      s.im = NominalIM(s.nominal.RSignal(), s.exo.S, cfg.t0);
    }
  }
  s.grid = s.nominal.grid;

  if (cfg.reduce_tol > 0.0) {
    ReductionReport rep;
    s.im = ReduceIM(s.im, s.grid, ProbeMus(s.plant), cfg.reduce_tol, s.exo.S, &rep);
    s.reduction = rep;
  }

  RealizationLimits limits;
  limits.max_condition = cfg.max_condition;
  limits.require_observability = cfg.require_observability;
  s.realization = BuildCanonicalRealization(s.im, cfg.alpha_cr,
                                            Matrix::Identity(s.im.nu(), s.im.nu()), s.grid,
                                            s.exo.S, limits);

  HighGainParams gains = Gains(cfg, s.r, rd.sign_b);
  if (cfg.autotune) {
    auto factory = [&](const HighGainParams& p, const Vector& mu) {
      return AssembleClosedLoop(s.plant.Instantiate(mu), s.exo,
                                BuildController(s.realization, s.r, p), mu)
          .A_cl;
    };
    UasOptions uo;
    uo.t0 = cfg.t0;
    uo.seed = cfg.seed;
    // The realized model only exists on the synthesis grid.
    uo.max_horizon = cfg.horizon;
    uo.pilot = std::min(uo.pilot, cfg.horizon);
    s.autotune = AutotuneGains(factory, gains, ProbeMus(s.plant), 8, uo);
    gains = s.autotune->params;
  }
  s.controller = BuildController(s.realization, s.r, gains);
  return s;
}

RunResult RunExperiment(const ExperimentConfig& cfg) {
  RunResult run;
  run.syn = Synthesize(cfg);
  const Vector mu = MuOf(cfg);
  run.loop = AssembleClosedLoop(run.syn.plant.Instantiate(mu), run.syn.exo, run.syn.controller, mu);
  run.trace = Simulate(run.loop, W0Of(cfg), X0Of(cfg), Vector::Zero(run.syn.controller.dim()),
                       cfg.t0, cfg.horizon, cfg.step);
  run.metrics = ComputeMetrics(run.trace);
  run.config_hash = ConfigHash(cfg);
  return run;
}

void WriteSynthesisArtifacts(const Synthesis& s, const std::string& dir) {
  if (Wants(s.cfg, "csv")) {
    WriteText(Join(dir, "regulator.csv"), RegulatorCsv(s.nominal));
    WriteText(Join(dir, "im_H.csv"), GridCsv("H", s.im.H, s.grid));
    WriteText(Join(dir, "im_H_im.csv"), GridCsv("H_im", s.realization.H_im, s.grid));
    WriteText(Join(dir, "im_L.csv"), GridCsv("L", s.realization.L, s.grid));
  }
  if (Wants(s.cfg, "json")) {
    WriteJson(Join(dir, "regulator.json"), RegulatorJson(s.nominal));
    Json im = InternalModelJson(s.im);
    if (s.approx) {
      const ApproxIMReport& a = *s.approx;
      im["bound_report"] = {{"k_b", a.k_b},       {"k_eta", a.k_eta}, {"bound_R", a.bound_R},
                            {"phi_prime", a.phi_prime}, {"g1", a.g1}, {"N_b", a.N_b},
                            {"phi_b", a.phi_b},   {"g2", a.g2},       {"N_eta", a.N_eta},
                            {"phi1", a.phi1},     {"phi2", a.phi2},   {"phi_S", a.phi_S},
                            {"phi_U", a.phi_U}};
    }
    if (s.reduction) {
      im["reduction"] = {{"nu_before", s.reduction->nu_before},
                         {"nu_after", s.reduction->nu_after},
                         {"weakly_observable", s.reduction->weakly_observable},
                         {"singular_values", s.reduction->singular_values}};
    }
    Json manifest = {{"config_hash", ConfigHash(s.cfg)},
                     {"internal_model", im},
                     {"realization", RealizationJson(s.realization)},
                     {"controller", ControllerJson(s.controller)}};
    if (s.autotune) {
      manifest["autotune"] = {{"doublings", s.autotune->doublings},
                              {"history", s.autotune->history}};
    }
    WriteJson(Join(dir, "manifest.json"), manifest);
  }
}

void WriteRunArtifacts(const RunResult& run, const std::string& dir) {
  WriteSynthesisArtifacts(run.syn, dir);
  if (Wants(run.syn.cfg, "csv")) WriteText(Join(dir, "trace.csv"), TraceCsv(run.trace));
  if (Wants(run.syn.cfg, "json")) {
    WriteJson(Join(dir, "metrics.json"),
              MetricsJson(run.metrics, run.trace.mu, run.config_hash));
  }
}

}  // namespace ltvreg
