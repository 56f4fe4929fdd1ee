#include "ltvreg/checks.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ltvreg/expression.h"

namespace ltvreg {

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MatrixSignal Parse(const std::string& s) { return CompileMatrixExpr(ParseMatrixExpr(s)); }

CheckResult Result(std::string name, bool pass, double value, double tol, std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.pass = pass;
  r.value = value;
  r.tolerance = tol;
  r.detail = std::move(detail);
  return r;
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vector Vec(std::initializer_list<double> v) {
  Vector m(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) m(i++) = x;
  return m;
}

// Built-in syntheses are reused by several checks; they are immutable.
const Synthesis& InteractionRobust() {
  static const Synthesis s = Synthesize(BuiltinConfig("interaction"));
  return s;
}

const Synthesis& InteractionNominal() {
  static const Synthesis s = [] {
    ExperimentConfig cfg = BuiltinConfig("interaction");
    cfg.recipe = "nominal";
    return Synthesize(cfg);
  }();
  return s;
}

const RunResult& InteractionRun() {
  static const RunResult r = RunExperiment(BuiltinConfig("interaction"));
  return r;
}

ExperimentConfig Unguarded(ExperimentConfig cfg) {
  cfg.max_condition = 1e300;
  cfg.require_observability = false;
  return cfg;
}

// Normal-form random plant; every modulation keeps b away from zero and
// the symmetric part of eta below -0.7.
Matrix RandomSkew(std::mt19937_64& rng, int rho) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix S = Matrix::Zero(rho, rho);
  for (int i = 0; i < rho; ++i) {
    for (int j = 0; j < i; ++j) {
      S(i, j) = u(rng);
      S(j, i) = -S(i, j);
    }
  }
  return S;
}

MatrixSignal Wobble(std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> w(0.5, 2.0), ph(0.0, 2 * M_PI);
  return MatrixSignal::Sinusoid(amp, w(rng), ph(rng));
}

double SupOverNodes(const std::vector<Matrix>& a, const std::vector<Matrix>& b, int from = 0) {
  double d = 0.0;
  for (size_t k = from; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).norm());
  return d;
}

}  // namespace

RandomInstance RandomMinimumPhase(std::mt19937_64& rng, bool tv, double horizon) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> pick_n(2, 4), pick_r(1, 2), pick_rho(1, 3);
  RandomInstance inst;
  const int n = pick_n(rng);
  const int r = std::min(pick_r(rng), n - 1);
  const int rho = pick_rho(rng);
  const int l = n - r;
  inst.r = r;
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < r; ++i) A(i, i + 1) = 1;
  for (int j = 0; j < n; ++j) A(r - 1, j) = u(rng);
  for (int i = r; i < n; ++i) A(i, 0) = u(rng);
  for (int i = r; i < n; ++i) {
    for (int j = r; j < n; ++j) A(i, j) = i == j ? -1.5 : 0.3 * u(rng);
  }
  const double b0 = 1.5 + 0.5 * u(rng);
  Matrix P(n, rho), Q(1, rho);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rho; ++j) P(i, j) = u(rng);
  for (int j = 0; j < rho; ++j) Q(0, j) = u(rng);
  const Matrix S = RandomSkew(rng, rho);
  Plant& p = inst.plant;
  p.A = MatrixSignal::Constant(A);
  p.B = Embed(MatrixSignal::Scalar(b0), n, 1, r - 1, 0);
  p.C = MatrixSignal::Constant(Matrix::Identity(1, n));
  p.P = MatrixSignal::Constant(P);
  p.Q = MatrixSignal::Constant(Q);
  MatrixSignal Ssig = MatrixSignal::Constant(S);
  if (tv) {
    for (int j = 0; j < n; ++j) {
      p.A = p.A + Embed(Wobble(rng, 0.3), n, n, r - 1, j);
    }
    for (int i = r; i < n; ++i) p.A = p.A + Embed(Wobble(rng, 0.2), n, n, i, i);
    p.B = p.B + Embed(Wobble(rng, 0.3), n, 1, r - 1, 0);
    for (int j = 0; j < rho; ++j) p.Q = p.Q + Embed(Wobble(rng, 0.2), 1, rho, 0, j);
    // Scalar modulation of a skew generator keeps Phi_S orthogonal.
    Ssig = (MatrixSignal::Scalar(1.0) + Wobble(rng, 0.3)) * Ssig;
  }
  (void)l;
  inst.exo = Exosystem::Make(Ssig, 0, horizon);
  return inst;
}

// ---------------------------------------------------------------- core

CheckResult CheckCocycle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1), ts(0, 8);
  double worst = 0.0;
  for (int inst = 0; inst < 3; ++inst) {
    Matrix M(3, 3), N(3, 3);
    for (int i = 0; i < 9; ++i) {
      M(i) = 0.5 * u(rng);
      N(i) = 0.5 * u(rng);
    }
    const MatrixSignal A = MatrixSignal::Constant(M - 1.5 * Matrix::Identity(3, 3)) +
                           MatrixSignal::Sinusoid(1.0, 1.3, 0.2) * MatrixSignal::Constant(N);
    for (int trial = 0; trial < 4; ++trial) {
      const double a = ts(rng), b = ts(rng), c = ts(rng);
      const Matrix lhs = TransitionMatrix(A, a, b) * TransitionMatrix(A, b, c);
      worst = std::max(worst, (lhs - TransitionMatrix(A, a, c)).norm());
      worst = std::max(worst, (TransitionMatrix(A, a, a) - Matrix::Identity(3, 3)).norm());
    }
  }
  return Result("cocycle identity", worst <= 1e-7, worst, 1e-7,
                "3 random stable 3x3 signals, 4 triples each, step 1e-3");
}

CheckResult CheckDerivativeConsistency() {
  const std::vector<std::string> exprs = {
      "-1.6 - 0.2*(cos(2*t) + cos(sqrt(2)*t))", "exp(-t)*sin(3*t)", "sqrt(2 + sin(t))",
      "1/(sin(t) + 2.5)^2", "t^3 - 2*t*cos(t)"};
  double worst = 0.0;
  for (const auto& e : exprs) {
    const MatrixSignal s = Parse(e);
    const MatrixSignal d = s.deriv(1);
    for (double t : {0.3, 1.7, 4.2, 9.9}) {
      auto D = [&](double h) { return (s(t + h)(0, 0) - s(t - h)(0, 0)) / (2 * h); };
      const double rich = (4 * D(5e-4) - D(1e-3)) / 3;
      worst = std::max(worst, std::abs(rich - d(t)(0, 0)));
    }
  }
  return Result("derivative consistency", worst <= 1e-8, worst, 1e-8,
                "Richardson central differences on 5 combinator signals");
}

CheckResult CheckChainIdentity(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix M(3, 3), N(3, 3);
  for (int i = 0; i < 9; ++i) {
    M(i) = 0.5 * u(rng);
    N(i) = 0.5 * u(rng);
  }
  const MatrixSignal A = MatrixSignal::Constant(M - Matrix::Identity(3, 3)) +
                         MatrixSignal::Sinusoid(1.0, 0.9, 0.4) * MatrixSignal::Constant(N);
  const MatrixSignal C = Parse("[[1, 0.5*sin(t), 0], [0, 0, 0], [0, 0, 0]]").row(0) +
                         Parse("[[0, 0, 0.3*cos(2*t)]]");
  const std::vector<MatrixSignal> chain = LieChain(A, C, 3);
  const TimeGrid grid = TimeGrid::Covering(0, 5, 1e-3);
  std::vector<Vector> x(grid.size());
  Matrix z = Vec({1.0, -0.5, 0.25});
  auto f = [&](double t, const Matrix& y) -> Matrix { return A(t) * y; };
  for (int k = 0; k < grid.size(); ++k) {
    x[k] = z.col(0);
    if (k + 1 < grid.size()) z = Rk4Step(f, grid.time(k), z, grid.dt);
  }
  double worst = 0.0;
  const double h = grid.dt;
  for (int i = 1; i <= 3; ++i) {
    auto y = [&](int k) { return (chain[i - 1](grid.time(k)) * x[k])(0); };
    for (int k = 2; k + 2 < grid.size(); k += 37) {
      const double fd = (-y(k + 2) + 8 * y(k + 1) - 8 * y(k - 1) + y(k - 2)) / (12 * h);
      const double exact = (chain[i](grid.time(k)) * x[k])(0);
      worst = std::max(worst, std::abs(fd - exact));
    }
  }
  return Result("chain identity", worst <= 1e-6, worst, 1e-6,
                "d/dt (L^{i-1} C) x = (L^i C) x for i <= 3 along a simulated trajectory");
}

CheckResult CheckStackIdentity() {
  const Synthesis& s = InteractionRobust();
  const Plant p = s.plant.Instantiate(Vec({0.7}));
  const RelativeDegree rd = ComputeRelativeDegree(p, 0, 10);
  const Stacks st = AssembleStacks(p, s.exo, rd.r, rd.b);
  const TimeGrid grid = TimeGrid::Covering(0, 10, 1e-2);
  double worst = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    const Matrix B = p.B(t);
    const Matrix lhs = st.M(t) * B;
    const Matrix rhs = p.A(t) * B - B * (st.O_A_next(t) * B / rd.b(t)(0, 0));
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return Result("stack identity", worst <= 1e-12, worst, 1e-12, "M B against A B - B b^-1 O'_A B");
}

// ----------------------------------------------------------- regulator

CheckResult CheckOracleEquivalence(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < instances; ++trial) {
    const RandomInstance inst = RandomMinimumPhase(rng, false, 60);
    const Plant& p = inst.plant;
    const int r = inst.r, n = p.n();
    const ByrnesIsidoriView bi = ExtractByrnesIsidori(p, r, 0, 30);
    const double w8 = 8.0 / bi.eta_decay.phi2;
    RegulatorOptions opt;
    opt.horizon = 3 * w8;
    opt.washout = 2 * w8;
    const RegulatorSolution sol = SolveRegulator(p, inst.exo, opt);
    const Stacks st = AssembleStacks(p, inst.exo, r, bi.b);
    Matrix exact(n, p.rho());
    exact.topRows(r) = -(st.O_S(0) + st.Pcal(0));
    exact.bottomRows(n - r) =
        SylvesterLtiOracle(bi.eta(0), inst.exo.S(0), bi.P_l(0) - bi.beta(0) * bi.Q(0));
    for (int k = sol.washout_index(); k < sol.grid.size(); ++k) {
      worst = std::max(worst, (sol.Pi[k] - exact).norm() / exact.norm());
    }
  }
  return Result("Kronecker oracle equivalence", worst <= 1e-6, worst, 1e-6,
                std::to_string(instances) + " random LTI instances, error measured after 16/phi2");
}

CheckResult CheckRegulatorResiduals(std::uint64_t seed, int instances) {
  struct Case {
    std::string label;
    Plant plant;
    Exosystem exo;
  };
  std::vector<Case> cases;
  {
    const Synthesis& s = InteractionRobust();
    cases.push_back({"interaction", s.plant.Instantiate(Vec({0.7})), s.exo});
    const UncertainPlant pu = BuildUncertainPlant(BuiltinConfig("plant"));
    cases.push_back({"plant", pu.Instantiate(Vec({-0.25, -0.4375})), s.exo});
  }
  std::mt19937_64 rng(seed + 7);
  for (int i = 0; i < instances; ++i) {
    RandomInstance inst = RandomMinimumPhase(rng, true, 50);
    cases.push_back({"random " + std::to_string(i), inst.plant, inst.exo});
  }
  double worst = 0.0;
  std::string where;
  for (const Case& c : cases) {
    RegulatorOptions opt;
    opt.horizon = 50;
    const RegulatorSolution sol = SolveRegulator(c.plant, c.exo, opt);
    const double re2 = sol.residual_re2 / 1e-6;
    const double re1 = sol.residual_re1 / (1e-5 * (1 + sol.sup_pi));
    if (std::max(re1, re2) > worst) {
      worst = std::max(re1, re2);
      where = c.label + " (RE1 " + Fmt(sol.residual_re1) + ", RE2 " + Fmt(sol.residual_re2) + ")";
    }
  }
  return Result("regulator equation residuals", worst <= 1.0, worst, 1.0,
                "worst ratio to tolerance over 2 examples and " + std::to_string(instances) +
                    " random LTV instances: " + where);
}

CheckResult CheckClosedFormPi() {
  const Synthesis& s = InteractionNominal();
  const RegulatorSolution& sol = s.nominal;
  Matrix Pi0(2, 2);
  Pi0 << 1, 1, 1, 0;
  double dev = 0, rdev = 0;
  for (int k = sol.washout_index(); k < sol.grid.size(); ++k) {
    const double t = sol.grid.time(k);
    dev = std::max(dev, (sol.Pi[k] - Pi0).norm());
    const double r0 = -0.2 * (std::cos(2 * t) + std::cos(std::sqrt(2.0) * t));
    rdev = std::max(rdev, std::abs(sol.R[k](0, 0) - r0) + std::abs(sol.R[k](0, 1)));
  }
  return Result("closed-form nominal solution", std::max(dev, rdev) <= 1e-6, std::max(dev, rdev),
                1e-6, "|Pi - [1 1; 1 0]| " + Fmt(dev) + ", |R - R_0| " + Fmt(rdev) + " after washout " +
                          Fmt(sol.washout));
}

CheckResult CheckAsymptoticUniqueness() {
  const Synthesis& s = InteractionRobust();
  const Plant p = s.plant.Instantiate(Vec({0.7}));
  RegulatorOptions opt;
  opt.horizon = 30;
  opt.path = RegulatorPath::kCoordinateFree;
  const RegulatorSolution a = SolveRegulator(p, s.exo, opt);
  // Perturb along ker O_A(t0): for C = [1 0] that is the second row.
  Matrix delta = Matrix::Zero(2, 2);
  delta.row(1) << 0.8, -0.3;
  opt.initial = a.Pi_initial + delta;
  const RegulatorSolution b = SolveRegulator(p, s.exo, opt);
  double worst = 0.0;
  for (int k = 0; k < a.grid.size(); k += 100) {
    const double t = a.grid.time(k);
    const double bound = a.decay.phi1 * std::exp(-a.decay.phi2 * t) * delta.norm() * s.exo.phi_bound;
    worst = std::max(worst, (a.Pi[k] - b.Pi[k]).norm() / bound);
  }
  return Result("asymptotic uniqueness", worst <= 1.0, worst, 1.0,
                "||Pi_a - Pi_b|| over phi1 e^{-phi2 t} ||dPi0|| phi_S");
}

CheckResult CheckPathAgreement() {
  const Synthesis& s = InteractionRobust();
  const Plant p = s.plant.Instantiate(Vec({0.7}));
  RegulatorOptions opt;
  opt.horizon = 40;
  const RegulatorSolution a = SolveRegulator(p, s.exo, opt);
  opt.path = RegulatorPath::kCoordinateFree;
  const RegulatorSolution b = SolveRegulator(p, s.exo, opt);
  const double d = std::max(SupOverNodes(a.R, b.R, a.washout_index()),
                            SupOverNodes(a.Pi, b.Pi, a.washout_index()));
  return Result("normal-form and coordinate-free paths agree", d <= 1e-6, d, 1e-6,
                "interaction plant at mu3 = 0.7");
}

CheckResult CheckResonanceFlag() {
  Plant p;
  p.A = Parse("[[0, 0, 0], [1, 0, 1], [0, -1, 0]]");
  p.B = Parse("[[1], [0], [0]]");
  p.C = Parse("[[1, 0, 0]]");
  p.P = MatrixSignal::Zero(3, 2);
  p.Q = Parse("[1, 0]");
  const Exosystem exo = Exosystem::Make(Parse("[[0, 1], [-1, 0]]"), 0, 60);
  RegulatorOptions opt;
  opt.horizon = 60;
  const RegulatorSolution sol = SolveRegulator(p, exo, opt);
  const bool flagged = !sol.bounded &&
                       sol.diagnostic.find("unbounded solution candidate") != std::string::npos;
  return Result("resonance is flagged", flagged, flagged ? 1 : 0, 1, sol.diagnostic);
}

// ------------------------------------------------------- internal model

CheckResult CheckInteractionExactness() {
  const Synthesis& s = InteractionRobust();
  double worst = 0.0;
  for (double m : {-0.7, -0.35, 0.0, 0.35, 0.7}) {
    const Vector mu = Vec({m});
    RegulatorOptions opt;
    opt.horizon = 50;
    const RegulatorSolution sol = SolveRegulator(s.plant.Instantiate(mu), s.exo, opt);
    const Matrix sigma = s.im.sigma_init(mu);
    for (int k = 0; k < sol.grid.size(); k += 7) {
      worst = std::max(worst, (sol.R[k] - s.im.H(sol.grid.time(k)) * sigma).norm());
    }
  }
  return Result("interaction channels are affine", worst <= 1e-6, worst, 1e-6,
                "direct R(t, mu3) against H(t) ([1; mu3] kron I) at 5 samples");
}

CheckResult CheckInteractionPropagation() {
  const Synthesis& s = InteractionRobust();
  std::vector<PropagationSample> samples;
  for (double m : {-0.7, -0.35, 0.0, 0.35, 0.7}) {
    RegulatorOptions opt;
    opt.horizon = 50;
    samples.push_back({Vec({m}), SolveRegulator(s.plant.Instantiate(Vec({m})), s.exo, opt).R});
  }
  const auto fits = VerifyPropagation(s.im, samples, s.exo.S, s.grid);
  double res = 0.0, sig = 0.0;
  for (size_t i = 0; i < fits.size(); ++i) {
    Matrix expect(4, 2);
    expect << Matrix::Identity(2, 2), samples[i].mu(0) * Matrix::Identity(2, 2);
    res = std::max(res, fits[i].residual);
    sig = std::max(sig, (fits[i].sigma - expect).norm());
  }
  const double worst = std::max(res, sig);
  return Result("interaction model propagation", worst <= 1e-6, worst, 1e-6,
                "residual " + Fmt(res) + ", |Sigma - [1; mu3] kron I| " + Fmt(sig));
}

CheckResult CheckTruncationBound(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Exosystem exo = Exosystem::Make(Parse("[[0, 1], [-1, 0]]"), 0, 40);
  double worst = 0.0;
  for (int trial = 0; trial < instances; ++trial) {
    UncertainPlant up;
    Matrix A(2, 2), Q(1, 2);
    A << u(rng), u(rng), u(rng), -1.0 - 0.5 * std::abs(u(rng));
    Q << u(rng), u(rng);
    up.nominal.A = MatrixSignal::Constant(A);
    up.nominal.B = Parse("[[2 + 0.5*sin(t)], [0]]");
    up.nominal.C = Parse("[[1, 0]]");
    up.nominal.P = MatrixSignal::Zero(2, 2);
    up.nominal.Q = MatrixSignal::Constant(Q);
    up.coords = {"m_eta", "m_b"};
    up.mu_box = 0.1;
    up.bi_relative_degree = 1;
    up.AddBiChannel(0, BiPart::kEta, MatrixSignal::Scalar(u(rng)));
    up.AddBiChannel(1, BiPart::kB, MatrixSignal::Scalar(u(rng)));
    PlantApproxOptions opt;
    opt.horizon = 40;
    opt.k_b = 1;
    opt.k_eta = 1;
    const PlantApproxResult res = PlantApproxIM(up, exo, opt);
    RegulatorOptions ropt;
    ropt.horizon = 40;
    const double measured = MeasureApproxError(res.im, up, exo, up.Corners(), ropt);
    worst = std::max(worst, measured / res.report.bound_R);
  }
  return Result("truncation bound soundness", worst <= 1.0, worst, 1.0,
                "largest measured/bound over " + std::to_string(instances) + " random instances");
}

CheckResult CheckScalarBounds() {
  const double neumann_err = std::abs(1.0 / 1.4 - 0.6);
  const double neumann_bound = NeumannTailBound(1.0, 0.4, 1);
  double pb = 0.0;
  for (double t = 0.0; t <= 30.0; t += 0.05) {
    const double remainder = std::exp(-0.7 * t) - std::exp(-t);
    const double closed = 0.3 * t * std::exp(-0.7 * t);
    const double bound = PeanoBakerTailBound(1.0, 1.0, 0.3, t, 0);
    pb = std::max({pb, remainder - closed, remainder - bound});
  }
  const bool pass = neumann_err <= neumann_bound && std::abs(neumann_bound - 0.16 / 0.6) <= 1e-14 &&
                    pb <= 0.0;
  return Result("scalar Neumann and Peano-Baker bounds", pass, neumann_err, neumann_bound,
                "Neumann " + Fmt(neumann_err) + " <= " + Fmt(neumann_bound) +
                    "; Peano-Baker worst excess " + Fmt(pb));
}

CheckResult CheckRealization(const std::string& id) {
  const ExperimentConfig cfg = BuiltinConfig(id);
  InternalModel im;
  TimeGrid grid;
  Exosystem exo;
  if (id == "interaction") {
    const Synthesis& s = InteractionRobust();
    im = s.im;
    grid = s.grid;
    exo = s.exo;
  } else {
    const UncertainPlant up = BuildUncertainPlant(cfg);
    exo = BuildExosystem(cfg);
    PlantApproxOptions o;
    o.k_b = cfg.k_b;
    o.k_eta = cfg.k_eta;
    o.horizon = cfg.horizon;
    o.step = cfg.step;
    PlantApproxResult res = PlantApproxIM(up, exo, o);
    im = std::move(res.im);
    grid = res.grid;
  }
  RealizationLimits open;
  open.max_condition = 1e300;
  open.require_observability = false;
  const CanonicalRealization cr = BuildCanonicalRealization(
      im, cfg.alpha_cr, Matrix::Identity(im.nu(), im.nu()), grid, exo.S, open);
  double recon = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    recon = std::max(recon, (cr.H_im(t) * cr.L_values[k] - im.H(t)).norm());
  }
  UasOptions uo;
  uo.trials = 4;
  const UasReport decay = ProbeUas(cr.F_im, uo);
  const bool pass = cr.max_condition <= 1e6 && recon <= 1e-8 &&
                    decay.worst_exponent <= -cfg.alpha_cr / 2;
  return Result("canonical realization (" + id + ")", pass, cr.max_condition, 1e6,
                "nu " + std::to_string(im.nu()) + ", max cond(L) " + Fmt(cr.max_condition) +
                    ", |H_im L - H| " + Fmt(recon) + ", F_im exponent " +
                    Fmt(decay.worst_exponent) + ", observability ratio " +
                    Fmt(cr.observability.min_ratio));
}

CheckResult CheckRealizationInvariance() {
  const Synthesis& s = InteractionRobust();
  RegulatorOptions opt;
  opt.horizon = 50;
  const std::vector<PropagationSample> samples = {
      {Vec({0.7}), SolveRegulator(s.plant.Instantiate(Vec({0.7})), s.exo, opt).R}};
  const double src = VerifyPropagation(s.im, samples, s.exo.S, s.grid)[0].residual;
  const double real = VerifyPropagation(s.realization.realized, samples, s.exo.S, s.grid)[0].residual;
  return Result("realized model keeps propagation", real <= 1e-6 && src <= 1e-6, real, 1e-6,
                "source residual " + Fmt(src) + ", realized " + Fmt(real));
}

CheckResult CheckReductionSoundness() {
  const Synthesis& s = InteractionRobust();
  const double tol = 1e-8;
  ReductionReport rep;
  const InternalModel red =
      ReduceIM(s.im, s.grid, {Vec({-0.7}), Vec({0.0}), Vec({0.7})}, tol, s.exo.S, &rep);
  RegulatorOptions opt;
  opt.horizon = 50;
  const std::vector<PropagationSample> samples = {
      {Vec({0.35}), SolveRegulator(s.plant.Instantiate(Vec({0.35})), s.exo, opt).R}};
  const double src = VerifyPropagation(s.im, samples, s.exo.S, s.grid)[0].residual;
  const auto fit = VerifyPropagation(red, samples, s.exo.S, s.grid)[0];
  const double allowed = src + tol * fit.sigma.norm();
  return Result("reduction soundness", fit.residual <= allowed && rep.nu_after == 4, fit.residual,
                allowed,
                "nu " + std::to_string(rep.nu_before) + " -> " + std::to_string(rep.nu_after) +
                    ", source residual " + Fmt(src));
}

// ----------------------------------------------------------- stabilizer

CheckResult CheckClosedLoopRegulatorEquations() {
  const Synthesis& s = InteractionRobust();
  double worst = 0.0;
  for (double m : {-0.7, 0.0, 0.7}) {
    const Vector mu = Vec({m});
    const ClosedLoopSystem sys = AssembleClosedLoop(s.plant.Instantiate(mu), s.exo, s.controller, mu);
    const int N = sys.n + sys.nu;
    Matrix Pi = Matrix::Zero(N, sys.rho);
    auto f = [&](double t, const Matrix& X) -> Matrix {
      return sys.A_cl(t) * X - X * s.exo.S(t) + sys.forcing(t);
    };
    const TimeGrid& g = s.grid;
    for (int k = 0; k < g.size(); ++k) {
      const double t = g.time(k);
      if (t >= s.nominal.washout) {
        const Matrix e = sys.plant.C(t) * Pi.topRows(sys.n) + sys.plant.Q(t);
        worst = std::max(worst, e.norm());
      }
      if (k + 1 < g.size()) Pi = Rk4Step(f, t, Pi, g.dt);
    }
  }
  return Result("closed-loop regulator equations", worst <= 1e-5, worst, 1e-5,
                "sup |[C 0] Pi_cl + Q| after washout, interaction example, mu3 in {-0.7, 0, 0.7}");
}

CheckResult CheckGainMonotonicity() {
  const Synthesis& s = InteractionRobust();
  const Vector mu = Vec({0.7});
  const Plant p = s.plant.Instantiate(mu);
  std::string trail;
  bool default_ok = false;
  double first_fail = 0.0;
  for (double g : {200.0, 100.0, 50.0, 20.0, 10.0, 5.0, 2.0}) {
    HighGainParams hp = s.controller.params;
    hp.g = g;
    UasOptions uo;
    uo.trials = 4;
    uo.step = std::min(1e-3, 1.0 / (g * hp.d[0]));
    uo.max_horizon = s.cfg.horizon;  // the realized model is gridded
    const UasReport rep = ProbeUas(AssembleClosedLoop(p, s.exo, BuildController(s.realization, 1, hp), mu).A_cl, uo);
    trail += "g=" + Fmt(g) + ":" + (rep.pass ? "pass" : "fail") + "(" + Fmt(rep.worst_exponent) + ") ";
    if (g == 200.0) default_ok = rep.pass;
    if (!rep.pass && first_fail == 0.0) first_fail = g;
  }
  return Result("high-gain regime", default_ok, first_fail, 0.0,
                "k = 20; " + trail + "(thresholds recorded, only (20, 200) asserted)");
}

CheckResult CheckControllerStructure() {
  const Controller& c = InteractionRobust().controller;
  const Json j = Json::parse(ControllerJson(c).dump());
  bool same = MatrixFromJson(j["M_g"]) == c.M_g && MatrixFromJson(j["L_g"]) == c.L_g &&
              MatrixFromJson(j["F_at_0"]) == c.F(0.0) && MatrixFromJson(j["G_at_0"]) == c.G(0.0) &&
              MatrixFromJson(j["H_at_0"]) == c.H(0.0) && MatrixFromJson(j["K"]) == c.params.K;
  const int r = c.r, nu = c.nu_im;
  bool masks = true;
  for (double t : {0.0, 7.3, 21.9, 49.5}) {
    const Matrix F = c.F(t), G = c.G(t);
    masks = masks && F.topRightCorner(r, nu).isZero(0.0) && G.bottomRows(nu).isZero(0.0) &&
            F.topLeftCorner(r, r) == c.M_g && G.topRows(r) == c.L_g;
  }
  return Result("controller structure", same && masks, (same && masks) ? 0 : 1, 0,
                std::string("JSON round trip ") + (same ? "bit-identical" : "differs") +
                    ", block masks " + (masks ? "hold" : "broken"));
}

// ------------------------------------------------------------ simulator

CheckResult CheckStepHalving(const std::string& id) {
  ExperimentConfig cfg = BuiltinConfig(id);
  // The plant model is run with its realization guards off; the property
  // concerns the integrator, not the model's conditioning.
  if (id == "plant") cfg = Unguarded(cfg);
  std::vector<ExperimentConfig> variants = {cfg};
  variants.push_back(cfg);
  variants.back().recipe = "nominal";
  double worst = 0.0;
  std::string detail;
  for (const ExperimentConfig& v : variants) {
    ExperimentConfig half = v;
    half.step = v.step / 2;
    const double a = RunExperiment(v).metrics.tail_sup_error;
    const double b = RunExperiment(half).metrics.tail_sup_error;
    const double ratio = std::abs(a - b) / (1e-8 + 1e-3 * a);
    worst = std::max(worst, ratio);
    detail += v.recipe + ": " + Fmt(a) + " vs " + Fmt(b) + "; ";
  }
  return Result("step halving (" + id + ")", worst <= 1.0, worst, 1.0,
                detail + "value is |change| / (1e-8 + 1e-3 tail)");
}

CheckResult CheckCoordinateChange() {
  Matrix T(2, 2);
  T << 1, 1, 1, 0;
  double worst = 0.0;
  for (const Synthesis* s : {&InteractionRobust(), &InteractionNominal()}) {
    const Vector mu = Vec({0.7});
    const Plant bi = s->plant.Instantiate(mu);
    const Plant orig = SimilarityTransform(bi, T.inverse());
    const Vector w0 = Vec({0.5, -1.0}), x0 = Vec({0.3, -0.2});
    const Vector xi0 = Vector::Zero(s->controller.dim());
    const SimulationTrace a =
        Simulate(AssembleClosedLoop(bi, s->exo, s->controller, mu), w0, x0, xi0, 0, 20, 1e-3);
    const SimulationTrace b = Simulate(AssembleClosedLoop(orig, s->exo, s->controller, mu), w0,
                                       T.inverse() * x0, xi0, 0, 20, 1e-3);
    for (size_t k = 0; k < a.e.size(); ++k) worst = std::max(worst, std::abs(a.e[k] - b.e[k]));
  }
  return Result("coordinate-change invariance", worst <= 1e-9, worst, 1e-9,
                "normal form against original coordinates, both interaction controllers");
}

CheckResult CheckErrorIdentity() {
  const RunResult& run = InteractionRun();
  const Plant& p = run.loop.plant;
  double worst = 0.0;
  for (size_t k = 0; k < run.trace.e.size(); ++k) {
    const double t = run.trace.grid.time(static_cast<int>(k));
    const double e = (p.C(t) * run.trace.x[k] + p.Q(t) * run.trace.w[k])(0);
    worst = std::max(worst, std::abs(e - run.trace.e[k]));
  }
  return Result("error identity", worst <= 1e-12, worst, 1e-12, "every node of the interaction run");
}

CheckResult CheckRegulationConsistency() {
  const RunResult& run = InteractionRun();
  const Synthesis& s = run.syn;
  RegulatorOptions opt;
  opt.horizon = s.cfg.horizon;
  opt.step = s.cfg.step;
  const RegulatorSolution sol = SolveRegulator(run.loop.plant, s.exo, opt);
  std::vector<double> t, dev;
  for (size_t k = 0; k < run.trace.x.size(); ++k) {
    const double d = (run.trace.x[k] - sol.Pi[k] * run.trace.w[k]).norm();
    if (d < 1e-8) break;
    t.push_back(run.trace.grid.time(static_cast<int>(k)));
    dev.push_back(d);
  }
  const double rate = EnvelopeExponent(t, dev);
  const double need = -sol.decay.phi2 / 2;
  return Result("regulation implies x - Pi w -> 0", rate <= need, rate, need,
                "fit until the deviation reaches 1e-8 at t = " + Fmt(t.empty() ? 0 : t.back()));
}

CheckResult CheckDeterminism() {
  bool ok = true;
  std::string detail;
  for (const std::string id : {"interaction", "plant"}) {
    const ExperimentConfig c = BuiltinConfig(id);
    const bool round = ParseConfig(SerializeConfig(c)) == c &&
                       ConfigHash(ParseConfig(SerializeConfig(c))) == ConfigHash(c);
    ok = ok && round;
    detail += id + " config round trip " + (round ? "ok" : "differs") + "; ";
  }
  ExperimentConfig cfg = BuiltinConfig("interaction");
  cfg.horizon = 10;
  const std::string a = TraceCsv(RunExperiment(cfg).trace);
  const std::string b = TraceCsv(RunExperiment(cfg).trace);
  ok = ok && a == b;
  detail += std::string("trace CSV ") + (a == b ? "bit-identical" : "differs");
  return Result("determinism", ok, ok ? 0 : 1, 0, detail);
}

CheckResult CheckClosedLoopUas() {
  const Synthesis& s = InteractionRobust();
  double worst = -INFINITY;
  bool pass = true;
  for (double m : {-0.7, 0.0, 0.7}) {
    const Vector mu = Vec({m});
    const UasReport rep =
        ProbeUas(AssembleClosedLoop(s.plant.Instantiate(mu), s.exo, s.controller, mu).A_cl);
    pass = pass && rep.pass;
    worst = std::max(worst, rep.worst_exponent);
  }
  return Result("closed loop UAS at corners and centre", pass && worst < 0, worst, 0.0,
                "worst fitted exponent over mu3 in {-0.7, 0, 0.7}");
}

CheckResult CheckGramProbe() {
  const TimeGrid grid = TimeGrid::Covering(0, 20 * M_PI, 1e-3);
  const int M = 9, N = grid.size();
  std::vector<std::vector<Matrix>> family(M, std::vector<Matrix>(N));
  Matrix D(N, M);
  for (int i = 0; i < M; ++i) {
    const double mu = -0.5 + i / 8.0;
    for (int k = 0; k < N; ++k) {
      const double t = grid.time(k);
      const double c = std::sin(t) + 2 + mu;
      D(k, i) = std::cos(t) / (c * c);
      family[i][k] = Matrix::Constant(1, 1, D(k, i));
    }
  }
  const GramRankReport rep = GramDimensionProbe(family, grid);
  bool full = true;
  std::string ranks;
  for (int m = 1; m <= M; ++m) {
    full = full && rep.ranks[m - 1] == m;
    ranks += std::to_string(rep.ranks[m - 1]) + (m < M ? "," : "");
  }
  // Best six-dimensional model from the data itself: F = 0 and H spanned by
  // the leading principal directions.
  const int nu = 6;
  const Eigen::BDCSVD<Matrix> svd(D, Eigen::ComputeThinU);
  std::vector<Matrix> Hv(N);
  for (int k = 0; k < N; ++k) Hv[k] = svd.matrixU().row(k).head(nu);
  InternalModel im;
  im.F = MatrixSignal::Zero(nu, nu);
  im.H = MatrixSignal::Gridded(grid, Hv);
  im.rho = 1;
  std::vector<PropagationSample> samples;
  for (int i = 0; i < M; ++i) samples.push_back({Vec({-0.5 + i / 8.0}), family[i]});
  double best = 0.0;
  for (const auto& fit : VerifyPropagation(im, samples, MatrixSignal::Zero(1, 1), grid)) {
    best = std::max(best, fit.residual);
  }
  const bool pass = full && best >= 1e-3;
  std::string sv;
  for (double v : rep.singular_values) sv += Fmt(v / rep.singular_values.front()) + " ";
  return Result("infinite-dimensionality probe", pass, best, 1e-3,
                "Gram ranks " + ranks + "; relative Gram eigenvalues " + sv +
                    "; best nu = 6 model residual " + Fmt(best));
}

// ---------------------------------------------------------------- suites

const std::vector<std::string>& SuiteNames() {
  static const std::vector<std::string> names = {"core", "regulator", "im", "stabilizer", "sim"};
  return names;
}

std::vector<CheckResult> RunSuite(const std::string& suite, std::uint64_t seed) {
  using Fn = std::function<CheckResult()>;
  const std::map<std::string, std::vector<Fn>> table = {
      {"core",
       {[=] { return CheckCocycle(seed); }, CheckDerivativeConsistency,
        [=] { return CheckChainIdentity(seed); }, CheckStackIdentity}},
      {"regulator",
       {[=] { return CheckOracleEquivalence(seed); }, [=] { return CheckRegulatorResiduals(seed); },
        CheckClosedFormPi, CheckAsymptoticUniqueness, CheckPathAgreement, CheckResonanceFlag}},
      {"im",
       {CheckInteractionExactness, CheckInteractionPropagation,
        [=] { return CheckTruncationBound(seed); }, CheckScalarBounds,
        [] { return CheckRealization("interaction"); }, [] { return CheckRealization("plant"); },
        CheckRealizationInvariance, CheckReductionSoundness}},
      {"stabilizer", {CheckClosedLoopRegulatorEquations, CheckGainMonotonicity, CheckControllerStructure}},
      {"sim",
       {[] { return CheckStepHalving("interaction"); }, [] { return CheckStepHalving("plant"); },
        CheckCoordinateChange, CheckErrorIdentity, CheckRegulationConsistency, CheckDeterminism,
        CheckClosedLoopUas, CheckGramProbe}},
  };
  std::vector<std::string> names;
  if (suite == "all") {
    names = SuiteNames();
  } else if (table.count(suite)) {
    names = {suite};
  } else {
    throw std::invalid_argument("unknown suite " + suite +
                                " (expected core, regulator, im, stabilizer, sim or all)");
  }
  std::vector<CheckResult> out;
  for (const std::string& name : names) {
    for (const Fn& fn : table.at(name)) {
      const auto t0 = Clock::now();
      CheckResult r;
      try {
        r = fn();
      } catch (const std::exception& e) {
        r = Result("(threw)", false, NAN, NAN, e.what());
      }
      r.suite = name;
      r.seconds = Since(t0);
      out.push_back(std::move(r));
    }
  }
  return out;
}

Json ChecksJson(const std::vector<CheckResult>& results) {
  Json arr = Json::array();
  int failed = 0;
  for (const CheckResult& r : results) {
    failed += !r.pass;
    arr.push_back({{"suite", r.suite},
                   {"name", r.name},
                   {"pass", r.pass},
                   {"value", std::isfinite(r.value) ? Json(r.value) : Json(nullptr)},
                   {"tolerance", std::isfinite(r.tolerance) ? Json(r.tolerance) : Json(nullptr)},
                   {"detail", r.detail},
                   {"seconds", r.seconds}});
  }
  return {{"checks", arr}, {"failed", failed}, {"total", results.size()}};
}

std::string ChecksText(const std::vector<CheckResult>& results) {
  std::ostringstream o;
  int failed = 0;
  for (const CheckResult& r : results) {
    failed += !r.pass;
    o << (r.pass ? "PASS " : "FAIL ") << r.suite << " / " << r.name << ": value " << Fmt(r.value)
      << " vs " << Fmt(r.tolerance) << " (" << Fmt(r.seconds) << " s) " << r.detail << "\n";
  }
  o << results.size() - failed << " of " << results.size() << " checks passed\n";
  return o.str();
}

// -------------------------------------------------------------- examples

ExampleOutcome RunExample(const std::string& id, const std::string& out_dir, std::uint64_t seed,
                          double step, bool bypass_diagnostic) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = BuiltinConfig(id);
  cfg.seed = seed;
  if (step > 0) cfg.step = step;
  ExperimentConfig nominal = cfg;
  nominal.recipe = "nominal";
  nominal.name = cfg.name + "_nominal";

  ExampleOutcome out;
  out.id = id;
  const std::string robust_tag = id == "plant" ? "first_order" : "robust";
  auto artifacts = [&](const RunResult& r, const std::string& tag) {
    if (!out_dir.empty()) WriteRunArtifacts(r, (std::filesystem::path(out_dir) / id / tag).string());
  };
  try {
    const RunResult r = RunExperiment(nominal);
    out.nominal_tail = r.metrics.tail_sup_error;
    artifacts(r, "nominal");
  } catch (const std::runtime_error& e) {
    out.lines.push_back("nominal controller failed: " + std::string(e.what()));
  }
  try {
    const RunResult r = RunExperiment(cfg);
    out.robust_tail = r.metrics.tail_sup_error;
    artifacts(r, robust_tag);
  } catch (const std::runtime_error& e) {
    out.robust_error = e.what();
    out.lines.push_back(robust_tag + " controller failed: " + out.robust_error);
  }
  if (id == "interaction") {
    const bool rob = out.robust_tail >= 0 && out.robust_tail <= 1e-6;
    const bool nom = out.nominal_tail >= 1e-2;
    out.lines.push_back(std::string(rob ? "PASS" : "FAIL") + " robust tail_sup_error " +
                        Fmt(out.robust_tail) + " <= 1e-6");
    out.lines.push_back(std::string(nom ? "PASS" : "FAIL") + " nominal tail_sup_error " +
                        Fmt(out.nominal_tail) + " >= 1e-2");
    out.pass = rob && nom;
  } else {
    const bool have = out.robust_tail > 0 && out.nominal_tail >= 0;
    const double ratio = have ? out.nominal_tail / out.robust_tail : NAN;
    const bool ok = have && ratio >= 1e4;
    out.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " tail ratio nominal / first order " +
                        (have ? Fmt(ratio) : std::string("unavailable")) + " >= 1e4");
    if (!out.robust_error.empty() && bypass_diagnostic) {
      try {
        const RunResult r = RunExperiment(Unguarded(cfg));
        out.bypass_ratio = out.nominal_tail / r.metrics.tail_sup_error;
        out.lines.push_back("diagnostic with realization guards off: first order tail " +
                            Fmt(r.metrics.tail_sup_error) + ", ratio " + Fmt(out.bypass_ratio));
      } catch (const std::runtime_error& e) {
        out.lines.push_back("diagnostic run failed too: " + std::string(e.what()));
      }
    }
    out.pass = ok;
  }
  out.seconds = Since(t0);
  return out;
}

}  // namespace ltvreg
