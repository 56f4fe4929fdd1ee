#include "ltvreg/regulator.h"

#include <cmath>
#include <random>

#include "doctest.h"
#include "ltvreg/expression.h"

using namespace ltvreg;

namespace {

MatrixSignal Parse(const std::string& s) {
  return CompileMatrixExpr(ParseMatrixExpr(s));
}

const char* kModulatedS = "[[0, 1], [-1.6 - 0.2*(cos(2*t) + cos(sqrt(2)*t)), 0]]";

Plant InteractionPlant(double mu3) {
  Plant p;
  p.A = Parse("[[1, -2.6], [1, -1]]");
  p.B = Parse("[[1], [0]]");
  p.C = Parse("[[1, 0]]");
  p.P = MatrixSignal::Zero(2, 2);
  p.Q = Parse("[-1, -1]") + mu3 * Parse("[-1, 0]");
  return p;
}

Plant InteractionOriginal() {
  Plant p;
  p.A = Parse("[[0, 1], [-1.6, 0]]");
  p.B = Parse("[[0], [1]]");
  p.C = Parse("[[1, 1]]");
  p.P = MatrixSignal::Zero(2, 2);
  p.Q = Parse("[-1, -1]");
  return p;
}

}  // namespace

TEST_CASE("Sylvester oracle worked example") {
  Matrix eta(1, 1), S(2, 2), U(1, 2);
  eta << -1;
  S << 0, 1, -1, 0;
  U << 1, 0;
  const Matrix X = SylvesterLtiOracle(eta, S, U);
  CHECK(X(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(X(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK((eta * X - X * S + U).norm() < 1e-14);
  CHECK_THROWS_AS(SylvesterLtiOracle(S, S, Matrix::Ones(2, 2)), std::runtime_error);
}

TEST_CASE("nominal interaction example converges to the constant solution") {
  const Exosystem exo = Exosystem::Make(Parse(kModulatedS), 0, 50);
  const RegulatorSolution sol = SolveRegulator(InteractionPlant(0.0), exo);
  CHECK(sol.normal_form_path);
  CHECK(sol.bounded);
  CHECK(sol.washout <= 25.0);
  Matrix Pi0(2, 2);
  Pi0 << 1, 1, 1, 0;
  double dev = 0, rdev = 0;
  for (int k = sol.washout_index(); k < sol.grid.size(); ++k) {
    const double t = sol.grid.time(k);
    dev = std::max(dev, (sol.Pi[k] - Pi0).norm());
    const double r0 = -0.2 * (std::cos(2 * t) + std::cos(std::sqrt(2.0) * t));
    rdev = std::max(rdev, std::abs(sol.R[k](0, 0) - r0) + std::abs(sol.R[k](0, 1)));
  }
  CHECK(dev <= 1e-6);
  CHECK(rdev <= 1e-6);
  CHECK(sol.residual_re2 <= 1e-12);
  CHECK(sol.residual_re1 <= 1e-5 * (1 + sol.sup_pi));
}

TEST_CASE("coordinate-free and normal-form paths agree after washout") {
  const Exosystem exo = Exosystem::Make(Parse(kModulatedS), 0, 40);
  RegulatorOptions opt;
  opt.horizon = 40;
  const RegulatorSolution a = SolveRegulator(InteractionPlant(0.7), exo, opt);
  opt.path = RegulatorPath::kCoordinateFree;
  const RegulatorSolution b = SolveRegulator(InteractionPlant(0.7), exo, opt);
  CHECK(!b.normal_form_path);
  double d = 0;
  for (int k = a.washout_index(); k < a.grid.size(); ++k) {
    d = std::max(d, (a.R[k] - b.R[k]).norm());
  }
  CHECK(d <= 1e-8);
  // The original coordinates describe the nominal plant up to z = T x.
  const RegulatorSolution nom = SolveRegulator(InteractionPlant(0.0), exo, opt);
  const RegulatorSolution c = SolveRegulator(InteractionOriginal(), exo, opt);
  double dc = 0;
  for (int k = a.washout_index(); k < a.grid.size(); ++k) {
    dc = std::max(dc, (nom.R[k] - c.R[k]).norm());
  }
  CHECK(dc <= 1e-8);
}

TEST_CASE("scalar plant with a closed-form regulator solution") {
  // x' = u, e = (sin t + 2 + mu) x + w, w' = 0: Pi = -1/C(t), R = cos t / C^2.
  const double mu = 0.3;
  Plant p;
  p.A = MatrixSignal::Zero(1, 1);
  p.B = Parse("1");
  p.C = Parse("sin(t) + 2.3");
  p.P = MatrixSignal::Zero(1, 1);
  p.Q = Parse("1");
  const Exosystem exo{MatrixSignal::Zero(1, 1), 1.0};
  RegulatorOptions opt;
  opt.horizon = 20;
  const RegulatorSolution sol = SolveRegulator(p, exo, opt);
  CHECK(!sol.normal_form_path);
  double err = 0;
  for (int k = 0; k < sol.grid.size(); ++k) {
    const double t = sol.grid.time(k);
    const double c = std::sin(t) + 2 + mu;
    err = std::max(err, std::abs(sol.R[k](0, 0) - std::cos(t) / (c * c)));
    err = std::max(err, std::abs(sol.Pi[k](0, 0) + 1 / c));
  }
  CHECK(err <= 1e-10);
}

TEST_CASE("integration matches the Kronecker oracle on random LTI instances") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 3;  // 2..4
    const int rho = 1 + trial % 3;
    const int r = 1 + trial % 2;
    const int l = n - r;
    Matrix A = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < r; ++i) A(i, i + 1) = 1;
    for (int j = 0; j < n; ++j) A(r - 1, j) = u(rng);
    for (int i = r; i < n; ++i) A(i, 0) = u(rng);
    // eta = -1.5 I + small skew part keeps it Hurwitz.
    for (int i = r; i < n; ++i) {
      for (int j = r; j < n; ++j) A(i, j) = i == j ? -1.5 : 0.3 * u(rng);
    }
    Matrix B = Matrix::Zero(n, 1);
    B(r - 1, 0) = 1.5 + 0.5 * u(rng);
    Matrix C = Matrix::Zero(1, n);
    C(0, 0) = 1;
    Matrix S = Matrix::Zero(rho, rho);
    for (int i = 0; i < rho; ++i)
      for (int j = 0; j < i; ++j) {
        S(i, j) = u(rng);
        S(j, i) = -S(i, j);
      }
    Matrix P = Matrix::Zero(n, rho), Q(1, rho);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < rho; ++j) P(i, j) = u(rng);
    for (int j = 0; j < rho; ++j) Q(0, j) = u(rng);
    Plant p{MatrixSignal(A), MatrixSignal(B), MatrixSignal(C), MatrixSignal(P),
            MatrixSignal(Q)};
    const Exosystem exo = Exosystem::Make(MatrixSignal(S), 0, 30);
    const ByrnesIsidoriView bi = ExtractByrnesIsidori(p, r, 0, 30);
    const double w8 = l > 0 ? 8.0 / bi.eta_decay.phi2 : 8.0;
    RegulatorOptions opt;
    opt.horizon = 3 * w8;
    opt.washout = 2 * w8;
    const RegulatorSolution sol = SolveRegulator(p, exo, opt);
    const Stacks st = AssembleStacks(p, exo, r, MatrixSignal(B.row(r - 1)));
    Matrix exact(n, rho);
    exact.topRows(r) = -(st.O_S(0) + st.Pcal(0));
    exact.bottomRows(l) = SylvesterLtiOracle(bi.eta(0), S, bi.P_l(0) - bi.beta(0) * Q);
    double rel = 0;
    for (int k = sol.washout_index(); k < sol.grid.size(); ++k) {
      rel = std::max(rel, (sol.Pi[k] - exact).norm() / exact.norm());
    }
    CHECK_MESSAGE(rel <= 1e-6, "trial " << trial);
  }
}

TEST_CASE("resonant zero dynamics are flagged as unbounded") {
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
  CHECK(!sol.bounded);
  CHECK(sol.diagnostic.find("unbounded solution candidate") != std::string::npos);
}

TEST_CASE("different admissible initial values merge exponentially") {
  const Exosystem exo = Exosystem::Make(Parse(kModulatedS), 0, 30);
  const Plant p = InteractionPlant(0.0);
  RegulatorOptions opt;
  opt.horizon = 30;
  const RegulatorSolution a = SolveRegulator(p, exo, opt);
  Matrix delta(1, 2);
  delta << 0.8, -0.3;
  opt.initial = delta;
  const RegulatorSolution b = SolveRegulator(p, exo, opt);
  const double phi1 = a.decay.phi1, phi2 = a.decay.phi2;
  bool ok = true;
  for (int k = 0; k < a.grid.size(); k += 100) {
    const double t = a.grid.time(k);
    const double bound = phi1 * std::exp(-phi2 * t) * delta.norm() * exo.phi_bound;
    ok = ok && (a.Pi[k] - b.Pi[k]).norm() <= bound;
  }
  CHECK(ok);
}

TEST_CASE("zero high-frequency gain is rejected") {
  Plant p = InteractionPlant(0);
  p.B = MatrixSignal::Zero(2, 1);
  const Exosystem exo{Parse(kModulatedS), 1.2};
  CHECK_THROWS_AS(SolveRegulator(p, exo), std::runtime_error);
}
