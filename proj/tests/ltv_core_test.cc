#include "ltvreg/ltv_core.h"

#include <cmath>

#include "doctest.h"
#include "ltvreg/expression.h"

using namespace ltvreg;

namespace {

MatrixSignal Parse(const char* s) { return CompileMatrixExpr(ParseMatrixExpr(s)); }

const char* kModulatedS = "[[0, 1], [-1.6 - 0.2*(cos(2*t) + cos(sqrt(2)*t)), 0]]";

Plant InteractionPlant() {
  Plant p;
  p.A = Parse("[[1, -2.6], [1, -1]]");
  p.B = Parse("[[1], [0]]");
  p.C = Parse("[[1, 0]]");
  p.P = MatrixSignal::Zero(2, 2);
  p.Q = Parse("[-1, -1]");
  return p;
}

}  // namespace

TEST_CASE("rotation transition matrix matches closed form") {
  const MatrixSignal S = Parse("[[0, 1], [-1, 0]]");
  const Matrix phi = TransitionMatrix(S, 2.0, 0.5);
  Matrix exact(2, 2);
  exact << std::cos(1.5), std::sin(1.5), -std::sin(1.5), std::cos(1.5);
  CHECK((phi - exact).norm() < 1e-12);
  CHECK((TransitionMatrix(S, 0.5, 2.0) - exact.transpose()).norm() < 1e-12);
}

TEST_CASE("cocycle and Liouville identities on a time-varying generator") {
  const MatrixSignal A = Parse("[[-0.3, 1 + 0.5*sin(t)], [-1, -0.1*cos(3*t)]]");
  const Matrix ts = TransitionMatrix(A, 3.0, 1.2);
  const Matrix st = TransitionMatrix(A, 1.2, -0.7);
  const Matrix tt = TransitionMatrix(A, 3.0, -0.7);
  CHECK((ts * st - tt).norm() <= 1e-10 * tt.norm());
  // det Phi(t, s) = exp(int_s^t trace A).
  const double integral = -0.3 * 3.7 - 0.1 / 3.0 * (std::sin(9.0) - std::sin(-2.1));
  CHECK(tt.determinant() == doctest::Approx(std::exp(integral)).epsilon(1e-10));
  const TimeGrid grid(-0.7, 3.7 / 3700, 3700);
  const auto along = TransitionAlongGrid(A, grid);
  CHECK((along.back() - tt).norm() < 1e-10);
}

TEST_CASE("Lie output chain of a double integrator") {
  const MatrixSignal A = Parse("[[0, 1], [0, 0]]");
  const auto chain = LieChain(A, Parse("[[1, 0]]"), 2);
  CHECK(chain[1](0.0) == Parse("[[0, 1]]")(0.0));
  CHECK(chain[2].is_zero());
  const MatrixSignal opaque =
      MatrixSignal::Opaque(1, 2, [](double) { return Matrix::Ones(1, 2); });
  CHECK_THROWS_AS(LieChain(A, opaque, 1), std::invalid_argument);
}

TEST_CASE("relative degree detection") {
  Plant p;
  p.A = Parse("[[0, 1, 0], [0, 0, 1], [-1, -2, -3]]");
  p.B = Parse("[[0], [0], [2 + cos(t)]]");
  p.C = Parse("[[1, 0, 0]]");
  p.P = MatrixSignal::Zero(3, 1);
  p.Q = MatrixSignal::Zero(1, 1);
  const RelativeDegree rd = ComputeRelativeDegree(p, 0.0, 10.0);
  CHECK(rd.r == 3);
  CHECK(rd.sign_b == 1);
  CHECK(rd.phi_b == doctest::Approx(1.0).epsilon(1e-5));

  p.B = Parse("[[0], [0], [cos(t)]]");
  CHECK_THROWS_AS(ComputeRelativeDegree(p, 0.0, 10.0), std::runtime_error);
  p.B = MatrixSignal::Zero(3, 1);
  CHECK_THROWS_AS(ComputeRelativeDegree(p, 0.0, 10.0), std::runtime_error);
}

TEST_CASE("stacks of the interaction example in normal form") {
  const Exosystem exo{Parse(kModulatedS), 1.0};
  const Plant p = InteractionPlant();
  const RelativeDegree rd = ComputeRelativeDegree(p, 0, 10);
  REQUIRE(rd.r == 1);
  const Stacks s = AssembleStacks(p, exo, 1, rd.b);
  const double t = 0.8;
  CHECK(s.O_A(t) == Parse("[[1, 0]]")(t));
  CHECK(s.O_A_next(t) == Parse("[[1, -2.6]]")(t));
  CHECK(s.Pcal.is_zero());
  // O_S' = Q S, so with Q = [-1, -1] it is [a(t), -1].
  const double a = 1.6 + 0.2 * (std::cos(2 * t) + std::cos(std::sqrt(2.0) * t));
  CHECK(s.O_S_next(t)(0, 0) == doctest::Approx(a).epsilon(1e-15));
  CHECK(s.O_S_next(t)(0, 1) == -1.0);
  Matrix M(2, 2);
  M << 0, 0, 1, -1;
  CHECK((s.M(t) - M).norm() == 0.0);
}

TEST_CASE("forcing stack for relative degree two") {
  // x1' = x2 + w, x2' = u, e = x1; forcing enters the second row.
  Plant p;
  p.A = Parse("[[0, 1], [0, 0]]");
  p.B = Parse("[[0], [1]]");
  p.C = Parse("[[1, 0]]");
  p.P = Parse("[[1], [0]]");
  p.Q = MatrixSignal::Zero(1, 1);
  const Exosystem exo{Parse("-0.5"), 1.0};
  const Stacks s = AssembleStacks(p, exo, 2, Parse("1"));
  CHECK(s.Pcal(0)(0, 0) == 0.0);
  CHECK(s.Pcal(0)(1, 0) == 1.0);
  // L_S(C P) + (C A) P = -0.5 + 0.
  CHECK(s.Pcal_next(0)(0, 0) == -0.5);
}

TEST_CASE("exponential bound fit on a scalar decay") {
  const ExponentialBound b = FitExponentialBound(Parse("-2"), 0, 30, 7);
  CHECK(b.phi2 == doctest::Approx(2.0 / 1.1).epsilon(1e-6));
  CHECK(b.phi1 >= 1.1);
  CHECK_THROWS_AS(FitExponentialBound(Parse("0.1"), 0, 30, 7), std::runtime_error);
}

TEST_CASE("exosystem probe bounds the rotation") {
  const Exosystem exo = Exosystem::Make(Parse("[[0, 1], [-1, 0]]"), 0, 50);
  CHECK(exo.phi_bound == doctest::Approx(1.1).epsilon(1e-6));
}

TEST_CASE("normal-form view and similarity") {
  Plant orig;
  orig.A = Parse("[[0, 1], [-1.6, 0]]");
  orig.B = Parse("[[0], [1]]");
  orig.C = Parse("[[1, 1]]");
  orig.P = MatrixSignal::Zero(2, 2);
  orig.Q = Parse("[-1, -1]");
  Matrix T(2, 2);
  T << 1, 1, 1, 0;
  const Plant bi = SimilarityTransform(orig, T);
  const Plant ref = InteractionPlant();
  CHECK((bi.A(0) - ref.A(0)).norm() < 1e-15);
  CHECK((bi.C(0) - ref.C(0)).norm() < 1e-15);
  const ByrnesIsidoriView v = ExtractByrnesIsidori(ref, 1, 0, 20);
  CHECK(v.alpha(0) == Parse("[[1, -2.6]]")(0));
  CHECK(v.eta(0)(0, 0) == -1.0);
  CHECK(v.beta(0)(0, 0) == 1.0);
  CHECK(v.eta_decay.phi2 == doctest::Approx(1.0 / 1.1).epsilon(1e-6));
  CHECK_THROWS_AS(ExtractByrnesIsidori(orig, 1, 0, 20), std::invalid_argument);
}

TEST_CASE("uncertain plant channels") {
  UncertainPlant up;
  up.nominal = InteractionPlant();
  up.coords = {"mu1", "mu2"};
  up.bi_relative_degree = 1;
  up.AddBiChannel(0, BiPart::kAlpha, Parse("[[1, 0]]"));
  up.AddBiChannel(0, BiPart::kEta, Parse("-1"));
  up.AddBiChannel(1, BiPart::kAlpha, Parse("[[0, -1]]"));
  up.Validate();
  Vector mu(2);
  mu << -0.25, 0.5;
  const Matrix A = up.Instantiate(mu).A(0);
  CHECK(A(0, 0) == 0.75);
  CHECK(A(0, 1) == -3.1);
  CHECK(A(1, 1) == -0.75);
  CHECK(up.Corners().size() == 4);
  mu(1) = 1.5;
  CHECK_THROWS_AS(up.Instantiate(mu), std::invalid_argument);
  CHECK_THROWS_AS(up.AddBiChannel(1, BiPart::kEta, Parse("[[1, 0]]")),
                  std::invalid_argument);
}
