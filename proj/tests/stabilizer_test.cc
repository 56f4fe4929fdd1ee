#include "ltvreg/stabilizer.h"

#include <cmath>

#include "doctest.h"
#include "ltvreg/expression.h"
#include "ltvreg/simulator.h"

using namespace ltvreg;

namespace {

MatrixSignal Parse(const std::string& s) {
  return CompileMatrixExpr(ParseMatrixExpr(s));
}

const char* kModulatedS = "[[0, 1], [-1.6 - 0.2*(cos(2*t) + cos(sqrt(2)*t)), 0]]";

HighGainParams Gains(double k, double g) {
  HighGainParams p;
  p.k = k;
  p.g = g;
  p.d = {5.0};
  p.K = Matrix(1, 0);
  return p;
}

struct RobustSetup {
  UncertainPlant up;
  Exosystem exo;
  CanonicalRealization cr;
};

RobustSetup InteractionSetup() {
  RobustSetup s;
  s.up.nominal.A = Parse("[[1, -2.6], [1, -1]]");
  s.up.nominal.B = Parse("[[1], [0]]");
  s.up.nominal.C = Parse("[[1, 0]]");
  s.up.nominal.P = MatrixSignal::Zero(2, 2);
  s.up.nominal.Q = Parse("[-1, -1]");
  s.up.coords = {"mu3"};
  s.up.mu_box = 0.7;
  s.up.channels.push_back({0, Target::kQ, Parse("[-1, 0]")});
  s.exo = Exosystem::Make(Parse(kModulatedS), 0, 50);
  const InteractionComponents comp = SolveInteractionComponents(s.up, s.exo, {});
  const InternalModel im =
      InteractionRobustIM(comp.nominal.RSignal(), comp.R_mu, s.exo.S, s.up.coords);
  s.cr = BuildCanonicalRealization(im, 4.0, Matrix::Identity(4, 4), comp.nominal.grid,
                                   s.exo.S);
  return s;
}

}  // namespace

TEST_CASE("Brunovsky gains by coefficient matching") {
  CHECK(BrunovskyGain(1, {}).cols() == 0);
  CHECK(BrunovskyGain(2, {-2.0})(0, 0) == doctest::Approx(-2.0));
  const Matrix K = BrunovskyGain(3, {-1.0, -2.0});
  CHECK(K(0, 0) == doctest::Approx(-2.0));
  CHECK(K(0, 1) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(BrunovskyGain(3, {-1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(BrunovskyGain(3, {-1.0}), std::invalid_argument);
  const Matrix D = DefaultBrunovskyGain(4);  // poles -1, -2, -3
  CHECK(D(0, 0) == doctest::Approx(-6.0));
  CHECK(D(0, 1) == doctest::Approx(-11.0));
  CHECK(D(0, 2) == doctest::Approx(-6.0));
}

TEST_CASE("default Hurwitz coefficients are binomial") {
  CHECK(DefaultHurwitz(1) == std::vector<double>{1.0});
  CHECK(DefaultHurwitz(3) == std::vector<double>{1.0, 3.0, 3.0});
  CHECK(DefaultHurwitz(4) == std::vector<double>{1.0, 4.0, 6.0, 4.0});
}

TEST_CASE("high-gain parameter validation") {
  HighGainParams p = Gains(1.0, 2.0);
  CHECK_NOTHROW(ValidateHighGain(p, 1));
  p.d = {-1.0};
  CHECK_THROWS_AS(ValidateHighGain(p, 1), std::invalid_argument);
  p = Gains(1.0, 1.0);
  CHECK_THROWS_AS(ValidateHighGain(p, 1), std::invalid_argument);
  p = Gains(1.0, 2.0);
  p.d = {1.0, 0.0};
  p.K = Matrix::Constant(1, 1, -1.0);
  CHECK_THROWS_AS(ValidateHighGain(p, 2), std::invalid_argument);
  p.d = {1.0, 2.0};
  p.K = Matrix::Constant(1, 1, 1.0);
  CHECK_THROWS_AS(ValidateHighGain(p, 2), std::invalid_argument);
}

TEST_CASE("controller blocks around the interaction-robust realization") {
  const RobustSetup s = InteractionSetup();
  const Controller c = BuildController(s.cr, 1, Gains(20, 200));
  CHECK(c.dim() == 5);
  CHECK(c.M_g(0, 0) == -1000.0);
  CHECK(c.L_g(0, 0) == 1000.0);
  for (double t : {0.0, 3.7, 12.25, 49.0}) {
    const Matrix F = c.F(t), G = c.G(t), H = c.H(t);
    CHECK(F(0, 0) == -1000.0);
    CHECK(F.block(0, 1, 1, 4).isZero(0.0));
    CHECK(F.block(1, 0, 4, 1) == (-20.0 * s.cr.G_im(t)));
    CHECK(F.block(1, 1, 4, 4) == s.cr.realized.F(t));
    CHECK(G(0, 0) == 1000.0);
    CHECK(G.bottomRows(4).isZero(0.0));
    CHECK(H(0, 0) == -20.0);
    CHECK(H.rightCols(4) == s.cr.H_im(t));
  }
  const Controller pu = BuildController(s.cr, 1, Gains(45, 300));
  CHECK(pu.M_g(0, 0) == -1500.0);
  CHECK(pu.L_g(0, 0) == 1500.0);

  const Controller ff = BuildController(s.cr, 1, Gains(0, 200));
  CHECK(ff.H(2.0)(0, 0) == 0.0);
  CHECK(ff.H(2.0).rightCols(4) == s.cr.H_im(2.0));
}

TEST_CASE("controller structure for relative degree three") {
  // Scalar realization stand-in; only the xi1 block is examined.
  const MatrixSignal S = MatrixSignal::Zero(1, 1);
  const TimeGrid grid = TimeGrid::Covering(0, 10, 1e-2);
  const InternalModel im = NominalIM(MatrixSignal::Constant(Matrix::Ones(1, 1)), S);
  const CanonicalRealization cr =
      BuildCanonicalRealization(im, 1.0, Matrix::Identity(1, 1), grid, S);
  HighGainParams p;
  p.k = 3;
  p.g = 10;
  p.d = DefaultHurwitz(3);
  p.K = BrunovskyGain(3, {-1, -2});
  p.sign_b = -1;
  const Controller c = BuildController(cr, 3, p);
  Matrix Mg(3, 3);
  Mg << -30, 1, 0, -30, 0, 1, -10, 0, 0;
  CHECK(c.M_g == Mg);
  CHECK(c.L_g == -Mg.col(0));
  // -k sign(b) (-K 1) = 3 * [2, 3, 1].
  const Matrix H = c.H(1.0);
  CHECK(H(0, 0) == doctest::Approx(6.0));
  CHECK(H(0, 1) == doctest::Approx(9.0));
  CHECK(H(0, 2) == doctest::Approx(3.0));
}

TEST_CASE("UAS probe on simple generators") {
  const UasReport stable = ProbeUas(MatrixSignal::Constant(-Matrix::Identity(3, 3)));
  CHECK(stable.pass);
  for (double e : stable.exponents) CHECK(e == doctest::Approx(-1.0).epsilon(0.05));
  const UasReport osc = ProbeUas(Parse("[[0, 1], [-1, 0]]"));
  CHECK_FALSE(osc.pass);
  CHECK(std::abs(osc.worst_exponent) < 1e-2);
  const UasReport unstable = ProbeUas(MatrixSignal::Constant(Matrix::Identity(2, 2)));
  CHECK_FALSE(unstable.pass);
}

TEST_CASE("autotune accepts the published gains without doubling") {
  const RobustSetup s = InteractionSetup();
  auto factory = [&](const HighGainParams& p, const Vector& mu) {
    const Controller c = BuildController(s.cr, 1, p);
    return AssembleClosedLoop(s.up.Instantiate(mu), s.exo, c, mu).A_cl;
  };
  std::vector<Vector> mus;
  for (double m : {-0.7, 0.0, 0.7}) mus.push_back(Vector::Constant(1, m));
  const AutotuneResult res = AutotuneGains(factory, Gains(20, 200), mus);
  CHECK(res.doublings == 0);
  CHECK(res.params.k == 20.0);
  CHECK(res.params.g == 200.0);
  CHECK(res.history[0] < 0.0);
}

TEST_CASE("autotune on a pre-stabilised plant and on a hopeless one") {
  auto loop = [](const Matrix& A) {
    return [A](const HighGainParams& p, const Vector&) {
      // [A, -k B; L_g C, M_g] with B = e_1, C = e_1^T.
      const int n = static_cast<int>(A.rows());
      Matrix cl = Matrix::Zero(n + 1, n + 1);
      cl.topLeftCorner(n, n) = A;
      cl(0, n) = -p.k;
      cl(n, 0) = p.g * p.d[0];
      cl(n, n) = -p.g * p.d[0];
      return MatrixSignal::Constant(cl);
    };
  };
  const std::vector<Vector> mus{Vector::Zero(0)};
  const AutotuneResult ok = AutotuneGains(loop(-Matrix::Identity(2, 2)), Gains(1, 2), mus);
  CHECK(ok.doublings == 0);
  Matrix bad(2, 2);
  bad << 0, 0, 0, 1;  // unstable mode the input cannot reach
  CHECK_THROWS_AS(AutotuneGains(loop(bad), Gains(1, 2), mus, 3), std::runtime_error);
}

TEST_CASE("zero high-frequency gain is rejected before synthesis") {
  Plant p;
  p.A = Parse("[[0, 1], [-1, 0]]");
  p.B = Parse("[[0], [0]]");
  p.C = Parse("[[1, 0]]");
  p.P = MatrixSignal::Zero(2, 2);
  p.Q = Parse("[-1, 0]");
  CHECK_THROWS_AS(ComputeRelativeDegree(p, 0, 10), std::runtime_error);
}
