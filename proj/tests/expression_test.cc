#include "ltvreg/expression.h"

#include <cmath>

#include "doctest.h"

using namespace ltvreg;

TEST_CASE("example exosystem entry compiles to exact sinusoids") {
  const MatrixExpr m =
      ParseMatrixExpr("[[0, 1], [-1.6 - 0.2*(cos(2*t) + cos(sqrt(2)*t)), 0]]");
  REQUIRE(m.rows == 2);
  REQUIRE(m.cols == 2);
  const MatrixSignal S = CompileMatrixExpr(m);
  const double t = 1.3;
  const double a = -1.6 - 0.2 * (std::cos(2 * t) + std::cos(std::sqrt(2.0) * t));
  CHECK(S(t)(1, 0) == doctest::Approx(a).epsilon(1e-15));
  const double da = 0.2 * (2 * std::sin(2 * t) + std::sqrt(2.0) * std::sin(std::sqrt(2.0) * t));
  CHECK(S.deriv(1)(t)(1, 0) == doctest::Approx(da).epsilon(1e-13));
  CHECK(S.smoothness_order() == MatrixSignal::kExact);
}

TEST_CASE("precedence and associativity") {
  auto v = [](const char* s) { return CompileExpr(ParseExpr(s))(2.0)(0, 0); };
  CHECK(v("1 - 2 - 3") == -4.0);
  CHECK(v("8 / 2 / 2") == 2.0);
  CHECK(v("-2^2") == -4.0);
  CHECK(v("2^-1") == 0.5);
  CHECK(v("2*t^2 + 1") == 9.0);
  CHECK(v("(1 + t)*(1 - t)") == -3.0);
  CHECK(v("exp(0) + sin(pi/2)") == doctest::Approx(2.0));
  CHECK(v("1e-3*1000") == doctest::Approx(1.0));
}

TEST_CASE("canonical printing round trips") {
  for (const char* s :
       {"1 - (2 - 3)", "-(3)", "-3^2", "(-3)^2", "a*-b", "--x", "2^-3",
        "cos(sqrt(2)*t + 0.25)/(1 + t^2)", "-a - -1.5e-07", "x/(y*z)",
        "(a + b)^(1/3)"}) {
    const Expr e = ParseExpr(s);
    CHECK_MESSAGE(ParseExpr(e.ToString()) == e, s);
  }
  const MatrixExpr m = ParseMatrixExpr("[[1, -t], [0.1, cos(t)]]");
  CHECK(ParseMatrixExpr(m.ToString()) == m);
  CHECK(ParseMatrixExpr("[1, 2]").rows == 1);
  CHECK(ParseMatrixExpr("[[1], [2]]").cols == 1);
  CHECK(ParseMatrixExpr("0.7").rows == 1);
}

TEST_CASE("malformed input reports the column") {
  CHECK_THROWS_WITH_AS(ParseExpr("1 + * 2"), doctest::Contains("column 5"),
                       std::invalid_argument);
  CHECK_THROWS_AS(ParseExpr("foo(1)"), std::invalid_argument);
  CHECK_THROWS_AS(ParseMatrixExpr("[[1, 2], [3]]"), std::invalid_argument);
  CHECK_THROWS_AS(ParseExpr("(1 + 2"), std::invalid_argument);
  CHECK_THROWS_AS(CompileExpr(ParseExpr("q + 1")), std::invalid_argument);
  CHECK_THROWS_AS(CompileExpr(ParseExpr("2^t")), std::invalid_argument);
}

TEST_CASE("user symbols") {
  SymbolTable sym{{"eps", MatrixSignal::Scalar(0.25)}};
  CHECK(CompileExpr(ParseExpr("4*eps"), sym)(0)(0, 0) == 1.0);
}
