#include "ltvreg/signal.h"

#include <cmath>

#include "doctest.h"

using ltvreg::Matrix;
using ltvreg::MatrixSignal;
using ltvreg::TimeGrid;

namespace {

Matrix M2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("sinusoid derivatives are exact") {
  const MatrixSignal s = MatrixSignal::Sinusoid(3.0, 2.0, 0.1);
  const double t = 0.7;
  CHECK(s(t)(0, 0) == doctest::Approx(3.0 * std::cos(1.5)).epsilon(1e-15));
  CHECK(s.deriv(1)(t)(0, 0) == doctest::Approx(-6.0 * std::sin(1.5)).epsilon(1e-14));
  CHECK(s.deriv(2)(t)(0, 0) == doctest::Approx(-12.0 * std::cos(1.5)).epsilon(1e-14));
  CHECK(s.smoothness_order() == MatrixSignal::kExact);
}

TEST_CASE("product and chain rules match closed forms") {
  const MatrixSignal t = MatrixSignal::Time();
  const MatrixSignal f = t * t.sin();  // t sin t
  const MatrixSignal g = (t * 0.5).exp().reciprocal();  // exp(-t/2)
  for (double x : {0.0, 0.4, 2.3}) {
    CHECK(f.deriv(1)(x)(0, 0) ==
          doctest::Approx(std::sin(x) + x * std::cos(x)).epsilon(1e-14));
    CHECK(f.deriv(2)(x)(0, 0) ==
          doctest::Approx(2 * std::cos(x) - x * std::sin(x)).epsilon(1e-13));
    CHECK(g.deriv(1)(x)(0, 0) ==
          doctest::Approx(-0.5 * std::exp(-0.5 * x)).epsilon(1e-14));
  }
  const MatrixSignal r = (t + MatrixSignal::Scalar(2.0)).sqrt();
  CHECK(r.deriv(1)(1.0)(0, 0) == doctest::Approx(0.5 / std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("matrix products, transposes and blocks differentiate entrywise") {
  const MatrixSignal c = MatrixSignal::Sinusoid(1, 1, 0);
  const MatrixSignal s = MatrixSignal::Sinusoid(1, 1, -M_PI / 2);
  const MatrixSignal R = MatrixSignal::Blocks({{c, -s}, {s, c}});
  const MatrixSignal K(M2(1, 2, 3, 4));
  const MatrixSignal Y = K * R.transpose();
  const double t = 0.9;
  const Matrix dR = M2(-std::sin(t), -std::cos(t), std::cos(t), -std::sin(t));
  CHECK((Y.deriv(1)(t) - M2(1, 2, 3, 4) * dR.transpose()).norm() < 1e-14);
  CHECK((R.block(1, 0, 1, 2)(t) - R(t).row(1)).norm() == 0.0);
}

TEST_CASE("zero and constant subtrees simplify") {
  const MatrixSignal z = MatrixSignal::Zero(2, 2);
  const MatrixSignal s = MatrixSignal::Sinusoid(1, 1, 0) * MatrixSignal::Identity(2);
  CHECK((z * s).is_zero());
  CHECK((s * z).is_zero());
  CHECK((z + MatrixSignal(M2(1, 0, 0, 1))).is_constant());
  CHECK(MatrixSignal(M2(1, 2, 3, 4)).deriv(1).is_zero());
  CHECK(s.deriv(2).is_constant() == false);
  CHECK(MatrixSignal::Blocks({{z, z}}).is_zero());
}

TEST_CASE("scalar signals broadcast against matrices") {
  const MatrixSignal s = MatrixSignal::Time();
  const MatrixSignal y = s * MatrixSignal(M2(1, 2, 3, 4));
  CHECK(y.rows() == 2);
  CHECK((y(2.0) - 2.0 * M2(1, 2, 3, 4)).norm() == 0.0);
  CHECK((y.deriv(1)(5.0) - M2(1, 2, 3, 4)).norm() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const MatrixSignal a = MatrixSignal::Zero(2, 3);
  const MatrixSignal b = MatrixSignal::Constant(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(a * b, std::invalid_argument);
  CHECK_THROWS_AS(b.sin(), std::invalid_argument);
  CHECK_THROWS_AS(MatrixSignal::Blocks({{a, MatrixSignal::Zero(3, 1)}}),
                  std::invalid_argument);
}

TEST_CASE("opaque callables fall back to central differences") {
  const MatrixSignal f = MatrixSignal::Opaque(
      1, 1, [](double t) { return Matrix::Constant(1, 1, std::sin(t)); });
  CHECK(f.smoothness_order() == 0);
  CHECK(f.deriv(1)(0.3)(0, 0) == doctest::Approx(std::cos(0.3)).epsilon(1e-9));
  CHECK((f * MatrixSignal::Sinusoid(1, 1, 0)).smoothness_order() == 0);
}

TEST_CASE("gridded signals are exact at nodes and fourth order with slopes") {
  const TimeGrid grid(0.0, 0.01, 500);
  std::vector<Matrix> v, d;
  for (int i = 0; i < grid.size(); ++i) {
    v.push_back(Matrix::Constant(1, 1, std::sin(grid.time(i))));
    d.push_back(Matrix::Constant(1, 1, std::cos(grid.time(i))));
  }
  const MatrixSignal lin = MatrixSignal::Gridded(grid, v);
  const MatrixSignal her = MatrixSignal::Gridded(grid, v, d);
  for (int i : {0, 17, 250, 500}) {
    CHECK(lin(grid.time(i))(0, 0) == v[i](0, 0));
    CHECK(her(grid.time(i))(0, 0) == v[i](0, 0));
  }
  double err_lin = 0, err_her = 0;
  for (int i = 0; i < 500; ++i) {
    const double t = grid.time(i) + 0.005;
    err_lin = std::max(err_lin, std::abs(lin(t)(0, 0) - std::sin(t)));
    err_her = std::max(err_her, std::abs(her(t)(0, 0) - std::sin(t)));
  }
  CHECK(err_lin < 1.3e-5);
  CHECK(err_her < 3e-11);
  CHECK(her.smoothness_order() == 1);
  CHECK_THROWS_AS(lin(5.5), std::out_of_range);
}

TEST_CASE("kronecker factors") {
  const MatrixSignal s = MatrixSignal::Time();
  const Matrix I2 = Matrix::Identity(2, 2);
  const MatrixSignal k = MatrixSignal(M2(1, 2, 3, 4)).kron_right(I2);
  CHECK(k.rows() == 4);
  CHECK(k(0)(2, 0) == 3.0);
  CHECK(k(0)(2, 1) == 0.0);
  const MatrixSignal tk = (s * MatrixSignal(M2(0, 1, 0, 0))).kron_left(I2);
  CHECK(tk(2.0)(2, 3) == 2.0);
  CHECK(tk.deriv(1)(7.0)(0, 1) == 1.0);
}

TEST_CASE("time grids") {
  const TimeGrid g = TimeGrid::Covering(0.0, 1.0, 0.3);
  CHECK(g.steps == 4);
  CHECK(g.t_end() == doctest::Approx(1.0));
  CHECK(TimeGrid(0, 0.1, 10).Decimated(5).steps == 2);
  CHECK_THROWS_AS(TimeGrid(0, 0.1, 10).Decimated(3), std::invalid_argument);
}
