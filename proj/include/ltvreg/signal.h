#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ltvreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Uniform time grid with nodes t0 + i * dt for i = 0..steps.
struct TimeGrid {
  double t0{0.0};
  double dt{1e-3};
  int steps{0};

  TimeGrid() = default;
  TimeGrid(double t0_in, double dt_in, int steps_in);
  /// Grid covering [t0, t1] with spacing no larger than `max_dt`.
  static TimeGrid Covering(double t0, double t1, double max_dt);

  int size() const { return steps + 1; }
  double time(int i) const { return t0 + static_cast<double>(i) * dt; }
  double t_end() const { return time(steps); }
  /// Grid keeping every k-th node.
  TimeGrid Decimated(int k) const;
};

namespace internal {
class SignalNode;
}

/// Matrix-valued function of time, built from exact combinators so that
/// derivatives are symbolic. Immutable and cheap to copy.
class MatrixSignal {
 public:
  static constexpr int kExact = std::numeric_limits<int>::max();

  MatrixSignal();
  /// Constant signal.
  MatrixSignal(const Matrix& value);  // NOLINT(runtime/explicit)

  static MatrixSignal Constant(const Matrix& value);
  static MatrixSignal Scalar(double value);
  static MatrixSignal Zero(int rows, int cols);
  static MatrixSignal Identity(int n);
  /// The 1x1 signal t.
  static MatrixSignal Time();
  /// amplitude * cos(omega * t + phase), 1x1.
  static MatrixSignal Sinusoid(double amplitude, double omega, double phase);
  /// Black-box callable. Derivatives fall back to central differences with
  /// step `h` and the smoothness order is 0.
  static MatrixSignal Opaque(int rows, int cols,
                             std::function<Matrix(double)> fn,
                             double h = 1e-5);
  /// Piecewise cubic Hermite interpolation when `slopes` is non-empty,
  /// piecewise linear otherwise. Exact at grid nodes.
  static MatrixSignal Gridded(const TimeGrid& grid, std::vector<Matrix> values,
                              std::vector<Matrix> slopes = {});
  /// Block matrix; every block in a block-row shares its row count and every
  /// block-column shares its column count.
  static MatrixSignal Blocks(
      const std::vector<std::vector<MatrixSignal>>& blocks);

  int rows() const;
  int cols() const;
  Matrix operator()(double t) const { return eval(t); }
  Matrix eval(double t) const;
  /// k-th time derivative.
  MatrixSignal deriv(int k = 1) const;
  /// Number of derivatives known exactly; kExact for analytic trees.
  int smoothness_order() const;
  bool is_constant() const;
  /// True only when the signal is structurally the zero matrix.
  bool is_zero() const;
  /// Value of a constant signal. Throws if the signal is not constant.
  Matrix constant_value() const;

  MatrixSignal transpose() const;
  /// Sub-block of a signal.
  MatrixSignal block(int row, int col, int rows, int cols) const;
  MatrixSignal row(int i) const { return block(i, 0, 1, cols()); }
  MatrixSignal col(int j) const { return block(0, j, rows(), 1); }

  /// Scalar transcendental maps. Require a 1x1 signal.
  MatrixSignal exp() const;
  MatrixSignal sin() const;
  MatrixSignal cos() const;
  MatrixSignal sqrt() const;
  MatrixSignal reciprocal() const;
  /// Real power of a 1x1 signal. Integer exponents of a negative base are
  /// allowed, otherwise the base must stay positive.
  MatrixSignal pow(double exponent) const;

  /// Kronecker product with a constant right factor.
  MatrixSignal kron_right(const Matrix& right) const;
  /// Kronecker product with a constant left factor.
  MatrixSignal kron_left(const Matrix& left) const;

  const std::shared_ptr<const internal::SignalNode>& node() const {
    return node_;
  }
  explicit MatrixSignal(std::shared_ptr<const internal::SignalNode> node);

 private:
  std::shared_ptr<const internal::SignalNode> node_;
};

MatrixSignal operator+(const MatrixSignal& a, const MatrixSignal& b);
MatrixSignal operator-(const MatrixSignal& a, const MatrixSignal& b);
MatrixSignal operator-(const MatrixSignal& a);
/// Matrix product; a 1x1 operand acts as a scalar.
MatrixSignal operator*(const MatrixSignal& a, const MatrixSignal& b);
MatrixSignal operator*(double s, const MatrixSignal& a);
MatrixSignal operator*(const MatrixSignal& a, double s);
MatrixSignal operator/(const MatrixSignal& a, const MatrixSignal& b);

/// Sample a signal on every node of a grid.
std::vector<Matrix> Sample(const MatrixSignal& signal, const TimeGrid& grid);

/// sup over grid nodes of the induced 2-norm.
double SupNorm(const MatrixSignal& signal, const TimeGrid& grid);

}  // namespace ltvreg
