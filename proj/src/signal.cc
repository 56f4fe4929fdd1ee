#include "ltvreg/signal.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace ltvreg {

TimeGrid::TimeGrid(double t0_in, double dt_in, int steps_in)
    : t0(t0_in), dt(dt_in), steps(steps_in) {
  if (!(dt > 0.0) || steps < 1) {
    throw std::invalid_argument("TimeGrid: need dt > 0 and at least one step");
  }
}

TimeGrid TimeGrid::Covering(double t0, double t1, double max_dt) {
  if (!(t1 > t0) || !(max_dt > 0.0)) {
    throw std::invalid_argument("TimeGrid::Covering: empty interval");
  }
  const int steps = static_cast<int>(std::ceil((t1 - t0) / max_dt - 1e-9));
  return TimeGrid(t0, (t1 - t0) / steps, steps);
}

TimeGrid TimeGrid::Decimated(int k) const {
  if (k < 1 || steps % k != 0) {
    throw std::invalid_argument("TimeGrid::Decimated: stride must divide steps");
  }
  return TimeGrid(t0, dt * k, steps / k);
}

namespace internal {

using NodePtr = std::shared_ptr<const SignalNode>;

class SignalNode {
 public:
  SignalNode(int rows, int cols) : rows_(rows), cols_(cols) {}
  virtual ~SignalNode() = default;
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  virtual Matrix Eval(double t) const = 0;
  virtual NodePtr Derivative(const NodePtr& self) const = 0;
  virtual int Smoothness() const { return MatrixSignal::kExact; }
  virtual const Matrix* ConstantValue() const { return nullptr; }

 private:
  int rows_;
  int cols_;
};

namespace {

bool IsConst(const NodePtr& n) { return n->ConstantValue() != nullptr; }

bool IsZero(const NodePtr& n) {
  const Matrix* v = n->ConstantValue();
  return v != nullptr && (v->size() == 0 || v->isZero(0.0));
}

int MinSmooth(int a, int b) { return a < b ? a : b; }

class ConstantNode final : public SignalNode {
 public:
  explicit ConstantNode(Matrix v)
      : SignalNode(static_cast<int>(v.rows()), static_cast<int>(v.cols())),
        value_(std::move(v)) {}
  Matrix Eval(double) const override { return value_; }
  NodePtr Derivative(const NodePtr&) const override {
    return std::make_shared<ConstantNode>(Matrix::Zero(rows(), cols()));
  }
  const Matrix* ConstantValue() const override { return &value_; }

 private:
  Matrix value_;
};

NodePtr Const(Matrix v) { return std::make_shared<ConstantNode>(std::move(v)); }
NodePtr ZeroNode(int r, int c) { return Const(Matrix::Zero(r, c)); }

class TimeNode final : public SignalNode {
 public:
  TimeNode() : SignalNode(1, 1) {}
  Matrix Eval(double t) const override { return Matrix::Constant(1, 1, t); }
  NodePtr Derivative(const NodePtr&) const override {
    return Const(Matrix::Ones(1, 1));
  }
};

class SinusoidNode final : public SignalNode {
 public:
  SinusoidNode(double a, double w, double p)
      : SignalNode(1, 1), a_(a), w_(w), p_(p) {}
  Matrix Eval(double t) const override {
    return Matrix::Constant(1, 1, a_ * std::cos(w_ * t + p_));
  }
  NodePtr Derivative(const NodePtr&) const override {
    if (w_ == 0.0 || a_ == 0.0) return ZeroNode(1, 1);
    return std::make_shared<SinusoidNode>(a_ * w_, w_,
                                          p_ + std::numbers::pi / 2);
  }

 private:
  double a_, w_, p_;
};

class FiniteDiffNode final : public SignalNode {
 public:
  FiniteDiffNode(NodePtr child, double h)
      : SignalNode(child->rows(), child->cols()),
        child_(std::move(child)),
        h_(h) {}
  Matrix Eval(double t) const override {
    return (child_->Eval(t + h_) - child_->Eval(t - h_)) / (2.0 * h_);
  }
  NodePtr Derivative(const NodePtr& self) const override {
    return std::make_shared<FiniteDiffNode>(self, h_);
  }
  int Smoothness() const override { return 0; }

 private:
  NodePtr child_;
  double h_;
};

class OpaqueNode final : public SignalNode {
 public:
  OpaqueNode(int r, int c, std::function<Matrix(double)> fn, double h)
      : SignalNode(r, c), fn_(std::move(fn)), h_(h) {}
  Matrix Eval(double t) const override {
    Matrix v = fn_(t);
    if (v.rows() != rows() || v.cols() != cols()) {
      throw std::runtime_error("opaque signal returned a mis-sized matrix");
    }
    return v;
  }
  NodePtr Derivative(const NodePtr& self) const override {
    return std::make_shared<FiniteDiffNode>(self, h_);
  }
  int Smoothness() const override { return 0; }

 private:
  std::function<Matrix(double)> fn_;
  double h_;
};

class GriddedNode final : public SignalNode {
 public:
  GriddedNode(TimeGrid grid, std::vector<Matrix> values,
              std::vector<Matrix> slopes)
      : SignalNode(static_cast<int>(values.front().rows()),
                   static_cast<int>(values.front().cols())),
        grid_(grid),
        values_(std::move(values)),
        slopes_(std::move(slopes)) {}

  Matrix Eval(double t) const override {
    const double x = (t - grid_.t0) / grid_.dt;
    const double slack = 1e-6;
    if (x < -slack || x > grid_.steps + slack) {
      throw std::out_of_range("gridded signal evaluated outside its grid");
    }
    int i = static_cast<int>(std::floor(x));
    if (i < 0) i = 0;
    if (i > grid_.steps - 1) i = grid_.steps - 1;
    const double s = x - i;
    if (std::abs(s) < 1e-9) return values_[i];
    if (std::abs(s - 1.0) < 1e-9) return values_[i + 1];
    if (slopes_.empty()) return (1.0 - s) * values_[i] + s * values_[i + 1];
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * values_[i] + h01 * values_[i + 1] +
           grid_.dt * (h10 * slopes_[i] + h11 * slopes_[i + 1]);
  }

  NodePtr Derivative(const NodePtr&) const override {
    if (!slopes_.empty()) {
      return std::make_shared<GriddedNode>(grid_, slopes_,
                                           std::vector<Matrix>{});
    }
    std::vector<Matrix> d(values_.size());
    const int n = grid_.steps;
    for (int i = 0; i <= n; ++i) {
      const int lo = i == 0 ? 0 : i - 1;
      const int hi = i == n ? n : i + 1;
      d[i] = (values_[hi] - values_[lo]) / ((hi - lo) * grid_.dt);
    }
    return std::make_shared<GriddedNode>(grid_, std::move(d),
                                         std::vector<Matrix>{});
  }
  int Smoothness() const override { return slopes_.empty() ? 0 : 1; }

 private:
  TimeGrid grid_;
  std::vector<Matrix> values_;
  std::vector<Matrix> slopes_;
};

NodePtr MakeSum(const NodePtr& a, const NodePtr& b);
NodePtr MakeScale(double s, const NodePtr& a);
NodePtr MakeProduct(const NodePtr& a, const NodePtr& b);
NodePtr MakeTranspose(const NodePtr& a);

class SumNode final : public SignalNode {
 public:
  SumNode(NodePtr a, NodePtr b)
      : SignalNode(a->rows(), a->cols()), a_(std::move(a)), b_(std::move(b)) {}
  Matrix Eval(double t) const override { return a_->Eval(t) + b_->Eval(t); }
  NodePtr Derivative(const NodePtr&) const override {
    return MakeSum(a_->Derivative(a_), b_->Derivative(b_));
  }
  int Smoothness() const override {
    return MinSmooth(a_->Smoothness(), b_->Smoothness());
  }

 private:
  NodePtr a_, b_;
};

class ScaleNode final : public SignalNode {
 public:
  ScaleNode(double s, NodePtr a)
      : SignalNode(a->rows(), a->cols()), s_(s), a_(std::move(a)) {}
  Matrix Eval(double t) const override { return s_ * a_->Eval(t); }
  NodePtr Derivative(const NodePtr&) const override {
    return MakeScale(s_, a_->Derivative(a_));
  }
  int Smoothness() const override { return a_->Smoothness(); }

 private:
  double s_;
  NodePtr a_;
};

int ProductRows(const NodePtr& a, const NodePtr& b) {
  if (a->rows() == 1 && a->cols() == 1) return b->rows();
  return a->rows();
}
int ProductCols(const NodePtr& a, const NodePtr& b) {
  if (b->rows() == 1 && b->cols() == 1 && !(a->rows() == 1 && a->cols() == 1))
    return a->cols();
  return b->cols();
}

Matrix MultiplyValues(const Matrix& x, const Matrix& y) {
  if (x.rows() == 1 && x.cols() == 1) return x(0, 0) * y;
  if (y.rows() == 1 && y.cols() == 1) return y(0, 0) * x;
  return x * y;
}

class ProductNode final : public SignalNode {
 public:
  ProductNode(NodePtr a, NodePtr b)
      : SignalNode(ProductRows(a, b), ProductCols(a, b)),
        a_(std::move(a)),
        b_(std::move(b)) {}
  Matrix Eval(double t) const override {
    return MultiplyValues(a_->Eval(t), b_->Eval(t));
  }
  NodePtr Derivative(const NodePtr&) const override {
    return MakeSum(MakeProduct(a_->Derivative(a_), b_),
                   MakeProduct(a_, b_->Derivative(b_)));
  }
  int Smoothness() const override {
    return MinSmooth(a_->Smoothness(), b_->Smoothness());
  }

 private:
  NodePtr a_, b_;
};

class TransposeNode final : public SignalNode {
 public:
  explicit TransposeNode(NodePtr a)
      : SignalNode(a->cols(), a->rows()), a_(std::move(a)) {}
  Matrix Eval(double t) const override { return a_->Eval(t).transpose(); }
  NodePtr Derivative(const NodePtr&) const override {
    return MakeTranspose(a_->Derivative(a_));
  }
  int Smoothness() const override { return a_->Smoothness(); }

 private:
  NodePtr a_;
};

class SliceNode final : public SignalNode {
 public:
  SliceNode(NodePtr a, int r, int c, int nr, int nc)
      : SignalNode(nr, nc), a_(std::move(a)), r_(r), c_(c) {}
  Matrix Eval(double t) const override {
    return a_->Eval(t).block(r_, c_, rows(), cols());
  }
  NodePtr Derivative(const NodePtr&) const override;
  int Smoothness() const override { return a_->Smoothness(); }

 private:
  NodePtr a_;
  int r_, c_;
};

NodePtr MakeSlice(const NodePtr& a, int r, int c, int nr, int nc) {
  if (r == 0 && c == 0 && nr == a->rows() && nc == a->cols()) return a;
  if (const Matrix* v = a->ConstantValue()) return Const(v->block(r, c, nr, nc));
  return std::make_shared<SliceNode>(a, r, c, nr, nc);
}

NodePtr SliceNode::Derivative(const NodePtr&) const {
  return MakeSlice(a_->Derivative(a_), r_, c_, rows(), cols());
}

using BlockGrid = std::vector<std::vector<NodePtr>>;

int GridRows(const BlockGrid& g) {
  int r = 0;
  for (const auto& row : g) r += row.front()->rows();
  return r;
}
int GridCols(const BlockGrid& g) {
  int c = 0;
  for (const auto& b : g.front()) c += b->cols();
  return c;
}

class BlockNode final : public SignalNode {
 public:
  explicit BlockNode(BlockGrid g)
      : SignalNode(GridRows(g), GridCols(g)), g_(std::move(g)) {}
  Matrix Eval(double t) const override {
    Matrix out(rows(), cols());
    int r = 0;
    for (const auto& row : g_) {
      int c = 0;
      const int nr = row.front()->rows();
      for (const auto& b : row) {
        if (IsZero(b)) {
          out.block(r, c, nr, b->cols()).setZero();
        } else {
          out.block(r, c, nr, b->cols()) = b->Eval(t);
        }
        c += b->cols();
      }
      r += nr;
    }
    return out;
  }
  NodePtr Derivative(const NodePtr&) const override;
  int Smoothness() const override {
    int s = MatrixSignal::kExact;
    for (const auto& row : g_)
      for (const auto& b : row) s = MinSmooth(s, b->Smoothness());
    return s;
  }

 private:
  BlockGrid g_;
};

NodePtr MakeBlocks(BlockGrid g) {
  if (g.empty() || g.front().empty()) {
    throw std::invalid_argument("Blocks: empty block layout");
  }
  const size_t ncols = g.front().size();
  for (size_t i = 0; i < g.size(); ++i) {
    if (g[i].size() != ncols) {
      throw std::invalid_argument("Blocks: ragged block layout");
    }
    for (size_t j = 0; j < ncols; ++j) {
      if (g[i][j]->rows() != g[i][0]->rows() ||
          g[i][j]->cols() != g[0][j]->cols()) {
        throw std::invalid_argument("Blocks: incompatible block dimensions");
      }
    }
  }
  bool all_const = true;
  for (const auto& row : g)
    for (const auto& b : row) all_const = all_const && IsConst(b);
  if (all_const) {
    Matrix out(GridRows(g), GridCols(g));
    int r = 0;
    for (const auto& row : g) {
      int c = 0;
      for (const auto& b : row) {
        out.block(r, c, b->rows(), b->cols()) = *b->ConstantValue();
        c += b->cols();
      }
      r += row.front()->rows();
    }
    return Const(std::move(out));
  }
  return std::make_shared<BlockNode>(std::move(g));
}

NodePtr BlockNode::Derivative(const NodePtr&) const {
  BlockGrid d = g_;
  for (auto& row : d)
    for (auto& b : row) b = b->Derivative(b);
  return MakeBlocks(std::move(d));
}

enum class UnaryKind { kExp, kSin, kCos, kSqrt, kPow };

double ApplyUnary(UnaryKind k, double x, double e) {
  switch (k) {
    case UnaryKind::kExp: return std::exp(x);
    case UnaryKind::kSin: return std::sin(x);
    case UnaryKind::kCos: return std::cos(x);
    case UnaryKind::kSqrt: return std::sqrt(x);
    case UnaryKind::kPow: return std::pow(x, e);
  }
  return 0.0;
}

NodePtr MakeUnary(UnaryKind k, const NodePtr& g, double e = 0.0);

class UnaryNode final : public SignalNode {
 public:
  UnaryNode(UnaryKind k, NodePtr g, double e)
      : SignalNode(1, 1), k_(k), g_(std::move(g)), e_(e) {}
  Matrix Eval(double t) const override {
    return Matrix::Constant(1, 1, ApplyUnary(k_, g_->Eval(t)(0, 0), e_));
  }
  NodePtr Derivative(const NodePtr& self) const override {
    const NodePtr dg = g_->Derivative(g_);
    NodePtr outer;
    switch (k_) {
      case UnaryKind::kExp: outer = self; break;
      case UnaryKind::kSin: outer = MakeUnary(UnaryKind::kCos, g_); break;
      case UnaryKind::kCos:
        outer = MakeScale(-1.0, MakeUnary(UnaryKind::kSin, g_));
        break;
      case UnaryKind::kSqrt:
        outer = MakeScale(0.5, MakeUnary(UnaryKind::kPow, g_, -0.5));
        break;
      case UnaryKind::kPow:
        outer = MakeScale(e_, MakeUnary(UnaryKind::kPow, g_, e_ - 1.0));
        break;
    }
    return MakeProduct(outer, dg);
  }
  int Smoothness() const override { return g_->Smoothness(); }

 private:
  UnaryKind k_;
  NodePtr g_;
  double e_;
};

NodePtr MakeUnary(UnaryKind k, const NodePtr& g, double e) {
  if (g->rows() != 1 || g->cols() != 1) {
    throw std::invalid_argument("scalar function applied to a matrix signal");
  }
  if (k == UnaryKind::kPow) {
    if (e == 0.0) return Const(Matrix::Ones(1, 1));
    if (e == 1.0) return g;
  }
  if (const Matrix* v = g->ConstantValue()) {
    return Const(Matrix::Constant(1, 1, ApplyUnary(k, (*v)(0, 0), e)));
  }
  return std::make_shared<UnaryNode>(k, g, e);
}

class KronNode final : public SignalNode {
 public:
  // left ? (C kron a) : (a kron C)
  KronNode(NodePtr a, Matrix c, bool left)
      : SignalNode(static_cast<int>(a->rows() * c.rows()),
                   static_cast<int>(a->cols() * c.cols())),
        a_(std::move(a)),
        c_(std::move(c)),
        left_(left) {}
  Matrix Eval(double t) const override {
    return Kron(a_->Eval(t), c_, left_);
  }
  NodePtr Derivative(const NodePtr&) const override {
    NodePtr d = a_->Derivative(a_);
    if (IsZero(d)) return ZeroNode(rows(), cols());
    if (const Matrix* v = d->ConstantValue()) return Const(Kron(*v, c_, left_));
    return std::make_shared<KronNode>(d, c_, left_);
  }
  int Smoothness() const override { return a_->Smoothness(); }

  static Matrix Kron(const Matrix& a, const Matrix& c, bool left) {
    const Matrix& x = left ? c : a;
    const Matrix& y = left ? a : c;
    Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
  }

 private:
  NodePtr a_;
  Matrix c_;
  bool left_;
};

NodePtr MakeSum(const NodePtr& a, const NodePtr& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) {
    throw std::invalid_argument("signal sum: dimension mismatch");
  }
  if (IsZero(a)) return b;
  if (IsZero(b)) return a;
  if (IsConst(a) && IsConst(b)) {
    return Const(*a->ConstantValue() + *b->ConstantValue());
  }
  return std::make_shared<SumNode>(a, b);
}

NodePtr MakeScale(double s, const NodePtr& a) {
  if (s == 1.0) return a;
  if (s == 0.0 || IsZero(a)) return ZeroNode(a->rows(), a->cols());
  if (const Matrix* v = a->ConstantValue()) return Const(s * *v);
  return std::make_shared<ScaleNode>(s, a);
}

NodePtr MakeProduct(const NodePtr& a, const NodePtr& b) {
  const bool a_scalar = a->rows() == 1 && a->cols() == 1;
  const bool b_scalar = b->rows() == 1 && b->cols() == 1;
  if (!a_scalar && !b_scalar && a->cols() != b->rows()) {
    throw std::invalid_argument("signal product: dimension mismatch");
  }
  const int r = ProductRows(a, b);
  const int c = ProductCols(a, b);
  if (IsZero(a) || IsZero(b)) return ZeroNode(r, c);
  if (IsConst(a) && IsConst(b)) {
    return Const(MultiplyValues(*a->ConstantValue(), *b->ConstantValue()));
  }
  if (a_scalar && IsConst(a)) return MakeScale((*a->ConstantValue())(0, 0), b);
  if (b_scalar && IsConst(b)) return MakeScale((*b->ConstantValue())(0, 0), a);
  return std::make_shared<ProductNode>(a, b);
}

NodePtr MakeTranspose(const NodePtr& a) {
  if (const Matrix* v = a->ConstantValue()) return Const(v->transpose());
  return std::make_shared<TransposeNode>(a);
}

}  // namespace
}  // namespace internal

using internal::NodePtr;

MatrixSignal::MatrixSignal() : MatrixSignal(Matrix::Zero(0, 0)) {}
MatrixSignal::MatrixSignal(const Matrix& value)
    : node_(internal::Const(value)) {}
MatrixSignal::MatrixSignal(std::shared_ptr<const internal::SignalNode> node)
    : node_(std::move(node)) {}

MatrixSignal MatrixSignal::Constant(const Matrix& value) {
  return MatrixSignal(value);
}
MatrixSignal MatrixSignal::Scalar(double value) {
  return MatrixSignal(Matrix::Constant(1, 1, value));
}
MatrixSignal MatrixSignal::Zero(int rows, int cols) {
  return MatrixSignal(Matrix::Zero(rows, cols));
}
MatrixSignal MatrixSignal::Identity(int n) {
  return MatrixSignal(Matrix::Identity(n, n));
}
MatrixSignal MatrixSignal::Time() {
  return MatrixSignal(std::make_shared<internal::TimeNode>());
}
MatrixSignal MatrixSignal::Sinusoid(double amplitude, double omega,
                                    double phase) {
  if (amplitude == 0.0) return Zero(1, 1);
  if (omega == 0.0) return Scalar(amplitude * std::cos(phase));
  return MatrixSignal(
      std::make_shared<internal::SinusoidNode>(amplitude, omega, phase));
}
MatrixSignal MatrixSignal::Opaque(int rows, int cols,
                                  std::function<Matrix(double)> fn, double h) {
  if (!fn) throw std::invalid_argument("Opaque: empty callable");
  return MatrixSignal(
      std::make_shared<internal::OpaqueNode>(rows, cols, std::move(fn), h));
}
MatrixSignal MatrixSignal::Gridded(const TimeGrid& grid,
                                   std::vector<Matrix> values,
                                   std::vector<Matrix> slopes) {
  if (static_cast<int>(values.size()) != grid.size()) {
    throw std::invalid_argument("Gridded: one value per grid node required");
  }
  if (!slopes.empty() && slopes.size() != values.size()) {
    throw std::invalid_argument("Gridded: slopes must match values");
  }
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i].rows() != values[0].rows() ||
        values[i].cols() != values[0].cols()) {
      throw std::invalid_argument("Gridded: inconsistent sample dimensions");
    }
  }
  return MatrixSignal(std::make_shared<internal::GriddedNode>(
      grid, std::move(values), std::move(slopes)));
}
MatrixSignal MatrixSignal::Blocks(
    const std::vector<std::vector<MatrixSignal>>& blocks) {
  internal::BlockGrid g;
  for (const auto& row : blocks) {
    std::vector<NodePtr> r;
    for (const auto& b : row) r.push_back(b.node_);
    g.push_back(std::move(r));
  }
  return MatrixSignal(internal::MakeBlocks(std::move(g)));
}

int MatrixSignal::rows() const { return node_->rows(); }
int MatrixSignal::cols() const { return node_->cols(); }
Matrix MatrixSignal::eval(double t) const { return node_->Eval(t); }

MatrixSignal MatrixSignal::deriv(int k) const {
  if (k < 0) throw std::invalid_argument("deriv: negative order");
  NodePtr n = node_;
  for (int i = 0; i < k; ++i) n = n->Derivative(n);
  return MatrixSignal(n);
}

int MatrixSignal::smoothness_order() const { return node_->Smoothness(); }
bool MatrixSignal::is_constant() const { return internal::IsConst(node_); }
bool MatrixSignal::is_zero() const { return internal::IsZero(node_); }
Matrix MatrixSignal::constant_value() const {
  const Matrix* v = node_->ConstantValue();
  if (v == nullptr) throw std::logic_error("signal is not constant");
  return *v;
}

MatrixSignal MatrixSignal::transpose() const {
  return MatrixSignal(internal::MakeTranspose(node_));
}
MatrixSignal MatrixSignal::block(int row, int col, int rows, int cols) const {
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > this->rows() ||
      col + cols > this->cols()) {
    throw std::out_of_range("block: slice outside the signal");
  }
  return MatrixSignal(internal::MakeSlice(node_, row, col, rows, cols));
}

MatrixSignal MatrixSignal::exp() const {
  return MatrixSignal(internal::MakeUnary(internal::UnaryKind::kExp, node_));
}
MatrixSignal MatrixSignal::sin() const {
  return MatrixSignal(internal::MakeUnary(internal::UnaryKind::kSin, node_));
}
MatrixSignal MatrixSignal::cos() const {
  return MatrixSignal(internal::MakeUnary(internal::UnaryKind::kCos, node_));
}
MatrixSignal MatrixSignal::sqrt() const {
  return MatrixSignal(internal::MakeUnary(internal::UnaryKind::kSqrt, node_));
}
MatrixSignal MatrixSignal::reciprocal() const { return pow(-1.0); }
MatrixSignal MatrixSignal::pow(double exponent) const {
  return MatrixSignal(
      internal::MakeUnary(internal::UnaryKind::kPow, node_, exponent));
}

MatrixSignal MatrixSignal::kron_right(const Matrix& right) const {
  if (const Matrix* v = node_->ConstantValue()) {
    return MatrixSignal(internal::KronNode::Kron(*v, right, false));
  }
  if (is_zero()) return Zero(rows() * right.rows(), cols() * right.cols());
  return MatrixSignal(std::make_shared<internal::KronNode>(node_, right, false));
}
MatrixSignal MatrixSignal::kron_left(const Matrix& left) const {
  if (const Matrix* v = node_->ConstantValue()) {
    return MatrixSignal(internal::KronNode::Kron(*v, left, true));
  }
  return MatrixSignal(std::make_shared<internal::KronNode>(node_, left, true));
}

MatrixSignal operator+(const MatrixSignal& a, const MatrixSignal& b) {
  return MatrixSignal(internal::MakeSum(a.node(), b.node()));
}
MatrixSignal operator-(const MatrixSignal& a) {
  return MatrixSignal(internal::MakeScale(-1.0, a.node()));
}
MatrixSignal operator-(const MatrixSignal& a, const MatrixSignal& b) {
  return a + (-b);
}
MatrixSignal operator*(const MatrixSignal& a, const MatrixSignal& b) {
  return MatrixSignal(internal::MakeProduct(a.node(), b.node()));
}
MatrixSignal operator*(double s, const MatrixSignal& a) {
  return MatrixSignal(internal::MakeScale(s, a.node()));
}
MatrixSignal operator*(const MatrixSignal& a, double s) { return s * a; }
MatrixSignal operator/(const MatrixSignal& a, const MatrixSignal& b) {
  return a * b.reciprocal();
}

std::vector<Matrix> Sample(const MatrixSignal& signal, const TimeGrid& grid) {
  std::vector<Matrix> out;
  out.reserve(grid.size());
  for (int i = 0; i < grid.size(); ++i) out.push_back(signal(grid.time(i)));
  return out;
}

double SupNorm(const MatrixSignal& signal, const TimeGrid& grid) {
  double sup = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const Matrix v = signal(grid.time(i));
    double n;
    if (v.rows() == 1 || v.cols() == 1) {
      n = v.norm();
    } else {
      n = Eigen::JacobiSVD<Matrix>(v).singularValues()(0);
    }
    if (!(n <= sup)) sup = n;
  }
  return sup;
}

}  // namespace ltvreg
