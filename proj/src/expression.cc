#include "ltvreg/expression.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ltvreg {

Expr Expr::Number(double v) {
  Expr e;
  e.kind = Kind::kNumber;
  e.number = v;
  return e;
}

Expr Expr::Symbol(std::string name) {
  Expr e;
  e.kind = Kind::kSymbol;
  e.name = std::move(name);
  return e;
}

std::string FormatDouble(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite number");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

Expr Node(Expr::Kind k, std::vector<Expr> args, std::string name = {}) {
  Expr e;
  e.kind = k;
  e.args = std::move(args);
  e.name = std::move(name);
  return e;
}

// Binding strength used by the printer.
int Level(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kAdd:
    case Expr::Kind::kSub: return 1;
    case Expr::Kind::kMul:
    case Expr::Kind::kDiv: return 2;
    case Expr::Kind::kNeg: return 3;
    case Expr::Kind::kPow: return 4;
    case Expr::Kind::kNumber: return e.number < 0 || std::signbit(e.number) ? 3 : 5;
    default: return 5;
  }
}

std::string Wrap(const Expr& e, int min_level) {
  std::string s = e.ToString();
  return Level(e) >= min_level ? s : "(" + s + ")";
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Expr ParseWholeExpr() {
    Expr e = ParseSum();
    SkipWs();
    if (pos_ != s_.size()) Fail("unexpected trailing input");
    return e;
  }

  MatrixExpr ParseWholeMatrix() {
    SkipWs();
    MatrixExpr m;
    if (Peek() != '[') {
      m.rows = m.cols = 1;
      m.entries.push_back(ParseSum());
    } else {
      ++pos_;
      SkipWs();
      if (Peek() == '[') {
        std::vector<std::vector<Expr>> rows;
        while (true) {
          Expect('[');
          rows.push_back(ParseList(']'));
          SkipWs();
          if (Peek() == ',') {
            ++pos_;
            SkipWs();
            continue;
          }
          Expect(']');
          break;
        }
        m.rows = static_cast<int>(rows.size());
        m.cols = static_cast<int>(rows.front().size());
        for (auto& r : rows) {
          if (static_cast<int>(r.size()) != m.cols) Fail("ragged matrix rows");
          for (auto& e : r) m.entries.push_back(std::move(e));
        }
      } else {
        std::vector<Expr> row = ParseList(']');
        m.rows = 1;
        m.cols = static_cast<int>(row.size());
        m.entries = std::move(row);
      }
    }
    SkipWs();
    if (pos_ != s_.size()) Fail("unexpected trailing input");
    return m;
  }

 private:
  // Parses "e, e, ..., e<close>" and consumes the closing bracket.
  std::vector<Expr> ParseList(char close) {
    std::vector<Expr> out;
    SkipWs();
    if (Peek() == close) Fail("empty matrix row");
    while (true) {
      out.push_back(ParseSum());
      SkipWs();
      if (Peek() == ',') {
        ++pos_;
        continue;
      }
      Expect(close);
      return out;
    }
  }

  Expr ParseSum() {
    Expr lhs = ParseTerm();
    while (true) {
      SkipWs();
      const char c = Peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      Expr rhs = ParseTerm();
      lhs = Node(c == '+' ? Expr::Kind::kAdd : Expr::Kind::kSub,
                 {std::move(lhs), std::move(rhs)});
    }
  }

  Expr ParseTerm() {
    Expr lhs = ParseUnary();
    while (true) {
      SkipWs();
      const char c = Peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      Expr rhs = ParseUnary();
      lhs = Node(c == '*' ? Expr::Kind::kMul : Expr::Kind::kDiv,
                 {std::move(lhs), std::move(rhs)});
    }
  }

  Expr ParseUnary() {
    SkipWs();
    if (Peek() == '-') {
      ++pos_;
      SkipWs();
      // A negated literal folds into the literal unless it is a power base.
      if (std::isdigit(static_cast<unsigned char>(Peek())) || Peek() == '.') {
        const size_t save = pos_;
        const double v = ParseNumber();
        SkipWs();
        if (Peek() != '^') return Expr::Number(-v);
        pos_ = save;
      }
      return Node(Expr::Kind::kNeg, {ParseUnary()});
    }
    return ParsePower();
  }

  Expr ParsePower() {
    Expr base = ParsePrimary();
    SkipWs();
    if (Peek() == '^') {
      ++pos_;
      Expr exponent = ParseUnary();
      return Node(Expr::Kind::kPow, {std::move(base), std::move(exponent)});
    }
    return base;
  }

  Expr ParsePrimary() {
    SkipWs();
    const char c = Peek();
    if (c == '(') {
      ++pos_;
      Expr e = ParseSum();
      SkipWs();
      Expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return Expr::Number(ParseNumber());
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      std::string name(s_.substr(start, pos_ - start));
      SkipWs();
      if (Peek() == '(') {
        if (name != "cos" && name != "sin" && name != "exp" && name != "sqrt") {
          Fail("unknown function '" + name + "'");
        }
        ++pos_;
        Expr arg = ParseSum();
        SkipWs();
        Expect(')');
        return Node(Expr::Kind::kCall, {std::move(arg)}, name);
      }
      return Expr::Symbol(std::move(name));
    }
    Fail(c == '\0' ? "unexpected end of input" : std::string("unexpected '") + c + "'");
    return {};
  }

  double ParseNumber() {
    const size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_) {
      pos_ = start;
      Fail("malformed number");
    }
    return v;
  }

  void SkipWs() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char Peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void Expect(char c) {
    SkipWs();
    if (Peek() != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void Fail(const std::string& what) const {
    throw std::invalid_argument("parse error at column " +
                                std::to_string(pos_ + 1) + ": " + what);
  }

  std::string_view s_;
  size_t pos_{0};
};

}  // namespace

std::string Expr::ToString() const {
  switch (kind) {
    case Kind::kNumber: return FormatDouble(number);
    case Kind::kSymbol: return name;
    case Kind::kNeg:
      // Keep "-(3)" apart from the literal -3.
      if (args[0].kind == Kind::kNumber) return "-(" + args[0].ToString() + ")";
      return "-" + Wrap(args[0], 3);
    case Kind::kAdd: return Wrap(args[0], 1) + " + " + Wrap(args[1], 2);
    case Kind::kSub: return Wrap(args[0], 1) + " - " + Wrap(args[1], 2);
    case Kind::kMul: return Wrap(args[0], 2) + "*" + Wrap(args[1], 3);
    case Kind::kDiv: return Wrap(args[0], 2) + "/" + Wrap(args[1], 3);
    case Kind::kPow: return Wrap(args[0], 5) + "^" + Wrap(args[1], 3);
    case Kind::kCall: return name + "(" + args[0].ToString() + ")";
  }
  return {};
}

MatrixExpr MatrixExpr::FromMatrix(const Matrix& m) {
  MatrixExpr out;
  out.rows = static_cast<int>(m.rows());
  out.cols = static_cast<int>(m.cols());
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out.entries.push_back(Expr::Number(m(i, j)));
  return out;
}

std::string MatrixExpr::ToString() const {
  if (rows == 1 && cols == 1) return entries[0].ToString();
  std::string s = "[";
  for (int i = 0; i < rows; ++i) {
    s += i ? ", [" : "[";
    for (int j = 0; j < cols; ++j) {
      if (j) s += ", ";
      s += at(i, j).ToString();
    }
    s += "]";
  }
  return s + "]";
}

Expr ParseExpr(std::string_view text) { return Parser(text).ParseWholeExpr(); }

MatrixExpr ParseMatrixExpr(std::string_view text) {
  return Parser(text).ParseWholeMatrix();
}

namespace {

// Affine-in-t arguments turn trigonometric calls into sinusoid leaves.
bool AffineInTime(const MatrixSignal& g, double* slope, double* offset) {
  const MatrixSignal d = g.deriv(1);
  if (!d.is_constant() || !d.deriv(1).is_zero()) return false;
  *slope = d.constant_value()(0, 0);
  *offset = g(0.0)(0, 0);
  return true;
}

}  // namespace

MatrixSignal CompileExpr(const Expr& e, const SymbolTable& symbols) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::kNumber: return MatrixSignal::Scalar(e.number);
    case K::kSymbol: {
      if (e.name == "t") return MatrixSignal::Time();
      if (e.name == "pi") return MatrixSignal::Scalar(std::numbers::pi);
      auto it = symbols.find(e.name);
      if (it == symbols.end()) {
        throw std::invalid_argument("unknown symbol '" + e.name + "'");
      }
      return it->second;
    }
    case K::kNeg: return -CompileExpr(e.args[0], symbols);
    case K::kAdd:
      return CompileExpr(e.args[0], symbols) + CompileExpr(e.args[1], symbols);
    case K::kSub:
      return CompileExpr(e.args[0], symbols) - CompileExpr(e.args[1], symbols);
    case K::kMul:
      return CompileExpr(e.args[0], symbols) * CompileExpr(e.args[1], symbols);
    case K::kDiv:
      return CompileExpr(e.args[0], symbols) / CompileExpr(e.args[1], symbols);
    case K::kPow: {
      const MatrixSignal ex = CompileExpr(e.args[1], symbols);
      if (!ex.is_constant()) {
        throw std::invalid_argument("exponent must be constant in t");
      }
      return CompileExpr(e.args[0], symbols).pow(ex.constant_value()(0, 0));
    }
    case K::kCall: {
      const MatrixSignal g = CompileExpr(e.args[0], symbols);
      if (g.rows() != 1 || g.cols() != 1) {
        throw std::invalid_argument("function argument must be scalar");
      }
      double w = 0, p = 0;
      if (e.name == "cos") {
        if (AffineInTime(g, &w, &p)) return MatrixSignal::Sinusoid(1.0, w, p);
        return g.cos();
      }
      if (e.name == "sin") {
        if (AffineInTime(g, &w, &p)) {
          return MatrixSignal::Sinusoid(1.0, w, p - std::numbers::pi / 2);
        }
        return g.sin();
      }
      if (e.name == "exp") return g.exp();
      if (e.name == "sqrt") return g.sqrt();
      throw std::invalid_argument("unknown function '" + e.name + "'");
    }
  }
  throw std::logic_error("corrupt expression");
}

MatrixSignal CompileMatrixExpr(const MatrixExpr& m, const SymbolTable& symbols) {
  if (m.rows < 1 || m.cols < 1 ||
      static_cast<int>(m.entries.size()) != m.rows * m.cols) {
    throw std::invalid_argument("malformed matrix expression");
  }
  std::vector<std::vector<MatrixSignal>> blocks(m.rows);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      MatrixSignal s = CompileExpr(m.at(i, j), symbols);
      if (s.rows() != 1 || s.cols() != 1) {
        throw std::invalid_argument("matrix entries must be scalar");
      }
      blocks[i].push_back(s);
    }
  }
  return MatrixSignal::Blocks(blocks);
}

}  // namespace ltvreg
