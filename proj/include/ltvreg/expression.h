#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ltvreg/signal.h"

namespace ltvreg {

/// Scalar expression in t. Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?
///   primary := number | name | name '(' expr ')' | '(' expr ')'
/// Functions: cos, sin, exp, sqrt. Names: t, pi and user definitions.
struct Expr {
  enum class Kind { kNumber, kSymbol, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };

  Kind kind{Kind::kNumber};
  double number{0.0};
  std::string name;  // symbol or function name
  std::vector<Expr> args;

  static Expr Number(double v);
  static Expr Symbol(std::string name);

  bool operator==(const Expr&) const = default;
  /// Canonical text; Parse(ToString()) reproduces the tree.
  std::string ToString() const;
};

/// Row-major matrix of scalar expressions. Written as a bare expression
/// (1x1), a row `[a, b]` or nested rows `[[a, b], [c, d]]`.
struct MatrixExpr {
  int rows{0};
  int cols{0};
  std::vector<Expr> entries;

  static MatrixExpr FromMatrix(const Matrix& m);
  bool operator==(const MatrixExpr&) const = default;
  std::string ToString() const;
  const Expr& at(int i, int j) const { return entries[i * cols + j]; }
};

/// Throws std::invalid_argument with the column of the first error.
Expr ParseExpr(std::string_view text);
MatrixExpr ParseMatrixExpr(std::string_view text);

using SymbolTable = std::map<std::string, MatrixSignal>;

/// Compiles to an exact signal. Unknown names and non-constant exponents
/// throw std::invalid_argument.
MatrixSignal CompileExpr(const Expr& e, const SymbolTable& symbols = {});
MatrixSignal CompileMatrixExpr(const MatrixExpr& m,
                               const SymbolTable& symbols = {});

/// Shortest decimal text that reads back to the same double.
std::string FormatDouble(double v);

}  // namespace ltvreg
