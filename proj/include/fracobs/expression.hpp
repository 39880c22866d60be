#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace fracobs {

/// Raised for malformed expressions; `column` is 1-based.
class ExpressionError : public std::invalid_argument {
 public:
  ExpressionError(const std::string& what, int column)
      : std::invalid_argument(what + " at column " + std::to_string(column)), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

/// Value and first two derivatives of a function of one variable at a point.
struct Jet {
  double v{0};
  double d1{0};
  double d2{0};
};

/// Scalar expression in the thin variable x. Grammar: numbers, x, pi, e,
/// + - * / ^ (right associative), unary minus, parentheses, and the functions
/// sin cos tan exp log sqrt tanh cosh sinh.
class Expression {
 public:
  static Expression parse(const std::string& text);

  double operator()(double x) const { return jet(x).v; }
  /// Second derivative, i.e. the thin Laplacian for n = 1.
  double laplacian(double x) const { return jet(x).d2; }
  Jet jet(double x) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace fracobs
