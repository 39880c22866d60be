#include "fracobs/expression.hpp"

#include <cctype>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

namespace fracobs {

namespace {

Jet operator+(const Jet& f, const Jet& g) { return {f.v + g.v, f.d1 + g.d1, f.d2 + g.d2}; }
Jet operator-(const Jet& f, const Jet& g) { return {f.v - g.v, f.d1 - g.d1, f.d2 - g.d2}; }
Jet operator-(const Jet& f) { return {-f.v, -f.d1, -f.d2}; }
Jet operator*(const Jet& f, const Jet& g) {
  return {f.v * g.v, f.d1 * g.v + f.v * g.d1, f.d2 * g.v + 2.0 * f.d1 * g.d1 + f.v * g.d2};
}

/// h(f) for scalar h with derivatives h0, h1, h2 evaluated at f.v.
Jet chain(const Jet& f, double h0, double h1, double h2) {
  return {h0, h1 * f.d1, h2 * f.d1 * f.d1 + h1 * f.d2};
}

Jet reciprocal(const Jet& f) {
  const double r = 1.0 / f.v;
  return chain(f, r, -r * r, 2.0 * r * r * r);
}

Jet power(const Jet& f, const Jet& g) {
  // constant exponent keeps negative bases usable (x^2, x^3 for x < 0)
  if (g.d1 == 0.0 && g.d2 == 0.0) {
    const double p = g.v;
    if (p == 0.0) return {1.0, 0.0, 0.0};
    const double b = f.v;
    const double h0 = std::pow(b, p);
    const double h1 = p * std::pow(b, p - 1.0);
    const double h2 = p == 1.0 ? 0.0 : p * (p - 1.0) * std::pow(b, p - 2.0);
    return chain(f, h0, h1, h2);
  }
  const double lv = std::log(f.v);
  const Jet lf = chain(f, lv, 1.0 / f.v, -1.0 / (f.v * f.v));
  const Jet e = g * lf;
  const double ev = std::exp(e.v);
  return chain(e, ev, ev, ev);
}

using Unary = std::function<Jet(const Jet&)>;

const std::map<std::string, Unary>& functions() {
  static const std::map<std::string, Unary> table{
      {"sin", [](const Jet& f) { return chain(f, std::sin(f.v), std::cos(f.v), -std::sin(f.v)); }},
      {"cos", [](const Jet& f) { return chain(f, std::cos(f.v), -std::sin(f.v), -std::cos(f.v)); }},
      {"tan",
       [](const Jet& f) {
         const double t = std::tan(f.v);
         const double sec2 = 1.0 + t * t;
         return chain(f, t, sec2, 2.0 * t * sec2);
       }},
      {"exp", [](const Jet& f) { const double e = std::exp(f.v); return chain(f, e, e, e); }},
      {"log", [](const Jet& f) { return chain(f, std::log(f.v), 1.0 / f.v, -1.0 / (f.v * f.v)); }},
      {"sqrt",
       [](const Jet& f) {
         const double r = std::sqrt(f.v);
         return chain(f, r, 0.5 / r, -0.25 / (r * f.v));
       }},
      {"tanh",
       [](const Jet& f) {
         const double t = std::tanh(f.v);
         const double s = 1.0 - t * t;
         return chain(f, t, s, -2.0 * t * s);
       }},
      {"sinh", [](const Jet& f) { return chain(f, std::sinh(f.v), std::cosh(f.v), std::sinh(f.v)); }},
      {"cosh", [](const Jet& f) { return chain(f, std::cosh(f.v), std::sinh(f.v), std::cosh(f.v)); }},
  };
  return table;
}

}  // namespace

struct Expression::Node {
  enum Kind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call } kind{Number};
  double value{0};
  const Unary* fn{nullptr};
  std::shared_ptr<const Node> lhs, rhs;

  Jet eval(double x) const {
    switch (kind) {
      case Number:
        return {value, 0.0, 0.0};
      case Variable:
        return {x, 1.0, 0.0};
      case Add:
        return lhs->eval(x) + rhs->eval(x);
      case Sub:
        return lhs->eval(x) - rhs->eval(x);
      case Mul:
        return lhs->eval(x) * rhs->eval(x);
      case Div:
        return lhs->eval(x) * reciprocal(rhs->eval(x));
      case Pow:
        return power(lhs->eval(x), rhs->eval(x));
      case Neg:
        return -lhs->eval(x);
      case Call:
        return (*fn)(lhs->eval(x));
    }
    return {};
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) throw ExpressionError("unexpected '" + std::string(1, s_[pos_]) + "'", col());
    return n;
  }

 private:
  static NodePtr make(Expression::Node::Kind k, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  int col() const { return static_cast<int>(pos_) + 1; }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = make(Expression::Node::Add, n, term());
      else if (eat('-')) n = make(Expression::Node::Sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Expression::Node::Mul, n, unary());
      else if (eat('/')) n = make(Expression::Node::Div, n, unary());
      else return n;
    }
  }

  // unary minus binds looser than ^, so -x^2 is -(x^2)
  NodePtr unary() {
    if (eat('-')) return make(Expression::Node::Neg, unary());
    if (eat('+')) return unary();
    return factor();
  }

  NodePtr factor() {
    NodePtr base = primary();
    if (eat('^')) return make(Expression::Node::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) throw ExpressionError("unexpected end of expression", col());
    const char c = s_[pos_];
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) throw ExpressionError("expected ')'", col());
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ExpressionError("malformed number", col());
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const int start = col();
      std::string name;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        name += s_[pos_++];
      }
      if (name == "x") return make(Expression::Node::Variable);
      if (name == "pi" || name == "e") {
        auto n = std::make_shared<Expression::Node>();
        n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
        return n;
      }
      const auto it = functions().find(name);
      if (it == functions().end()) throw ExpressionError("unknown identifier '" + name + "'", start);
      if (!eat('(')) throw ExpressionError("expected '(' after " + name, col());
      NodePtr arg = expr();
      if (!eat(')')) throw ExpressionError("expected ')'", col());
      auto n = std::make_shared<Expression::Node>();
      n->kind = Expression::Node::Call;
      n->fn = &it->second;
      n->lhs = std::move(arg);
      return n;
    }
    throw ExpressionError("unexpected '" + std::string(1, c) + "'", col());
  }

  const std::string& s_;
  std::size_t pos_{0};
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

Jet Expression::jet(double x) const { return root_->eval(x); }

}  // namespace fracobs
