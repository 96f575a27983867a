#include "geomq/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace geomq {

Jet3 operator+(const Jet3& a, const Jet3& b) {
  Jet3 r;
  for (int k = 0; k < 4; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

Jet3 operator-(const Jet3& a, const Jet3& b) {
  Jet3 r;
  for (int k = 0; k < 4; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

Jet3 operator-(const Jet3& a) {
  Jet3 r;
  for (int k = 0; k < 4; ++k) r.c[k] = -a.c[k];
  return r;
}

Jet3 operator*(const Jet3& a, const Jet3& b) {
  Jet3 r;
  for (int k = 0; k < 4; ++k) {
    double s = 0;
    for (int j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
    r.c[k] = s;
  }
  return r;
}

Jet3 operator/(const Jet3& a, const Jet3& b) {
  if (b.c[0] == 0.0) throw NumericError("expression: division by zero");
  Jet3 r;
  r.c[0] = a.c[0] / b.c[0];
  for (int k = 1; k < 4; ++k) {
    double s = a.c[k];
    for (int j = 0; j < k; ++j) s -= r.c[j] * b.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

// sin/cos propagate jointly through the ODE recurrences
//   k s_k = sum_j j u_j c_{k-j},   k c_k = -sum_j j u_j s_{k-j}.
static void jet_sincos(const Jet3& u, Jet3& s, Jet3& c, bool hyperbolic) {
  const double sign = hyperbolic ? 1.0 : -1.0;
  s.c[0] = hyperbolic ? std::sinh(u.c[0]) : std::sin(u.c[0]);
  c.c[0] = hyperbolic ? std::cosh(u.c[0]) : std::cos(u.c[0]);
  for (int k = 1; k < 4; ++k) {
    double as = 0, ac = 0;
    for (int j = 1; j <= k; ++j) {
      as += j * u.c[j] * c.c[k - j];
      ac += j * u.c[j] * s.c[k - j];
    }
    s.c[k] = as / k;
    c.c[k] = sign * ac / k;
  }
}

Jet3 jet_sin(const Jet3& a) {
  Jet3 s, c;
  jet_sincos(a, s, c, false);
  return s;
}

Jet3 jet_cos(const Jet3& a) {
  Jet3 s, c;
  jet_sincos(a, s, c, false);
  return c;
}

Jet3 jet_sinh(const Jet3& a) {
  Jet3 s, c;
  jet_sincos(a, s, c, true);
  return s;
}

Jet3 jet_cosh(const Jet3& a) {
  Jet3 s, c;
  jet_sincos(a, s, c, true);
  return c;
}

Jet3 jet_exp(const Jet3& a) {
  Jet3 e;
  e.c[0] = std::exp(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * e.c[k - j];
    e.c[k] = s / k;
  }
  return e;
}

Jet3 jet_sqrt(const Jet3& a) {
  if (a.c[0] < 0.0) throw NumericError("expression: sqrt of negative value");
  if (a.c[0] == 0.0) throw NumericError("expression: sqrt not differentiable at zero");
  Jet3 r;
  r.c[0] = std::sqrt(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= r.c[j] * r.c[k - j];
    r.c[k] = s / (2.0 * r.c[0]);
  }
  return r;
}

static Jet3 jet_log(const Jet3& a) {
  Jet3 l;
  l.c[0] = std::log(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double s = k * a.c[k];
    for (int j = 1; j < k; ++j) s -= j * l.c[j] * a.c[k - j];
    l.c[k] = s / (k * a.c[0]);
  }
  return l;
}

static Jet3 jet_ipow(Jet3 base, long n) {
  Jet3 r = Jet3::constant(1.0);
  bool inv = n < 0;
  unsigned long m = inv ? -(unsigned long)n : (unsigned long)n;
  while (m) {
    if (m & 1) r = r * base;
    base = base * base;
    m >>= 1;
  }
  return inv ? Jet3::constant(1.0) / r : r;
}

Jet3 jet_pow(const Jet3& a, const Jet3& b) {
  // Constant integer exponents go through repeated multiplication so that
  // negative bases (t^2 with t < 0) stay valid.
  const bool b_const = b.c[1] == 0 && b.c[2] == 0 && b.c[3] == 0;
  if (b_const) {
    double bi = std::round(b.c[0]);
    if (bi == b.c[0] && std::abs(bi) <= 64) return jet_ipow(a, (long)bi);
  }
  if (a.c[0] <= 0.0)
    throw NumericError("expression: non-integer power of a non-positive base");
  return jet_exp(b * jet_log(a));
}

// ---------------------------------------------------------------------------

struct Expression::Node {
  enum Kind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Fun } kind;
  double value = 0;
  int fun = -1; // index into kFunNames
  std::shared_ptr<const Node> a, b;
};

namespace {

const char* kFunNames[] = {"sin", "cos", "sinh", "cosh", "exp", "sqrt"};

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) {
    throw ConfigError("expression parse error at position " +
                      std::to_string(pos_) + " in \"" + s_ + "\": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  static NodePtr make(Expression::Node n) {
    return std::make_shared<const Expression::Node>(std::move(n));
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = make({Expression::Node::Add, 0, -1, lhs, term()});
      else if (eat('-'))
        lhs = make({Expression::Node::Sub, 0, -1, lhs, term()});
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*'))
        lhs = make({Expression::Node::Mul, 0, -1, lhs, unary()});
      else if (eat('/'))
        lhs = make({Expression::Node::Div, 0, -1, lhs, unary()});
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make({Expression::Node::Neg, 0, -1, unary(), nullptr});
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) {
      // right associative; exponent may itself be signed
      NodePtr e = unary();
      return make({Expression::Node::Pow, 0, -1, base, e});
    }
    return base;
  }

  NodePtr atom() {
    char c = peek();
    if (c == '(') {
      eat('(');
      NodePtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit((unsigned char)c) || c == '.') return number();
    if (std::isalpha((unsigned char)c)) return identifier();
    fail("expected number, identifier, or '('");
  }

  NodePtr number() {
    skip_ws();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += end - begin;
    return make({Expression::Node::Num, v, -1, nullptr, nullptr});
  }

  NodePtr identifier() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (name == "t") return make({Expression::Node::Var, 0, -1, nullptr, nullptr});
    for (int i = 0; i < 6; ++i) {
      if (name == kFunNames[i]) {
        if (!eat('(')) fail("expected '(' after " + name);
        NodePtr arg = expr();
        if (!eat(')')) fail("expected ')'");
        return make({Expression::Node::Fun, 0, i, arg, nullptr});
      }
    }
    pos_ = start;
    fail("unknown identifier \"" + name + "\"");
  }
};

Jet3 eval_node(const Expression::Node& n, double t) {
  using N = Expression::Node;
  switch (n.kind) {
    case N::Num: return Jet3::constant(n.value);
    case N::Var: return Jet3::variable(t);
    case N::Add: return eval_node(*n.a, t) + eval_node(*n.b, t);
    case N::Sub: return eval_node(*n.a, t) - eval_node(*n.b, t);
    case N::Mul: return eval_node(*n.a, t) * eval_node(*n.b, t);
    case N::Div: return eval_node(*n.a, t) / eval_node(*n.b, t);
    case N::Pow: return jet_pow(eval_node(*n.a, t), eval_node(*n.b, t));
    case N::Neg: return -eval_node(*n.a, t);
    case N::Fun: {
      Jet3 a = eval_node(*n.a, t);
      switch (n.fun) {
        case 0: return jet_sin(a);
        case 1: return jet_cos(a);
        case 2: return jet_sinh(a);
        case 3: return jet_cosh(a);
        case 4: return jet_exp(a);
        case 5: return jet_sqrt(a);
      }
    }
  }
  throw NumericError("expression: corrupt node");
}

} // namespace

Expression::Expression(const std::string& text) : text_(text) {
  root_ = Parser(text).parse();
}

double Expression::eval(double t) const { return eval_jet(t).value(); }

Jet3 Expression::eval_jet(double t) const {
  if (!root_) throw ConfigError("expression: empty");
  return eval_node(*root_, t);
}

} // namespace geomq
