#pragma once

#include "geomq/types.hpp"

#include <array>
#include <memory>
#include <string>

namespace geomq {

// Degree-3 truncated Taylor series in one variable, stored as Taylor
// coefficients c[k] = f^(k)(t0)/k!.  Propagating jets through an expression
// tree yields the first three derivatives to machine precision, which the
// curvature/torsion formulas need (kappa ~ r'xr'', tau ~ r''').
struct Jet3 {
  std::array<double, 4> c{0, 0, 0, 0};

  static Jet3 constant(double v) { return Jet3{{v, 0, 0, 0}}; }
  static Jet3 variable(double v) { return Jet3{{v, 1, 0, 0}}; }

  double value() const { return c[0]; }
  double d1() const { return c[1]; }
  double d2() const { return 2.0 * c[2]; }
  double d3() const { return 6.0 * c[3]; }
};

Jet3 operator+(const Jet3& a, const Jet3& b);
Jet3 operator-(const Jet3& a, const Jet3& b);
Jet3 operator-(const Jet3& a);
Jet3 operator*(const Jet3& a, const Jet3& b);
Jet3 operator/(const Jet3& a, const Jet3& b);
Jet3 jet_sin(const Jet3& a);
Jet3 jet_cos(const Jet3& a);
Jet3 jet_sinh(const Jet3& a);
Jet3 jet_cosh(const Jet3& a);
Jet3 jet_exp(const Jet3& a);
Jet3 jet_sqrt(const Jet3& a);
Jet3 jet_pow(const Jet3& a, const Jet3& b);

// One scalar expression in the variable t.  Grammar: + - * / ^ (right
// associative), parentheses, unary minus, numeric literals, and the
// functions sin cos sinh cosh exp sqrt.  Parse errors carry the offending
// position; evaluation errors (sqrt of a negative, non-integer power of a
// negative base) name the value of t.
class Expression {
public:
  Expression() = default;
  explicit Expression(const std::string& text);

  double eval(double t) const;
  Jet3 eval_jet(double t) const;

  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

  struct Node;

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

} // namespace geomq
