#pragma once

#include "geomq/expression.hpp"
#include "geomq/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace geomq {

enum class CurveKind { Line, Circle, Helix, Parametric };

// Curve descriptions.  Built-in kinds carry closed-form frames; Parametric
// curves are three expressions in t evaluated with jet arithmetic.
struct CurveSpec {
  CurveKind kind = CurveKind::Line;
  double circle_R = 1.0;
  double helix_r = 1.0;
  double helix_c = 0.0;
  Expression x, y, z;
  double t0 = 0.0, t1 = 1.0;

  static CurveSpec line();
  static CurveSpec circle(double R);
  static CurveSpec helix(double r, double c);
  static CurveSpec parametric(const std::string& x, const std::string& y,
                              const std::string& z, double t0, double t1);
};

// Position and first three parameter derivatives at one t.
struct CurveJet {
  Vec3 p, d1, d2, d3;
};

CurveJet curve_jet(const CurveSpec& spec, double t);

// Strictly monotone map between curve parameter t and arc length s,
// built by adaptive Simpson integration of |r'(t)| with cubic Hermite
// interpolation between knots (the knot derivatives ds/dt = |r'| are exact).
class ArcLengthMap {
public:
  double total_length() const { return length_; }
  double s_of_t(double t) const;
  double t_of_s(double s) const;
  double speed_at_t(double t) const;

private:
  friend ArcLengthMap reparametrize_arclength(const CurveSpec&, double);
  bool analytic_ = false; // built-ins: s = v0 * (t - t0)
  double v0_ = 1.0;
  double t0_ = 0.0, t1_ = 1.0, length_ = 1.0;
  std::vector<double> kt_, ks_, kv_; // knots: parameter, arc length, speed
  int bracket(double s) const;
};

// tol is the absolute quadrature tolerance for the total length.
// Rejects curves whose speed vanishes anywhere on the domain.
ArcLengthMap reparametrize_arclength(const CurveSpec& spec, double tol = 1e-12);

struct FrameSample {
  double s = 0;
  Vec3 position = Vec3::Zero();
  Vec3 t = Vec3::UnitX();
  Vec3 n = Vec3::UnitY();
  Vec3 b = Vec3::UnitZ();
  double kappa = 0;
  double tau = 0;
};

// A curve with its arc-length parametrization attached.
class Curve {
public:
  explicit Curve(CurveSpec spec, double tol = 1e-12);

  const CurveSpec& spec() const { return spec_; }
  const ArcLengthMap& arclength() const { return map_; }
  double length() const { return map_.total_length(); }

  // Frenet frame from closed forms (built-ins) or the derivative formulas
  //   kappa = |r' x r''| / |r'|^3,  tau = (r' x r'') . r''' / |r' x r''|^2.
  // Throws when kappa < 1e-10 (frame undefined), naming s.
  FrameSample frame_at(double s) const;

  Vec3 position_at(double s) const;
  void kappa_tau_at(double s, double& kappa, double& tau) const;

  // True when kappa and tau are constant along the curve (line/circle/helix),
  // which makes the tube operator coefficients s-independent.
  bool constant_invariants() const { return spec_.kind != CurveKind::Parametric; }

private:
  CurveSpec spec_;
  ArcLengthMap map_;
};

// Independent frame route: RK4 integration of the Frenet system
//   t' = kappa n,  n' = -kappa t + tau b,  b' = -tau n
// from frame_at(s_values.front()), re-orthonormalized after every step.
std::vector<FrameSample> propagate_frames(const Curve& curve,
                                          const std::vector<double>& s_values,
                                          double max_step = 1e-3);

std::vector<FrameSample> sample_frames(const Curve& curve, int n);

// CSV with header s,x,y,z,tx,ty,tz,nx,ny,nz,bx,by,bz,kappa,tau.
std::string frames_to_csv(const std::vector<FrameSample>& frames);

} // namespace geomq
