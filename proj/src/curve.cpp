#include "geomq/curve.hpp"

#include "geomq/io.hpp"

#include <algorithm>
#include <cmath>

namespace geomq {

CurveSpec CurveSpec::line() {
  CurveSpec s;
  s.kind = CurveKind::Line;
  s.t0 = 0;
  s.t1 = 1;
  return s;
}

CurveSpec CurveSpec::circle(double R) {
  if (!(R > 0)) throw ConfigError("circle: radius must be positive");
  CurveSpec s;
  s.kind = CurveKind::Circle;
  s.circle_R = R;
  s.t0 = 0;
  s.t1 = 2 * M_PI;
  return s;
}

CurveSpec CurveSpec::helix(double r, double c) {
  if (!(r > 0)) throw ConfigError("helix: radius must be positive");
  CurveSpec s;
  s.kind = CurveKind::Helix;
  s.helix_r = r;
  s.helix_c = c;
  s.t0 = 0;
  s.t1 = 2 * M_PI;
  return s;
}

CurveSpec CurveSpec::parametric(const std::string& x, const std::string& y,
                                const std::string& z, double t0, double t1) {
  if (!(t1 > t0)) throw ConfigError("parametric: need t1 > t0");
  CurveSpec s;
  s.kind = CurveKind::Parametric;
  s.x = Expression(x);
  s.y = Expression(y);
  s.z = Expression(z);
  s.t0 = t0;
  s.t1 = t1;
  return s;
}

CurveJet curve_jet(const CurveSpec& spec, double t) {
  CurveJet j;
  switch (spec.kind) {
    case CurveKind::Line:
      j.p = Vec3(t, 0, 0);
      j.d1 = Vec3(1, 0, 0);
      j.d2 = Vec3::Zero();
      j.d3 = Vec3::Zero();
      return j;
    case CurveKind::Circle: {
      const double R = spec.circle_R, ct = std::cos(t), st = std::sin(t);
      j.p = Vec3(R * ct, R * st, 0);
      j.d1 = Vec3(-R * st, R * ct, 0);
      j.d2 = Vec3(-R * ct, -R * st, 0);
      j.d3 = Vec3(R * st, -R * ct, 0);
      return j;
    }
    case CurveKind::Helix: {
      const double r = spec.helix_r, c = spec.helix_c;
      const double ct = std::cos(t), st = std::sin(t);
      j.p = Vec3(r * ct, r * st, c * t);
      j.d1 = Vec3(-r * st, r * ct, c);
      j.d2 = Vec3(-r * ct, -r * st, 0);
      j.d3 = Vec3(r * st, -r * ct, 0);
      return j;
    }
    case CurveKind::Parametric: {
      const Jet3 jx = spec.x.eval_jet(t);
      const Jet3 jy = spec.y.eval_jet(t);
      const Jet3 jz = spec.z.eval_jet(t);
      j.p = Vec3(jx.value(), jy.value(), jz.value());
      j.d1 = Vec3(jx.d1(), jy.d1(), jz.d1());
      j.d2 = Vec3(jx.d2(), jy.d2(), jz.d2());
      j.d3 = Vec3(jx.d3(), jy.d3(), jz.d3());
      return j;
    }
  }
  throw NumericError("curve_jet: bad kind");
}

// ---------------------------------------------------------------------------

double ArcLengthMap::s_of_t(double t) const {
  if (analytic_) return v0_ * (t - t0_);
  auto it = std::upper_bound(kt_.begin(), kt_.end(), t);
  int i = std::clamp<int>(int(it - kt_.begin()) - 1, 0, int(kt_.size()) - 2);
  const double h = kt_[i + 1] - kt_[i];
  const double u = (t - kt_[i]) / h;
  const double s0 = ks_[i], s1 = ks_[i + 1], v0 = kv_[i] * h, v1 = kv_[i + 1] * h;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * s0 + (u3 - 2 * u2 + u) * v0 +
         (-2 * u3 + 3 * u2) * s1 + (u3 - u2) * v1;
}

int ArcLengthMap::bracket(double s) const {
  auto it = std::upper_bound(ks_.begin(), ks_.end(), s);
  return std::clamp<int>(int(it - ks_.begin()) - 1, 0, int(ks_.size()) - 2);
}

double ArcLengthMap::t_of_s(double s) const {
  const double slack = 1e-9 * std::max(1.0, length_);
  if (s < -slack || s > length_ + slack)
    throw ConfigError("arc length " + std::to_string(s) +
                      " outside [0, " + std::to_string(length_) + "]");
  s = std::clamp(s, 0.0, length_);
  if (analytic_) return t0_ + s / v0_;
  const int i = bracket(s);
  double lo = kt_[i], hi = kt_[i + 1];
  double t = lo + (hi - lo) * (s - ks_[i]) / (ks_[i + 1] - ks_[i]);
  // Newton on the Hermite interpolant with bisection safeguard.
  for (int it = 0; it < 60; ++it) {
    const double g = s_of_t(t) - s;
    if (g > 0)
      hi = t;
    else
      lo = t;
    const double v = speed_at_t(t);
    double tn = t - g / v;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (std::abs(tn - t) < 1e-15 * (1.0 + std::abs(t))) return tn;
    t = tn;
  }
  return t;
}

double ArcLengthMap::speed_at_t(double t) const {
  if (analytic_) return v0_;
  auto it = std::upper_bound(kt_.begin(), kt_.end(), t);
  int i = std::clamp<int>(int(it - kt_.begin()) - 1, 0, int(kt_.size()) - 2);
  const double u = (t - kt_[i]) / (kt_[i + 1] - kt_[i]);
  return kv_[i] * (1 - u) + kv_[i + 1] * u;
}

namespace {

double speed_of(const CurveSpec& spec, double t) {
  return curve_jet(spec, t).d1.norm();
}

struct Panel {
  double a, b, fa, fm, fb, integral;
};

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

} // namespace

ArcLengthMap reparametrize_arclength(const CurveSpec& spec, double tol) {
  ArcLengthMap map;
  map.t0_ = spec.t0;
  map.t1_ = spec.t1;
  if (spec.kind != CurveKind::Parametric) {
    map.analytic_ = true;
    switch (spec.kind) {
      case CurveKind::Line: map.v0_ = 1.0; break;
      case CurveKind::Circle: map.v0_ = spec.circle_R; break;
      case CurveKind::Helix:
        map.v0_ = std::hypot(spec.helix_r, spec.helix_c);
        break;
      default: break;
    }
    map.length_ = map.v0_ * (spec.t1 - spec.t0);
    return map;
  }

  // Adaptive Simpson with a depth floor: panels are split until both the
  // local quadrature error and a maximum-width bound are met, so the Hermite
  // interpolant built on the panel ends stays accurate for inversion.
  const double range = spec.t1 - spec.t0;
  const double max_width = range / 256.0;
  auto check = [&](double t, double v) {
    if (!(v > 1e-12))
      throw ConfigError("degenerate curve: |r'(t)| vanishes near t = " +
                        std::to_string(t));
    if (!std::isfinite(v))
      throw NumericError("curve speed not finite at t = " + std::to_string(t));
  };

  std::vector<Panel> done;
  std::vector<Panel> work;
  {
    double fa = speed_of(spec, spec.t0);
    double fb = speed_of(spec, spec.t1);
    double fm = speed_of(spec, 0.5 * (spec.t0 + spec.t1));
    check(spec.t0, fa);
    check(spec.t1, fb);
    work.push_back({spec.t0, spec.t1, fa, fm, fb,
                    simpson(spec.t0, spec.t1, fa, fm, fb)});
  }
  while (!work.empty()) {
    Panel p = work.back();
    work.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const double fl = speed_of(spec, 0.5 * (p.a + m));
    const double fr = speed_of(spec, 0.5 * (m + p.b));
    check(0.5 * (p.a + m), fl);
    check(m, p.fm);
    check(0.5 * (m + p.b), fr);
    const double left = simpson(p.a, m, p.fa, fl, p.fm);
    const double right = simpson(m, p.b, p.fm, fr, p.fb);
    const double err = (left + right - p.integral) / 15.0;
    const double local_tol = tol * (p.b - p.a) / range;
    if ((std::abs(err) <= local_tol && (p.b - p.a) <= max_width) ||
        (p.b - p.a) < 1e-12 * range) {
      done.push_back({p.a, p.b, p.fa, p.fm, p.fb, left + right + err});
    } else {
      work.push_back({m, p.b, p.fm, fr, p.fb, right});
      work.push_back({p.a, m, p.fa, fl, p.fm, left});
    }
  }
  std::sort(done.begin(), done.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });

  map.kt_.reserve(2 * done.size() + 1);
  map.ks_.reserve(2 * done.size() + 1);
  map.kv_.reserve(2 * done.size() + 1);
  double s = 0;
  map.kt_.push_back(done.front().a);
  map.ks_.push_back(0.0);
  map.kv_.push_back(done.front().fa);
  for (const Panel& p : done) {
    const double m = 0.5 * (p.a + p.b);
    // split the panel integral at its midpoint with one more Simpson pass
    const double fl = speed_of(spec, 0.5 * (p.a + m));
    const double fr = speed_of(spec, 0.5 * (m + p.b));
    const double left = simpson(p.a, m, p.fa, fl, p.fm);
    map.kt_.push_back(m);
    map.ks_.push_back(s + left);
    map.kv_.push_back(p.fm);
    s += p.integral;
    map.kt_.push_back(p.b);
    map.ks_.push_back(s);
    map.kv_.push_back(p.fb);
  }
  map.length_ = s;
  if (!(map.length_ > 0)) throw ConfigError("degenerate curve: zero length");
  return map;
}

// ---------------------------------------------------------------------------

Curve::Curve(CurveSpec spec, double tol)
    : spec_(std::move(spec)), map_(reparametrize_arclength(spec_, tol)) {}

Vec3 Curve::position_at(double s) const {
  if (spec_.kind == CurveKind::Parametric)
    return curve_jet(spec_, map_.t_of_s(s)).p;
  return curve_jet(spec_, spec_.t0 + s / map_.speed_at_t(0)).p;
}

namespace {

FrameSample frame_from_jet(const CurveJet& j, double s) {
  FrameSample f;
  f.s = s;
  f.position = j.p;
  const double v = j.d1.norm();
  const Vec3 cross = j.d1.cross(j.d2);
  const double cn = cross.norm();
  f.kappa = cn / (v * v * v);
  if (f.kappa < 1e-10)
    throw NumericError("frame undefined: curvature below 1e-10 at s = " +
                       std::to_string(s));
  f.t = j.d1 / v;
  f.b = cross / cn;
  f.n = f.b.cross(f.t);
  f.tau = cross.dot(j.d3) / (cn * cn);
  return f;
}

} // namespace

FrameSample Curve::frame_at(double s) const {
  FrameSample f;
  f.s = s;
  switch (spec_.kind) {
    case CurveKind::Line:
      f.position = Vec3(s, 0, 0);
      return f; // constant conventional frame, kappa = tau = 0
    case CurveKind::Circle: {
      const double R = spec_.circle_R, a = s / R;
      const double ca = std::cos(a), sa = std::sin(a);
      f.position = Vec3(R * ca, R * sa, 0);
      f.t = Vec3(-sa, ca, 0);
      f.n = Vec3(-ca, -sa, 0);
      f.b = Vec3(0, 0, 1);
      f.kappa = 1.0 / R;
      f.tau = 0.0;
      return f;
    }
    case CurveKind::Helix: {
      const double r = spec_.helix_r, c = spec_.helix_c;
      const double L = std::hypot(r, c), a = s / L;
      const double ca = std::cos(a), sa = std::sin(a);
      f.position = Vec3(r * ca, r * sa, c * a);
      f.t = Vec3(-(r / L) * sa, (r / L) * ca, c / L);
      f.n = Vec3(-ca, -sa, 0);
      f.b = Vec3((c / L) * sa, -(c / L) * ca, r / L);
      f.kappa = r / (L * L);
      f.tau = c / (L * L);
      return f;
    }
    case CurveKind::Parametric:
      return frame_from_jet(curve_jet(spec_, map_.t_of_s(s)), s);
  }
  throw NumericError("frame_at: bad kind");
}

void Curve::kappa_tau_at(double s, double& kappa, double& tau) const {
  const FrameSample f = frame_at(s);
  kappa = f.kappa;
  tau = f.tau;
}

// ---------------------------------------------------------------------------

namespace {

struct FrameState {
  Vec3 t, n, b;
};

FrameState frenet_rhs(const FrameState& y, double kappa, double tau) {
  return {kappa * y.n, -kappa * y.t + tau * y.b, -tau * y.n};
}

FrameState axpy(const FrameState& y, double a, const FrameState& d) {
  return {y.t + a * d.t, y.n + a * d.n, y.b + a * d.b};
}

void gram_schmidt(FrameState& y) {
  y.t.normalize();
  y.n -= y.n.dot(y.t) * y.t;
  y.n.normalize();
  y.b = y.t.cross(y.n);
}

} // namespace

std::vector<FrameSample> propagate_frames(const Curve& curve,
                                          const std::vector<double>& s_values,
                                          double max_step) {
  if (s_values.size() < 2)
    throw ConfigError("propagate_frames: need at least two arc lengths");
  std::vector<FrameSample> out;
  out.reserve(s_values.size());
  FrameSample first = curve.frame_at(s_values.front());
  out.push_back(first);
  FrameState y{first.t, first.n, first.b};

  auto kt = [&](double s, double& k, double& t) { curve.kappa_tau_at(s, k, t); };

  for (size_t i = 1; i < s_values.size(); ++i) {
    const double s0 = s_values[i - 1], s1 = s_values[i];
    const int nstep = std::max(1, (int)std::ceil(std::abs(s1 - s0) / max_step));
    const double h = (s1 - s0) / nstep;
    double s = s0;
    for (int j = 0; j < nstep; ++j) {
      double ka, ta, kb, tb, kc, tc;
      kt(s, ka, ta);
      kt(s + 0.5 * h, kb, tb);
      kt(s + h, kc, tc);
      const FrameState k1 = frenet_rhs(y, ka, ta);
      const FrameState k2 = frenet_rhs(axpy(y, 0.5 * h, k1), kb, tb);
      const FrameState k3 = frenet_rhs(axpy(y, 0.5 * h, k2), kb, tb);
      const FrameState k4 = frenet_rhs(axpy(y, h, k3), kc, tc);
      y.t += h / 6.0 * (k1.t + 2 * k2.t + 2 * k3.t + k4.t);
      y.n += h / 6.0 * (k1.n + 2 * k2.n + 2 * k3.n + k4.n);
      y.b += h / 6.0 * (k1.b + 2 * k2.b + 2 * k3.b + k4.b);
      gram_schmidt(y);
      s += h;
    }
    FrameSample f;
    f.s = s1;
    f.position = curve.position_at(s1);
    f.t = y.t;
    f.n = y.n;
    f.b = y.b;
    curve.kappa_tau_at(s1, f.kappa, f.tau);
    out.push_back(f);
  }
  return out;
}

std::vector<FrameSample> sample_frames(const Curve& curve, int n) {
  if (n < 2) throw ConfigError("sample_frames: need n >= 2");
  std::vector<FrameSample> out;
  out.reserve(n);
  const double L = curve.length();
  for (int i = 0; i < n; ++i) out.push_back(curve.frame_at(L * i / (n - 1)));
  return out;
}

std::string frames_to_csv(const std::vector<FrameSample>& frames) {
  std::string csv = "s,x,y,z,tx,ty,tz,nx,ny,nz,bx,by,bz,kappa,tau\n";
  for (const FrameSample& f : frames) {
    const double row[15] = {f.s,    f.position.x(), f.position.y(),
                            f.position.z(), f.t.x(), f.t.y(), f.t.z(),
                            f.n.x(), f.n.y(), f.n.z(), f.b.x(), f.b.y(),
                            f.b.z(), f.kappa, f.tau};
    for (int i = 0; i < 15; ++i) {
      csv += format_float(row[i]);
      csv += i == 14 ? '\n' : ',';
    }
  }
  return csv;
}

} // namespace geomq
