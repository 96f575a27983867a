#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomq/curve.hpp"
#include "geomq/effective.hpp"

#include <cmath>
#include <random>

using namespace geomq;

static constexpr double kPi = 3.14159265358979323846;

TEST_CASE("helix invariants and length are the closed forms") {
  // r(t) = (r cos t, r sin t, c t): kappa = r/(r^2+c^2), tau = c/(r^2+c^2)
  Curve helix(CurveSpec::helix(3.0, 4.0));
  CHECK(helix.length() == doctest::Approx(2 * kPi * 5.0).epsilon(1e-12));
  double kappa, tau;
  for (double s : {0.0, 1.0, 7.3, 24.9}) {
    helix.kappa_tau_at(s, kappa, tau);
    CHECK(kappa == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(tau == doctest::Approx(0.16).epsilon(1e-12));
  }
  CHECK(helix.constant_invariants());
}

TEST_CASE("circle invariants") {
  Curve circle(CurveSpec::circle(2.0));
  CHECK(circle.length() == doctest::Approx(4 * kPi).epsilon(1e-12));
  double kappa, tau;
  circle.kappa_tau_at(1.0, kappa, tau);
  CHECK(kappa == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tau == doctest::Approx(0.0));
}

TEST_CASE("built-in line carries a conventional frame, flat parametric "
          "curves have none") {
  // the line is given the fixed (x, y, z) triad so tube grids can be built
  // on it; a parametric curve with vanishing curvature has no Frenet frame
  Curve line(CurveSpec::line());
  const FrameSample f = line.frame_at(0.5);
  CHECK(f.kappa == doctest::Approx(0.0));
  CHECK(f.t.cross(f.n).dot(f.b) == doctest::Approx(1.0).epsilon(1e-14));
  Curve flat(CurveSpec::parametric("t", "2*t", "0*t", 0.0, 1.0));
  CHECK_THROWS_AS(flat.frame_at(0.5), NumericError);
}

TEST_CASE("frames are right-handed orthonormal triads") {
  Curve helix(CurveSpec::helix(1.0, 0.3));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, helix.length());
  for (int i = 0; i < 50; ++i) {
    const FrameSample f = helix.frame_at(u(rng));
    CHECK(f.t.norm() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(f.n.norm() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(f.b.norm() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(f.t.dot(f.n)) < 1e-13);
    CHECK(std::abs(f.t.dot(f.b)) < 1e-13);
    CHECK(std::abs(f.n.dot(f.b)) < 1e-13);
    CHECK(f.t.cross(f.n).dot(f.b) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("frame derivatives satisfy the Frenet system") {
  // central differences of the closed-form frame against kappa n, etc.
  Curve helix(CurveSpec::helix(2.0, 1.0));
  const double h = 1e-5;
  for (double s : {0.7, 3.1, 9.2}) {
    const FrameSample f = helix.frame_at(s);
    const FrameSample fp = helix.frame_at(s + h);
    const FrameSample fm = helix.frame_at(s - h);
    const Vec3 dt = (fp.t - fm.t) / (2 * h);
    const Vec3 dn = (fp.n - fm.n) / (2 * h);
    const Vec3 db = (fp.b - fm.b) / (2 * h);
    CHECK((dt - f.kappa * f.n).norm() < 1e-9);
    CHECK((dn - (-f.kappa * f.t + f.tau * f.b)).norm() < 1e-9);
    CHECK((db + f.tau * f.n).norm() < 1e-9);
  }
}

TEST_CASE("integrated frame transport stays on the closed-form frame") {
  Curve helix(CurveSpec::helix(3.0, 4.0));
  std::vector<double> s;
  for (int i = 0; i <= 64; ++i) s.push_back(helix.length() * i / 64.0);
  const auto frames = propagate_frames(helix, s);
  double worst = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const FrameSample ref = helix.frame_at(s[i]);
    worst = std::max(worst, (frames[i].t - ref.t).norm());
    worst = std::max(worst, (frames[i].n - ref.n).norm());
    worst = std::max(worst, (frames[i].b - ref.b).norm());
  }
  // drift per unit arc length, over one full turn
  CHECK(worst / helix.length() < 1e-9);
}

TEST_CASE("parametric helix reproduces the built-in invariants") {
  CurveSpec spec = CurveSpec::parametric("3*cos(t)", "3*sin(t)", "4*t", 0.0,
                                         2 * kPi);
  Curve curve(spec);
  CHECK_FALSE(curve.constant_invariants());
  CHECK(curve.length() == doctest::Approx(10 * kPi).epsilon(1e-10));
  double kappa, tau;
  for (double s : {0.5, 8.0, 20.0}) {
    curve.kappa_tau_at(s, kappa, tau);
    CHECK(kappa == doctest::Approx(0.12).epsilon(1e-9));
    CHECK(tau == doctest::Approx(0.16).epsilon(1e-9));
  }
  // positions agree with the built-in at matched arc length
  Curve builtin(CurveSpec::helix(3.0, 4.0));
  for (double s : {0.0, 3.0, 14.0})
    CHECK((curve.position_at(s) - builtin.position_at(s)).norm() < 1e-9);
}

TEST_CASE("arc length map inverts itself") {
  Curve curve(CurveSpec::parametric("t", "sinh(t)", "0*t", -1.0, 2.0));
  const ArcLengthMap& map = curve.arclength();
  // |r'| = sqrt(1 + cosh^2 t) never vanishes; round-trip t -> s -> t
  for (double t : {-0.9, 0.0, 0.77, 1.9}) {
    const double s = map.s_of_t(t);
    CHECK(map.t_of_s(s) == doctest::Approx(t).epsilon(1e-10));
    // speed between knots is the Hermite-interpolant derivative, one
    // order coarser than the arc length itself
    CHECK(map.speed_at_t(t) ==
          doctest::Approx(std::sqrt(1 + std::cosh(t) * std::cosh(t)))
              .epsilon(1e-4));
  }
  // unit-speed property: |dr/ds| = 1 via a central difference
  const double h = 1e-6;
  for (double s : {0.4, 1.7}) {
    const Vec3 d =
        (curve.position_at(s + h) - curve.position_at(s - h)) / (2 * h);
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("vanishing speed is rejected") {
  // r'(t) = (2t, 3t^2, 0) vanishes at t = 0
  CHECK_THROWS_AS(Curve(CurveSpec::parametric("t^2", "t^3", "0*t", -1.0, 1.0)),
                  ConfigError);
}

TEST_CASE("frame sampling and CSV layout") {
  Curve helix(CurveSpec::helix(3.0, 4.0));
  const auto frames = sample_frames(helix, 16);
  CHECK(frames.size() == 16);
  CHECK(frames.front().s == doctest::Approx(0.0));
  const std::string csv = frames_to_csv(frames);
  CHECK(csv.rfind("s,x,y,z,tx,ty,tz,nx,ny,nz,bx,by,bz,kappa,tau\n", 0) == 0);
  // one header plus one line per sample
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}

TEST_CASE("curve spec JSON round trip") {
  for (const CurveSpec& spec :
       {CurveSpec::helix(3.0, 4.0), CurveSpec::circle(2.0), CurveSpec::line(),
        CurveSpec::parametric("t", "t^2", "0*t", 0.0, 1.0)}) {
    const CurveSpec back = curve_spec_from_json(curve_spec_to_json(spec));
    CHECK(back.kind == spec.kind);
    Curve a(spec), b(back);
    CHECK(a.length() == doctest::Approx(b.length()).epsilon(1e-14));
    CHECK((a.position_at(0.3 * a.length()) - b.position_at(0.3 * a.length()))
              .norm() < 1e-14);
  }
}
