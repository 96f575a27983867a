// Acceptance gate: eleven end-to-end checks covering curve geometry, the
// transverse-mode layer, the 1D spectral solver, the 3D tube oracle, and the
// command-line tool.  Each check prints one [PASS]/[FAIL] line with its
// timing; every tolerance is pinned here in code.  Exits nonzero when any
// check fails.
//
// Usage: acceptance <path-to-geomq-binary>

#include "geomq/curve.hpp"
#include "geomq/effective.hpp"
#include "geomq/io.hpp"
#include "geomq/modes.hpp"
#include "geomq/spectrum1d.hpp"
#include "geomq/tube_oracle.hpp"
#include "test_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace geomq;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string cli_path;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Criterion {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// fine/coarse study pair; the grid difference feeds the systematic error bar
struct StudyPair {
  OracleResult fine, coarse;
  double value = 0, stat = 0, sys = 0, sigma = 0;
  bool valid = false;
  double seconds = 0;
};

StudyPair run_pair(StudyRequest req, const TubeGrid& fine_grid,
                   const TubeGrid& coarse_grid, bool use_tau) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyPair p;
  req.grid = fine_grid;
  p.fine = convergence_study(req);
  req.grid = coarse_grid;
  p.coarse = convergence_study(req);
  const double vf = use_tau ? p.fine.fit.c_tau : p.fine.fit.c_kappa;
  const double vc = use_tau ? p.coarse.fit.c_tau : p.coarse.fit.c_kappa;
  p.value = vf;
  p.stat = use_tau ? p.fine.fit.c_tau_err : p.fine.fit.c_kappa_err;
  p.sys = std::abs(vf - vc);
  p.sigma = std::hypot(p.stat, p.sys);
  p.valid = p.fine.fit.fit_valid && p.coarse.fit.fit_valid;
  p.seconds = elapsed_s(t0);
  return p;
}

EffectiveModel1D free_scalar_model() {
  EffectiveModel1D m;
  m.mass = 1.0;
  m.spin_dim = 1;
  return m;
}

// ---------------------------------------------------------------------------
// 1. curve geometry: invariants, frame transport, metric determinant
// ---------------------------------------------------------------------------
void criterion_1(Criterion& c) {
  const double tol_invariants = 1e-8;
  const double tol_drift_per_arc = 1e-9;
  const double tol_det = 1e-12;
  const double budget_s = 1.0;
  const auto t0 = std::chrono::steady_clock::now();

  Curve helix(CurveSpec::helix(3.0, 4.0));
  const double L = helix.length();
  double worst_inv = 0.0;
  for (double s : {0.0, 0.31 * L, 0.5 * L, 0.77 * L, L}) {
    double kap, tau;
    helix.kappa_tau_at(s, kap, tau);
    worst_inv = std::max(worst_inv, std::abs(kap - 0.12));
    worst_inv = std::max(worst_inv, std::abs(tau - 0.16));
  }
  c.require(worst_inv <= tol_invariants,
            fmt("helix invariants off by %.3e", worst_inv));

  // independent transport: RK4 of the frame equations across the full turn
  std::vector<double> s_values;
  for (int i = 0; i <= 32; ++i) s_values.push_back(L * i / 32.0);
  const auto transported = propagate_frames(helix, s_values);
  double worst_drift = 0.0;
  for (const auto& f : transported) {
    const FrameSample ref = helix.frame_at(f.s);
    const double err = std::max({(f.t - ref.t).cwiseAbs().maxCoeff(),
                                 (f.n - ref.n).cwiseAbs().maxCoeff(),
                                 (f.b - ref.b).cwiseAbs().maxCoeff()});
    worst_drift = std::max(worst_drift, err);
  }
  c.require(worst_drift / L <= tol_drift_per_arc,
            fmt("frame drift %.3e per unit arc", worst_drift / L));

  // metric determinant: with R = r + q2 n + q3 b the Jacobian columns are
  // dR/ds = (1 - kappa q2) t - tau q3 n + tau q2 b, dR/dq2 = n, dR/dq3 = b,
  // so det(J^T J) must collapse to (1 - kappa q2)^2 for any frame that is
  // genuinely orthonormal and Frenet
  double worst_det = 0.0;
  std::mt19937 rng(20250817u);
  std::uniform_real_distribution<double> us(0.0, L), uq(-0.5, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = us(rng), q2 = uq(rng), q3 = uq(rng);
    const FrameSample f = helix.frame_at(s);
    Eigen::Matrix3d jac;
    jac.col(0) =
        (1.0 - f.kappa * q2) * f.t - f.tau * q3 * f.n + f.tau * q2 * f.b;
    jac.col(1) = f.n;
    jac.col(2) = f.b;
    const double det = (jac.transpose() * jac).determinant();
    const double expect = (1.0 - f.kappa * q2) * (1.0 - f.kappa * q2);
    worst_det = std::max(worst_det, std::abs(det - expect));
  }
  c.require(worst_det <= tol_det,
            fmt("det G deviates from (1-kappa q2)^2 by %.3e", worst_det));

  const double dt = elapsed_s(t0);
  c.require(dt < budget_s, fmt("geometry checks took %.2f s (budget %.0f s)",
                               dt, budget_s));
  c.note(fmt("invariants %.1e, drift/arc %.1e, |det G - (1-kappa q2)^2| %.1e",
             worst_inv, worst_drift / L, worst_det));
}

// ---------------------------------------------------------------------------
// 2. transverse modes: normalization and the radial energy oracle
// ---------------------------------------------------------------------------
void criterion_2(Criterion& c) {
  const double tol_norm = 1e-10;
  const double tol_oracle = 1e-4; // relative
  const double budget_s = 10.0;
  const auto t0 = std::chrono::steady_clock::now();

  const double w = 1.0, mass = 1.0;
  double worst_norm = 0.0;
  for (int l = 0; l <= 5; ++l) {
    CircularMode mode{l, w, mass};
    // |chi|^2 is angle independent, so the plane integral collapses to the
    // radial line at theta = 0
    const double norm =
        2.0 * kPi *
        testutil::simpson(
            [&](double rho) { return std::norm(mode.chi(rho, 0.0)) * rho; },
            0.0, 14.0 / mode.beta(), 6000);
    worst_norm = std::max(worst_norm, std::abs(norm - 1.0));
  }
  c.require(worst_norm <= tol_norm,
            fmt("mode normalization off by %.3e", worst_norm));

  double worst_rel = 0.0;
  for (int l = 0; l <= 3; ++l) {
    const double expect = (std::abs(l) + 1.0) * hbar * w;
    const double got = radial_energy_oracle(l, w, mass, 8.0, 2048);
    worst_rel = std::max(worst_rel, std::abs(got - expect) / expect);
  }
  c.require(worst_rel <= tol_oracle,
            fmt("radial oracle off by %.3e relative", worst_rel));

  // the printed transverse energies disagree with the radial oracle for
  // every l; the table records that discrepancy without failing on it
  c.note("l   E_formula      E_oracle   (hbar w units)");
  for (const auto& row : mode_table(3, w, mass, 8.0, 2048)) {
    c.note(fmt("%d   %+9.4f     %+9.6f", row.l, row.E_paper, row.E_oracle));
    const double expect_formula = (2.0 * row.l * row.l - 0.5) * hbar * w;
    c.require(row.E_paper == expect_formula,
              "table must print the formula value verbatim");
  }
  c.note("the quoted closed form and the FD oracle agree for no l; the"
         " oracle follows (|l|+1) hbar w");

  const double dt = elapsed_s(t0);
  c.require(dt < budget_s,
            fmt("mode checks took %.2f s (budget %.0f s)", dt, budget_s));
}

// ---------------------------------------------------------------------------
// 3. moment engine: the mixed first-derivative combination equals -1/2
// ---------------------------------------------------------------------------
void criterion_3(Criterion& c) {
  const double tol_analytic = 1e-13;
  const double tol_quadrature = 1e-10;

  double worst_analytic = 0.0;
  for (double w : {0.8, 1.0, 2.9}) {
    SquareHarmonicMode mode{w, 1.0};
    const double combo = moment(mode, 1, 0, 1, 0) + moment(mode, 0, 1, 0, 1) +
                         2.0 * moment(mode, 1, 1, 1, 1);
    worst_analytic = std::max(worst_analytic, std::abs(combo + 0.5));
  }
  c.require(worst_analytic <= tol_analytic,
            fmt("analytic moment combination off by %.3e", worst_analytic));

  // independent Simpson quadrature of the same expectation value, using the
  // closed-form Gaussian derivatives
  SquareHarmonicMode mode{1.37, 1.0};
  const double a = mode.alpha();
  const double span = 9.0 / a;
  const double quad = testutil::simpson2d(
      [&](double q2, double q3) {
        const double chi = mode.chi(q2, q3);
        const double d2 = -a * a * q2 * chi;
        const double d3 = -a * a * q3 * chi;
        const double d23 = a * a * a * a * q2 * q3 * chi;
        return chi * (q2 * d2 + q3 * d3 + 2.0 * q2 * q3 * d23);
      },
      -span, span, -span, span, 600, 600);
  c.require(std::abs(quad + 0.5) <= tol_quadrature,
            fmt("quadrature moment combination off by %.3e",
                std::abs(quad + 0.5)));
  c.note(fmt("analytic %.1e, quadrature %.1e from -1/2", worst_analytic,
             std::abs(quad + 0.5)));
}

// ---------------------------------------------------------------------------
// 4. 1D solver: FD convergence order, free-ring spectrum, helix dispersion
// ---------------------------------------------------------------------------
void criterion_4(Criterion& c) {
  const double order_lo = 1.9, order_hi = 2.1;
  const double tol_ring = 1e-9;
  const double tol_dispersion = 1e-6;

  // (a) convergence order on a smooth periodic potential
  EffectiveModel1D m = free_scalar_model();
  m.V = [](double s) {
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = 0.4 * std::cos(s);
    return v;
  };
  Grid1D g;
  g.length = 2.0 * kPi;
  g.boundary = BoundaryKind::Periodic;
  SolveOptions opt;
  opt.k_lowest = 3;
  opt.dense_cutoff = 256;
  opt.tol = 1e-10;
  auto ground = [&](int n) {
    Grid1D gg = g;
    gg.n = n;
    SolveOptions oo = opt;
    if (n > 1024) oo.tol = 1e-8; // residual floor grows with the matrix norm
    return solve_fd(m, gg, oo).energies(0);
  };
  const double ref = ground(3840);
  const double e1 = std::abs(ground(240) - ref);
  const double e2 = std::abs(ground(480) - ref);
  const double order = std::log2(e1 / e2);
  c.require(order > order_lo && order < order_hi,
            fmt("FD order %.3f outside [%.1f, %.1f]", order, order_lo,
                order_hi));

  // (b) free particle on a ring of length 2 pi at n = 4096
  EffectiveModel1D free_m = free_scalar_model();
  Grid1D gr;
  gr.length = 2.0 * kPi;
  gr.n = 4096;
  gr.boundary = BoundaryKind::Periodic;
  SolveOptions ro;
  ro.k_lowest = 5;
  ro.richardson = true;
  ro.tol = 1e-8;
  const Eigenpairs ring = solve_fd(free_m, gr, ro);
  const double expect[5] = {0.0, 0.5, 0.5, 2.0, 2.0};
  double worst_ring = 0.0;
  for (int i = 0; i < 5; ++i)
    worst_ring = std::max(worst_ring, std::abs(ring.energies(i) - expect[i]));
  c.require(worst_ring <= tol_ring,
            fmt("free-ring levels off by %.3e", worst_ring));

  // (c) helix doublet bands against the closed-form dispersion
  Curve helix(CurveSpec::helix(3.0, 4.0));
  const double L = helix.length();
  const int l = 1, n_k = 5, n_bands = 4;
  const EffectiveModel1D circ = build_spinless_circular(helix, l);
  HelixDispersionParams par;
  par.l = l;
  SolveOptions bo;
  bo.k_lowest = n_bands + 2;
  const BandStructure bands =
      bloch_bands(circ, L, n_k, 1536, n_bands, bo, SpinorPhase::Periodic);
  double worst_band = 0.0;
  for (int jk = 0; jk < n_k; ++jk) {
    const double k = bands.k[jk];
    std::vector<double> folded;
    for (int j = -3; j <= 3; ++j) {
      const double p = k + 2.0 * kPi * j / L;
      folded.push_back(
          helix_dispersion(helix, HelixCase::SpinlessCircular, par, {p})[0]
              .E_plus);
    }
    std::sort(folded.begin(), folded.end());
    std::vector<double> got;
    for (int b = 0; b < n_bands; ++b) got.push_back(bands.energies(jk, b));
    std::sort(got.begin(), got.end());
    for (int b = 0; b < 2; ++b)
      worst_band = std::max(worst_band, std::abs(got[b] - folded[b]));
  }
  c.require(worst_band <= tol_dispersion,
            fmt("bands deviate from the dispersion by %.3e", worst_band));
  c.note(fmt("order %.3f, ring %.1e, bands vs dispersion %.1e", order,
             worst_ring, worst_band));
}

// ---------------------------------------------------------------------------
// 5. gauge structure of the lattice: flux quantum and exact translation
// ---------------------------------------------------------------------------
void criterion_5(Criterion& c) {
  const double tol_flux = 1e-9;
  const double tol_translate = 1e-12;

  const double L = 5.0;
  EffectiveModel1D m = free_scalar_model();
  m.V = [L](double s) {
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = 0.2 * std::cos(2.0 * kPi * s / L);
    return v;
  };
  EffectiveModel1D flux = m;
  flux.A = [L](double) { return 2.0 * kPi * hbar / L; };
  Grid1D g;
  g.length = L;
  g.n = 256;
  g.boundary = BoundaryKind::Periodic;
  SolveOptions opt;
  opt.k_lowest = 5;
  const Eigenpairs ea = solve_fd(m, g, opt);
  const Eigenpairs eb = solve_fd(flux, g, opt);
  double worst_flux = 0.0;
  for (int i = 0; i < 5; ++i)
    worst_flux = std::max(worst_flux, std::abs(ea.energies(i) - eb.energies(i)));
  c.require(worst_flux <= tol_flux,
            fmt("one flux quantum shifts the ring spectrum by %.3e",
                worst_flux));

  const double a = 0.37;
  EffectiveModel1D base = free_scalar_model();
  base.V = [](double s) {
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = 0.3 * std::sin(s);
    return v;
  };
  EffectiveModel1D shifted = base;
  shifted.A = [a](double) { return a; };
  Grid1D gb;
  gb.length = 2.0 * kPi;
  gb.n = 128;
  gb.boundary = BoundaryKind::Bloch;
  SolveOptions ob;
  ob.k_lowest = 4;
  double worst_translate = 0.0;
  for (double k : {0.05, 0.21, -0.33}) {
    Grid1D ga = gb, gz = gb;
    ga.bloch_k = k;
    gz.bloch_k = k - a / hbar;
    const Eigenpairs va = solve_fd(shifted, ga, ob);
    const Eigenpairs vz = solve_fd(base, gz, ob);
    for (int i = 0; i < 4; ++i)
      worst_translate =
          std::max(worst_translate, std::abs(va.energies(i) - vz.energies(i)));
  }
  c.require(worst_translate <= tol_translate,
            fmt("constant-A Bloch translation broken at %.3e",
                worst_translate));
  c.note(fmt("flux quantum %.1e, Bloch translation %.1e", worst_flux,
             worst_translate));
}

// ---------------------------------------------------------------------------
// 6. circle tube: curvature coefficient from both cross-section oracles
// ---------------------------------------------------------------------------
void criterion_6(Criterion& c) {
  const double c_expect = -hbar * hbar / 8.0; // mass = 1
  const double tol_rel = 0.02;
  const double budget_per_study_s = 600.0;
  const TubeGrid fine{8, 26, 18}, coarse{8, 18, 12};

  StudyRequest req;
  req.curve = CurveSpec::circle(1.0);
  req.eps = {0.1, 0.07, 0.05};
  for (int j = -4; j <= 4; ++j) req.k_list.push_back(0.1 * j);
  req.n_states = 1;
  req.tol = 1e-8;

  c.note("grids stay far inside the 64x32x32 / 1e6-unknown caps: fine is"
         " 8x26x18 = 3744 unknowns");

  StudyPair disk, square;
  for (int pass = 0; pass < 2; ++pass) {
    StudyPair& p = pass == 0 ? disk : square;
    req.cross_section = pass == 0 ? TubeCrossSection::DiskHardWall
                                  : TubeCrossSection::SquareHardWall;
    p = run_pair(req, fine, coarse, /*use_tau=*/false);
    const char* name = pass == 0 ? "disk" : "square";
    c.require(p.valid, fmt("%s study fit invalid or non-monotone", name));
    const double rel = std::abs(p.value - c_expect) / std::abs(c_expect);
    c.require(rel <= tol_rel,
              fmt("%s c_kappa = %.8f is %.2f%% from -1/8", name, p.value,
                  100.0 * rel));
    c.require(p.seconds < 2.0 * budget_per_study_s,
              fmt("%s pair took %.0f s (budget %.0f s per study)", name,
                  p.seconds, budget_per_study_s));
    c.note(fmt("%s: c_kappa = %.8f +- %.2e (stat %.1e, grid %.1e), %.1f s",
               name, p.value, p.sigma, p.stat, p.sys, p.seconds));
  }

  const double diff = std::abs(disk.value - square.value);
  const double sigma = std::hypot(disk.sigma, square.sigma);
  c.require(diff <= 2.0 * sigma,
            fmt("cross-section values differ by %.3e > 2 sigma = %.3e", diff,
                2.0 * sigma));
  c.note(fmt("cross-section difference %.3e vs 2 sigma = %.3e", diff,
             2.0 * sigma));
}

// ---------------------------------------------------------------------------
// 7. helix doublet: band minima sit at the gauge momenta +- l hbar tau
// ---------------------------------------------------------------------------
void criterion_7(Criterion& c) {
  const double k0_expect = 0.16; // l hbar tau on the {3,4} helix
  const double tol_rel = 0.05;
  const double budget_s = 1800.0;
  const auto t0 = std::chrono::steady_clock::now();

  StudyRequest req;
  req.curve = CurveSpec::helix(3.0, 4.0);
  req.cross_section = TubeCrossSection::DiskHardWall;
  req.eps = {0.2, 0.14, 0.1};
  for (int j = -4; j <= 4; ++j) req.k_list.push_back(0.08 * j);
  req.period = 10.0 * kPi / 256.0;
  req.grid = TubeGrid{8, 20, 20};
  req.branch = StudyRequest::Branch::Doublet;
  req.n_states = 3;
  req.tol = 1e-8;
  const OracleResult result = convergence_study(req);

  c.require(result.fit.doublet_resolved, "doublet branches not resolved");
  const GaugeShift plus = extract_gauge_shift(result, +1);
  const GaugeShift minus = extract_gauge_shift(result, -1);
  const double rel_plus = std::abs(plus.k0 - k0_expect) / k0_expect;
  const double rel_minus = std::abs(minus.k0 + k0_expect) / k0_expect;
  c.require(plus.ok && rel_plus <= tol_rel,
            fmt("k0(+) = %.5f is %.1f%% from +0.16", plus.k0,
                100.0 * rel_plus));
  c.require(minus.ok && rel_minus <= tol_rel,
            fmt("k0(-) = %.5f is %.1f%% from -0.16", minus.k0,
                100.0 * rel_minus));

  const double dt = elapsed_s(t0);
  c.require(dt < budget_s,
            fmt("doublet study took %.0f s (budget %.0f s)", dt, budget_s));
  c.note(fmt("k0 = %+.5f / %+.5f (target +-0.16, tolerance 5%%), %.1f s",
             plus.k0, minus.k0, dt));
}

// ---------------------------------------------------------------------------
// 8. torsion coefficient: square vs rotationally symmetric cross-sections
// ---------------------------------------------------------------------------
void criterion_8(Criterion& c) {
  const double sigma_budget = 0.1 * hbar * hbar / 4.0; // 10% of hbar^2/4m
  const double c_tau_square_claim = -hbar * hbar / 4.0;
  const double absence_floor = 0.01 * hbar * hbar / 4.0;

  StudyRequest req;
  req.curve = CurveSpec::helix(3.0, 4.0);
  req.eps = {0.2, 0.14, 0.1};
  for (int j = -4; j <= 4; ++j) req.k_list.push_back(0.05 * j);
  req.period = 10.0 * kPi / 256.0;
  req.n_states = 1;
  req.tol = 1e-8;

  req.cross_section = TubeCrossSection::SquareHardWall;
  const StudyPair square =
      run_pair(req, TubeGrid{8, 20, 20}, TubeGrid{8, 14, 14}, true);
  req.cross_section = TubeCrossSection::DiskHardWall;
  const StudyPair disk =
      run_pair(req, TubeGrid{8, 20, 14}, TubeGrid{8, 14, 10}, true);
  req.cross_section = TubeCrossSection::Harmonic;
  const StudyPair harm =
      run_pair(req, TubeGrid{8, 48, 14}, TubeGrid{8, 36, 10}, true);

  struct Named {
    const char* name;
    const StudyPair* p;
  };
  for (const Named& s : {Named{"square", &square}, Named{"disk", &disk},
                         Named{"harmonic", &harm}}) {
    c.require(s.p->valid, fmt("%s torsion fit invalid", s.name));
    c.require(s.p->sigma < sigma_budget,
              fmt("%s sigma %.4f exceeds the %.4f budget", s.name, s.p->sigma,
                  sigma_budget));
    c.note(fmt("%s: c_tau = %+.6f +- %.2e (stat %.1e, grid %.1e), %.1f s",
               s.name, s.p->value, s.p->sigma, s.p->stat, s.p->sys,
               s.p->seconds));
  }

  // verdicts; the square offset is real but repulsive, nowhere near the
  // attractive -hbar^2 tau^2 / 4m claim
  c.require(std::abs(square.value - c_tau_square_claim) > 2.0 * square.sigma,
            "square c_tau unexpectedly consistent with -hbar^2/4m");
  c.note(fmt("verdict(square): c_tau disagrees with -hbar^2/4m = %.2f by"
             " %.0f sigma",
             c_tau_square_claim,
             std::abs(square.value - c_tau_square_claim) / square.sigma));
  const double aniso = (kPi * kPi / 6.0 - 1.5) / 2.0;
  c.note(fmt("verdict(square): offset is repulsive, within %.1e of the"
             " anisotropy value (pi^2/6 - 3/2)/2 = %+.6f",
             std::abs(square.value - aniso), aniso));
  for (const Named& s : {Named{"disk", &disk}, Named{"harmonic", &harm}}) {
    const double gate = std::max(2.0 * s.p->sigma, absence_floor);
    c.require(std::abs(s.p->value) <= gate,
              fmt("%s c_tau = %+.6f not consistent with absence (gate %.4f)",
                  s.name, s.p->value, gate));
    c.note(fmt("verdict(%s): c_tau consistent with absence (|%.1e| <= %.1e)",
               s.name, s.p->value, gate));
  }
  c.note("verdict(adjudication): the rotationally symmetric harmonic tube"
         " also shows no torsion offset, so the square offset tracks"
         " cross-section anisotropy, not the confinement type");

  // the shipped compare pipeline must document the same two verdicts
  const std::string dir = testutil::tmp_path("acc8_");
  write_text_file(dir + "orc_sq.json", dump_json(oracle_to_json(square.fine)));
  write_text_file(dir + "orc_disk.json", dump_json(oracle_to_json(disk.fine)));
  auto eff = [&](const std::string& model, const std::string& extra,
                 const std::string& base) {
    return testutil::run_command(cli_path + " effective --model " + model +
                                 " --curve helix --r 3 --c 4 " + extra +
                                 " --output " + base);
  };
  c.require(eff("spinless-square", "", dir + "eff_sq").exit_code == 0,
            "effective model export (square) failed");
  c.require(eff("spinless-circular", "--l 0", dir + "eff_disk").exit_code == 0,
            "effective model export (disk) failed");

  struct Cmp {
    const char* name;
    bool want_pass;
  };
  for (const Cmp& cmp : {Cmp{"sq", false}, Cmp{"disk", true}}) {
    const std::string base = dir + std::string("cmp_") + cmp.name;
    const auto r = testutil::run_command(
        cli_path + " compare --effective " + dir + "eff_" + cmp.name +
        ".json --oracle " + dir + "orc_" + cmp.name + ".json --output " +
        base);
    c.require(r.exit_code == 0,
              fmt("compare (%s) exited %d", cmp.name, r.exit_code));
    json rep = json::parse(slurp(base + ".json"), nullptr, false);
    bool found = false;
    if (rep.is_object() && rep.contains("rows")) {
      for (const auto& row : rep["rows"]) {
        if (row.value("name", "") != "c_tau") continue;
        found = true;
        c.require(row.value("adjudicated", false),
                  fmt("compare (%s) c_tau row not adjudicated", cmp.name));
        c.require(row.value("pass", !cmp.want_pass) == cmp.want_pass,
                  fmt("compare (%s) c_tau verdict flipped", cmp.name));
        c.note(fmt("compare report (%s): c_tau predicted %+.4f, fitted"
                   " %+.6f -> %s",
                   cmp.name, row.value("predicted", 0.0),
                   row.value("fitted", 0.0),
                   row.value("pass", false) ? "agreement" : "disagreement"));
      }
    }
    c.require(found, fmt("compare (%s) report lacks a c_tau row", cmp.name));
  }
}

// ---------------------------------------------------------------------------
// 9. spin-orbit models: Hermiticity, verbatim residuals, dispersion terms
// ---------------------------------------------------------------------------
void criterion_9(Criterion& c) {
  const double tol_herm = 1e-10;
  const double tol_residual = 1e-12;
  const double tol_terms = 1e-12;

  Curve helix(CurveSpec::helix(3.0, 4.0));
  const double L = helix.length();
  const double kap = 0.12, tau = 0.16;
  const SOCParams soc{0.3, 0.2, -0.4};

  // (a) hermitized operators assemble to Hermitian matrices
  Grid1D g;
  g.length = L;
  g.n = 64;
  g.boundary = BoundaryKind::Bloch;
  g.bloch_k = 0.37;
  double worst_herm = 0.0;
  for (int which = 0; which < 2; ++which) {
    const EffectiveModel1D verbatim =
        which == 0 ? build_soc_square(helix, soc)
                   : build_soc_circular(helix, soc, 1);
    const EffectiveModel1D herm = hermitized(verbatim, 0.0, L);
    const Eigen::MatrixXcd h = assemble_dense(herm, g);
    worst_herm =
        std::max(worst_herm, (h - h.adjoint().eval()).cwiseAbs().maxCoeff());
  }
  c.require(worst_herm <= tol_herm,
            fmt("hermitized assembly deviates by %.3e", worst_herm));

  // (b) verbatim anti-Hermitian residuals, against Pauli-algebra closed forms
  HermitizeReport rep_sq, rep_circ;
  hermitized(build_soc_square(helix, soc), 0.0, L, 64, &rep_sq);
  hermitized(build_soc_circular(helix, soc, 1), 0.0, L, 64, &rep_circ);
  const double expect_sq =
      hbar * std::sqrt(0.25 * kap * kap * soc.alpha_b * soc.alpha_b +
                       0.25 * tau * tau * soc.alpha_n * soc.alpha_n +
                       std::pow(0.5 * tau * soc.alpha_b -
                                    0.5 * kap * soc.alpha_s,
                                2));
  const double bcoef = tau * soc.alpha_b / 4.0 - 3.0 * kap * soc.alpha_s / 8.0;
  const double expect_circ =
      hbar * std::sqrt(std::pow(kap * soc.alpha_b / 8.0, 2) +
                       std::pow(tau * soc.alpha_n / 4.0, 2) + bcoef * bcoef);
  c.require(rep_sq.max_antihermitian_V > 0.0 &&
                std::abs(rep_sq.max_antihermitian_V - expect_sq) <=
                    tol_residual,
            fmt("square verbatim residual %.6e vs closed form %.6e",
                rep_sq.max_antihermitian_V, expect_sq));
  c.require(rep_circ.max_antihermitian_V > 0.0 &&
                std::abs(rep_circ.max_antihermitian_V - expect_circ) <=
                    tol_residual,
            fmt("circular verbatim residual %.6e vs closed form %.6e",
                rep_circ.max_antihermitian_V, expect_circ));
  c.note(fmt("verbatim anti-Hermitian residuals (operator norm):"
             " square %.6e, circular %.6e",
             rep_sq.max_antihermitian_V, rep_circ.max_antihermitian_V));

  // (c) dispersion structure, term by term, at three parameter sets
  const SOCParams sets[3] = {{0.3, 0.0, 0.0}, {0.0, 0.25, 0.0},
                             {0.2, 0.15, 0.1}};
  std::vector<double> p_values;
  for (int i = -5; i <= 5; ++i) p_values.push_back(0.1 * i);
  double worst_term = 0.0, worst_im = 0.0;
  for (int l : {1, -1}) {
    HelixDispersionParams base_par;
    base_par.l = l;
    const auto base = helix_dispersion(helix, HelixCase::SpinlessCircular,
                                       base_par, p_values);
    // zero couplings collapse exactly onto the spinless doublet
    HelixDispersionParams zero = base_par;
    const auto soc0 = helix_dispersion(helix, HelixCase::Soc, zero, p_values);
    for (std::size_t i = 0; i < p_values.size(); ++i) {
      c.require(soc0[i].E_plus == base[i].E_plus &&
                    soc0[i].E_minus == base[i].E_minus &&
                    soc0[i].im_component == 0.0,
                "alpha = 0 must reduce exactly to the spinless dispersion");
    }
    for (const SOCParams& set : sets) {
      HelixDispersionParams par = base_par;
      par.soc = set;
      const auto disp = helix_dispersion(helix, HelixCase::Soc, par, p_values);
      for (std::size_t i = 0; i < p_values.size(); ++i) {
        const double p = p_values[i];
        // tangential coupling: rigid +-(hbar kappa alpha_s / 2) splitting
        // binormal coupling: 2 alpha_b (p -+ l hbar tau / 2), tilting bands
        const double dplus = 0.5 * hbar * kap * set.alpha_s +
                             2.0 * set.alpha_b * (p - l * hbar * tau / 2.0);
        const double dminus = -0.5 * hbar * kap * set.alpha_s +
                              2.0 * set.alpha_b * (p + l * hbar * tau / 2.0);
        worst_term = std::max(
            worst_term, std::abs(disp[i].E_plus - base[i].E_plus - dplus));
        worst_term = std::max(
            worst_term, std::abs(disp[i].E_minus - base[i].E_minus - dminus));
        // normal coupling only feeds the separately reported imaginary
        // component -hbar alpha_n tau / 2 and never the energies
        worst_im = std::max(worst_im,
                            std::abs(disp[i].im_component +
                                     0.5 * hbar * set.alpha_n * tau));
      }
    }
  }
  c.require(worst_term <= tol_terms,
            fmt("dispersion terms deviate by %.3e", worst_term));
  c.require(worst_im <= tol_terms,
            fmt("imaginary component off by %.3e", worst_im));
  c.note(fmt("Hermiticity %.1e, residuals match closed forms to %.0e,"
             " term identities %.1e",
             worst_herm, tol_residual, std::max(worst_term, worst_im)));
  c.note(fmt("reported imaginary component at alpha_n = 0.25:"
             " %+.6f (= -hbar alpha_n tau / 2)",
             -0.5 * hbar * 0.25 * tau));
}

// ---------------------------------------------------------------------------
// 10. reduction chain: switching couplings off reproduces the base models
// ---------------------------------------------------------------------------
void criterion_10(Criterion& c) {
  Curve helix(CurveSpec::helix(3.0, 4.0));
  const double L = helix.length();
  const SOCParams no_soc;
  const EMField no_em;

  const EffectiveModel1D base_sq = build_spinless_square(helix);
  const EffectiveModel1D base_circ = build_spinless_circular(helix, 1);
  const EffectiveModel1D soc_sq = build_soc_square(helix, no_soc);
  const EffectiveModel1D soc_circ = build_soc_circular(helix, no_soc, 1);
  const EffectiveModel1D chg_sq = build_charged_square(helix, no_em);
  const EffectiveModel1D chg_circ = build_charged_circular(helix, no_em, 1);

  bool exact = true;
  for (int i = 0; i < 64 && exact; ++i) {
    const double s = L * i / 64.0;
    const Eigen::MatrixXcd vsq = base_sq.V_at(s);
    const Eigen::MatrixXcd vcirc = base_circ.V_at(s);

    // spin-orbit at alpha = 0: scalar potential times the identity, W = 0
    const std::pair<const EffectiveModel1D*, const Eigen::MatrixXcd*> socs[] =
        {{&soc_sq, &vsq}, {&soc_circ, &vcirc}};
    for (const auto& [model, scalar] : socs) {
      const Eigen::MatrixXcd v = model->V_at(s);
      const Eigen::MatrixXcd w = model->W_at(s);
      for (int r = 0; r < 2; ++r)
        for (int q = 0; q < 2; ++q) {
          const cplx want = r == q ? (*scalar)(0, 0) : cplx(0.0);
          if (v(r, q) != want || w(r, q) != cplx(0.0)) exact = false;
        }
    }
    if (soc_sq.A_at(s) != base_sq.A_at(s)) exact = false;
    if (soc_circ.A_at(s) != base_circ.A_at(s)) exact = false;

    // charged at zero field: identical scalar coefficients
    if (chg_sq.V_at(s)(0, 0) != vsq(0, 0)) exact = false;
    if (chg_sq.A_at(s) != base_sq.A_at(s)) exact = false;
    if (chg_circ.V_at(s)(0, 0) != vcirc(0, 0)) exact = false;
    if (chg_circ.A_at(s) != base_circ.A_at(s)) exact = false;
  }
  c.require(exact, "a reduction failed exact (bitwise) coefficient equality");
  c.note("soc(alpha=0) and charged(field=0) equal the spinless models"
         " exactly at 64 sample points, square and circular");
}

// ---------------------------------------------------------------------------
// 11. determinism: identical CLI runs produce byte-identical files
// ---------------------------------------------------------------------------
void criterion_11(Criterion& c) {
  const std::string dir = testutil::tmp_path("acc11_");
  struct Job {
    const char* label;
    std::string args;
    const char* ext;
  };
  const Job jobs[] = {
      {"geometry CSV", " geometry --curve helix --r 3 --c 4 --n 64", ".csv"},
      {"effective JSON",
       " effective --model soc-circular --curve helix --r 3 --c 4 --l 1"
       " --alpha-s 0.2 --alpha-n 0.1 --n-samples 40",
       ".json"},
      {"bands CSV",
       " bands --model spinless-circular --curve helix --r 3 --c 4 --l 1"
       " --n-cell 96 --n-k 4 --n-bands 2 --period 0.4908738521234052"
       " --tol 1e-7",
       ".csv"},
      {"oracle JSON",
       " oracle --curve circle --R 1 --cross-section disk --eps 0.3 0.25 0.2"
       " --k -0.2 0 0.2 --n-s 6 --n-a 8 --n-b 8 --tol 1e-7 --n-states 1",
       ".json"},
  };
  int idx = 0;
  for (const Job& job : jobs) {
    const std::string b1 = dir + "a" + std::to_string(idx);
    const std::string b2 = dir + "b" + std::to_string(idx);
    ++idx;
    const auto r1 = testutil::run_command(cli_path + job.args + " --output " + b1);
    const auto r2 = testutil::run_command(cli_path + job.args + " --output " + b2);
    c.require(r1.exit_code == 0 && r2.exit_code == 0,
              fmt("%s run failed", job.label));
    const std::string f1 = slurp(b1 + job.ext);
    c.require(!f1.empty() && f1 == slurp(b2 + job.ext),
              fmt("%s reruns differ", job.label));
  }
  c.note("geometry, effective, bands, and oracle outputs are byte-stable");
}

} // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <geomq-binary>\n");
    return 2;
  }
  cli_path = argv[1];

  struct Entry {
    int id;
    const char* title;
    std::function<void(Criterion&)> run;
  };
  const std::vector<Entry> entries = {
      {1, "curve geometry, frame transport, metric determinant", criterion_1},
      {2, "transverse mode normalization and radial oracle", criterion_2},
      {3, "moment engine mixed-derivative identity", criterion_3},
      {4, "1D solver order, free ring, helix dispersion", criterion_4},
      {5, "gauge invariance on the lattice", criterion_5},
      {6, "circle tube curvature coefficient, both cross-sections",
       criterion_6},
      {7, "helix doublet gauge-shifted minima", criterion_7},
      {8, "torsion coefficient verdicts across cross-sections", criterion_8},
      {9, "spin-orbit Hermiticity and dispersion terms", criterion_9},
      {10, "zero-coupling reductions are exact", criterion_10},
      {11, "byte-identical CLI reruns", criterion_11},
  };

  int failed = 0;
  for (const Entry& e : entries) {
    Criterion crit;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.run(crit);
    } catch (const std::exception& ex) {
      crit.pass = false;
      crit.notes.push_back(std::string("FAILED: exception: ") + ex.what());
    }
    const double dt = elapsed_s(t0);
    std::printf("[%s] criterion %2d: %s (%.2f s)\n",
                crit.pass ? "PASS" : "FAIL", e.id, e.title, dt);
    for (const std::string& line : crit.notes)
      std::printf("        %s\n", line.c_str());
    std::fflush(stdout);
    if (!crit.pass) ++failed;
  }

  std::printf("acceptance: %d/11 criteria passed\n",
              int(entries.size()) - failed);
  return failed == 0 ? 0 : 1;
}
