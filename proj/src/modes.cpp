#include "geomq/modes.hpp"

#include "geomq/io.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>

namespace geomq {

double double_factorial_odd(int n) {
  if (n <= 0) return 1.0;
  double p = 1.0;
  for (int k = n; k >= 1; k -= 2) p *= k;
  return p;
}

double SquareHarmonicMode::alpha() const { return std::sqrt(mass * w / hbar); }
double SquareHarmonicMode::eps() const { return 1.0 / alpha(); }

double SquareHarmonicMode::chi(double q2, double q3) const {
  const double a = alpha();
  return a / std::sqrt(M_PI) * std::exp(-0.5 * a * a * (q2 * q2 + q3 * q3));
}

double CircularMode::beta() const { return std::sqrt(mass * w / hbar); }

double CircularMode::amplitude() const {
  const int al = std::abs(l);
  return beta() / std::sqrt(M_PI * std::tgamma(al + 1.0));
}

double CircularMode::A_printed() const {
  const int al = std::abs(l);
  const double b = beta();
  return std::sqrt(std::pow(2.0, al + 1) * b /
                   (std::sqrt(M_PI) * double_factorial_odd(2 * al - 1)));
}

cplx CircularMode::chi(double q2, double q3) const {
  const double b = beta();
  const double rho2 = q2 * q2 + q3 * q3;
  const int al = std::abs(l);
  const cplx u = (l >= 0) ? cplx(q2, q3) : cplx(q2, -q3);
  cplx mono = 1.0;
  for (int k = 0; k < al; ++k) mono *= b * u;
  return amplitude() * mono * std::exp(-0.5 * b * b * rho2);
}

namespace {

// Dense complex polynomial in (q2, q3); coef(i, j) multiplies q2^i q3^j.
// States are P(q2,q3) * exp(-beta^2 (q2^2+q3^2)/2); derivatives act on the
// product, so d2 maps P -> dP/dq2 - beta^2 q2 P, and likewise for d3.
struct Poly2 {
  Eigen::MatrixXcd c;

  explicit Poly2(int deg) : c(Eigen::MatrixXcd::Zero(deg + 1, deg + 1)) {}

  Poly2 shifted(int di, int dj) const {
    Poly2 r(static_cast<int>(c.rows()) - 1 + std::max(di, dj));
    r.c.block(di, dj, c.rows(), c.cols()) = c;
    return r;
  }
};

Poly2 mul_q2(const Poly2& p) { return p.shifted(1, 0); }
Poly2 mul_q3(const Poly2& p) { return p.shifted(0, 1); }

Poly2 poly_diff(const Poly2& p, bool wrt_q2, double beta) {
  const int n = static_cast<int>(p.c.rows());
  Poly2 r(n); // one degree up from the Gaussian chain term
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx v = p.c(i, j);
      if (v == 0.0) continue;
      if (wrt_q2) {
        if (i > 0) r.c(i - 1, j) += static_cast<double>(i) * v;
        r.c(i + 1, j) -= beta * beta * v;
      } else {
        if (j > 0) r.c(i, j - 1) += static_cast<double>(j) * v;
        r.c(i, j + 1) -= beta * beta * v;
      }
    }
  return r;
}

// integral q^k exp(-beta^2 q^2) dq over the real line
double gauss_1d(int k, double beta) {
  if (k % 2 == 1) return 0.0;
  const int m = k / 2;
  return double_factorial_odd(2 * m - 1) / std::pow(2.0 * beta * beta, m) *
         std::sqrt(M_PI) / beta;
}

// integral conj(P) Q exp(-beta^2 rho^2) over the plane
cplx gauss_pair(const Poly2& bra, const Poly2& ket, double beta) {
  cplx acc = 0.0;
  for (int i = 0; i < bra.c.rows(); ++i)
    for (int j = 0; j < bra.c.cols(); ++j) {
      const cplx bv = std::conj(bra.c(i, j));
      if (bv == 0.0) continue;
      for (int k = 0; k < ket.c.rows(); ++k)
        for (int m = 0; m < ket.c.cols(); ++m) {
          const cplx kv = ket.c(k, m);
          if (kv == 0.0) continue;
          acc += bv * kv * gauss_1d(i + k, beta) * gauss_1d(j + m, beta);
        }
    }
  return acc;
}

Poly2 circular_poly(const CircularMode& mode) {
  const int al = std::abs(mode.l);
  const double b = mode.beta();
  Poly2 u(1);
  u.c(1, 0) = b;
  u.c(0, 1) = (mode.l >= 0) ? cplx(0.0, b) : cplx(0.0, -b);
  Poly2 p(0);
  p.c(0, 0) = mode.amplitude();
  for (int k = 0; k < al; ++k) {
    Poly2 next(static_cast<int>(p.c.rows()));
    for (int i = 0; i + 1 < next.c.rows(); ++i)
      for (int j = 0; j + 1 < next.c.cols(); ++j) {
        next.c(i + 1, j) += p.c(i, j) * u.c(1, 0);
        next.c(i, j + 1) += p.c(i, j) * u.c(0, 1);
      }
    p = next;
  }
  return p;
}

cplx moment_impl(const Poly2& state, double beta, int a, int b, int c, int d) {
  if (a < 0 || b < 0 || c < 0 || d < 0 || a + b + c + d > 6)
    throw ConfigError("moment order out of range: orders must be nonnegative "
                      "with a+b+c+d <= 6");
  Poly2 ket = state;
  for (int k = 0; k < d; ++k) ket = poly_diff(ket, false, beta);
  for (int k = 0; k < c; ++k) ket = poly_diff(ket, true, beta);
  for (int k = 0; k < b; ++k) ket = mul_q3(ket);
  for (int k = 0; k < a; ++k) ket = mul_q2(ket);
  return gauss_pair(state, ket, beta);
}

} // namespace

double moment(const SquareHarmonicMode& mode, int a, int b, int c, int d) {
  Poly2 p(0);
  p.c(0, 0) = mode.alpha() / std::sqrt(M_PI);
  return moment_impl(p, mode.alpha(), a, b, c, d).real();
}

cplx moment(const CircularMode& mode, int a, int b, int c, int d) {
  return moment_impl(circular_poly(mode), mode.beta(), a, b, c, d);
}

AngularElements angular_matrix_elements(const CircularMode& mode) {
  AngularElements out;
  // L_s = -i hbar (q2 d3 - q3 d2)
  out.L = -cplx(0.0, hbar) * (moment(mode, 1, 0, 0, 1) - moment(mode, 0, 1, 1, 0));
  // (q2 d3 - q3 d2)^2 = q2^2 d3^2 + q3^2 d2^2 - q2 d2 - q3 d3 - 2 q2 q3 d2 d3
  const cplx sq = moment(mode, 2, 0, 0, 2) + moment(mode, 0, 2, 2, 0) -
                  moment(mode, 1, 0, 1, 0) - moment(mode, 0, 1, 0, 1) -
                  2.0 * moment(mode, 1, 1, 1, 1);
  out.L2 = -hbar * hbar * sq;
  return out;
}

double radial_energy_raw(int l, double w, double mass, double rho_max, int n) {
  if (n < 8) throw ConfigError("radial grid needs at least 8 points");
  if (!(rho_max > 0.0)) throw ConfigError("radial domain size must be positive");
  const double h = rho_max / (n + 0.5);
  const double t = hbar * hbar / (2.0 * mass * h * h);
  Eigen::VectorXd diag(n), sub(n - 1);
  for (int j = 0; j < n; ++j) {
    const double rho = (j + 0.5) * h;
    const double face_in = j * h;
    const double face_out = (j + 1) * h;
    double v = hbar * hbar * l * l / (2.0 * mass * rho * rho) +
               0.5 * mass * w * w * rho * rho;
    diag(j) = t * (face_in + face_out) / rho + v;
    if (j + 1 < n) {
      const double rho_next = (j + 1.5) * h;
      sub(j) = -t * face_out / std::sqrt(rho * rho_next);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("radial eigensolve failed");
  return es.eigenvalues()(0);
}

double radial_energy_oracle(int l, double w, double mass, double rho_max, int n) {
  const double coarse = radial_energy_raw(l, w, mass, rho_max, n / 2);
  const double fine = radial_energy_raw(l, w, mass, rho_max, n);
  const double rel = std::abs(fine - coarse) / std::max(1e-300, std::abs(fine));
  if (rel > 1e-4) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "radial oracle not converged: relative change %.3e between "
                  "n=%d and n=%d grids",
                  rel, n / 2, n);
    throw NumericError(buf);
  }
  return fine;
}

double bessel_j_zero(int nu, int n) {
  if (nu < 0 || n < 1) throw ConfigError("bessel_j_zero needs nu >= 0, n >= 1");
  // McMahon expansion seeds the bracket; bisection finishes it off.
  const double b = (n + 0.5 * nu - 0.25) * M_PI;
  const double mu = 4.0 * nu * nu;
  double guess = b - (mu - 1.0) / (8.0 * b);
  const double dnu = static_cast<double>(nu);
  auto f = [dnu](double x) { return std::cyl_bessel_j(dnu, x); };
  double lo = guess - 0.5, hi = guess + 0.5;
  if (lo <= 0.0) lo = 0.5 * guess;
  int widen = 0;
  while (f(lo) * f(hi) > 0.0) {
    lo -= 0.25;
    hi += 0.25;
    if (lo <= 0.0) lo = 1e-8;
    if (++widen > 64) throw NumericError("bessel zero bracket not found");
  }
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fm;
    }
    if (hi - lo < 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

double HardWallMode::energy(int i, int j) const {
  if (shape == Shape::SquareBox) {
    if (i < 1 || j < 1) throw ConfigError("square box quantum numbers start at 1");
    // side 2*eps, levels pi^2 hbar^2 (i^2+j^2) / (2 m (2 eps)^2)
    const double k = M_PI / (2.0 * eps);
    return hbar * hbar * k * k * (i * i + j * j) / (2.0 * mass);
  }
  if (i < 1) throw ConfigError("disk radial index starts at 1");
  const double z = bessel_j_zero(std::abs(j), i);
  return hbar * hbar * z * z / (2.0 * mass * eps * eps);
}

double HardWallMode::ground_energy() const {
  return shape == Shape::SquareBox ? energy(1, 1) : energy(1, 0);
}

std::vector<ModeTableRow> mode_table(int l_max, double w, double mass,
                                     double rho_max, int n) {
  if (l_max < 0) throw ConfigError("l_max must be nonnegative");
  std::vector<ModeTableRow> rows;
  for (int l = 0; l <= l_max; ++l) {
    CircularMode m{l, w, mass};
    rows.push_back({l, w, m.energy_formula(),
                    radial_energy_oracle(l, w, mass, rho_max, n), m.A_printed()});
  }
  return rows;
}

std::string mode_table_to_csv(const std::vector<ModeTableRow>& rows) {
  std::string out = "l,w,E_paper,E_oracle,A_norm\n";
  for (const auto& r : rows) {
    out += std::to_string(r.l);
    out += ',';
    out += format_float(r.w);
    out += ',';
    out += format_float(r.E_paper);
    out += ',';
    out += format_float(r.E_oracle);
    out += ',';
    out += format_float(r.A_norm);
    out += '\n';
  }
  return out;
}

} // namespace geomq
