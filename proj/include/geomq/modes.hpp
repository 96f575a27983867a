#pragma once

#include "geomq/types.hpp"

#include <vector>

namespace geomq {

// (2n-1)!! with the (-1)!! = 1 convention, so l = 0 formulas stay finite.
double double_factorial_odd(int n);

// Isotropic harmonic ground state of the normal-plane oscillator,
//   chi(q2, q3) = (alpha/sqrt(pi)) exp(-alpha^2 (q2^2+q3^2)/2),
// alpha = sqrt(m w / hbar).  Ground energy hbar*w (two zero points),
// confinement length eps = 1/alpha.
struct SquareHarmonicMode {
  double w;
  double mass = 1.0;

  double alpha() const;
  double eps() const;
  double ground_energy() const { return hbar * w; }
  double chi(double q2, double q3) const;
};

// Angular-momentum eigenstate of the same oscillator,
//   chi_l(rho, theta) = amplitude * (beta rho)^|l| e^{i l theta} e^{-beta^2 rho^2/2}.
// `amplitude` normalizes under the 2D measure rho drho dtheta; `A_printed`
// is the textbook radial constant sqrt(2^{|l|+1} beta / (sqrt(pi)(2|l|-1)!!)),
// which instead normalizes the radial profile under the plain drho measure.
// Both normalizations are quadrature-verified in the tests.
struct CircularMode {
  int l;
  double w;
  double mass = 1.0;

  double beta() const;
  double amplitude() const;
  double A_printed() const;
  // transverse energy claimed by the 2(l-1/2)(l+1/2) formula; compare with
  // radial_energy_oracle, which gives the standard (|l|+1) hbar w
  double energy_formula() const { return (2.0 * l * l - 0.5) * hbar * w; }
  cplx chi(double q2, double q3) const;
};

// <chi| q2^a q3^b d2^c d3^d |chi>, evaluated analytically by polynomial
// algebra over the Gaussian weight (moment recurrences).  Orders are capped
// at a+b+c+d <= 6.
double moment(const SquareHarmonicMode& mode, int a, int b, int c, int d);
cplx moment(const CircularMode& mode, int a, int b, int c, int d);

struct AngularElements {
  cplx L;  // <L_s> with L_s = -i hbar (q2 d3 - q3 d2)
  cplx L2; // <L_s^2>
};
AngularElements angular_matrix_elements(const CircularMode& mode);

// Lowest eigenvalue of the radial operator
//   -(hbar^2/2m) (1/rho) d/dρ (rho d/dρ) + hbar^2 l^2/(2 m rho^2) + m w^2 rho^2/2
// on a staggered grid (nodes at (j+1/2)h, Dirichlet wall on the ghost node,
// natural zero-flux face at the axis).  Single-grid value, O(h^2).
double radial_energy_raw(int l, double w, double mass, double rho_max, int n);

// Two-grid version: solves n/2 and n, returns the fine value after checking
// the relative change is below 1e-4 (throws NumericError otherwise).
double radial_energy_oracle(int l, double w, double mass, double rho_max, int n);

// n-th positive zero of the Bessel function J_nu (n >= 1).
double bessel_j_zero(int nu, int n);

// Hard-wall cross sections; energies are closed forms.
struct HardWallMode {
  enum class Shape { SquareBox, Disk };
  Shape shape;
  double eps;
  double mass = 1.0;

  // SquareBox: quantum numbers (i, j) >= 1 on a side of width 2*eps.
  // Disk: radial index i >= 1 and angular momentum j = l on radius eps.
  double energy(int i, int j) const;
  double ground_energy() const;
};

struct ModeTableRow {
  int l;
  double w;
  double E_paper;  // 2(l-1/2)(l+1/2) hbar w, printed verbatim
  double E_oracle; // radial FD oracle
  double A_norm;   // printed radial normalization constant
};

std::vector<ModeTableRow> mode_table(int l_max, double w, double mass,
                                     double rho_max, int n);

// CSV with header l,w,E_paper,E_oracle,A_norm.
std::string mode_table_to_csv(const std::vector<ModeTableRow>& rows);

} // namespace geomq
