#pragma once

#include "geomq/effective.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace geomq {

enum class BoundaryKind { Dirichlet, Periodic, Bloch };

// Wrap phase of the second spinor component class: the natural boundary
// condition for spin-1/2 states whose frame rotates once per period is
// antiperiodic (the default); it is ignored for spin_dim = 1.
enum class SpinorPhase { Periodic, Antiperiodic };

struct Grid1D {
  double length = 1.0;
  int n = 64;
  BoundaryKind boundary = BoundaryKind::Periodic;
  double bloch_k = 0.0; // crystal momentum, used when boundary == Bloch
  SpinorPhase spinor_phase = SpinorPhase::Antiperiodic;

  double h() const {
    return boundary == BoundaryKind::Dirichlet ? length / (n + 1) : length / n;
  }
  double s_at(int i) const {
    return boundary == BoundaryKind::Dirichlet ? (i + 1) * h() : i * h();
  }
  void validate() const;
};

struct SolveOptions {
  int k_lowest = 6;
  // combine solves at n and n/2 per sorted index: (4 E_n - E_{n/2}) / 3,
  // lifting the 3-point stencil to fourth order for smooth bands
  bool richardson = false;
  int dense_cutoff = 513; // dof below this solve densely; else shift-invert
  int max_iter = 400;
  double tol = 1e-10;
  unsigned seed = 20177u;
};

struct Eigenpairs {
  Eigen::VectorXd energies;        // real parts, ascending
  Eigen::VectorXcd energies_raw;   // as computed (complex on the verbatim path)
  Eigen::MatrixXcd vectors;        // dof x k, from the fine grid
  bool verbatim_complex = false;   // general diagonalization was used
  double max_imag = 0.0;           // largest |Im E| among reported eigenvalues
  bool richardson_applied = false;
};

// Dense operator matrix (dof x dof, dof = n * spin_dim).  The gauge field
// enters through link phases exp(-i h A(s+h/2) / hbar) on the hoppings, so
// constant gauge shifts act as exact lattice translations in k; W couples
// through the symmetrized covariant difference in hermitized mode and acts
// from the left verbatim otherwise.
Eigen::MatrixXcd assemble_dense(const EffectiveModel1D& model,
                                const Grid1D& grid);

// Sparse version of the same operator (the iterative path's ground truth).
Eigen::SparseMatrix<cplx> assemble_sparse(const EffectiveModel1D& model,
                                          const Grid1D& grid);

Eigenpairs solve_fd(const EffectiveModel1D& model, const Grid1D& grid,
                    const SolveOptions& opt = {});

struct BandStructure {
  std::vector<double> k;        // first Brillouin zone, half-open
  Eigen::MatrixXd energies;     // n_k x n_bands, overlap-continued columns
  Eigen::MatrixXd energies_im;  // nonzero only on the verbatim path
  double period = 0.0;
  SpinorPhase spinor_phase = SpinorPhase::Antiperiodic;
};

// Bloch reduction over one period: checks the model coefficients really are
// P-periodic (seam plus in-domain translates), then solves per k.
BandStructure bloch_bands(const EffectiveModel1D& model, double period,
                          int n_k, int n_cell, int n_bands,
                          const SolveOptions& opt = {},
                          SpinorPhase phase = SpinorPhase::Antiperiodic);

// CSV with header k,branch,energy_re,energy_im.
std::string bands_to_csv(const BandStructure& bands);

enum class HelixCase { SpinlessCircular, ChargedCircular, Soc };

struct HelixDispersionParams {
  int l = 1;
  double mass = 1.0;
  double charge = 1.0;
  double A_s_bar = 0.0; // constant tangential vector potential
  double A_0 = 0.0;     // constant scalar potential
  double B_s = 0.0;     // constant tangential magnetic field
  SOCParams soc;
};

struct DispersionSample {
  double p;
  double E_plus;
  double E_minus;
  // the spin-orbit spectrum carries an explicitly imaginary component
  // -hbar alpha_n tau / 2; it is reported here and never added to E
  double im_component;
};

// Closed-form dispersions of the circular-confinement doublet on a curve
// with constant curvature and torsion.  Rejects parametric curves (whose
// invariants vary) with a NumericError directing to solve_fd.
std::vector<DispersionSample> helix_dispersion(
    const Curve& geom, HelixCase which, const HelixDispersionParams& par,
    const std::vector<double>& p_values);

} // namespace geomq
