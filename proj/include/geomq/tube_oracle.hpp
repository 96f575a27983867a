#pragma once

#include "geomq/curve.hpp"
#include "geomq/eigensolver.hpp"
#include "geomq/fit.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace geomq {

enum class TubeCrossSection { SquareHardWall, DiskHardWall, Harmonic };

std::string to_string(TubeCrossSection cs);
TubeCrossSection tube_cross_section_from_string(const std::string& s);

// eps is the half-width (square), the radius (disk), or the oscillator
// ground-state width sqrt(hbar/(m w)) (harmonic, domain truncated at 8 eps).
struct CrossSectionSpec {
  TubeCrossSection kind = TubeCrossSection::DiskHardWall;
  double eps = 0.1;
  double harmonic_w(double mass) const { return hbar / (mass * eps * eps); }
};

struct TubeGrid {
  int n_s = 24; // longitudinal planes over the Bloch cell
  int n_a = 16; // q2 (square) or rho (polar)
  int n_b = 16; // q3 (square) or theta (polar)
};

// Full 3D Hamiltonian over one Bloch cell of the tube, discretized in tube
// coordinates: Cartesian (s, q2, q3) for square cross-sections, polar
// (s, rho, theta) otherwise.  The divergence-form kinetic operator uses
// metric coefficients at half-integer nodes (flux differencing), making
// apply_raw exactly Hermitian under the sqrt(det G)-weighted inner product;
// apply() is the similarity-transformed version, Hermitian under the plain
// inner product.  The longitudinal wrap carries the Bloch phase e^{ikP}.
class TubeOperator {
public:
  TubeOperator(const Curve& curve, const CrossSectionSpec& cs,
               const TubeGrid& grid, double period, double bloch_k,
               double mass = 1.0, int threads = 1,
               std::size_t max_dof = 1000000);

  int dof() const { return dof_; }
  bool polar() const { return polar_; }
  const TubeGrid& grid() const { return grid_; }
  double period() const { return period_; }
  double bloch_k() const { return bloch_k_; }
  double mass() const { return mass_; }
  const Eigen::VectorXd& weight() const { return weight_; } // sqrt(det G)

  void apply_raw(const Eigen::VectorXcd& u, Eigen::VectorXcd& y) const;
  void apply(const Eigen::VectorXcd& u, Eigen::VectorXcd& y) const;

  // transverse operator of the straight (kappa = tau = 0) tube on the same
  // cross-section grid, in symmetric form; its spectrum is the per-slice
  // reference that the convergence study subtracts
  Eigen::MatrixXd transverse_dense() const;

  // <v, -i d/dtheta v> per unit norm; polar grids only (branch labeling)
  double angular_expectation(const Eigen::VectorXcd& v) const;

private:
  TubeGrid grid_;
  CrossSectionSpec cs_;
  bool polar_ = false;
  int dof_ = 0;
  double period_ = 0, bloch_k_ = 0, mass_ = 1;
  int threads_ = 1;
  double hs_ = 0, ha_ = 0, hb_ = 0;
  cplx wrap_ = 1.0;
  std::vector<double> anode_, aface_; // q2/rho at nodes and faces
  std::vector<double> bnode_;         // q3/theta at nodes
  std::vector<double> vc_;            // confining potential per transverse node
  // coefficient tables, flattened [i][j][m]
  std::vector<double> css_half_, caa_half_, cbb_half_;
  std::vector<double> csa_, csb_, cab_; // mixed-term coefficients at nodes
  Eigen::VectorXd weight_, sqrt_w_, inv_sqrt_w_;

  void build(const Curve& curve);
  void flux_all(const Eigen::VectorXcd& u, Eigen::VectorXcd& y) const;
  void apply_slice_range(const Eigen::VectorXcd& u, Eigen::VectorXcd& y,
                         int i0, int i1) const;
};

// LOBPCG with the straight-tube separable preconditioner (transverse dense
// eigenbasis x longitudinal twisted Fourier modes).  k <= 32.
IterativeResult tube_lowest(const TubeOperator& op, int k, double tol = 1e-8,
                            unsigned seed = 777u, int max_iter = 600);

struct OracleFit {
  double c_kappa = 0, c_kappa_err = 0;
  double c_tau = 0, c_tau_err = 0;
  bool c_kappa_pinned = false; // curvature term held at -hbar^2/8m while
                               // extracting c_tau (helix-type runs)
  double k0_plus = 0, k0_plus_err = 0;
  double k0_minus = 0, k0_minus_err = 0;
  double k0_ground = 0, k0_ground_err = 0;
  bool doublet_resolved = false;
  bool monotone = false;
  bool fit_valid = false;
};

struct OracleResult {
  nlohmann::json descriptor;
  std::vector<double> eps;
  std::vector<double> k;
  // eigenvalues[e][ik][state], ascending per (eps, k)
  std::vector<std::vector<std::vector<double>>> eigenvalues;
  // reference[e][q]: straight-tube transverse levels on the same grid
  std::vector<std::vector<double>> reference;
  // per-branch dispersion samples after reference subtraction
  std::vector<std::vector<double>> delta_ground;              // [e][ik]
  std::vector<std::vector<double>> delta_plus, delta_minus;   // doublet runs
  // per-eps quadratic-fit results feeding the Richardson step
  std::vector<double> offset_per_eps;
  std::vector<double> vertex_ground_per_eps;
  std::vector<double> vertex_plus_per_eps, vertex_minus_per_eps;
  OracleFit fit;
  double kappa = 0, tau = 0;
  double period = 0;
};

struct StudyRequest {
  CurveSpec curve;
  TubeCrossSection cross_section = TubeCrossSection::DiskHardWall;
  std::vector<double> eps;    // strictly decreasing, at least 3 entries
  std::vector<double> k_list; // Bloch momenta
  double period = 0;          // 0: auto (sub-period cell for constant-
                              // invariant curves, else full length)
  TubeGrid grid;
  double mass = 1.0;
  int n_states = 3;
  enum class Branch { Ground, Doublet } branch = Branch::Ground;
  double tol = 1e-8;
  int threads = 1;
  std::size_t max_dof = 1000000;
  unsigned seed = 777u;
  int max_iter = 600;
};

// Sweeps (eps, k), subtracts the per-eps straight-tube transverse reference,
// fits E(k) = a (k - k0)^2 + offset per eps and Richardson-extrapolates the
// offsets (and vertices) to eps -> 0.  Curvature/torsion coefficients are
// extracted as documented on OracleFit.  Non-monotone convergence flags the
// result instead of asserting a fit.
OracleResult convergence_study(const StudyRequest& req);

struct GaugeShift {
  double k0 = 0, err = 0;
  bool ok = false;
};
// branch l = +1 or -1 of a doublet study
GaugeShift extract_gauge_shift(const OracleResult& result, int l);

nlohmann::json oracle_to_json(const OracleResult& result);

} // namespace geomq
