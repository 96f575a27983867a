#pragma once

#include "geomq/curve.hpp"
#include "geomq/types.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace geomq {

enum class CrossSection { Square, Circular };

// paper_verbatim keeps every coefficient exactly as written, including the
// explicitly imaginary (anti-Hermitian) potential terms of the spin-orbit
// models and the left-acting first-order coupling.  hermitized symmetrizes
// the first-order term to (1/2){W, p-A} and keeps only (V+V^dag)/2.
enum class OperatorMode { PaperVerbatim, Hermitized };

std::string to_string(OperatorMode mode);
OperatorMode operator_mode_from_string(const std::string& s);

// Effective 1D Hamiltonian
//   H = (1/2m)(p_s - A(s))^2 + W(s)(p_s - A(s)) + V(s)
// with p_s = -i hbar d/ds.  V and W are spin_dim x spin_dim; scalar models
// use 1x1 matrices.  Callables may be null, meaning identically zero.
struct EffectiveModel1D {
  double mass = 1.0;
  int spin_dim = 1;
  OperatorMode mode = OperatorMode::Hermitized;
  std::function<double(double)> A;
  std::function<Eigen::MatrixXcd(double)> V;
  std::function<Eigen::MatrixXcd(double)> W;
  // accumulated gauge function Lambda(s): the compensating phase for
  // wavefunction comparison after gauge_transform is exp(i Lambda / hbar)
  std::function<double(double)> gauge_lambda;
  nlohmann::json info; // provenance (builder, curve, parameters)

  double A_at(double s) const { return A ? A(s) : 0.0; }
  Eigen::MatrixXcd V_at(double s) const;
  Eigen::MatrixXcd W_at(double s) const;
  bool has_W() const { return static_cast<bool>(W); }
};

// Electromagnetic potentials evaluated on the curve: the tangential component
// of the vector potential, the scalar potential, and the tangential magnetic
// field (the only component entering the effective model).  Null means zero.
struct EMField {
  std::function<double(double)> A_s_bar;
  std::function<double(double)> A_0;
  std::function<double(double)> B_s;
};

// Spin-orbit coupling strengths along the local tangent/normal/binormal,
// in units of energy*length/hbar.
struct SOCParams {
  double alpha_s = 0.0;
  double alpha_n = 0.0;
  double alpha_b = 0.0;
};

Eigen::Matrix2cd pauli_x();
Eigen::Matrix2cd pauli_y();
Eigen::Matrix2cd pauli_z();
Eigen::Matrix2cd sigma_dot(const Vec3& v);

// The six builders.  Square cross sections keep the torsion term -hbar^2
// tau^2/4m in V; circular cross sections move torsion into the gauge
// coupling A = l hbar tau instead.
EffectiveModel1D build_spinless_square(const Curve& geom, double mass = 1.0);
EffectiveModel1D build_spinless_circular(const Curve& geom, int l,
                                         double mass = 1.0);
EffectiveModel1D build_charged_square(const Curve& geom, const EMField& em,
                                      double charge = 1.0, double mass = 1.0);
EffectiveModel1D build_charged_circular(const Curve& geom, const EMField& em,
                                        int l, double charge = 1.0,
                                        double mass = 1.0);
EffectiveModel1D build_soc_square(const Curve& geom, const SOCParams& soc,
                                  double mass = 1.0);
// ag_full_coupling=false couples the first-order term to (p_s - A/2) as the
// source equations are written; true uses the full (p_s - A).  Both are one
// flag apart so spectra of the two readings can be compared downstream.
EffectiveModel1D build_soc_circular(const Curve& geom, const SOCParams& soc,
                                    int l, double mass = 1.0,
                                    bool ag_full_coupling = false);

// Effective momentum operator p = -i hbar t(s) d/ds + i g(s), where the
// geometric part g(s) = hbar (kappa/2) n(s) for square confinement and
// vanishes for circular confinement.
struct EffectiveMomentum {
  std::function<Vec3(double)> tangent;
  std::function<Vec3(double)> geometric; // the real vector g(s)
  bool geometric_vanishes = false;
};
EffectiveMomentum effective_momentum(const Curve& geom, CrossSection cs);

struct HermitizeReport {
  double max_antihermitian_V = 0.0; // max operator norm of (V-V^dag)/2
  bool w_symmetrized = false;
  int samples = 0;
};

// Returns a hermitized-mode copy: V -> (V+V^dag)/2, W kept (the solver
// symmetrizes its coupling), and fills the report by sampling n_probe points
// of [s0, s1].
EffectiveModel1D hermitized(const EffectiveModel1D& model, double s0, double s1,
                            int n_probe = 64, HermitizeReport* report = nullptr);

// A -> A + dLambda; Lambda accumulates into gauge_lambda.
EffectiveModel1D gauge_transform(const EffectiveModel1D& model,
                                 std::function<double(double)> lambda,
                                 std::function<double(double)> dlambda);

// Serialization: {mass, spin_dim, mode, samples:[{s,A,V_re,V_im,W_re,W_im}]}
// plus the provenance block.  from-JSON models interpolate coefficients with
// natural cubic splines through the samples.
nlohmann::json model_to_json(const EffectiveModel1D& model,
                             const std::vector<double>& s_values);
EffectiveModel1D model_from_json(const nlohmann::json& j);

nlohmann::json curve_spec_to_json(const CurveSpec& spec);
CurveSpec curve_spec_from_json(const nlohmann::json& j);

} // namespace geomq
