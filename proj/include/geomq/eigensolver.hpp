#pragma once

#include "geomq/types.hpp"

#include <Eigen/Dense>

#include <functional>

namespace geomq {

// y = Op x; `out` is preallocated to the operator dimension
using ApplyFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

struct IterativeOptions {
  int k = 4;               // wanted lowest eigenpairs
  int max_iter = 400;
  double tol = 1e-10;      // absolute residual ||H v - lambda v||, ||v|| = 1
  unsigned seed = 0x5eed1234u;
  int block_extra = 4;     // extra block columns carried for robustness
};

struct IterativeResult {
  Eigen::VectorXd values;   // ascending, size k
  Eigen::MatrixXcd vectors; // dim x k, orthonormal
  int iterations = 0;
  double max_residual = 0.0;
  bool converged = false;
};

// Deterministic start block: mt19937 stream mapped to [-1, 1), column-major.
Eigen::MatrixXcd seeded_block(int dim, int cols, unsigned seed);

// Lowest eigenpairs of a Hermitian operator via block Krylov subspaces of
// the shift-inverted operator: solve_shifted applies (H - sigma)^{-1} with
// sigma strictly below the spectrum.  Rayleigh-Ritz is done with H itself,
// so residuals are honest.  Throws NumericError with the residual norms if
// the subspace cap is hit before convergence.
IterativeResult shift_invert_lowest(int dim, const ApplyFn& apply_h,
                                    const ApplyFn& solve_shifted,
                                    const IterativeOptions& opt);

// Locally optimal block preconditioned conjugate gradient for the lowest
// eigenpairs of a Hermitian operator.  precond (optional) applies an
// approximate inverse; it must be Hermitian positive definite.  Deterministic
// for a fixed seed.  Throws NumericError on non-convergence.
IterativeResult lobpcg_lowest(int dim, const ApplyFn& apply_h,
                              const ApplyFn& precond,
                              const IterativeOptions& opt);

} // namespace geomq
