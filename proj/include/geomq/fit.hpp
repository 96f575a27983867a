#pragma once

#include "geomq/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace geomq {

// y ~ a x^2 + b x + c by least squares, with parameter covariance scaled by
// the residual variance (zero when the fit is exactly determined).  vertex
// and offset describe the parabola minimum; their uncertainties come from
// first-order error propagation.
struct QuadraticFit {
  double a = 0, b = 0, c = 0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double vertex = 0, vertex_err = 0;
  double offset = 0, offset_err = 0;
  double rms_residual = 0;
  bool ok = false;
};

inline QuadraticFit fit_quadratic(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  QuadraticFit f;
  const int n = static_cast<int>(x.size());
  if (n < 3 || y.size() != x.size()) return f;
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = x[i] * x[i];
    design(i, 1) = x[i];
    design(i, 2) = 1.0;
    rhs(i) = y[i];
  }
  const Eigen::Vector3d p =
      design.colPivHouseholderQr().solve(rhs);
  f.a = p(0);
  f.b = p(1);
  f.c = p(2);
  const Eigen::VectorXd res = rhs - design * p;
  f.rms_residual = std::sqrt(res.squaredNorm() / n);
  const double dofree = std::max(1, n - 3);
  const double s2 = n > 3 ? res.squaredNorm() / dofree : 0.0;
  const Eigen::Matrix3d gram = design.transpose() * design;
  f.cov = s2 * gram.inverse();
  if (f.a == 0.0) return f;
  f.vertex = -f.b / (2.0 * f.a);
  f.offset = f.c - f.b * f.b / (4.0 * f.a);
  // gradients of vertex and offset in (a, b, c)
  Eigen::Vector3d gv(f.b / (2.0 * f.a * f.a), -1.0 / (2.0 * f.a), 0.0);
  Eigen::Vector3d go(f.b * f.b / (4.0 * f.a * f.a), -f.b / (2.0 * f.a), 1.0);
  f.vertex_err = std::sqrt(std::max(0.0, double(gv.transpose() * f.cov * gv)));
  f.offset_err = std::sqrt(std::max(0.0, double(go.transpose() * f.cov * go)));
  f.ok = true;
  return f;
}

// y(eps) ~ y_inf + beta eps^2: the leading finite-width correction model.
// monotone reports whether the samples approach y_inf from one side when
// ordered by decreasing eps (the convergence sanity flag).
struct RichardsonFit {
  double value = 0, err = 0;
  double beta = 0;
  bool monotone = false;
  bool ok = false;
};

inline RichardsonFit richardson_eps2(const std::vector<double>& eps,
                                     const std::vector<double>& y) {
  RichardsonFit f;
  const int n = static_cast<int>(eps.size());
  if (n < 2 || y.size() != eps.size()) return f;
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = eps[i] * eps[i];
    rhs(i) = y[i];
  }
  const Eigen::Vector2d p = design.colPivHouseholderQr().solve(rhs);
  f.value = p(0);
  f.beta = p(1);
  const Eigen::VectorXd res = rhs - design * p;
  if (n > 2) {
    const double s2 = res.squaredNorm() / (n - 2);
    const Eigen::Matrix2d cov =
        s2 * (design.transpose() * design).inverse();
    f.err = std::sqrt(std::max(0.0, cov(0, 0)));
  } else {
    f.err = std::abs(y[0] - y[1]) / 3.0;
  }
  f.monotone = true;
  for (int i = 0; i + 1 < n; ++i) {
    const double d1 = y[i] - f.value;
    const double d2 = y[i + 1] - f.value;
    if (d1 * d2 < 0.0 || std::abs(d2) > std::abs(d1) * (1.0 + 1e-9))
      f.monotone = false;
  }
  f.ok = true;
  return f;
}

} // namespace geomq
