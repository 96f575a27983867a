#pragma once

#include "geomq/curve.hpp"
#include "geomq/types.hpp"

namespace geomq {

// Metric of the tube map R(s, q2, q3) = r(s) + q2 n(s) + q3 b(s) in the
// coordinate order (s, q2, q3):
//
//   G11 = (1 - kappa q2)^2 + tau^2 (q2^2 + q3^2)
//   G12 = -tau q3,  G13 = tau q2,  G22 = G33 = 1,  G23 = 0
//   det G = (1 - kappa q2)^2 = f^2
//
// The inverse is exact (Schur complement of the identity block).
template <typename Scalar>
struct TubeMetricT {
  Eigen::Matrix<Scalar, 3, 3> G;
  Eigen::Matrix<Scalar, 3, 3> G_inv;
  Scalar det;
  Scalar f;
};

using TubeMetric = TubeMetricT<double>;

// The coordinate patch requires f = 1 - kappa q2 >= patch_min; leaving it
// throws (the normal plane folds onto itself at f = 0).
template <typename Scalar>
TubeMetricT<Scalar> tube_metric(Scalar kappa, Scalar tau, Scalar q2, Scalar q3,
                                Scalar patch_min = Scalar(0.1)) {
  const Scalar f = Scalar(1) - kappa * q2;
  if (!(f > patch_min))
    throw NumericError("tube coordinates outside valid patch: 1 - kappa*q2 = " +
                       std::to_string(double(f)));
  TubeMetricT<Scalar> m;
  const Scalar f2 = f * f;
  m.f = f;
  m.det = f2;
  m.G.setZero();
  m.G(0, 0) = f2 + tau * tau * (q2 * q2 + q3 * q3);
  m.G(0, 1) = m.G(1, 0) = -tau * q3;
  m.G(0, 2) = m.G(2, 0) = tau * q2;
  m.G(1, 1) = Scalar(1);
  m.G(2, 2) = Scalar(1);
  m.G_inv.setZero();
  m.G_inv(0, 0) = Scalar(1) / f2;
  m.G_inv(0, 1) = m.G_inv(1, 0) = tau * q3 / f2;
  m.G_inv(0, 2) = m.G_inv(2, 0) = -tau * q2 / f2;
  m.G_inv(1, 1) = Scalar(1) + tau * tau * q3 * q3 / f2;
  m.G_inv(2, 2) = Scalar(1) + tau * tau * q2 * q2 / f2;
  m.G_inv(1, 2) = m.G_inv(2, 1) = -tau * tau * q2 * q3 / f2;
  return m;
}

inline TubeMetric tube_metric(const FrameSample& frame, double q2, double q3,
                              double patch_min = 0.1) {
  return tube_metric<double>(frame.kappa, frame.tau, q2, q3, patch_min);
}

// Embedding of tube coordinates into ambient space, for metric cross-checks
// against finite differences of the map itself.
inline Vec3 tube_point(const FrameSample& frame, double q2, double q3) {
  return frame.position + q2 * frame.n + q3 * frame.b;
}

} // namespace geomq
