#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace geomq {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;

// Natural units: hbar = m_e = e = 1 everywhere inside the library.  Kept as
// named constants so formulas read like the physics they implement.
inline constexpr double hbar = 1.0;

// Configuration / input mistakes: bad flags, malformed expressions,
// out-of-range requests.  The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: non-convergence, degenerate geometry, leaving the
// valid coordinate patch.  The CLI maps these to exit code 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace geomq
