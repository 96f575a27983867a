#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomq/modes.hpp"
#include "test_util.hpp"

#include <cmath>
#include <complex>

using namespace geomq;
using testutil::simpson;
using testutil::simpson2d;

static constexpr double kPi = 3.14159265358979323846;

TEST_CASE("circular mode normalization under the 2D measure") {
  // integral of |chi_l|^2 rho drho dtheta must be 1; the angular factor
  // contributes 2 pi, so only the radial integral is done numerically
  for (int l = 0; l <= 5; ++l) {
    CircularMode mode{l, 1.3, 1.0};
    const double beta = mode.beta();
    const double rmax = 9.0 / beta;
    const double radial = simpson(
        [&](double rho) {
          const double amp = std::abs(mode.chi(rho, 0.0));
          return amp * amp * rho;
        },
        0.0, rmax, 4000);
    CHECK(2 * kPi * radial == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("printed radial constant normalizes under the plain drho measure") {
  for (int l = 0; l <= 5; ++l) {
    CircularMode mode{l, 0.9, 1.0};
    const double beta = mode.beta();
    const double A = mode.A_printed();
    const double radial = simpson(
        [&](double rho) {
          const double u = A * std::pow(beta * rho, std::abs(l)) *
                           std::exp(-beta * beta * rho * rho / 2);
          return u * u;
        },
        0.0, 10.0 / beta, 4000);
    CHECK(radial == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("square harmonic ground state normalization and width") {
  SquareHarmonicMode mode{2.0, 1.5};
  CHECK(mode.alpha() == doctest::Approx(std::sqrt(1.5 * 2.0)).epsilon(1e-14));
  CHECK(mode.eps() * mode.alpha() == doctest::Approx(1.0).epsilon(1e-14));
  const double lim = 8 * mode.eps();
  const double norm = simpson2d(
      [&](double q2, double q3) {
        const double c = mode.chi(q2, q3);
        return c * c;
      },
      -lim, lim, -lim, lim, 800, 800);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("analytic moments match quadrature") {
  SquareHarmonicMode mode{1.7, 1.0};
  const double a2 = mode.alpha() * mode.alpha();
  const double lim = 9 * mode.eps();
  // <q2 d2>: the derivative acts on the Gaussian, d2 chi = -alpha^2 q2 chi
  const double q2d2 = simpson2d(
      [&](double q2, double q3) {
        const double c = mode.chi(q2, q3);
        return c * q2 * (-a2 * q2) * c;
      },
      -lim, lim, -lim, lim, 600, 600);
  CHECK(moment(mode, 1, 0, 1, 0) == doctest::Approx(q2d2).epsilon(1e-10));
  CHECK(moment(mode, 1, 0, 1, 0) == doctest::Approx(-0.5).epsilon(1e-13));
  // pure position moments: <q2^2> = 1/(2 alpha^2), <q2^4> = 3/(4 alpha^4)
  CHECK(moment(mode, 2, 0, 0, 0) == doctest::Approx(0.5 / a2).epsilon(1e-13));
  CHECK(moment(mode, 4, 0, 0, 0) ==
        doctest::Approx(0.75 / (a2 * a2)).epsilon(1e-13));
  // odd moments vanish
  CHECK(moment(mode, 1, 0, 0, 0) == doctest::Approx(0.0));
  CHECK(moment(mode, 1, 2, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("the mixed second-derivative combination sums to -1/2") {
  // <q2 d2 + q3 d3 + 2 q2 q3 d2 d3> is the coefficient combination behind
  // the effective-potential bookkeeping; each Gaussian direction gives -1/2
  // from q dq and the cross term integrates to +1/2
  for (double w : {0.8, 1.0, 2.9}) {
    SquareHarmonicMode mode{w, 1.0};
    const double combo = moment(mode, 1, 0, 1, 0) + moment(mode, 0, 1, 0, 1) +
                         2.0 * moment(mode, 1, 1, 1, 1);
    CHECK(combo == doctest::Approx(-0.5).epsilon(1e-13));
  }
}

TEST_CASE("angular matrix elements of circular modes") {
  for (int l : {-2, -1, 0, 1, 3}) {
    CircularMode mode{l, 1.1, 1.0};
    const AngularElements ang = angular_matrix_elements(mode);
    CHECK(ang.L.real() == doctest::Approx(l * hbar).epsilon(1e-13));
    CHECK(std::abs(ang.L.imag()) < 1e-14);
    CHECK(ang.L2.real() ==
          doctest::Approx(double(l) * l * hbar * hbar).epsilon(1e-13));
  }
}

TEST_CASE("radial oracle reproduces the isotropic oscillator ladder") {
  // lowest radial state at angular momentum l has energy (|l|+1) hbar w
  const double w = 1.0;
  for (int l = 0; l <= 3; ++l) {
    const double E = radial_energy_oracle(l, w, 1.0, 8.0, 2048);
    CHECK(E == doctest::Approx((std::abs(l) + 1) * hbar * w).epsilon(1e-4));
  }
  // and scales linearly in w
  CHECK(radial_energy_oracle(1, 2.5, 1.0, 8.0 / std::sqrt(2.5), 2048) ==
        doctest::Approx(2 * 2.5).epsilon(1e-4));
}

TEST_CASE("unconverged radial grids are refused") {
  CHECK_THROWS_AS(radial_energy_oracle(2, 1.0, 1.0, 8.0, 64), NumericError);
}

TEST_CASE("printed transverse energies differ from the oracle ladder") {
  // the printed closed form 2(l-1/2)(l+1/2) hbar w disagrees with the
  // spectrum of the printed radial operator for every l; the table keeps
  // both columns so the discrepancy is visible, not resolved
  const auto rows = mode_table(3, 1.0, 1.0, 8.0, 2048);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.E_paper ==
          doctest::Approx((2.0 * row.l * row.l - 0.5) * row.w).epsilon(1e-14));
    CHECK(row.E_oracle ==
          doctest::Approx((std::abs(row.l) + 1) * row.w).epsilon(1e-4));
  }
  CHECK(rows[0].E_paper < 0.0);      // l = 0 printed value is -w/2
  CHECK(rows[0].E_oracle > 0.99);    // actual ground energy is +w
  const std::string csv = mode_table_to_csv(rows);
  CHECK(csv.rfind("l,w,E_paper,E_oracle,A_norm\n", 0) == 0);
}

TEST_CASE("Bessel zeros") {
  CHECK(bessel_j_zero(0, 1) == doctest::Approx(2.404825557695773).epsilon(1e-12));
  CHECK(bessel_j_zero(1, 1) == doctest::Approx(3.831705970207512).epsilon(1e-12));
  CHECK(bessel_j_zero(2, 1) == doctest::Approx(5.135622301840683).epsilon(1e-12));
  CHECK(bessel_j_zero(0, 2) == doctest::Approx(5.520078110286311).epsilon(1e-12));
  CHECK(bessel_j_zero(1, 2) == doctest::Approx(7.015586669815619).epsilon(1e-12));
}

TEST_CASE("hard wall energies are the textbook closed forms") {
  HardWallMode sq{HardWallMode::Shape::SquareBox, 0.1, 1.0};
  // side 2 eps: E_ij = pi^2 (i^2 + j^2) / (8 m eps^2)
  CHECK(sq.ground_energy() ==
        doctest::Approx(kPi * kPi / (4 * 0.01)).epsilon(1e-13));
  CHECK(sq.energy(2, 1) ==
        doctest::Approx(kPi * kPi * 5 / (8 * 0.01)).epsilon(1e-13));

  HardWallMode disk{HardWallMode::Shape::Disk, 0.1, 1.0};
  const double j01 = bessel_j_zero(0, 1);
  CHECK(disk.ground_energy() ==
        doctest::Approx(j01 * j01 / (2 * 0.01)).epsilon(1e-13));
  const double j11 = bessel_j_zero(1, 1);
  CHECK(disk.energy(1, 1) ==
        doctest::Approx(j11 * j11 / (2 * 0.01)).epsilon(1e-13));
}
