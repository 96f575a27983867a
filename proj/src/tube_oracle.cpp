#include "geomq/tube_oracle.hpp"

#include "geomq/effective.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <limits>
#include <memory>
#include <thread>

namespace geomq {

namespace {

constexpr double patch_min = 0.1;

double sq(double x) { return x * x; }

bool finite(double x) { return std::isfinite(x); }

} // namespace

std::string to_string(TubeCrossSection cs) {
  switch (cs) {
  case TubeCrossSection::SquareHardWall: return "square-hard-wall";
  case TubeCrossSection::DiskHardWall: return "disk-hard-wall";
  case TubeCrossSection::Harmonic: return "harmonic";
  }
  return "?";
}

TubeCrossSection tube_cross_section_from_string(const std::string& s) {
  if (s == "square-hard-wall") return TubeCrossSection::SquareHardWall;
  if (s == "disk-hard-wall") return TubeCrossSection::DiskHardWall;
  if (s == "harmonic") return TubeCrossSection::Harmonic;
  throw ConfigError("unknown cross-section '" + s +
                    "' (square-hard-wall, disk-hard-wall, harmonic)");
}

TubeOperator::TubeOperator(const Curve& curve, const CrossSectionSpec& cs,
                           const TubeGrid& grid, double period, double bloch_k,
                           double mass, int threads, std::size_t max_dof)
    : grid_(grid), cs_(cs), period_(period), bloch_k_(bloch_k), mass_(mass),
      threads_(std::max(1, threads)) {
  if (grid.n_s < 4 || grid.n_a < 4 || grid.n_b < 4)
    throw ConfigError("tube grid needs at least 4 points per direction");
  if (!(cs.eps > 0)) throw ConfigError("cross-section eps must be positive");
  if (!(period > 0)) throw ConfigError("tube period must be positive");
  if (!(mass > 0)) throw ConfigError("mass must be positive");
  if (period > curve.length() + 1e-9 * curve.length())
    throw ConfigError("tube period exceeds the curve length");
  if (!curve.constant_invariants() &&
      period < curve.length() * (1.0 - 1e-9)) {
    throw ConfigError("sub-period Bloch cells need constant curvature and "
                      "torsion; use the full curve length as the period");
  }
  polar_ = cs.kind != TubeCrossSection::SquareHardWall;
  const std::size_t want = std::size_t(grid.n_s) * std::size_t(grid.n_a) *
                           std::size_t(grid.n_b);
  if (want > max_dof) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "tube grid %dx%dx%d needs %zu unknowns, above the cap of "
                  "%zu; coarsen the grid or raise max_dof",
                  grid.n_s, grid.n_a, grid.n_b, want, max_dof);
    throw NumericError(buf);
  }
  dof_ = int(want);
  build(curve);
}

void TubeOperator::build(const Curve& curve) {
  const int ns = grid_.n_s, na = grid_.n_a, nb = grid_.n_b;
  const int S = na * nb;
  hs_ = period_ / ns;
  wrap_ = std::exp(cplx(0.0, bloch_k_ * period_));

  anode_.assign(na, 0.0);
  aface_.assign(na + 1, 0.0);
  bnode_.assign(nb, 0.0);
  std::vector<double> bface; // square only
  if (polar_) {
    const double rho_max =
        cs_.kind == TubeCrossSection::DiskHardWall ? cs_.eps : 8.0 * cs_.eps;
    ha_ = rho_max / (na + 0.5);
    hb_ = 2.0 * M_PI / nb;
    for (int j = 0; j < na; ++j) anode_[j] = (j + 0.5) * ha_;
    for (int f = 0; f <= na; ++f) aface_[f] = f * ha_;
    for (int m = 0; m < nb; ++m) bnode_[m] = m * hb_;
  } else {
    ha_ = 2.0 * cs_.eps / (na + 1);
    hb_ = 2.0 * cs_.eps / (nb + 1);
    for (int j = 0; j < na; ++j) anode_[j] = -cs_.eps + (j + 1) * ha_;
    for (int f = 0; f <= na; ++f) aface_[f] = -cs_.eps + (f + 0.5) * ha_;
    for (int m = 0; m < nb; ++m) bnode_[m] = -cs_.eps + (m + 1) * hb_;
    bface.resize(nb + 1);
    for (int g = 0; g <= nb; ++g) bface[g] = -cs_.eps + (g + 0.5) * hb_;
  }

  vc_.assign(std::size_t(S), 0.0);
  if (cs_.kind == TubeCrossSection::Harmonic) {
    const double w = cs_.harmonic_w(mass_);
    for (int j = 0; j < na; ++j)
      for (int m = 0; m < nb; ++m)
        vc_[std::size_t(j) * nb + m] = 0.5 * mass_ * w * w * sq(anode_[j]);
  }

  css_half_.assign(std::size_t(ns) * S, 0.0);
  caa_half_.assign(std::size_t(ns) * (na + 1) * nb, 0.0);
  cbb_half_.assign(polar_ ? std::size_t(ns) * S
                          : std::size_t(ns) * na * (nb + 1),
                   0.0);
  csb_.assign(std::size_t(ns) * S, 0.0);
  if (!polar_) {
    csa_.assign(std::size_t(ns) * S, 0.0);
    cab_.assign(std::size_t(ns) * S, 0.0);
  }
  weight_.resize(dof_);

  double fmin = 1e300;
  auto fval = [&](double kap, int j, int m) {
    return polar_ ? 1.0 - kap * anode_[j] * std::cos(bnode_[m])
                  : 1.0 - kap * anode_[j];
  };

  for (int i = 0; i < ns; ++i) {
    double kap, tau, kap_h, tau_h;
    curve.kappa_tau_at(i * hs_, kap, tau);
    curve.kappa_tau_at((i + 0.5) * hs_, kap_h, tau_h);
    for (int j = 0; j < na; ++j) {
      for (int m = 0; m < nb; ++m) {
        const std::size_t t = std::size_t(j) * nb + m;
        const std::size_t c = std::size_t(i) * S + t;
        const double fh = fval(kap_h, j, m);
        const double fc = fval(kap, j, m);
        fmin = std::min(fmin, std::min(fh, fc));
        if (polar_) {
          css_half_[c] = anode_[j] / fh;
          // theta face at m + 1/2
          const double fth =
              1.0 - kap * anode_[j] * std::cos(bnode_[m] + 0.5 * hb_);
          fmin = std::min(fmin, fth);
          cbb_half_[c] = fth / anode_[j] + sq(tau) * anode_[j] / fth;
          csb_[c] = -tau * anode_[j] / fc;
          weight_[Eigen::Index(c)] = fc * anode_[j];
        } else {
          css_half_[c] = 1.0 / fh;
          csa_[c] = tau * bnode_[m] / fc;
          csb_[c] = -tau * anode_[j] / fc;
          cab_[c] = -sq(tau) * anode_[j] * bnode_[m] / fc;
          weight_[Eigen::Index(c)] = fc;
        }
      }
    }
    for (int f = 0; f <= na; ++f) {
      for (int m = 0; m < nb; ++m) {
        const std::size_t c = (std::size_t(i) * (na + 1) + f) * nb + m;
        if (polar_) {
          const double ff = 1.0 - kap * aface_[f] * std::cos(bnode_[m]);
          fmin = std::min(fmin, ff);
          caa_half_[c] = ff * aface_[f];
        } else {
          const double ff = 1.0 - kap * aface_[f];
          fmin = std::min(fmin, ff);
          caa_half_[c] = ff + sq(tau) * sq(bnode_[m]) / ff;
        }
      }
    }
    if (!polar_) {
      for (int j = 0; j < na; ++j) {
        const double fc = 1.0 - kap * anode_[j];
        for (int g = 0; g <= nb; ++g) {
          const std::size_t c = (std::size_t(i) * na + j) * (nb + 1) + g;
          cbb_half_[c] = fc + sq(tau) * sq(anode_[j]) / fc;
        }
      }
    }
  }

  if (fmin <= patch_min) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "cross-section leaves the tube-coordinate patch: "
                  "min(1 - kappa q) = %.4f <= %.2f; reduce eps",
                  fmin, patch_min);
    throw NumericError(buf);
  }

  sqrt_w_ = weight_.cwiseSqrt();
  inv_sqrt_w_ = sqrt_w_.cwiseInverse();
}

void TubeOperator::apply_slice_range(const Eigen::VectorXcd& u,
                                     Eigen::VectorXcd& y, int i0,
                                     int i1) const {
  const int ns = grid_.n_s, na = grid_.n_a, nb = grid_.n_b;
  const int S = na * nb;
  const double ihs2 = 1.0 / (hs_ * hs_);
  const double iha2 = 1.0 / (ha_ * ha_);
  const double ihb2 = 1.0 / (hb_ * hb_);
  const double i4sa = 1.0 / (4.0 * hs_ * ha_);
  const double i4sb = 1.0 / (4.0 * hs_ * hb_);
  const double i4ab = 1.0 / (4.0 * ha_ * hb_);
  const cplx* ud = u.data();
  cplx* yd = y.data();

  for (int i = i0; i < i1; ++i) {
    const int ip = (i + 1) % ns, im = (i + ns - 1) % ns;
    const cplx fp = (i + 1 == ns) ? wrap_ : cplx(1.0);
    const cplx fm = (i == 0) ? std::conj(wrap_) : cplx(1.0);
    const cplx* uc = ud + std::size_t(i) * S;
    const cplx* up = ud + std::size_t(ip) * S;
    const cplx* um = ud + std::size_t(im) * S;
    const double* cssC = css_half_.data() + std::size_t(i) * S;
    const double* cssM = css_half_.data() + std::size_t(im) * S;

    if (polar_) {
      const double* ctt = cbb_half_.data() + std::size_t(i) * S;
      const double* cstC = csb_.data() + std::size_t(i) * S;
      const double* cstP = csb_.data() + std::size_t(ip) * S;
      const double* cstM = csb_.data() + std::size_t(im) * S;
      const double* crr = caa_half_.data() + std::size_t(i) * (na + 1) * nb;
      for (int j = 0; j < na; ++j) {
        for (int m = 0; m < nb; ++m) {
          const int t = j * nb + m;
          const int mp = (m + 1) % nb, mm = (m + nb - 1) % nb;
          const cplx ucc = uc[t];
          cplx acc = (cssC[t] * (fp * up[t] - ucc) -
                      cssM[t] * (ucc - fm * um[t])) * ihs2;
          const cplx ujp = (j + 1 < na) ? uc[t + nb] : cplx(0.0);
          const cplx ujm = (j > 0) ? uc[t - nb] : cplx(0.0);
          acc += (crr[(j + 1) * nb + m] * (ujp - ucc) -
                  crr[j * nb + m] * (ucc - ujm)) * iha2;
          acc += (ctt[t] * (uc[j * nb + mp] - ucc) -
                  ctt[j * nb + mm] * (ucc - uc[j * nb + mm])) * ihb2;
          const cplx upmp = fp * up[j * nb + mp], upmm = fp * up[j * nb + mm];
          const cplx ummp = fm * um[j * nb + mp], ummm = fm * um[j * nb + mm];
          acc += (cstP[t] * (upmp - upmm) - cstM[t] * (ummp - ummm) +
                  cstC[j * nb + mp] * (upmp - ummp) -
                  cstC[j * nb + mm] * (upmm - ummm)) * i4sb;
          yd[std::size_t(i) * S + t] = acc;
        }
      }
    } else {
      const double* caa = caa_half_.data() + std::size_t(i) * (na + 1) * nb;
      const double* cbb = cbb_half_.data() + std::size_t(i) * na * (nb + 1);
      const double* c2C = csa_.data() + std::size_t(i) * S;
      const double* c2P = csa_.data() + std::size_t(ip) * S;
      const double* c2M = csa_.data() + std::size_t(im) * S;
      const double* c3C = csb_.data() + std::size_t(i) * S;
      const double* c3P = csb_.data() + std::size_t(ip) * S;
      const double* c3M = csb_.data() + std::size_t(im) * S;
      const double* c23 = cab_.data() + std::size_t(i) * S;
      for (int j = 0; j < na; ++j) {
        for (int m = 0; m < nb; ++m) {
          const int t = j * nb + m;
          const cplx ucc = uc[t];
          const bool jp = j + 1 < na, jm = j > 0;
          const bool mp = m + 1 < nb, mm = m > 0;
          cplx acc = (cssC[t] * (fp * up[t] - ucc) -
                      cssM[t] * (ucc - fm * um[t])) * ihs2;
          const cplx ujp = jp ? uc[t + nb] : cplx(0.0);
          const cplx ujm = jm ? uc[t - nb] : cplx(0.0);
          acc += (caa[(j + 1) * nb + m] * (ujp - ucc) -
                  caa[j * nb + m] * (ucc - ujm)) * iha2;
          const cplx ump = mp ? uc[t + 1] : cplx(0.0);
          const cplx umm = mm ? uc[t - 1] : cplx(0.0);
          acc += (cbb[j * (nb + 1) + m + 1] * (ump - ucc) -
                  cbb[j * (nb + 1) + m] * (ucc - umm)) * ihb2;
          // mixed s-q2
          const cplx upjp = jp ? fp * up[t + nb] : cplx(0.0);
          const cplx upjm = jm ? fp * up[t - nb] : cplx(0.0);
          const cplx umjp = jp ? fm * um[t + nb] : cplx(0.0);
          const cplx umjm = jm ? fm * um[t - nb] : cplx(0.0);
          acc += (c2P[t] * (upjp - upjm) - c2M[t] * (umjp - umjm) +
                  (jp ? c2C[t + nb] * (upjp - umjp) : cplx(0.0)) -
                  (jm ? c2C[t - nb] * (upjm - umjm) : cplx(0.0))) * i4sa;
          // mixed s-q3
          const cplx upmp = mp ? fp * up[t + 1] : cplx(0.0);
          const cplx upmm = mm ? fp * up[t - 1] : cplx(0.0);
          const cplx ummp = mp ? fm * um[t + 1] : cplx(0.0);
          const cplx ummm = mm ? fm * um[t - 1] : cplx(0.0);
          acc += (c3P[t] * (upmp - upmm) - c3M[t] * (ummp - ummm) +
                  (mp ? c3C[t + 1] * (upmp - ummp) : cplx(0.0)) -
                  (mm ? c3C[t - 1] * (upmm - ummm) : cplx(0.0))) * i4sb;
          // mixed q2-q3
          const cplx qpp = (jp && mp) ? uc[t + nb + 1] : cplx(0.0);
          const cplx qpm = (jp && mm) ? uc[t + nb - 1] : cplx(0.0);
          const cplx qmp = (jm && mp) ? uc[t - nb + 1] : cplx(0.0);
          const cplx qmm = (jm && mm) ? uc[t - nb - 1] : cplx(0.0);
          acc += ((jp ? c23[t + nb] * (qpp - qpm) : cplx(0.0)) -
                  (jm ? c23[t - nb] * (qmp - qmm) : cplx(0.0)) +
                  (mp ? c23[t + 1] * (qpp - qmp) : cplx(0.0)) -
                  (mm ? c23[t - 1] * (qpm - qmm) : cplx(0.0))) * i4ab;
          yd[std::size_t(i) * S + t] = acc;
        }
      }
    }
  }
}

void TubeOperator::flux_all(const Eigen::VectorXcd& u,
                            Eigen::VectorXcd& y) const {
  const int ns = grid_.n_s;
  const int nthr = std::min(threads_, ns);
  if (nthr <= 1) {
    apply_slice_range(u, y, 0, ns);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthr);
  for (int t = 0; t < nthr; ++t) {
    const int i0 = ns * t / nthr, i1 = ns * (t + 1) / nthr;
    pool.emplace_back(
        [this, &u, &y, i0, i1] { apply_slice_range(u, y, i0, i1); });
  }
  for (auto& th : pool) th.join();
}

void TubeOperator::apply_raw(const Eigen::VectorXcd& u,
                             Eigen::VectorXcd& y) const {
  if (u.size() != dof_) throw ConfigError("apply_raw: vector size mismatch");
  Eigen::VectorXcd f(dof_);
  flux_all(u, f);
  y.resize(dof_);
  const double pref = hbar * hbar / (2.0 * mass_);
  const int S = grid_.n_a * grid_.n_b;
  for (int n = 0; n < dof_; ++n)
    y[n] = -pref * f[n] / weight_[n] + vc_[std::size_t(n % S)] * u[n];
}

void TubeOperator::apply(const Eigen::VectorXcd& u,
                         Eigen::VectorXcd& y) const {
  if (u.size() != dof_) throw ConfigError("apply: vector size mismatch");
  Eigen::VectorXcd v(dof_), f(dof_);
  for (int n = 0; n < dof_; ++n) v[n] = u[n] * inv_sqrt_w_[n];
  flux_all(v, f);
  y.resize(dof_);
  const double pref = hbar * hbar / (2.0 * mass_);
  const int S = grid_.n_a * grid_.n_b;
  for (int n = 0; n < dof_; ++n)
    y[n] = -pref * f[n] * inv_sqrt_w_[n] + vc_[std::size_t(n % S)] * u[n];
}

Eigen::MatrixXd TubeOperator::transverse_dense() const {
  const int na = grid_.n_a, nb = grid_.n_b;
  const int nt = na * nb;
  const double ta = hbar * hbar / (2.0 * mass_ * ha_ * ha_);
  const double tb = hbar * hbar / (2.0 * mass_ * hb_ * hb_);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nt, nt);
  for (int j = 0; j < na; ++j) {
    for (int m = 0; m < nb; ++m) {
      const int t = j * nb + m;
      if (polar_) {
        const double rho = anode_[j];
        T(t, t) += ta * (aface_[j] + aface_[j + 1]) / rho +
                   2.0 * tb / (rho * rho) + vc_[std::size_t(t)];
        if (j + 1 < na) {
          const double off =
              -ta * aface_[j + 1] / std::sqrt(rho * anode_[j + 1]);
          T(t, t + nb) += off;
          T(t + nb, t) += off;
        }
        const int mp = (m + 1) % nb;
        T(t, j * nb + mp) += -tb / (rho * rho);
        T(j * nb + mp, t) += -tb / (rho * rho);
      } else {
        T(t, t) += 2.0 * ta + 2.0 * tb + vc_[std::size_t(t)];
        if (j + 1 < na) {
          T(t, t + nb) += -ta;
          T(t + nb, t) += -ta;
        }
        if (m + 1 < nb) {
          T(t, t + 1) += -tb;
          T(t + 1, t) += -tb;
        }
      }
    }
  }
  if (polar_) return 0.5 * (T + T.transpose());
  return T;
}

double TubeOperator::angular_expectation(const Eigen::VectorXcd& v) const {
  if (!polar_)
    throw ConfigError("angular expectation needs a polar cross-section grid");
  if (v.size() != dof_)
    throw ConfigError("angular_expectation: vector size mismatch");
  const int ns = grid_.n_s, na = grid_.n_a, nb = grid_.n_b;
  const int S = na * nb;
  cplx acc = 0.0;
  double nrm = 0.0;
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < na; ++j) {
      for (int m = 0; m < nb; ++m) {
        const std::size_t t = std::size_t(i) * S + std::size_t(j) * nb + m;
        const int mp = (m + 1) % nb, mm = (m + nb - 1) % nb;
        const cplx dv = (v[std::size_t(i) * S + std::size_t(j) * nb + mp] -
                         v[std::size_t(i) * S + std::size_t(j) * nb + mm]) /
                        (2.0 * hb_);
        acc += std::conj(v[t]) * cplx(0.0, -1.0) * dv;
        nrm += std::norm(v[t]);
      }
    }
  }
  if (nrm <= 0.0) throw ConfigError("angular_expectation: zero vector");
  return acc.real() / nrm;
}

namespace {

// exact inverse of the straight-tube operator (same grid and boundary
// conditions): transverse dense eigenbasis crossed with the twisted
// longitudinal Fourier modes the Bloch wrap admits
struct StraightPrecond {
  int nt = 0, ns = 0;
  Eigen::MatrixXd Qt;
  Eigen::MatrixXcd F, Fc, inv_denom;

  explicit StraightPrecond(const TubeOperator& op) {
    nt = op.grid().n_a * op.grid().n_b;
    ns = op.grid().n_s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.transverse_dense());
    if (es.info() != Eigen::Success)
      throw NumericError("transverse eigendecomposition failed");
    Qt = es.eigenvectors();
    const Eigen::VectorXd mu = es.eigenvalues();
    const double hs = op.period() / ns;
    const double ts = hbar * hbar / (2.0 * op.mass() * hs * hs);
    const double kp = op.bloch_k() * op.period();
    Eigen::VectorXd lam(ns);
    F.resize(ns, ns);
    const double rt = 1.0 / std::sqrt(double(ns));
    for (int p = 0; p < ns; ++p) {
      const double phi = (2.0 * M_PI * p + kp) / ns;
      lam[p] = 2.0 * ts * (1.0 - std::cos(phi));
      for (int i = 0; i < ns; ++i)
        F(i, p) = std::exp(cplx(0.0, phi * i)) * rt;
    }
    Fc = F.conjugate();
    const double sigma = mu.minCoeff() + lam.minCoeff() - 1.0;
    inv_denom.resize(nt, ns);
    for (int q = 0; q < nt; ++q)
      for (int p = 0; p < ns; ++p)
        inv_denom(q, p) = cplx(1.0 / (mu[q] + lam[p] - sigma), 0.0);
  }

  void apply(const Eigen::VectorXcd& r, Eigen::VectorXcd& z) const {
    Eigen::Map<const Eigen::MatrixXcd> R(r.data(), nt, ns);
    // real/imag split keeps the transverse rotations in real GEMMs
    Eigen::MatrixXd rre(nt, ns), rim(nt, ns);
    for (int p = 0; p < ns; ++p) {
      for (int q = 0; q < nt; ++q) {
        rre(q, p) = R(q, p).real();
        rim(q, p) = R(q, p).imag();
      }
    }
    const Eigen::MatrixXd m1re = Qt.transpose() * rre;
    const Eigen::MatrixXd m1im = Qt.transpose() * rim;
    Eigen::MatrixXcd m1(nt, ns);
    m1.real() = m1re;
    m1.imag() = m1im;
    Eigen::MatrixXcd c = m1 * Fc;
    c = c.cwiseProduct(inv_denom);
    const Eigen::MatrixXcd m2 = c * F.transpose();
    const Eigen::MatrixXd m2re = m2.real();
    const Eigen::MatrixXd m2im = m2.imag();
    const Eigen::MatrixXd zre = Qt * m2re;
    const Eigen::MatrixXd zim = Qt * m2im;
    z.resize(Eigen::Index(nt) * ns);
    for (int p = 0; p < ns; ++p)
      for (int q = 0; q < nt; ++q)
        z[Eigen::Index(p) * nt + q] = cplx(zre(q, p), zim(q, p));
  }
};

} // namespace

IterativeResult tube_lowest(const TubeOperator& op, int k, double tol,
                            unsigned seed, int max_iter) {
  if (k < 1 || k > 32)
    throw ConfigError("tube_lowest computes between 1 and 32 states");
  if (k > op.dof())
    throw ConfigError("tube_lowest: more states than grid unknowns");
  const auto pre = std::make_shared<StraightPrecond>(op);
  IterativeOptions opt;
  opt.k = k;
  opt.tol = tol;
  opt.seed = seed;
  opt.max_iter = max_iter;
  ApplyFn ah = [&op](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    op.apply(x, y);
  };
  ApplyFn pc = [pre](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    pre->apply(x, y);
  };
  return lobpcg_lowest(op.dof(), ah, pc, opt);
}

namespace {

std::string branch_name(StudyRequest::Branch b) {
  return b == StudyRequest::Branch::Ground ? "ground" : "doublet";
}

// quadratic fit over the finite samples; returns how many were used
int filtered_fit(const std::vector<double>& x, const std::vector<double>& y,
                 QuadraticFit& out) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (finite(y[i])) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  }
  if (xs.size() < 3) {
    out = QuadraticFit{};
    out.ok = false;
    return int(xs.size());
  }
  out = fit_quadratic(xs, ys);
  return int(xs.size());
}

} // namespace

OracleResult convergence_study(const StudyRequest& req) {
  if (req.eps.size() < 3)
    throw ConfigError("convergence study needs at least three eps values");
  for (std::size_t e = 1; e < req.eps.size(); ++e)
    if (!(req.eps[e] < req.eps[e - 1]))
      throw ConfigError("eps values must be strictly decreasing");
  if (req.eps.back() <= 0) throw ConfigError("eps values must be positive");
  if (req.k_list.empty()) throw ConfigError("k_list must not be empty");
  const bool doublet = req.branch == StudyRequest::Branch::Doublet;
  if (doublet && req.cross_section == TubeCrossSection::SquareHardWall)
    throw ConfigError(
        "doublet branch tracking needs a polar cross-section grid");

  Curve curve(req.curve);
  const double period =
      req.period > 0
          ? req.period
          : (curve.constant_invariants() ? curve.length() / 16.0
                                         : curve.length());

  OracleResult out;
  out.period = period;
  curve.kappa_tau_at(0.0, out.kappa, out.tau);
  out.eps = req.eps;
  out.k = req.k_list;

  const int n_eps = int(req.eps.size());
  const int n_k = int(req.k_list.size());
  const int want = std::max(req.n_states, doublet ? 3 : 1);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  out.eigenvalues.assign(std::size_t(n_eps), {});
  for (auto& per_eps : out.eigenvalues) per_eps.assign(std::size_t(n_k), {});
  out.reference.assign(std::size_t(n_eps), {});
  out.delta_ground.assign(std::size_t(n_eps), std::vector<double>(n_k, nan));
  if (doublet) {
    out.delta_plus.assign(std::size_t(n_eps), std::vector<double>(n_k, nan));
    out.delta_minus.assign(std::size_t(n_eps), std::vector<double>(n_k, nan));
  }
  std::vector<std::vector<double>> ang1(std::size_t(n_eps),
                                        std::vector<double>(n_k, 0.0));
  std::vector<std::vector<double>> ang2 = ang1;

  // the (eps, k) points are independent jobs; coefficients and solver state
  // are private per job, so the schedule cannot change any number
  struct Job {
    int e, ik;
  };
  std::vector<Job> jobs;
  jobs.reserve(std::size_t(n_eps) * std::size_t(n_k));
  for (int e = 0; e < n_eps; ++e)
    for (int ik = 0; ik < n_k; ++ik) jobs.push_back(Job{e, ik});
  std::vector<std::exception_ptr> job_error(jobs.size(), nullptr);
  std::atomic<std::size_t> cursor{0};

  auto run_one = [&](const Job& job) {
    const std::size_t e = std::size_t(job.e), ik = std::size_t(job.ik);
    CrossSectionSpec cs{req.cross_section, req.eps[e]};
    TubeOperator op(curve, cs, req.grid, period, req.k_list[ik], req.mass, 1,
                    req.max_dof);
    if (job.ik == 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.transverse_dense());
      if (es.info() != Eigen::Success)
        throw NumericError("transverse eigendecomposition failed");
      const int keep = std::min<int>(8, int(es.eigenvalues().size()));
      for (int q = 0; q < keep; ++q)
        out.reference[e].push_back(es.eigenvalues()[q]);
    }
    IterativeResult res =
        tube_lowest(op, want, req.tol, req.seed, req.max_iter);
    auto& ev = out.eigenvalues[e][ik];
    ev.assign(res.values.data(), res.values.data() + res.values.size());
    if (doublet) {
      ang1[e][ik] = op.angular_expectation(res.vectors.col(1));
      ang2[e][ik] = op.angular_expectation(res.vectors.col(2));
    }
  };

  const int nthr = std::max(1, std::min<int>(req.threads, int(jobs.size())));
  if (nthr == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        run_one(jobs[i]);
      } catch (...) {
        job_error[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthr));
    for (int t = 0; t < nthr; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= jobs.size()) return;
          try {
            run_one(jobs[i]);
          } catch (...) {
            job_error[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (job_error[i]) std::rethrow_exception(job_error[i]);

  // reference subtraction and doublet branch labeling
  for (int e = 0; e < n_eps; ++e) {
    const double ref0 = out.reference[std::size_t(e)][0];
    const double ref1 = out.reference[std::size_t(e)].size() > 1
                            ? out.reference[std::size_t(e)][1]
                            : 0.0;
    for (int ik = 0; ik < n_k; ++ik) {
      const auto& ev = out.eigenvalues[std::size_t(e)][std::size_t(ik)];
      out.delta_ground[std::size_t(e)][std::size_t(ik)] = ev[0] - ref0;
      if (!doublet) continue;
      const double a1 = ang1[std::size_t(e)][std::size_t(ik)];
      const double a2 = ang2[std::size_t(e)][std::size_t(ik)];
      const double split = std::abs(ev[2] - ev[1]);
      const double degenerate_tol =
          std::max(100.0 * req.tol, 1e-10 * std::max(1.0, std::abs(ev[1])));
      if (std::abs(a1) >= 0.2 && std::abs(a2) >= 0.2 && a1 * a2 < 0.0) {
        const std::size_t plus = a1 > 0 ? 1 : 2;
        const std::size_t minus = 3 - plus;
        out.delta_plus[std::size_t(e)][std::size_t(ik)] = ev[plus] - ref1;
        out.delta_minus[std::size_t(e)][std::size_t(ik)] = ev[minus] - ref1;
      } else if (split <= degenerate_tol) {
        // a degenerate pair belongs to both branches; labels are moot
        const double mean = 0.5 * (ev[1] + ev[2]) - ref1;
        out.delta_plus[std::size_t(e)][std::size_t(ik)] = mean;
        out.delta_minus[std::size_t(e)][std::size_t(ik)] = mean;
      }
    }
  }

  // per-eps quadratic fits in k, then Richardson in eps^2
  bool fits_ok = true;
  bool doublet_ok = doublet;
  std::vector<double> offs, vground, vplus, vminus;
  for (int e = 0; e < n_eps; ++e) {
    if (doublet) {
      QuadraticFit fplus, fminus;
      const int np =
          filtered_fit(req.k_list, out.delta_plus[std::size_t(e)], fplus);
      const int nm =
          filtered_fit(req.k_list, out.delta_minus[std::size_t(e)], fminus);
      if (!fplus.ok || !fminus.ok || np < 3 || nm < 3) {
        fits_ok = false;
        doublet_ok = false;
        offs.push_back(nan);
        vplus.push_back(nan);
        vminus.push_back(nan);
      } else {
        offs.push_back(0.5 * (fplus.offset + fminus.offset));
        vplus.push_back(fplus.vertex);
        vminus.push_back(fminus.vertex);
      }
    } else {
      QuadraticFit fg;
      filtered_fit(req.k_list, out.delta_ground[std::size_t(e)], fg);
      if (!fg.ok) {
        fits_ok = false;
        offs.push_back(nan);
        vground.push_back(nan);
      } else {
        offs.push_back(fg.offset);
        vground.push_back(fg.vertex);
      }
    }
  }
  out.offset_per_eps = offs;
  if (doublet) {
    out.vertex_plus_per_eps = vplus;
    out.vertex_minus_per_eps = vminus;
  } else {
    out.vertex_ground_per_eps = vground;
  }

  OracleFit fit;
  if (fits_ok) {
    const RichardsonFit roff = richardson_eps2(req.eps, offs);
    fit.monotone = roff.monotone;
    const double kap = out.kappa, tau = out.tau;
    if (roff.ok && std::abs(kap) > 1e-9) {
      if (std::abs(tau) < 1e-12) {
        fit.c_kappa = roff.value / sq(kap);
        fit.c_kappa_err = roff.err / sq(kap);
        fit.c_tau = 0.0;
        fit.c_tau_err = 0.0;
        fit.fit_valid = curve.constant_invariants() && roff.monotone;
      } else {
        fit.c_kappa = -hbar * hbar / (8.0 * req.mass);
        fit.c_kappa_err = 0.0;
        fit.c_kappa_pinned = true;
        fit.c_tau = (roff.value - fit.c_kappa * sq(kap)) / sq(tau);
        fit.c_tau_err = roff.err / sq(tau);
        fit.fit_valid = curve.constant_invariants() && roff.monotone;
      }
    }
    if (doublet_ok) {
      const RichardsonFit rp = richardson_eps2(req.eps, vplus);
      const RichardsonFit rm = richardson_eps2(req.eps, vminus);
      fit.k0_plus = rp.value;
      fit.k0_plus_err = rp.err;
      fit.k0_minus = rm.value;
      fit.k0_minus_err = rm.err;
      fit.doublet_resolved = rp.ok && rm.ok;
    } else if (!doublet && !vground.empty() && finite(vground[0])) {
      const RichardsonFit rg = richardson_eps2(req.eps, vground);
      if (rg.ok) {
        fit.k0_ground = rg.value;
        fit.k0_ground_err = rg.err;
      }
    }
  }
  out.fit = fit;

  nlohmann::json d;
  d["curve"] = curve_spec_to_json(req.curve);
  d["cross_section"] = to_string(req.cross_section);
  d["eps"] = req.eps;
  d["k_list"] = req.k_list;
  d["grid"] = {{"n_s", req.grid.n_s}, {"n_a", req.grid.n_a},
               {"n_b", req.grid.n_b}};
  d["period"] = period;
  d["mass"] = req.mass;
  d["n_states"] = want;
  d["branch"] = branch_name(req.branch);
  d["tol"] = req.tol;
  d["seed"] = req.seed;
  d["max_iter"] = req.max_iter;
  d["max_dof"] = req.max_dof;
  out.descriptor = std::move(d);
  return out;
}

GaugeShift extract_gauge_shift(const OracleResult& result, int l) {
  if (l != 1 && l != -1)
    throw ConfigError("gauge shift is defined for the l = +1 / -1 branches");
  GaugeShift g;
  g.ok = result.fit.doublet_resolved;
  g.k0 = l > 0 ? result.fit.k0_plus : result.fit.k0_minus;
  g.err = l > 0 ? result.fit.k0_plus_err : result.fit.k0_minus_err;
  return g;
}

namespace {

nlohmann::json numbers_or_null(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) {
    if (finite(x))
      a.push_back(x);
    else
      a.push_back(nullptr);
  }
  return a;
}

nlohmann::json nested(const std::vector<std::vector<double>>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : v) a.push_back(numbers_or_null(r));
  return a;
}

} // namespace

nlohmann::json oracle_to_json(const OracleResult& result) {
  const bool doublet = !result.delta_plus.empty();
  nlohmann::json j;
  j["curve"] = result.descriptor.contains("curve") ? result.descriptor["curve"]
                                                   : nlohmann::json();
  j["cross_section"] = result.descriptor.contains("cross_section")
                           ? result.descriptor["cross_section"]
                           : nlohmann::json();
  j["descriptor"] = result.descriptor;
  j["eps"] = result.eps;
  j["k"] = result.k;
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& per_eps : result.eigenvalues) ev.push_back(nested(per_eps));
  j["eigenvalues"] = ev;
  j["reference"] = nested(result.reference);
  nlohmann::json d;
  d["ground"] = nested(result.delta_ground);
  if (doublet) {
    d["plus"] = nested(result.delta_plus);
    d["minus"] = nested(result.delta_minus);
  }
  j["delta"] = d;
  j["offset_per_eps"] = numbers_or_null(result.offset_per_eps);
  if (doublet) {
    j["vertex_plus_per_eps"] = numbers_or_null(result.vertex_plus_per_eps);
    j["vertex_minus_per_eps"] = numbers_or_null(result.vertex_minus_per_eps);
  } else {
    j["vertex_ground_per_eps"] = numbers_or_null(result.vertex_ground_per_eps);
  }
  nlohmann::json f;
  f["c_kappa"] = result.fit.c_kappa;
  f["c_kappa_err"] = result.fit.c_kappa_err;
  f["c_kappa_pinned"] = result.fit.c_kappa_pinned;
  f["c_tau"] = result.fit.c_tau;
  f["c_tau_err"] = result.fit.c_tau_err;
  if (doublet) {
    f["k0"] = {result.fit.k0_plus, result.fit.k0_minus};
    f["cov"] = {sq(result.fit.c_kappa_err), sq(result.fit.c_tau_err),
                sq(result.fit.k0_plus_err), sq(result.fit.k0_minus_err)};
  } else {
    f["k0"] = result.fit.k0_ground;
    f["cov"] = {sq(result.fit.c_kappa_err), sq(result.fit.c_tau_err),
                sq(result.fit.k0_ground_err)};
  }
  f["k0_plus"] = result.fit.k0_plus;
  f["k0_plus_err"] = result.fit.k0_plus_err;
  f["k0_minus"] = result.fit.k0_minus;
  f["k0_minus_err"] = result.fit.k0_minus_err;
  f["k0_ground"] = result.fit.k0_ground;
  f["k0_ground_err"] = result.fit.k0_ground_err;
  f["doublet_resolved"] = result.fit.doublet_resolved;
  f["monotone"] = result.fit.monotone;
  f["fit_valid"] = result.fit.fit_valid;
  j["fit"] = f;
  j["kappa"] = result.kappa;
  j["tau"] = result.tau;
  j["period"] = result.period;
  return j;
}

} // namespace geomq
