#include "geomq/spectrum1d.hpp"

#include "geomq/eigensolver.hpp"
#include "geomq/io.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace geomq {

void Grid1D::validate() const {
  if (n < 16) throw ConfigError("grid needs at least 16 points");
  if (!(length > 0.0)) throw ConfigError("grid length must be positive");
}

namespace {

struct Samples {
  std::vector<Eigen::MatrixXcd> V, W;
  bool any_W = false;
};

Samples sample_coefficients(const EffectiveModel1D& model, const Grid1D& grid) {
  Samples out;
  out.V.reserve(grid.n);
  out.W.reserve(grid.n);
  const bool herm = model.mode == OperatorMode::Hermitized;
  for (int i = 0; i < grid.n; ++i) {
    const double s = grid.s_at(i);
    Eigen::MatrixXcd v = model.V_at(s);
    if (v.rows() != model.spin_dim || v.cols() != model.spin_dim)
      throw ConfigError("V(s) does not match spin_dim");
    if (herm) v = 0.5 * (v + v.adjoint().eval());
    out.V.push_back(std::move(v));
    Eigen::MatrixXcd w = model.W_at(s);
    if (w.rows() != model.spin_dim || w.cols() != model.spin_dim)
      throw ConfigError("W(s) does not match spin_dim");
    if (w.norm() > 0) out.any_W = true;
    out.W.push_back(std::move(w));
  }
  return out;
}

std::vector<Eigen::Triplet<cplx>> assemble_triplets(
    const EffectiveModel1D& model, const Grid1D& grid) {
  grid.validate();
  if (model.spin_dim != 1 && model.spin_dim != 2)
    throw ConfigError("spin_dim must be 1 or 2");
  const int n = grid.n;
  const int sd = model.spin_dim;
  const double h = grid.h();
  const double t = hbar * hbar / (2.0 * model.mass * h * h);
  const bool herm = model.mode == OperatorMode::Hermitized;
  const Samples cf = sample_coefficients(model, grid);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(sd, sd);

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<size_t>(n) * sd * sd * 3);
  auto add_block = [&](int bi, int bj, const Eigen::MatrixXcd& blk) {
    for (int a = 0; a < sd; ++a)
      for (int b = 0; b < sd; ++b)
        if (blk(a, b) != 0.0)
          trip.emplace_back(bi * sd + a, bj * sd + b, blk(a, b));
  };

  for (int i = 0; i < n; ++i) add_block(i, i, 2.0 * t * id + cf.V[i]);

  const bool wrap = grid.boundary != BoundaryKind::Dirichlet;
  const int n_links = wrap ? n : n - 1;
  for (int li = 0; li < n_links; ++li) {
    const int i = li;
    const int j = (li + 1) % n;
    const double s_mid = grid.s_at(i) + 0.5 * h;
    const cplx u = std::exp(cplx(0.0, -h * model.A_at(s_mid) / hbar));
    cplx g = 1.0;
    if (li == n - 1 && wrap) {
      g = std::exp(cplx(0.0, grid.bloch_k * grid.length));
      if (sd == 2 && grid.spinor_phase == SpinorPhase::Antiperiodic) g = -g;
    }
    if (herm) {
      Eigen::MatrixXcd blk = (-t) * u * id;
      if (cf.any_W)
        blk += cplx(0.0, -hbar / (4.0 * h)) * u * (cf.W[i] + cf.W[j]);
      blk *= g;
      add_block(i, j, blk);
      add_block(j, i, blk.adjoint());
    } else {
      Eigen::MatrixXcd fwd = (-t) * u * id;
      Eigen::MatrixXcd bwd = (-t) * std::conj(u) * id;
      if (cf.any_W) {
        fwd += cplx(0.0, -hbar / (2.0 * h)) * u * cf.W[i];
        bwd += cplx(0.0, hbar / (2.0 * h)) * std::conj(u) * cf.W[j];
      }
      add_block(i, j, fwd * g);
      add_block(j, i, bwd * std::conj(g));
    }
  }
  return trip;
}

// lower bound for the spectrum, used as the shift-invert shift
double spectral_floor(const EffectiveModel1D& model, const Grid1D& grid) {
  const Samples cf = sample_coefficients(model, grid);
  double vmin = 0.0, wmax = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    if (model.spin_dim == 1) {
      vmin = std::min(vmin, cf.V[i](0, 0).real());
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cf.V[i]);
      vmin = std::min(vmin, es.eigenvalues()(0));
    }
    wmax = std::max(wmax, cf.W[i].norm());
  }
  return vmin - hbar * wmax / grid.h() - 1.0;
}

void sort_complex(Eigen::VectorXcd& values, Eigen::MatrixXcd& vectors) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (values(a).real() != values(b).real())
      return values(a).real() < values(b).real();
    return values(a).imag() < values(b).imag();
  });
  Eigen::VectorXcd sv(values.size());
  Eigen::MatrixXcd svec(vectors.rows(), vectors.cols());
  for (int p = 0; p < values.size(); ++p) {
    sv(p) = values(idx[p]);
    svec.col(p) = vectors.col(idx[p]);
  }
  values.swap(sv);
  vectors.swap(svec);
}

Eigenpairs solve_single(const EffectiveModel1D& model, const Grid1D& grid,
                        const SolveOptions& opt) {
  const int dof = grid.n * model.spin_dim;
  const int k = std::min(opt.k_lowest, dof);
  Eigenpairs out;

  if (model.mode == OperatorMode::PaperVerbatim) {
    if (dof > 4096)
      throw NumericError(
          "paper_verbatim models are diagonalized densely; grid too large");
    const Eigen::MatrixXcd hmat = assemble_dense(model, grid);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(hmat);
    if (es.info() != Eigen::Success)
      throw NumericError("dense complex eigensolve failed");
    Eigen::VectorXcd values = es.eigenvalues();
    Eigen::MatrixXcd vectors = es.eigenvectors();
    sort_complex(values, vectors);
    out.energies_raw = values.head(k);
    out.vectors = vectors.leftCols(k);
    out.energies = out.energies_raw.real();
    out.verbatim_complex = true;
    out.max_imag = out.energies_raw.imag().cwiseAbs().maxCoeff();
    return out;
  }

  if (dof <= opt.dense_cutoff) {
    const Eigen::MatrixXcd hmat = assemble_dense(model, grid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hmat);
    if (es.info() != Eigen::Success)
      throw NumericError("dense eigensolve failed");
    out.energies = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
  } else {
    Eigen::SparseMatrix<cplx> hs = assemble_sparse(model, grid);
    const double sigma = spectral_floor(model, grid);
    Eigen::SparseMatrix<cplx> shifted = hs;
    for (int i = 0; i < dof; ++i) shifted.coeffRef(i, i) -= sigma;
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success)
      throw NumericError("sparse factorization failed in shift-invert");
    ApplyFn apply_h = [&hs](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
      y = hs * x;
    };
    ApplyFn solve = [&lu](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
      y = lu.solve(x);
    };
    IterativeOptions iopt;
    iopt.k = k;
    iopt.max_iter = opt.max_iter;
    iopt.tol = opt.tol;
    iopt.seed = opt.seed;
    const IterativeResult r = shift_invert_lowest(dof, apply_h, solve, iopt);
    out.energies = r.values;
    out.vectors = r.vectors;
  }
  out.energies_raw = out.energies.cast<cplx>();
  return out;
}

} // namespace

Eigen::MatrixXcd assemble_dense(const EffectiveModel1D& model,
                                const Grid1D& grid) {
  const int dof = grid.n * model.spin_dim;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dof, dof);
  for (const auto& t : assemble_triplets(model, grid))
    h(t.row(), t.col()) += t.value();
  return h;
}

Eigen::SparseMatrix<cplx> assemble_sparse(const EffectiveModel1D& model,
                                          const Grid1D& grid) {
  const int dof = grid.n * model.spin_dim;
  const auto trip = assemble_triplets(model, grid);
  Eigen::SparseMatrix<cplx> h(dof, dof);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

Eigenpairs solve_fd(const EffectiveModel1D& model, const Grid1D& grid,
                    const SolveOptions& opt) {
  grid.validate();
  if (!opt.richardson) return solve_single(model, grid, opt);

  if (grid.n % 2 != 0 || grid.n / 2 < 16)
    throw ConfigError("richardson combination needs even n with n/2 >= 16");
  SolveOptions single = opt;
  single.richardson = false;
  Grid1D coarse_grid = grid;
  coarse_grid.n = grid.n / 2;
  Eigenpairs fine = solve_single(model, grid, single);
  const Eigenpairs coarse = solve_single(model, coarse_grid, single);
  const int k = static_cast<int>(
      std::min(fine.energies_raw.size(), coarse.energies_raw.size()));
  fine.energies_raw =
      ((4.0 * fine.energies_raw.head(k) - coarse.energies_raw.head(k)) / 3.0)
          .eval();
  fine.energies = fine.energies_raw.real();
  if (fine.verbatim_complex)
    fine.max_imag = fine.energies_raw.imag().cwiseAbs().maxCoeff();
  fine.richardson_applied = true;
  return fine;
}

namespace {

void check_periodicity(const EffectiveModel1D& model, double period) {
  int checked = 0;
  double worst = 0.0;
  for (int j = 0; j < 5; ++j) {
    const double s = period * j / 4.0;
    double a1, a2;
    Eigen::MatrixXcd v1, v2, w1, w2;
    try {
      a1 = model.A_at(s);
      v1 = model.V_at(s);
      w1 = model.W_at(s);
      a2 = model.A_at(s + period);
      v2 = model.V_at(s + period);
      w2 = model.W_at(s + period);
    } catch (const ConfigError&) {
      continue; // translate falls outside the model's domain
    }
    ++checked;
    worst = std::max(worst, std::abs(a1 - a2));
    worst = std::max(worst, (v1 - v2).norm());
    worst = std::max(worst, (w1 - w2).norm());
  }
  if (checked == 0)
    throw ConfigError("model domain is shorter than one period");
  if (worst > 1e-10)
    throw ConfigError("model coefficients are not periodic over the given "
                      "period (max seam mismatch " +
                      format_float(worst) + ")");
}

} // namespace

BandStructure bloch_bands(const EffectiveModel1D& model, double period,
                          int n_k, int n_cell, int n_bands,
                          const SolveOptions& opt, SpinorPhase phase) {
  if (!(period > 0.0)) throw ConfigError("period must be positive");
  if (n_k < 2) throw ConfigError("band sweep needs at least 2 k points");
  if (n_bands < 1) throw ConfigError("band sweep needs at least 1 band");
  check_periodicity(model, period);

  const int retrieved = n_bands + 2;
  SolveOptions kopt = opt;
  kopt.k_lowest = retrieved;
  kopt.richardson = false; // per-k Richardson would decouple orderings

  BandStructure out;
  out.period = period;
  out.spinor_phase = phase;
  out.k.resize(n_k);
  out.energies.resize(n_k, n_bands);
  out.energies_im.resize(n_k, n_bands);

  Eigen::MatrixXcd prev; // continuity reference: n_bands ordered columns
  for (int jk = 0; jk < n_k; ++jk) {
    const double k = -M_PI / period + (2.0 * M_PI / period) * jk / n_k;
    out.k[jk] = k;
    Grid1D grid;
    grid.length = period;
    grid.n = n_cell;
    grid.boundary = BoundaryKind::Bloch;
    grid.bloch_k = k;
    grid.spinor_phase = phase;
    const Eigenpairs ep = solve_fd(model, grid, kopt);
    const int m = static_cast<int>(ep.energies_raw.size());
    if (m < n_bands) throw NumericError("solver returned too few bands");

    std::vector<int> order(n_bands);
    if (prev.cols() == 0) {
      std::iota(order.begin(), order.end(), 0);
    } else {
      // greedy max-overlap assignment against the previous k point
      const Eigen::MatrixXd ov = (prev.adjoint() * ep.vectors).cwiseAbs();
      std::fill(order.begin(), order.end(), -1);
      std::vector<bool> taken(m, false);
      for (int step = 0; step < n_bands; ++step) {
        int bi = -1, bj = -1;
        double best = -1.0;
        for (int i = 0; i < n_bands; ++i) {
          if (order[i] >= 0) continue;
          for (int j = 0; j < m; ++j) {
            if (taken[j]) continue;
            if (ov(i, j) > best) {
              best = ov(i, j);
              bi = i;
              bj = j;
            }
          }
        }
        order[bi] = bj;
        taken[bj] = true;
      }
    }

    Eigen::MatrixXcd ordered(ep.vectors.rows(), n_bands);
    for (int b = 0; b < n_bands; ++b) {
      out.energies(jk, b) = ep.energies_raw(order[b]).real();
      out.energies_im(jk, b) = ep.energies_raw(order[b]).imag();
      ordered.col(b) = ep.vectors.col(order[b]);
    }
    prev = std::move(ordered);
  }
  return out;
}

std::string bands_to_csv(const BandStructure& bands) {
  std::string out = "k,branch,energy_re,energy_im\n";
  for (size_t jk = 0; jk < bands.k.size(); ++jk)
    for (int b = 0; b < bands.energies.cols(); ++b) {
      out += format_float(bands.k[jk]);
      out += ',';
      out += std::to_string(b);
      out += ',';
      out += format_float(bands.energies(jk, b));
      out += ',';
      out += format_float(bands.energies_im(jk, b));
      out += '\n';
    }
  return out;
}

std::vector<DispersionSample> helix_dispersion(
    const Curve& geom, HelixCase which, const HelixDispersionParams& par,
    const std::vector<double>& p_values) {
  if (!geom.constant_invariants())
    throw NumericError("closed-form dispersions need constant curvature and "
                       "torsion; use solve_fd for this geometry");
  double kappa, tau;
  geom.kappa_tau_at(0.0, kappa, tau);
  const double m = par.mass;
  const int l = par.l;
  const double gp = hbar * hbar * kappa * kappa / (8.0 * m);
  const double mu = -hbar * par.charge / (2.0 * m);

  std::vector<DispersionSample> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    DispersionSample d;
    d.p = p;
    d.im_component = 0.0;
    switch (which) {
      case HelixCase::SpinlessCircular: {
        const double qp = p - l * hbar * tau;
        const double qm = p + l * hbar * tau;
        d.E_plus = qp * qp / (2.0 * m) - gp;
        d.E_minus = qm * qm / (2.0 * m) - gp;
        break;
      }
      case HelixCase::ChargedCircular: {
        const double shift = par.charge * par.A_s_bar;
        const double qp = p - l * hbar * tau - shift;
        const double qm = p + l * hbar * tau - shift;
        const double zeeman = par.B_s * l * mu;
        const double pot = par.charge * par.A_0;
        d.E_plus = qp * qp / (2.0 * m) - gp + zeeman - pot;
        d.E_minus = qm * qm / (2.0 * m) - gp - zeeman - pot;
        break;
      }
      case HelixCase::Soc: {
        const double qp = p - l * hbar * tau;
        const double qm = p + l * hbar * tau;
        const double soc_s = hbar * kappa * par.soc.alpha_s / 2.0;
        d.E_plus = qp * qp / (2.0 * m) - gp + soc_s +
                   2.0 * par.soc.alpha_b * (p - l * hbar * tau / 2.0);
        d.E_minus = qm * qm / (2.0 * m) - gp - soc_s +
                    2.0 * par.soc.alpha_b * (p + l * hbar * tau / 2.0);
        d.im_component = -hbar * par.soc.alpha_n * tau / 2.0;
        break;
      }
    }
    out.push_back(d);
  }
  return out;
}

} // namespace geomq
