#include "geomq/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

namespace geomq {

namespace {

// SVQB orthonormalization: S <- S U diag(lambda)^(-1/2) for the eigenpairs of
// S^H S above a relative rank cutoff.  Returns the retained column count.
int svqb(Eigen::MatrixXcd& s, double drop = 1e-12) {
  if (s.cols() == 0) return 0;
  const Eigen::MatrixXcd gram = s.adjoint() * s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cut = drop * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  int keep = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) ++keep;
  if (keep == 0) {
    s.resize(s.rows(), 0);
    return 0;
  }
  // keep the largest (they are ascending from Eigen)
  Eigen::MatrixXcd u = es.eigenvectors().rightCols(keep);
  Eigen::VectorXd scale =
      ev.tail(keep).cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  s = s * u * scale.asDiagonal();
  return keep;
}

// project out an orthonormal basis q from s (applied twice for stability)
void ortho_against(const Eigen::MatrixXcd& q, Eigen::MatrixXcd& s) {
  if (q.cols() == 0 || s.cols() == 0) return;
  s -= q * (q.adjoint() * s);
  s -= q * (q.adjoint() * s);
}

[[noreturn]] void throw_not_converged(
    const char* what, const Eigen::VectorXd& resid,
    const std::vector<Eigen::VectorXd>& ritz_history = {}) {
  std::string msg = what;
  msg += " did not converge; residual norms:";
  char buf[32];
  for (int i = 0; i < resid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.3e", resid(i));
    msg += buf;
  }
  if (!ritz_history.empty()) {
    msg += "; recent Ritz values:";
    for (const auto& lam : ritz_history) {
      msg += " [";
      for (int i = 0; i < lam.size(); ++i) {
        std::snprintf(buf, sizeof(buf), i ? " %.9e" : "%.9e", lam(i));
        msg += buf;
      }
      msg += "]";
    }
  }
  throw NumericError(msg);
}

Eigen::MatrixXcd apply_block(const ApplyFn& op, const Eigen::MatrixXcd& x) {
  Eigen::MatrixXcd y(x.rows(), x.cols());
  Eigen::VectorXcd in(x.rows()), out(x.rows());
  for (int j = 0; j < x.cols(); ++j) {
    in = x.col(j);
    op(in, out);
    y.col(j) = out;
  }
  return y;
}

// dense fallback for operators too small for a meaningful Krylov subspace
IterativeResult dense_by_materialization(int dim, const ApplyFn& apply_h,
                                         int k) {
  Eigen::MatrixXcd h(dim, dim);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim), col(dim);
  for (int j = 0; j < dim; ++j) {
    e(j) = 1.0;
    apply_h(e, col);
    h.col(j) = col;
    e(j) = 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      0.5 * (h + h.adjoint().eval()));
  IterativeResult r;
  r.values = es.eigenvalues().head(k);
  r.vectors = es.eigenvectors().leftCols(k);
  r.converged = true;
  r.max_residual = 0.0;
  for (int j = 0; j < k; ++j)
    r.max_residual = std::max(
        r.max_residual,
        (h * r.vectors.col(j) - r.values(j) * r.vectors.col(j)).norm());
  return r;
}

} // namespace

Eigen::MatrixXcd seeded_block(int dim, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  Eigen::MatrixXcd b(dim, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < dim; ++i) {
      // two draws per entry, mapped to [-1, 1): pinned arithmetic, no
      // distribution objects
      const double re = (static_cast<double>(rng()) + 0.5) / 2147483648.0 - 1.0;
      const double im = (static_cast<double>(rng()) + 0.5) / 2147483648.0 - 1.0;
      b(i, j) = cplx(re, im);
    }
  return b;
}

IterativeResult shift_invert_lowest(int dim, const ApplyFn& apply_h,
                                    const ApplyFn& solve_shifted,
                                    const IterativeOptions& opt) {
  if (opt.k < 1) throw ConfigError("eigensolver needs k >= 1");
  if (dim < opt.k) throw ConfigError("operator dimension smaller than k");
  const int block = std::min(std::max(2, 1 + opt.k / 4), dim);
  if (dim <= 4 * (opt.k + block))
    return dense_by_materialization(dim, apply_h, opt.k);

  const int m_cap = std::min(dim, std::max(8 * opt.k + 40, 120));
  Eigen::MatrixXcd q(dim, 0), hq(dim, 0);
  Eigen::MatrixXcd next = seeded_block(dim, block, opt.seed);

  IterativeResult result;
  Eigen::VectorXd resid = Eigen::VectorXd::Constant(opt.k, -1.0);
  int iter = 0;
  while (true) {
    ++iter;
    ortho_against(q, next);
    const int kept = svqb(next);
    if (kept == 0) {
      // Krylov space exhausted; top up with fresh directions
      next = seeded_block(dim, block, opt.seed + 977u * iter);
      ortho_against(q, next);
      if (svqb(next) == 0) break;
    }
    const int old = static_cast<int>(q.cols());
    q.conservativeResize(Eigen::NoChange, old + next.cols());
    q.rightCols(next.cols()) = next;
    hq.conservativeResize(Eigen::NoChange, old + next.cols());
    hq.rightCols(next.cols()) = apply_block(apply_h, next);

    // Rayleigh-Ritz with H itself
    const Eigen::MatrixXcd a = q.adjoint() * hq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (a + a.adjoint().eval()));
    const int m = static_cast<int>(q.cols());
    const int want = std::min(opt.k, m);
    const Eigen::MatrixXcd y = es.eigenvectors().leftCols(want);
    const Eigen::MatrixXcd xv = q * y;
    const Eigen::MatrixXcd hxv = hq * y;
    bool all_ok = (want == opt.k);
    for (int j = 0; j < want; ++j) {
      resid(j) = (hxv.col(j) - es.eigenvalues()(j) * xv.col(j)).norm();
      if (resid(j) > opt.tol) all_ok = false;
    }
    if (all_ok) {
      result.values = es.eigenvalues().head(opt.k);
      result.vectors = xv;
      result.iterations = iter;
      result.max_residual = resid.maxCoeff();
      result.converged = true;
      return result;
    }
    if (m >= m_cap || iter >= opt.max_iter) break;
    next = apply_block(solve_shifted, q.rightCols(std::min<int>(block, m)));
  }
  throw_not_converged("shift-invert eigensolver", resid);
}

IterativeResult lobpcg_lowest(int dim, const ApplyFn& apply_h,
                              const ApplyFn& precond,
                              const IterativeOptions& opt) {
  if (opt.k < 1) throw ConfigError("eigensolver needs k >= 1");
  if (dim < opt.k) throw ConfigError("operator dimension smaller than k");
  int bs = std::min(opt.k + std::max(0, opt.block_extra), dim / 3);
  bs = std::max(bs, opt.k);
  if (dim <= 4 * bs) return dense_by_materialization(dim, apply_h, opt.k);

  Eigen::MatrixXcd x = seeded_block(dim, bs, opt.seed);
  Eigen::MatrixXcd hx;
  Eigen::MatrixXcd p(dim, 0);
  Eigen::VectorXd lambda;
  Eigen::VectorXd resid = Eigen::VectorXd::Constant(opt.k, -1.0);
  std::vector<Eigen::VectorXd> ritz_history;

  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    // Re-orthonormalize x and recompute H x fresh every sweep.  Recombining
    // either one from the subspace algebra lets roundoff accumulate and puts
    // a floor of roughly iter * eps * |H| under the residuals.
    svqb(x);
    hx = apply_block(apply_h, x);
    // Ritz rotation inside span(x)
    {
      const Eigen::MatrixXcd a = x.adjoint() * hx;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
          0.5 * (a + a.adjoint().eval()));
      x = x * es.eigenvectors();
      hx = hx * es.eigenvectors();
      lambda = es.eigenvalues();
    }
    ritz_history.push_back(lambda.head(opt.k));
    if (ritz_history.size() > 6) ritz_history.erase(ritz_history.begin());
    Eigen::MatrixXcd r = hx - x * lambda.asDiagonal();
    bool done = true;
    for (int j = 0; j < opt.k; ++j) {
      resid(j) = r.col(j).norm();
      if (resid(j) > opt.tol) done = false;
    }
    if (done) {
      IterativeResult out;
      out.values = lambda.head(opt.k);
      out.vectors = x.leftCols(opt.k);
      out.iterations = iter;
      out.max_residual = resid.head(opt.k).maxCoeff();
      out.converged = true;
      return out;
    }

    // soft locking: converged columns stop contributing search directions
    std::vector<int> active;
    for (int j = 0; j < bs; ++j)
      if (r.col(j).norm() > opt.tol) active.push_back(j);
    Eigen::MatrixXcd w(dim, static_cast<int>(active.size()));
    for (size_t j = 0; j < active.size(); ++j) w.col(j) = r.col(active[j]);
    if (precond) w = apply_block(precond, w);

    // make [x w p] orthonormal block by block so the subspace Gram is I;
    // two rounds, because normalizing near-converged (tiny) columns amplifies
    // whatever projection residue a single round leaves behind
    for (int round = 0; round < 2; ++round) {
      ortho_against(x, w);
      svqb(w);
    }
    for (int round = 0; round < 2; ++round) {
      ortho_against(x, p);
      ortho_against(w, p);
      svqb(p);
    }

    const int nw = static_cast<int>(w.cols());
    const int np = static_cast<int>(p.cols());
    if (nw + np == 0)
      throw NumericError("lobpcg stalled: no usable search directions");
    Eigen::MatrixXcd s(dim, bs + nw + np);
    s.leftCols(bs) = x;
    s.middleCols(bs, nw) = w;
    if (np) s.rightCols(np) = p;

    Eigen::MatrixXcd hs(dim, s.cols());
    hs.leftCols(bs) = hx;
    hs.middleCols(bs, nw) = apply_block(apply_h, w);
    if (np) hs.rightCols(np) = apply_block(apply_h, p);

    const Eigen::MatrixXcd a = s.adjoint() * hs;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (a + a.adjoint().eval()));
    const Eigen::MatrixXcd y = es.eigenvectors().leftCols(bs);

    // new iterate; p carries only the w/p contribution
    Eigen::MatrixXcd ywp = y;
    ywp.topRows(bs).setZero();
    p = s * ywp;
    x = s * y;
  }
  throw_not_converged("lobpcg eigensolver", resid, ritz_history);
}

} // namespace geomq
