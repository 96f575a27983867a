#include "geomq/effective.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace geomq {

using nlohmann::json;

std::string to_string(OperatorMode mode) {
  return mode == OperatorMode::PaperVerbatim ? "paper_verbatim" : "hermitized";
}

OperatorMode operator_mode_from_string(const std::string& s) {
  if (s == "paper_verbatim") return OperatorMode::PaperVerbatim;
  if (s == "hermitized") return OperatorMode::Hermitized;
  throw ConfigError("unknown operator mode: " + s);
}

Eigen::MatrixXcd EffectiveModel1D::V_at(double s) const {
  return V ? V(s) : Eigen::MatrixXcd::Zero(spin_dim, spin_dim).eval();
}

Eigen::MatrixXcd EffectiveModel1D::W_at(double s) const {
  return W ? W(s) : Eigen::MatrixXcd::Zero(spin_dim, spin_dim).eval();
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Eigen::Matrix2cd pauli_y() {
  Eigen::Matrix2cd m;
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}

Eigen::Matrix2cd sigma_dot(const Vec3& v) {
  return v.x() * pauli_x() + v.y() * pauli_y() + v.z() * pauli_z();
}

namespace {

json curve_info(const Curve& geom) { return curve_spec_to_json(geom.spec()); }

json builder_info(const char* name, const Curve& geom, json params) {
  json j;
  j["builder"] = name;
  j["curve"] = curve_info(geom);
  j["params"] = std::move(params);
  return j;
}

double eval_or_zero(const std::function<double(double)>& f, double s) {
  return f ? f(s) : 0.0;
}

} // namespace

EffectiveModel1D build_spinless_square(const Curve& geom, double mass) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveModel1D m;
  m.mass = mass;
  m.spin_dim = 1;
  m.mode = OperatorMode::Hermitized;
  m.V = [c, mass](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = -hbar * hbar * (kappa * kappa / 8.0 + tau * tau / 4.0) / mass;
    return v;
  };
  m.info = builder_info("spinless_square", geom, json{{"mass", mass}});
  return m;
}

EffectiveModel1D build_spinless_circular(const Curve& geom, int l, double mass) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveModel1D m;
  m.mass = mass;
  m.spin_dim = 1;
  m.mode = OperatorMode::Hermitized;
  m.A = [c, l](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    return l * hbar * tau;
  };
  m.V = [c, mass](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = -hbar * hbar * kappa * kappa / (8.0 * mass);
    return v;
  };
  m.info = builder_info("spinless_circular", geom,
                        json{{"mass", mass}, {"l", l}});
  return m;
}

EffectiveModel1D build_charged_square(const Curve& geom, const EMField& em,
                                      double charge, double mass) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveModel1D m;
  m.mass = mass;
  m.spin_dim = 1;
  m.mode = OperatorMode::Hermitized;
  EMField field = em;
  m.A = [field, charge](double s) {
    return charge * eval_or_zero(field.A_s_bar, s);
  };
  m.V = [c, field, charge, mass](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = -hbar * hbar * (kappa * kappa / 8.0 + tau * tau / 4.0) / mass -
              charge * eval_or_zero(field.A_0, s);
    return v;
  };
  m.info = builder_info("charged_square", geom,
                        json{{"mass", mass}, {"charge", charge}});
  return m;
}

EffectiveModel1D build_charged_circular(const Curve& geom, const EMField& em,
                                        int l, double charge, double mass) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveModel1D m;
  m.mass = mass;
  m.spin_dim = 1;
  m.mode = OperatorMode::Hermitized;
  EMField field = em;
  m.A = [c, field, l, charge](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    return l * hbar * tau + charge * eval_or_zero(field.A_s_bar, s);
  };
  // geometrically induced magnetic moment mu_g = l mu, mu = -hbar e / 2m
  const double mu = -hbar * charge / (2.0 * mass);
  m.V = [c, field, l, charge, mass, mu](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    Eigen::MatrixXcd v(1, 1);
    v(0, 0) = -hbar * hbar * kappa * kappa / (8.0 * mass) +
              eval_or_zero(field.B_s, s) * l * mu -
              charge * eval_or_zero(field.A_0, s);
    return v;
  };
  m.info = builder_info("charged_circular", geom,
                        json{{"mass", mass}, {"charge", charge}, {"l", l}});
  return m;
}

EffectiveModel1D build_soc_square(const Curve& geom, const SOCParams& soc,
                                  double mass) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveModel1D m;
  m.mass = mass;
  m.spin_dim = 2;
  m.mode = OperatorMode::PaperVerbatim;
  m.W = [c, soc](double s) {
    const FrameSample f = c->frame_at(s);
    return Eigen::MatrixXcd(soc.alpha_n * sigma_dot(f.b) -
                            soc.alpha_b * sigma_dot(f.n));
  };
  m.V = [c, soc, mass](double s) {
    const FrameSample f = c->frame_at(s);
    const double k = f.kappa, t = f.tau;
    const Eigen::Matrix2cd ss = sigma_dot(f.t);
    const Eigen::Matrix2cd sn = sigma_dot(f.n);
    const Eigen::Matrix2cd sb = sigma_dot(f.b);
    Eigen::Matrix2cd v =
        (-hbar * hbar * (k * k / 8.0 + t * t / 4.0) / mass) *
        Eigen::Matrix2cd::Identity();
    v -= cplx(0, 1) * hbar * (k / 2.0) * (soc.alpha_s * sb - soc.alpha_b * ss);
    v += cplx(0, 1) * hbar * (t / 2.0) * (soc.alpha_n * sn + soc.alpha_b * sb);
    return Eigen::MatrixXcd(v);
  };
  m.info = builder_info("soc_square", geom,
                        json{{"mass", mass},
                             {"alpha_s", soc.alpha_s},
                             {"alpha_n", soc.alpha_n},
                             {"alpha_b", soc.alpha_b}});
  return m;
}

EffectiveModel1D build_soc_circular(const Curve& geom, const SOCParams& soc,
                                    int l, double mass, bool ag_full_coupling) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveModel1D m;
  m.mass = mass;
  m.spin_dim = 2;
  m.mode = OperatorMode::PaperVerbatim;
  m.A = [c, l](double s) {
    double kappa, tau;
    c->kappa_tau_at(s, kappa, tau);
    return l * hbar * tau;
  };
  m.W = [c, soc](double s) {
    const FrameSample f = c->frame_at(s);
    return Eigen::MatrixXcd(soc.alpha_n * sigma_dot(f.b) -
                            soc.alpha_b * sigma_dot(f.n));
  };
  m.V = [c, soc, l, mass, ag_full_coupling](double s) {
    const FrameSample f = c->frame_at(s);
    const double k = f.kappa, t = f.tau;
    const Eigen::Matrix2cd ss = sigma_dot(f.t);
    const Eigen::Matrix2cd sn = sigma_dot(f.n);
    const Eigen::Matrix2cd sb = sigma_dot(f.b);
    Eigen::Matrix2cd v =
        (-hbar * hbar * k * k / (8.0 * mass)) * Eigen::Matrix2cd::Identity();
    v += cplx(0, 1) * hbar * (k / 8.0) * (soc.alpha_b * ss - 3.0 * soc.alpha_s * sb);
    v -= static_cast<double>(l) * hbar * (k / 4.0) *
         (soc.alpha_s * sn - 3.0 * soc.alpha_n * ss);
    v += cplx(0, 1) * hbar * (t / 4.0) * (soc.alpha_n * sn + soc.alpha_b * sb);
    if (!ag_full_coupling) {
      // first-order coupling written against (p_s - A/2): shifting it onto
      // the full covariant momentum leaves +W*A/2 in the potential
      const Eigen::Matrix2cd w = soc.alpha_n * sb - soc.alpha_b * sn;
      v += 0.5 * (l * hbar * t) * w;
    }
    return Eigen::MatrixXcd(v);
  };
  m.info = builder_info("soc_circular", geom,
                        json{{"mass", mass},
                             {"l", l},
                             {"alpha_s", soc.alpha_s},
                             {"alpha_n", soc.alpha_n},
                             {"alpha_b", soc.alpha_b},
                             {"ag_full_coupling", ag_full_coupling}});
  return m;
}

EffectiveMomentum effective_momentum(const Curve& geom, CrossSection cs) {
  auto c = std::make_shared<Curve>(geom);
  EffectiveMomentum p;
  p.tangent = [c](double s) { return c->frame_at(s).t; };
  if (cs == CrossSection::Square) {
    p.geometric = [c](double s) {
      const FrameSample f = c->frame_at(s);
      return Vec3(hbar * 0.5 * f.kappa * f.n);
    };
    p.geometric_vanishes = false;
  } else {
    p.geometric = [](double) { return Vec3(Vec3::Zero()); };
    p.geometric_vanishes = true;
  }
  return p;
}

EffectiveModel1D hermitized(const EffectiveModel1D& model, double s0, double s1,
                            int n_probe, HermitizeReport* report) {
  if (report) {
    report->max_antihermitian_V = 0.0;
    report->w_symmetrized = model.has_W();
    report->samples = n_probe;
    for (int i = 0; i < n_probe; ++i) {
      const double s = s0 + (s1 - s0) * (n_probe > 1 ? i / (n_probe - 1.0) : 0.0);
      const Eigen::MatrixXcd v = model.V_at(s);
      const Eigen::MatrixXcd anti = 0.5 * (v - v.adjoint().eval());
      // operator (spectral) norm, so the number is the worst energy shift
      const double a = anti.jacobiSvd().singularValues()(0);
      report->max_antihermitian_V = std::max(report->max_antihermitian_V, a);
    }
  }
  EffectiveModel1D out = model;
  out.mode = OperatorMode::Hermitized;
  if (model.V) {
    auto v0 = model.V;
    out.V = [v0](double s) {
      const Eigen::MatrixXcd v = v0(s);
      return Eigen::MatrixXcd(0.5 * (v + v.adjoint().eval()));
    };
  }
  if (!out.info.is_null()) out.info["hermitized_from_verbatim"] = true;
  return out;
}

EffectiveModel1D gauge_transform(const EffectiveModel1D& model,
                                 std::function<double(double)> lambda,
                                 std::function<double(double)> dlambda) {
  if (!lambda || !dlambda)
    throw ConfigError("gauge_transform needs Lambda and its derivative");
  EffectiveModel1D out = model;
  auto a0 = model.A;
  out.A = [a0, dlambda](double s) {
    return (a0 ? a0(s) : 0.0) + dlambda(s);
  };
  auto l0 = model.gauge_lambda;
  out.gauge_lambda = [l0, lambda](double s) {
    return (l0 ? l0(s) : 0.0) + lambda(s);
  };
  if (!out.info.is_null()) out.info["gauge_transformed"] = true;
  return out;
}

namespace {

// natural cubic spline through (x_i, y_i); linear for 2 points
class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    b[0] = 1.0;
    b[n - 1] = 1.0;
    for (int i = 1; i + 1 < n; ++i) {
      const double hi = x_[i] - x_[i - 1];
      const double hj = x_[i + 1] - x_[i];
      a[i] = hi / 6.0;
      b[i] = (hi + hj) / 3.0;
      c[i] = hj / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / hj - (y_[i] - y_[i - 1]) / hi;
    }
    // Thomas algorithm
    for (int i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double operator()(double s) const {
    const int n = static_cast<int>(x_.size());
    if (n == 0) return 0.0;
    if (n == 1) return y_[0];
    int lo = static_cast<int>(
        std::upper_bound(x_.begin(), x_.end(), s) - x_.begin());
    lo = std::clamp(lo - 1, 0, n - 2);
    const double h = x_[lo + 1] - x_[lo];
    const double u = (s - x_[lo]) / h;
    const double v = 1.0 - u;
    return v * y_[lo] + u * y_[lo + 1] +
           h * h / 6.0 *
               ((v * v * v - v) * m_[lo] + (u * u * u - u) * m_[lo + 1]);
  }

private:
  std::vector<double> x_, y_;
  std::vector<double> m_; // second derivatives at knots
};

json matrix_to_rows(const Eigen::MatrixXcd& m, bool imag_part) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(imag_part ? m(i, j).imag() : m(i, j).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace

json model_to_json(const EffectiveModel1D& model,
                   const std::vector<double>& s_values) {
  if (s_values.empty())
    throw ConfigError("model_to_json needs at least one sample point");
  json j;
  j["mass"] = model.mass;
  j["spin_dim"] = model.spin_dim;
  j["mode"] = to_string(model.mode);
  json samples = json::array();
  for (double s : s_values) {
    json row;
    row["s"] = s;
    row["A"] = model.A_at(s);
    const Eigen::MatrixXcd v = model.V_at(s);
    const Eigen::MatrixXcd w = model.W_at(s);
    row["V_re"] = matrix_to_rows(v, false);
    row["V_im"] = matrix_to_rows(v, true);
    row["W_re"] = matrix_to_rows(w, false);
    row["W_im"] = matrix_to_rows(w, true);
    samples.push_back(std::move(row));
  }
  j["samples"] = std::move(samples);
  if (!model.info.is_null()) j["info"] = model.info;
  return j;
}

EffectiveModel1D model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("samples") || !j["samples"].is_array() ||
      j["samples"].empty())
    throw ConfigError("model JSON needs a nonempty samples array");
  EffectiveModel1D m;
  m.mass = j.at("mass").get<double>();
  m.spin_dim = j.at("spin_dim").get<int>();
  if (m.spin_dim != 1 && m.spin_dim != 2)
    throw ConfigError("model spin_dim must be 1 or 2");
  m.mode = operator_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("info")) m.info = j["info"];

  const auto& samples = j["samples"];
  const int n = static_cast<int>(samples.size());
  const int d = m.spin_dim;
  std::vector<double> s(n), a(n);
  std::vector<std::vector<double>> vre(d * d, std::vector<double>(n));
  std::vector<std::vector<double>> vim(d * d, std::vector<double>(n));
  std::vector<std::vector<double>> wre(d * d, std::vector<double>(n));
  std::vector<std::vector<double>> wim(d * d, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    const auto& row = samples[i];
    s[i] = row.at("s").get<double>();
    if (i > 0 && s[i] <= s[i - 1])
      throw ConfigError("model samples must have strictly increasing s");
    a[i] = row.at("A").get<double>();
    auto pull = [&](const char* key, std::vector<std::vector<double>>& dst) {
      const auto& rows = row.at(key);
      if (static_cast<int>(rows.size()) != d)
        throw ConfigError(std::string("model sample field ") + key +
                          " has wrong shape");
      for (int p = 0; p < d; ++p) {
        if (static_cast<int>(rows[p].size()) != d)
          throw ConfigError(std::string("model sample field ") + key +
                            " has wrong shape");
        for (int q = 0; q < d; ++q)
          dst[p * d + q][i] = rows[p][q].get<double>();
      }
    };
    pull("V_re", vre);
    pull("V_im", vim);
    pull("W_re", wre);
    pull("W_im", wim);
  }

  auto spline_a = std::make_shared<CubicSpline>(s, a);
  m.A = [spline_a](double sv) { return (*spline_a)(sv); };
  auto pack = [&](const std::vector<std::vector<double>>& re,
                  const std::vector<std::vector<double>>& im) {
    auto sp = std::make_shared<std::vector<CubicSpline>>();
    for (int p = 0; p < d * d; ++p) {
      sp->push_back(CubicSpline(s, re[p]));
      sp->push_back(CubicSpline(s, im[p]));
    }
    const int dim = d;
    return [sp, dim](double sv) {
      Eigen::MatrixXcd out(dim, dim);
      for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) {
          const int base = 2 * (p * dim + q);
          out(p, q) = cplx((*sp)[base](sv), (*sp)[base + 1](sv));
        }
      return out;
    };
  };
  m.V = pack(vre, vim);
  m.W = pack(wre, wim);
  return m;
}

json curve_spec_to_json(const CurveSpec& spec) {
  json j;
  switch (spec.kind) {
    case CurveKind::Line:
      j["kind"] = "line";
      break;
    case CurveKind::Circle:
      j["kind"] = "circle";
      j["R"] = spec.circle_R;
      break;
    case CurveKind::Helix:
      j["kind"] = "helix";
      j["r"] = spec.helix_r;
      j["c"] = spec.helix_c;
      break;
    case CurveKind::Parametric:
      j["kind"] = "parametric";
      j["x"] = spec.x.text();
      j["y"] = spec.y.text();
      j["z"] = spec.z.text();
      j["t0"] = spec.t0;
      j["t1"] = spec.t1;
      break;
  }
  return j;
}

CurveSpec curve_spec_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "line") return CurveSpec::line();
  if (kind == "circle") return CurveSpec::circle(j.at("R").get<double>());
  if (kind == "helix")
    return CurveSpec::helix(j.at("r").get<double>(), j.at("c").get<double>());
  if (kind == "parametric")
    return CurveSpec::parametric(
        j.at("x").get<std::string>(), j.at("y").get<std::string>(),
        j.at("z").get<std::string>(), j.at("t0").get<double>(),
        j.at("t1").get<double>());
  throw ConfigError("unknown curve kind: " + kind);
}

} // namespace geomq
