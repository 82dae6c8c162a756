#include "kgm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kgm/poisson.hpp"

namespace kgm {

namespace {

/// The integrals every functional here is built from.
struct Moments {
  double grad_u = 0;   // ∫|∇u|²
  double grad_phi = 0; // ∫|∇φ|², Coulomb exterior included
  double l2 = 0;       // ∫u²
  double phi_u2 = 0;   // ∫φu²
  double phi2_u2 = 0;  // ∫φ²u²
  double lp = 0;       // ∫|u|^p
};

Moments moments(const Field& u, const Field& phi, double p) {
  const Grid& g = u.grid();
  if (!(u.grid() == phi.grid())) throw InvalidArgument("diagnostics: u and phi live on different grids");
  const Vector u2 = u.values().square();
  Moments m;
  m.grad_u = dirichlet_energy(u);
  m.grad_phi = potential_dirichlet_energy(phi);
  m.l2 = integrate3d(g, u2);
  m.phi_u2 = integrate3d(g, Vector(phi.values() * u2));
  m.phi2_u2 = integrate3d(g, Vector(phi.values().square() * u2));
  m.lp = integrate3d(g, Vector(u.values().abs().pow(p)));
  return m;
}

double action_from(const Moments& m, const ModelParams& q) {
  const double e = q.e;
  return 0.5 * (m.grad_u - m.grad_phi + q.epsilon * m.l2 + 2 * e * q.omega * m.phi_u2 - e * e * m.phi2_u2) -
         m.lp / q.p;
}

struct Line {
  double slope = 0;
  double residual = 0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Line line;
  line.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + line.slope * (x[i] - mx));
    ss += r * r;
  }
  line.residual = std::sqrt(ss / n);
  return line;
}

}  // namespace

double nehari_residual(const Field& u, const Field& phi, const ModelParams& params) {
  const Moments m = moments(u, phi, params.p);
  if (!(m.lp > 0)) throw InvalidArgument("nehari_residual: u vanishes");
  const double e = params.e;
  const double quad = m.grad_u + params.epsilon * m.l2 + e * (2 * params.omega * m.phi_u2 - e * m.phi2_u2);
  return std::abs(quad - m.lp) / m.lp;
}

double pohozaev_defect(const Field& u, const Field& phi, const ModelParams& params) {
  const Moments m = moments(u, phi, params.p);
  if (!(m.lp > 0)) throw InvalidArgument("pohozaev_residual: u vanishes (0/0)");
  const double e = params.e;
  const double d = 0.5 * (m.grad_u - m.grad_phi) +
                   1.5 * (params.epsilon * m.l2 + 2 * e * params.omega * m.phi_u2 - e * e * m.phi2_u2) -
                   3 * m.lp / params.p;
  return d / (3 * m.lp / params.p);
}

double pohozaev_residual(const Field& u, const Field& phi, const ModelParams& params) {
  return std::abs(pohozaev_defect(u, phi, params));
}

double action(const Field& u, const Field& phi, const ModelParams& params) {
  return action_from(moments(u, phi, params.p), params);
}

double dilation_derivative(const Field& u, const Field& phi, const ModelParams& params, double step) {
  if (!(step > 0 && step < 0.5)) throw InvalidArgument("dilation_derivative: step must lie in (0, 0.5)");
  auto dilated_action = [&](double lambda) {
    auto g = std::make_shared<const Grid>(u.grid().dilated(lambda));
    return action(Field(g, u.values()), Field(g, phi.values()), params);
  };
  const double lp = integrate3d(u.grid(), Vector(u.values().abs().pow(params.p)));
  if (!(lp > 0)) throw InvalidArgument("dilation_derivative: u vanishes");
  const double derivative = (dilated_action(1 + step) - dilated_action(1 - step)) / (2 * step);
  return derivative / (3 * lp / params.p);
}

EnergyCharge energy_and_charge(const Field& u, const Field& phi, const ModelParams& params) {
  const Moments m = moments(u, phi, params.p);
  const double e = params.e, w = params.omega;
  const double mass_term = params.epsilon + 2 * w * w;  // m² + ω²
  EnergyCharge ec;
  ec.energy = 0.5 * (m.grad_u + m.grad_phi + mass_term * m.l2 - 2 * e * w * m.phi_u2 + e * e * m.phi2_u2 -
                     2 * m.lp / params.p);
  ec.charge = e * (e * m.phi_u2 - w * m.l2);
  if (!std::isfinite(ec.energy) || !std::isfinite(ec.charge))
    throw InternalError("energy_and_charge: non-finite quadrature");
  return ec;
}

FunctionalValues functional_values(const Field& u, const Field& phi, const ModelParams& params) {
  const Moments m = moments(u, phi, params.p);
  const double e = params.e, w = params.omega;
  FunctionalValues f;
  f.I_value = action_from(m, params);
  const double common = m.grad_u + params.epsilon * m.l2;
  f.J_paper_value = 0.5 * (common + e * (2 * w * m.phi_u2 - e * m.phi2_u2)) - m.lp / params.p;
  f.J_standard_value = 0.5 * (common + e * w * m.phi_u2) - m.lp / params.p;
  f.functional_gap = f.J_paper_value - f.J_standard_value - 0.5 * m.grad_phi;
  const double scale = 0.5 * m.grad_phi;
  f.functional_gap_relative = scale > 0 ? std::abs(f.functional_gap) / scale : std::abs(f.functional_gap);
  return f;
}

const char* to_string(DecayModel m) {
  switch (m) {
    case DecayModel::exponential: return "exponential";
    case DecayModel::stretched: return "stretched";
    case DecayModel::unavailable: return "unavailable";
  }
  return "unavailable";
}

DecayModel decay_model_from_string(const std::string& s) {
  if (s == "exponential") return DecayModel::exponential;
  if (s == "stretched") return DecayModel::stretched;
  if (s == "unavailable") return DecayModel::unavailable;
  throw InvalidArgument("unknown decay model '" + s + "'");
}

DecayFit decay_fit(const Field& u, Window window) {
  const Grid& g = u.grid();
  std::vector<double> r, sr, y;
  for (Index i = 1; i < g.size(); ++i) {
    const double ri = g.r(i);
    if (ri < window.lo || ri > window.hi || !(u(i) > 0)) continue;
    r.push_back(ri);
    sr.push_back(std::sqrt(ri));
    y.push_back(std::log(ri * u(i)));
  }
  if (r.size() < 3) throw InvalidArgument("decay_fit: window holds fewer than three usable nodes");
  const Line exp_line = least_squares(r, y);
  const Line sqrt_line = least_squares(sr, y);
  DecayFit fit;
  fit.exp_rate = -exp_line.slope;
  fit.sqrt_rate = -sqrt_line.slope;
  fit.exp_residual = exp_line.residual;
  fit.sqrt_residual = sqrt_line.residual;
  fit.preference = exp_line.residual <= sqrt_line.residual ? DecayModel::exponential : DecayModel::stretched;
  fit.samples = static_cast<Index>(r.size());
  return fit;
}

Window tail_window(const Field& u) {
  const Grid& g = u.grid();
  const double floor = 10 * std::numeric_limits<double>::min();
  const double top = 1e-3 * u(0);
  Window w{g.r_max(), 0};
  for (Index i = 1; i < g.size(); ++i) {
    if (u(i) < top) {
      w.lo = g.r(i);
      break;
    }
  }
  for (Index i = g.intervals(); i > 0; --i) {
    if (u(i) > floor) {
      w.hi = g.r(i);
      break;
    }
  }
  return w;
}

CoulombTail coulomb_tail(const Field& phi, Window window) {
  const Grid& g = phi.grid();
  if (!(window.lo >= 1 && window.hi <= g.r_max() * (1 + 1e-12) && window.lo < window.hi))
    throw InvalidArgument("coulomb_tail: window must lie in [1, R_max]");
  const Vector rphi = g.nodes() * phi.values();
  CoulombTail t;
  t.K1 = std::numeric_limits<double>::infinity();
  t.K2 = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < g.size(); ++i) {
    if (g.r(i) < window.lo || g.r(i) > window.hi) continue;
    t.K1 = std::min(t.K1, rphi(i));
    t.K2 = std::max(t.K2, rphi(i));
  }
  if (!std::isfinite(t.K1)) throw InvalidArgument("coulomb_tail: window contains no nodes");
  const Vector c = cumulative_radial(g, rphi);
  const double hi = std::min(window.hi, g.r_max());
  t.K_estimate = (cumulative_at(g, rphi, c, hi) - cumulative_at(g, rphi, c, window.lo)) / (hi - window.lo);
  t.envelope_ratio = t.K1 > 0 ? t.K2 / t.K1 : 0;
  return t;
}

PohozaevCoefficients pohozaev_coefficients(double p, double gamma) {
  return {(1 + 2 * gamma * (p - 3)) / p, (p - 10 * gamma * p - 4 + 24 * gamma) / (2 * p),
          ((p - 2) * (1 - 6 * gamma)) / (2 * p), (p - 2 * p * gamma - 2 + 12 * gamma) / (2 * p)};
}

Window gamma_interval(double p) {
  if (!(p > 3 && p <= 4)) throw InvalidArgument("gamma_interval: p must lie in (3, 4]");
  const Window w{(2 - p) / (2 * (6 - p)), (4 - p) / (24 - 10 * p)};
  if (!(w.lo < w.hi)) throw InternalError("gamma_interval: empty interval");
  return w;
}

StraussReport strauss_bound_check(const Field& u, double q) {
  if (!(q >= 2 && q < 6)) throw InvalidArgument("strauss_bound_check: q must lie in [2, 6)");
  const double denom = std::sqrt(dirichlet_energy(u)) + lp_norm(u, q);
  StraussReport s;
  if (!(denom > 0)) return s;
  const double exponent = (6 - q) / (2 * q);
  const Grid& g = u.grid();
  for (Index i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    if (r <= 1) continue;
    const double ratio = std::abs(u(i)) * std::pow(r, exponent) / denom;
    if (ratio > s.max_ratio) {
      s.max_ratio = ratio;
      s.radius = r;
    }
  }
  return s;
}

CoupledResiduals coupled_residuals(const Field& u, const Field& phi, const ModelParams& params) {
  const Grid& g = u.grid();
  const Vector lap_u = radial_laplacian(u);
  const Vector lap_phi = radial_laplacian(phi);
  const Vector& uv = u.values();
  const Vector& fv = phi.values();
  const double e = params.e, w = params.omega, p = params.p;
  double ru = 0, su = 0, rf = 0, sf = 0;
  for (Index i = 1; i < g.intervals(); ++i) {
    const double pot = params.epsilon + e * (2 * w - e * fv(i)) * fv(i);
    const double nl = uv(i) * std::pow(std::abs(uv(i)), p - 2);
    ru = std::max(ru, std::abs(-lap_u(i) + pot * uv(i) - nl));
    su = std::max({su, std::abs(lap_u(i)), std::abs(pot * uv(i)), std::abs(nl)});
    const double src = e * (w - e * fv(i)) * uv(i) * uv(i);
    rf = std::max(rf, std::abs(-lap_phi(i) - src));
    sf = std::max({sf, std::abs(lap_phi(i)), std::abs(src)});
  }
  return {su > 0 ? ru / su : 0.0, sf > 0 ? rf / sf : 0.0};
}

DiagnosticsReport diagnose(const Field& u, const Field& phi, const ModelParams& params) {
  params.validate();
  DiagnosticsReport d;
  const Moments m = moments(u, phi, params.p);
  d.nehari_residual = nehari_residual(u, phi, params);
  d.pohozaev_residual = pohozaev_residual(u, phi, params);
  d.dilation_derivative = dilation_derivative(u, phi, params);
  d.energy_identity_residual = energy_identity_residual(u, phi, params);
  const EnergyCharge ec = energy_and_charge(u, phi, params);
  d.energy = ec.energy;
  d.charge = ec.charge;
  const FunctionalValues f = functional_values(u, phi, params);
  d.I_value = f.I_value;
  d.J_paper_value = f.J_paper_value;
  d.J_standard_value = f.J_standard_value;
  d.functional_gap = f.functional_gap;
  d.functional_gap_relative = f.functional_gap_relative;
  try {
    const DecayFit fit = decay_fit(u, tail_window(u));
    d.decay_exp_rate = fit.exp_rate;
    d.decay_sqrt_rate = fit.sqrt_rate;
    d.decay_exp_residual = fit.exp_residual;
    d.decay_sqrt_residual = fit.sqrt_residual;
    d.decay_fit_preference = fit.preference;
  } catch (const InvalidArgument&) {
    d.decay_fit_preference = DecayModel::unavailable;
  }
  const Grid& g = u.grid();
  d.tail_constant = tail_constant(phi);
  const CoulombTail ct = coulomb_tail(phi, {std::max(1.0, g.r_max() / 4), g.r_max()});
  d.tail_K1 = ct.K1;
  d.tail_K2 = ct.K2;
  d.L2_norm = std::sqrt(m.l2);
  d.Lp_norm = std::pow(m.lp, 1 / params.p);
  d.grad_norm = std::sqrt(m.grad_u);
  d.phi_source_integral = m.phi_u2;
  const CoupledResiduals res = coupled_residuals(u, phi, params);
  d.matter_residual = res.matter;
  d.gauge_residual = res.gauge;
  d.min_u = u.values().minCoeff();
  d.min_phi = phi.values().minCoeff();
  d.max_ephi_over_omega = params.e * phi.values().maxCoeff() / params.omega;
  return d;
}

}  // namespace kgm
