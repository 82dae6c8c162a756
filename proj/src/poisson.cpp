#include "kgm/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kgm/radial_operator.hpp"

namespace kgm {

Field solve_radial_poisson(const Field& reaction, const Field& source) {
  const Grid& g = reaction.grid();
  if (!(reaction.grid() == source.grid())) throw InvalidArgument("solve_radial_poisson: fields on different grids");
  const Vector volumes = radial_volumes(g);
  const auto op = radial_operator(g, volumes, reaction.values(), 1.0 / g.r_max());
  Vector x = op.solve(Vector(volumes * source.values()));
  if (!x.allFinite()) throw InternalError("solve_radial_poisson: non-finite solution");
  return reaction.with_values(std::move(x));
}

PhiSolveReport solve_phi(const Field& u, const ModelParams& params) {
  params.validate();
  const Vector u2 = u.values().square();
  const double e = params.e;
  Field reaction = u.with_values(e * e * u2);
  Field source = u.with_values(e * params.omega * u2);
  PhiSolveReport report{solve_radial_poisson(reaction, source)};
  report.energy_identity_residual = energy_identity_residual(u, report.phi, params);
  report.gradient_norm = std::sqrt(potential_dirichlet_energy(report.phi));
  report.tail_constant = tail_constant(report.phi);
  return report;
}

double potential_dirichlet_energy(const Field& phi) {
  const Grid& g = phi.grid();
  const double end = phi(g.intervals());
  return dirichlet_energy(phi) + 4 * std::numbers::pi * g.r_max() * end * end;
}

double energy_identity_residual(const Field& u, const Field& phi, const ModelParams& params) {
  const Grid& g = u.grid();
  const Vector u2 = u.values().square();
  const double e = params.e;
  const double grad = potential_dirichlet_energy(phi);
  const double quartic = e * e * integrate3d(g, Vector(phi.values().square() * u2));
  const double source = e * params.omega * integrate3d(g, Vector(phi.values() * u2));
  return std::abs(grad + quartic - source) / std::max(1.0, source);
}

double tail_constant(const Field& phi) {
  const Grid& g = phi.grid();
  const Vector rphi = g.nodes() * phi.values();
  const Vector c = cumulative_radial(g, rphi);
  const double lo = g.r_max() / 10;
  const double total = c(g.intervals()) - cumulative_at(g, rphi, c, lo);
  return total / (g.r_max() - lo);
}

double radial_lemma_c1(const ModelParams& params) {
  return params.e * params.e / (std::numbers::pi * params.omega * params.omega);
}

double lower_bound_threshold(const Field& phi, const ModelParams& params) {
  return std::max(1.0, radial_lemma_c1(params) * potential_dirichlet_energy(phi));
}

LowerBoundReport phi_lower_bound_check(const Field& u, const Field& phi, const ModelParams& params, double r1) {
  const Grid& g = u.grid();
  LowerBoundReport report;
  report.threshold = lower_bound_threshold(phi, params);
  if (!(r1 >= report.threshold * (1 - 1e-12)))
    throw InvalidArgument("phi_lower_bound_check: R1 is below max(1, C1 ||grad phi||^2)");
  const Vector u2 = u.values().square();
  const Vector near = g.nodes().square() * u2;  // s² u²
  const Vector far = g.nodes() * u2;            // s u²
  const Vector cn = cumulative_radial(g, near);
  const Vector cf = cumulative_radial(g, far);
  const double near_r1 = cumulative_at(g, near, cn, r1);
  const double half = params.e * params.omega / 2;
  report.min_slack = std::numeric_limits<double>::infinity();
  for (Index i = 1; i < g.size(); ++i) {
    const double r = g.r(i);
    if (r <= r1) continue;
    const double rhs = half * ((cn(i) - near_r1) / r + (cf(g.intervals()) - cf(i)));
    const double slack = phi(i) - rhs;
    ++report.nodes_checked;
    if (slack < report.min_slack) {
      report.min_slack = slack;
      report.worst_radius = r;
    }
  }
  if (report.nodes_checked == 0) report.min_slack = 0;
  return report;
}

}  // namespace kgm
