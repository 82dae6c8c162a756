#pragma once

// Reduction map u -> phi_u: the gauge equation -Δφ = e(ω - eφ)u² in radial form.

#include "kgm/params.hpp"
#include "kgm/radial.hpp"

namespace kgm {

struct PhiSolveReport {
  Field phi;
  double energy_identity_residual = 0;
  double gradient_norm = 0;  // ||∇φ||_2, exterior Coulomb tail included
  double tail_constant = 0;  // mean of r φ(r) over [R_max/10, R_max]
};

/// Solves -Δφ + c φ = f with φ'(0) = 0 and φ'(R) + φ(R)/R = 0.
Field solve_radial_poisson(const Field& reaction, const Field& source);

/// φ_u for the given matter profile.
PhiSolveReport solve_phi(const Field& u, const ModelParams& params);

/// ||∇φ||_2^2 over R^3 where φ is continued by its Coulomb tail φ(R) R / r
/// beyond R_max (the continuation selected by the Robin condition).
double potential_dirichlet_energy(const Field& phi);

/// |∫|∇φ|² + e²∫φ²u² - eω∫φu²| / max(1, eω∫φu²).
double energy_identity_residual(const Field& u, const Field& phi, const ModelParams& params);

double tail_constant(const Field& phi);

/// C_1 = 4 e² C² / ω² with the radial-lemma constant C = (4π)^{-1/2}.
double radial_lemma_c1(const ModelParams& params);

/// max(1, C_1 ||∇φ||_2²): beyond this radius eφ <= ω/2.
double lower_bound_threshold(const Field& phi, const ModelParams& params);

struct LowerBoundReport {
  double min_slack = 0;
  double worst_radius = 0;
  double threshold = 0;
  Index nodes_checked = 0;
};

/// Checks φ(r) >= (eω/2) ∫_{R_1}^∞ s² u²(s) / max(r, s) ds at every node r > R_1.
LowerBoundReport phi_lower_bound_check(const Field& u, const Field& phi, const ModelParams& params, double r1);

}  // namespace kgm
