#pragma once

// Identities, functionals and asymptotic fits evaluated on a computed (u, φ) pair.

#include <string>

#include "kgm/params.hpp"
#include "kgm/radial.hpp"

namespace kgm {

/// |∫(|∇u|² + εu² + e(2ω - eφ)φu²) - ∫|u|^p| / ∫|u|^p.
double nehari_residual(const Field& u, const Field& phi, const ModelParams& params);

/// Dilation derivative d/dλ I_ε(u(·/λ), φ(·/λ)) at λ = 1 divided by (3/p)∫|u|^p:
/// ½(∫|∇u|² - ∫|∇φ|²) + (3/2)∫(εu² + 2eωφu² - e²φ²u²) - (3/p)∫|u|^p.
double pohozaev_defect(const Field& u, const Field& phi, const ModelParams& params);

/// |pohozaev_defect|.
double pohozaev_residual(const Field& u, const Field& phi, const ModelParams& params);

/// Central difference of I_ε under exact field dilation (the grid is
/// stretched by λ = 1 ± step), normalized like pohozaev_defect.
double dilation_derivative(const Field& u, const Field& phi, const ModelParams& params, double step = 1e-3);

/// I_ε(u, φ) = ½∫[|∇u|² - |∇φ|² + εu² + 2eωφu² - e²φ²u²] - (1/p)∫|u|^p.
double action(const Field& u, const Field& phi, const ModelParams& params);

struct EnergyCharge {
  double energy = 0;
  double charge = 0;
};

/// Energy with (m² + ω²) = ε + 2ω², and charge e∫(eφ - ω)u².
EnergyCharge energy_and_charge(const Field& u, const Field& phi, const ModelParams& params);

struct FunctionalValues {
  double I_value = 0;
  double J_paper_value = 0;     // ½∫[|∇u|² + εu² + e(2ω - eφ)φu²] - (1/p)∫|u|^p
  double J_standard_value = 0;  // ½∫[|∇u|² + εu² + eωφu²] - (1/p)∫|u|^p
  double functional_gap = 0;    // J_paper - J_standard - ½∫|∇φ|²
  double functional_gap_relative = 0;
};

FunctionalValues functional_values(const Field& u, const Field& phi, const ModelParams& params);

struct Window {
  double lo = 0;
  double hi = 0;
};

enum class DecayModel { exponential, stretched, unavailable };

const char* to_string(DecayModel m);
DecayModel decay_model_from_string(const std::string& s);

struct DecayFit {
  double exp_rate = 0;   // a in log(r u) ≈ c - a r
  double sqrt_rate = 0;  // b in log(r u) ≈ c - b √r
  double exp_residual = 0;
  double sqrt_residual = 0;
  DecayModel preference = DecayModel::unavailable;
  Index samples = 0;
};

/// Least-squares fits of log(r u) against r and against √r on the nodes in
/// `window` where u is positive. Fewer than three usable nodes is an error.
DecayFit decay_fit(const Field& u, Window window);

/// Tail region: from the first radius where u < 1e-3 u(0) to the last node
/// where u still exceeds ten times the smallest normal double.
Window tail_window(const Field& u);

struct CoulombTail {
  double K_estimate = 0;  // mean of r φ over the window
  double K1 = 0;          // min of r φ
  double K2 = 0;          // max of r φ
  double envelope_ratio = 0;
};

CoulombTail coulomb_tail(const Field& phi, Window window);

struct PohozaevCoefficients {
  double A = 0, B = 0, C = 0, D = 0;
};

PohozaevCoefficients pohozaev_coefficients(double p, double gamma);

/// Open interval of γ on which all four coefficients are positive, p in (3, 4].
Window gamma_interval(double p);

struct StraussReport {
  double max_ratio = 0;
  double radius = 0;
};

/// max over nodes r > 1 of |u(r)| r^{(6-q)/(2q)} / (||∇u||_2 + ||u||_q), q in [2, 6).
StraussReport strauss_bound_check(const Field& u, double q);

struct CoupledResiduals {
  double matter = 0;  // sup |-Δu + W u - u^{p-1}| / sup of the term magnitudes
  double gauge = 0;   // sup |-Δφ - e(ω - eφ)u²| / sup of the term magnitudes
};

/// Pointwise residuals of both equations at interior nodes 1..N-1.
CoupledResiduals coupled_residuals(const Field& u, const Field& phi, const ModelParams& params);

struct DiagnosticsReport {
  double nehari_residual = 0;
  double pohozaev_residual = 0;
  double dilation_derivative = 0;
  double energy_identity_residual = 0;
  double energy = 0;
  double charge = 0;
  double I_value = 0;
  double J_paper_value = 0;
  double J_standard_value = 0;
  double functional_gap = 0;
  double functional_gap_relative = 0;
  double decay_exp_rate = 0;
  double decay_sqrt_rate = 0;
  double decay_exp_residual = 0;
  double decay_sqrt_residual = 0;
  DecayModel decay_fit_preference = DecayModel::unavailable;
  double tail_constant = 0;
  double tail_K1 = 0;
  double tail_K2 = 0;
  double L2_norm = 0;
  double Lp_norm = 0;
  double grad_norm = 0;
  double phi_source_integral = 0;  // ∫φu² dx
  double matter_residual = 0;
  double gauge_residual = 0;
  double min_u = 0;
  double min_phi = 0;
  double max_ephi_over_omega = 0;

  friend bool operator==(const DiagnosticsReport&, const DiagnosticsReport&) = default;
};

/// Every diagnostic above for one (u, φ) pair. Tail fits that have no usable
/// window are reported as `unavailable` with zero rates.
DiagnosticsReport diagnose(const Field& u, const Field& phi, const ModelParams& params);

}  // namespace kgm
