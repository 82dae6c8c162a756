#pragma once

// Coupled fixed-point solve and continuation of the solution family in ε.

#include <optional>
#include <string>
#include <vector>

#include "kgm/diagnostics.hpp"
#include "kgm/ground_state.hpp"
#include "kgm/params.hpp"
#include "kgm/radial.hpp"

namespace kgm {

struct SolveSettings {
  double damping = 0.5;     // θ in W <- (1-θ)W + θ W(φ_u)
  double outer_tol = 1e-10; // relative L² change of u between outer iterations
  int max_outer = 500;
  BracketPolicy bracket;
  double r_max = 200;
  Index intervals = 4000;
  GridSpec grid;

  void validate() const;
  friend bool operator==(const SolveSettings&, const SolveSettings&) = default;
};

/// Residual levels a record must reach to count as converged.
struct Tolerances {
  static constexpr double equation = 1e-5;  // pointwise residuals of both equations
  static constexpr double nehari = 1e-5;
  static constexpr double pohozaev = 1e-4;
};

struct SolutionRecord {
  ModelParams params;
  Field u;
  Field phi;
  DiagnosticsReport diagnostics;
  bool converged = false;
  int outer_iterations = 0;
  double final_change = 0;
  double amplitude = 0;
  bool tail_resolved = false;

  friend bool operator==(const SolutionRecord&, const SolutionRecord&) = default;
};

/// Starting pair for a warm solve.
struct WarmStart {
  Field u;
  Field phi;
};

/// Alternates φ <- φ_u, W <- damped ε + e(2ω - eφ)φ, u <- ground state in W
/// until u settles. ε = 0 needs a warm start. Throws NonConvergence (with the
/// last u) when the iteration cap is hit.
SolutionRecord solve_coupled(const ModelParams& params, const SolveSettings& settings,
                             const std::optional<WarmStart>& warm = std::nullopt);

struct BranchTrends {
  std::vector<double> epsilon;
  std::vector<double> l2_norm;
  std::vector<double> lp_norm;
  std::vector<double> grad_norm;
  std::vector<double> phi_source;  // ∫φu² dx
  std::vector<double> energy;
  std::vector<double> charge;
  std::vector<double> tail_constant;
  std::vector<double> decay_exp_rate;
  std::vector<double> decay_sqrt_rate;

  friend bool operator==(const BranchTrends&, const BranchTrends&) = default;
};

struct BranchRecord {
  std::vector<double> schedule;
  std::vector<SolutionRecord> records;
  BranchTrends trends;
  bool truncated = false;
  std::string failure;

  friend bool operator==(const BranchRecord&, const BranchRecord&) = default;
};

BranchTrends trends_of(const std::vector<SolutionRecord>& records);

/// 2^{-k} for k = 0..9, then 1e-3, then 0.
std::vector<double> default_schedule();

/// Solves along a strictly decreasing ε schedule, each entry warm-started from
/// the previous one. A failing first entry throws; a later failure truncates.
BranchRecord continue_in_epsilon(const ModelParams& params, const std::vector<double>& schedule,
                                 const SolveSettings& settings);

/// √((p-2)(4-p)) on (2, 3), 1 on [3, 6).
double g_threshold(double p);

struct SweepCell {
  double p = 0;
  double omega_over_m = 0;
  double epsilon = 0;
  double g = 0;
  bool in_theorem_region = false;  // ω/m < g(p)
  bool converged = false;
  int outer_iterations = 0;
  std::string message;
  std::optional<DiagnosticsReport> diagnostics;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

/// One cell per (p, ω/m) at m = 1, ordered by p then ω/m. ω/m = 1 is reached
/// by a warm-started branch down the default schedule. Cells run concurrently.
std::vector<SweepCell> sweep(const std::vector<double>& p_values, const std::vector<double>& omega_over_m,
                             double e, const SolveSettings& settings);

}  // namespace kgm
