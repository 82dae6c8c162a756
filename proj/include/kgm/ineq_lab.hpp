#pragma once

// Ratio suites for the weighted and nonlocal inequalities used in the
// existence argument, evaluated over seeded families of radial test functions.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kgm/params.hpp"
#include "kgm/radial.hpp"

namespace kgm {

enum class FamilyKind { gaussian_mixture, truncated_power_tail, dyadic_comb, random_spline };

const char* to_string(FamilyKind k);
FamilyKind family_kind_from_string(const std::string& s);

struct TestFunctionFamily {
  FamilyKind kind = FamilyKind::gaussian_mixture;
  std::uint64_t seed = 1;
  int count = 100;
  double beta = 1.2;  // truncated-power-tail exponent
  int depth = 6;      // dyadic-comb depth

  friend bool operator==(const TestFunctionFamily&, const TestFunctionFamily&) = default;
};

/// One analytic member; `scale` is the family's characteristic length.
struct Member {
  std::function<double(double)> profile;
  double scale = 0;
};

/// Members vanish beyond `cutoff` (smoothly tapered from 0.8 cutoff).
std::vector<Member> generate(const TestFunctionFamily& family, double cutoff);

/// Samples u^t(r) = t^2 f(t r).
Field sample_member(const Member& m, const GridPtr<double>& grid, double t = 1);

struct RatioSample {
  double lhs = 0;
  double rhs = 0;
  double ratio = 0;  // 0 when both sides vanish
};

struct RatioReport {
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> ratio;
  std::vector<double> scale;
  double empirical_sup_constant = 0;
  double trend_slope = 0;  // least-squares slope of ratio against log(scale)

  friend bool operator==(const RatioReport&, const RatioReport&) = default;
};

RatioReport aggregate(const std::vector<RatioSample>& samples, const std::vector<double>& scales);

/// ζ(2α) (log_2 e)^{2α}: the constant obtained by chaining the two dyadic
/// estimates.
double dyadic_constant(double alpha);

/// (∫_{3R}^∞ h dr)² against ∫_R^∞ ∫_{r/2}^{2r} w(r)h(r) w(s)h(s) ds dr with
/// w = (1 + log r)^α. h is read as a function of r only (no r² weight).
RatioSample dyadic_check(const Field& h, double alpha, double R);

/// ∫_{R0}^∞ ∫_{R0}^∞ u²(r) r u²(s) s min(r, s) ds dr in O(N).
double min_kernel_double_integral(const Field& u, double r0);

struct LemmaDueSample {
  RatioSample sample;       // rhs = ∫φ_u u² dx
  double radial_ratio = 0;  // lhs / ∫_0^∞ r² φ_u u² dr
  double r0 = 0;            // max(1, C_1 ||∇φ_u||²)
  double bound = 0;         // 2 / (eω)
};

LemmaDueSample lemma_due_check(const Field& u, const ModelParams& params);

/// ∫_0^∞ u² r^{3/2} / (1 + |log r|)^α dr against
/// [(∫|∇u|² dx)² + min_kernel_double_integral(u, R0)]^{1/2}.
RatioSample weight_lemma_check(const Field& u, double alpha, double r0);

/// weighted_l2(u, α) against ((∫|∇u|²)² + ∫φ_u u² dx)^{1/2}; u must satisfy
/// ||∇φ_u||_2 <= M or NotInClass is thrown.
RatioSample prop_est_check(const Field& u, const ModelParams& params, double alpha, double M);

struct EmbeddingSample {
  RatioSample sample;              // ||u||_q against N[u]
  std::vector<double> eta;         // V(x) = 1 / (1 + |x|^η)
  std::vector<double> eta_ratio;   // ||u||_q / (∫|∇u|² + ∫V u²)^{1/2}
};

inline const std::vector<double>& default_eta_scan() {
  static const std::vector<double> eta{0.6, 0.75, 1.0};
  return eta;
}

EmbeddingSample lp_embedding_check(const Field& u, double q, double r0);

struct MN {
  double M = 0;
  double N = 0;
};

/// M[u] = ∫|∇u|² + D, N[u] = (∫|∇u|² + √D)^{1/2} with D the min-kernel integral from R0.
MN mn_functionals(const Field& u, double r0);

/// ∫|u|^p dx against M[u]^{(2p-3)/3}.
RatioSample lp_upper_bound_check(const Field& u, double p, double r0);

struct LabSettings {
  std::vector<TestFunctionFamily> families;
  double r_max = 200;
  Index intervals = 4000;
  GridSpec grid;
  double alpha = 1.0;
  double r0 = 2.0;
  double q = 4.0;
  double p = 4.0;
  double M = 50.0;
  ModelParams params;
  double cutoff_fraction = 0.9;
};

struct SuiteReport {
  std::string suite;
  FamilyKind family = FamilyKind::gaussian_mixture;
  RatioReport report;
  int skipped = 0;  // members rejected as not in class

  friend bool operator==(const SuiteReport&, const SuiteReport&) = default;
};

/// Every suite over every family. Members run concurrently and are
/// aggregated in seed order.
std::vector<SuiteReport> run_lab(const LabSettings& settings);

}  // namespace kgm
