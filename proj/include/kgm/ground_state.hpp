#pragma once

// Ground states of the frozen-potential matter equation -Δu + W(r) u = u^{p-1}.

#include <optional>
#include <stdexcept>
#include <string>

#include "kgm/params.hpp"
#include "kgm/radial.hpp"

namespace kgm {

/// Iteration ran out of budget (or its step size collapsed). Carries the
/// last iterate when one exists.
class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& what, std::optional<Field> last = std::nullopt)
      : std::runtime_error(what), last_(std::move(last)) {}
  const std::optional<Field>& last_iterate() const { return last_; }

 private:
  std::optional<Field> last_;
};

/// W(r) = ε + e(2ω - eφ)φ frozen at the current φ, plus its values at cell
/// midpoints (cubic interpolation) for the fourth-order stepper.
class FrozenPotential {
 public:
  explicit FrozenPotential(Field w);

  static FrozenPotential constant(GridPtr<double> grid, double value);
  static FrozenPotential from_phi(const Field& phi, const ModelParams& params);

  const Field& W() const { return w_; }
  double floor() const { return floor_; }
  const Vector& midpoints() const { return mid_; }
  const Grid& grid() const { return w_.grid(); }

 private:
  Field w_;
  double floor_;
  Vector mid_;
};

enum class ShotKind { crossed_zero, diverged, decayed };

const char* to_string(ShotKind k);

struct ShotOutcome {
  ShotKind kind = ShotKind::decayed;
  double radius = 0;           // crossing or blow-up radius; R_max when decayed
  double final_amplitude = 0;  // u at the last integrated node
};

/// Integrates u'' + (2/r)u' = W u - u^{p-1} from u(0) = a, u'(0) = 0.
ShotOutcome shoot(const FrozenPotential& w, double p, double a);

struct Bracket {
  double lo = 0;
  double hi = 0;
};

struct BracketPolicy {
  double expand = 2.0;
  int max_expansions = 60;
};

/// Expands around `guess` until one endpoint crosses zero and the other does not.
Bracket bracket_amplitude(const FrozenPotential& w, double p, double guess, const BracketPolicy& policy = {});

struct GroundState {
  Field u;
  double amplitude = 0;
  bool tail_resolved = false;  // u(R_max) < 1e-10 u(0)
  double match_radius = 0;     // start of the linear tail continuation
  int bisection_steps = 0;
};

/// Bisection on the central amplitude between a crossing and a non-crossing
/// shot. Past the radius where the two bracketing shots separate, the profile
/// is continued by the decaying solution of the linearized equation,
/// integrated inward from R_max.
GroundState find_ground_state(const FrozenPotential& w, double p, Bracket bracket);

/// t* with t* u on the frozen Nehari manifold.
double nehari_scale(const Field& u, const FrozenPotential& w, double p);

/// ½∫(|∇u|² + W u²) - (1/p)∫|u|^p.
double frozen_functional(const Field& u, const FrozenPotential& w, double p);

/// |∫(|∇u|² + W u²) - ∫|u|^p| / ∫|u|^p.
double frozen_nehari_residual(const Field& u, const FrozenPotential& w, double p);

struct DescentSettings {
  int max_steps = 2000;
  double step = 1.0;
  double tolerance = 1e-8;
};

struct DescentResult {
  Field u;
  double residual = 0;
  int steps = 0;
};

/// H^1-preconditioned gradient steps of the frozen functional, each followed
/// by projection onto the Nehari manifold. Residual is ||u - L^{-1}u^{p-1}|| / ||u||
/// with L = -Δ + W.
DescentResult nehari_descent(const Field& u0, const FrozenPotential& w, double p, const DescentSettings& settings = {});

}  // namespace kgm
