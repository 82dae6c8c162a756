#pragma once

#include <cmath>
#include <string>

#include "kgm/errors.hpp"

namespace kgm {

/// Coupling e, phase omega, exponent p and the mass shift epsilon = m^2 - omega^2.
/// epsilon = 0 is the limit problem m = omega.
struct ModelParams {
  double e = 1.0;
  double omega = 1.0;
  double p = 4.0;
  double epsilon = 1.0;

  /// Builds the parameters from the mass m; epsilon = m^2 - omega^2 must be >= 0.
  static ModelParams from_mass(double e, double omega, double mass, double p) {
    if (!(mass >= 0)) throw InvalidArgument("mass must be >= 0");
    const double eps = mass * mass - omega * omega;
    if (eps < 0) throw InvalidArgument("mass below omega gives epsilon = m^2 - omega^2 < 0");
    ModelParams m{e, omega, p, eps};
    m.validate();
    return m;
  }

  double mass() const { return std::sqrt(epsilon + omega * omega); }

  void validate() const {
    if (!(e >= 0) || !std::isfinite(e)) throw InvalidArgument("coupling e must be >= 0");
    if (!(omega > 0) || !std::isfinite(omega)) throw InvalidArgument("phase omega must be > 0");
    if (!(p > 1 && p < 6)) throw InvalidArgument("exponent p must lie in (1, 6), got " + std::to_string(p));
    if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be >= 0");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

}  // namespace kgm
