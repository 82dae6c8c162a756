#pragma once

// Solutions shared by several test cases, computed once per binary.

#include "kgm/continuation.hpp"

namespace fixtures {

inline const kgm::ModelParams kReference{1.0, 1.0, 4.0, 1.0};

/// Converged record at p = 4, e = ω = 1, ε = 1.
inline const kgm::SolutionRecord& reference() {
  static const kgm::SolutionRecord r = kgm::solve_coupled(kReference, {});
  return r;
}

/// Decoupled record (e = 0) at p = 4, ε = 1.
inline const kgm::SolutionRecord& decoupled() {
  static const kgm::SolutionRecord r = kgm::solve_coupled({0.0, 1.0, 4.0, 1.0}, {});
  return r;
}

}  // namespace fixtures
