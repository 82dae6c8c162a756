#pragma once

// Three-point discretization of -(r^2 u')' + r^2 c(r) u = r^2 f(r) on a radial grid.

#include <cmath>

#include "kgm/radial.hpp"

namespace kgm {

template <typename Scalar>
struct Tridiagonal {
  using Vector = typename RadialGrid<Scalar>::Vector;
  Vector lower;  // lower(i) couples row i to i-1; lower(0) unused
  Vector diag;
  Vector upper;  // upper(i) couples row i to i+1; upper(n-1) unused

  Vector apply(const Vector& x) const {
    const Index n = diag.size();
    Vector y = diag * x;
    y.segment(1, n - 1) += lower.segment(1, n - 1) * x.segment(0, n - 1);
    y.segment(0, n - 1) += upper.segment(0, n - 1) * x.segment(1, n - 1);
    return y;
  }

  /// Thomas algorithm; throws InternalError on a vanishing pivot.
  Vector solve(const Vector& rhs) const {
    const Index n = diag.size();
    Vector c(n), d(n);
    Scalar pivot = diag(0);
    if (pivot == Scalar(0)) throw InternalError("singular tridiagonal system");
    c(0) = upper(0) / pivot;
    d(0) = rhs(0) / pivot;
    for (Index i = 1; i < n; ++i) {
      pivot = diag(i) - lower(i) * c(i - 1);
      using std::abs;
      if (!(abs(pivot) > Scalar(0)) || !std::isfinite(static_cast<double>(pivot)))
        throw InternalError("singular tridiagonal system");
      c(i) = i + 1 < n ? upper(i) / pivot : Scalar(0);
      d(i) = (rhs(i) - lower(i) * d(i - 1)) / pivot;
    }
    Vector x(n);
    x(n - 1) = d(n - 1);
    for (Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
    return x;
  }
};

/// Cell coefficients of \int r^2 u' v' dr. The first cell uses the exact P1
/// value r_1^2 / (3 h); the others use r_i r_{i+1} / h_i, which makes
/// A + B/r an exact discrete harmonic function.
template <typename Scalar>
typename RadialGrid<Scalar>::Vector radial_flux_coefficients(const RadialGrid<Scalar>& g) {
  typename RadialGrid<Scalar>::Vector s(g.intervals());
  s(0) = g.r(1) * g.r(1) / (3 * g.gap(0));
  for (Index i = 1; i < g.intervals(); ++i) s(i) = g.r(i) * g.r(i + 1) / g.gap(i);
  return s;
}

/// Node volumes V_i = (F_i - F_{i-1}) / 6 with F_i = s_i (r_{i+1}^2 - r_i^2),
/// the last node closing the total to R^3 / 3. With these in place of the r^2
/// moments, r^2 is reproduced exactly along with 1 and 1/r, so the scheme is
/// pointwise consistent down to the origin.
template <typename Scalar>
typename RadialGrid<Scalar>::Vector radial_volumes(const RadialGrid<Scalar>& g) {
  const Index n = g.intervals();
  const auto s = radial_flux_coefficients(g);
  typename RadialGrid<Scalar>::Vector v(n + 1);
  Scalar previous = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar flux = s(i) * (g.r(i + 1) * g.r(i + 1) - g.r(i) * g.r(i));
    v(i) = (flux - previous) / 6;
    previous = flux;
  }
  v(n) = g.r_max() * g.r_max() * g.r_max() / 3 - previous / 6;
  return v;
}

/// Matrix of -(r^2 u')' + r^2 c u with u'(0) = 0 and the Robin condition
/// u'(R) + robin * u(R) = 0. Reaction terms are lumped with `mass`, so the
/// right-hand side is `mass * f`.
template <typename Scalar>
Tridiagonal<Scalar> radial_operator(const RadialGrid<Scalar>& g, const typename RadialGrid<Scalar>::Vector& mass,
                                    const typename RadialGrid<Scalar>::Vector& reaction, Scalar robin) {
  using Vector = typename RadialGrid<Scalar>::Vector;
  const Index n = g.size();
  const Vector s = radial_flux_coefficients(g);
  Tridiagonal<Scalar> t{Vector::Zero(n), Vector(mass * reaction), Vector::Zero(n)};
  for (Index i = 0; i + 1 < n; ++i) {
    t.diag(i) += s(i);
    t.diag(i + 1) += s(i);
    t.upper(i) = -s(i);
    t.lower(i + 1) = -s(i);
  }
  t.diag(n - 1) += g.r_max() * g.r_max() * robin;
  return t;
}

/// Lumped P1 form: the mass is the r^2 moments of the grid.
template <typename Scalar>
Tridiagonal<Scalar> radial_operator(const RadialGrid<Scalar>& g, const typename RadialGrid<Scalar>::Vector& reaction,
                                    Scalar robin) {
  return radial_operator(g, g.moments(), reaction, robin);
}

}  // namespace kgm
