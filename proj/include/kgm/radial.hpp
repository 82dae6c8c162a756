#pragma once

// Radial grids and fields on [0, R_max] together with the quadratures that
// realize integrals over R^3 for radially symmetric integrands.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include "kgm/errors.hpp"

namespace kgm {

using Index = Eigen::Index;

enum class GridScheme { uniform, geometric };

inline const char* to_string(GridScheme s) { return s == GridScheme::uniform ? "uniform" : "geometric"; }

inline GridScheme grid_scheme_from_string(const std::string& s) {
  if (s == "uniform") return GridScheme::uniform;
  if (s == "geometric") return GridScheme::geometric;
  throw InvalidArgument("unknown grid scheme '" + s + "' (expected uniform or geometric)");
}

/// Node placement rule. `ratio` is the ratio of consecutive gaps and is only
/// read for the geometric scheme.
struct GridSpec {
  GridScheme scheme = GridScheme::geometric;
  double ratio = 1.002;
};

inline constexpr Index kMinIntervals = 16;

/// Strictly increasing nodes 0 = r_0 < ... < r_N = R_max.
///
/// Two weight vectors are kept: `weights()` integrates f dr exactly for
/// piecewise-linear f (trapezoid), `moments()` integrates f r^2 dr exactly
/// for piecewise-linear f (each cell is a cubic in r, so Simpson is exact).
template <typename Scalar>
class RadialGrid {
 public:
  using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  RadialGrid(Vector nodes, GridScheme scheme, Scalar ratio)
      : nodes_(std::move(nodes)), scheme_(scheme), ratio_(ratio) {
    if (nodes_.size() < kMinIntervals + 1) throw InvalidArgument("radial grid needs at least 16 intervals");
    if (nodes_(0) != Scalar(0)) throw InvalidArgument("radial grid must start at r = 0");
    for (Index i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_(i) > nodes_(i - 1))) throw InvalidArgument("radial grid nodes must be strictly increasing");
    }
    const Index n = intervals();
    weights_ = Vector::Zero(n + 1);
    moments_ = Vector::Zero(n + 1);
    for (Index i = 0; i < n; ++i) {
      const Scalar a = nodes_(i), b = nodes_(i + 1), h = b - a, m = (a + b) / 2;
      weights_(i) += h / 2;
      weights_(i + 1) += h / 2;
      moments_(i) += h / 6 * (a * a + 2 * m * m);
      moments_(i + 1) += h / 6 * (2 * m * m + b * b);
    }
  }

  Index intervals() const { return nodes_.size() - 1; }
  Index size() const { return nodes_.size(); }
  Scalar r_max() const { return nodes_(intervals()); }
  Scalar r(Index i) const { return nodes_(i); }
  Scalar gap(Index i) const { return nodes_(i + 1) - nodes_(i); }
  const Vector& nodes() const { return nodes_; }
  const Vector& weights() const { return weights_; }
  const Vector& moments() const { return moments_; }
  GridScheme scheme() const { return scheme_; }
  Scalar ratio() const { return ratio_; }

  /// Interval index i with r_i <= r < r_{i+1}, clamped to [0, N-1].
  Index locate(Scalar r) const {
    const auto* begin = nodes_.data();
    const auto* end = begin + nodes_.size();
    Index i = static_cast<Index>(std::upper_bound(begin, end, r) - begin) - 1;
    return std::clamp<Index>(i, 0, intervals() - 1);
  }

  /// Twice as many intervals; every old node is kept.
  RadialGrid refined() const;

  /// Same nodes multiplied by lambda (used to dilate fields exactly).
  RadialGrid dilated(Scalar lambda) const {
    return RadialGrid(Vector(nodes_ * lambda), scheme_, ratio_);
  }

  friend bool operator==(const RadialGrid& a, const RadialGrid& b) {
    return a.scheme_ == b.scheme_ && a.ratio_ == b.ratio_ && a.nodes_.size() == b.nodes_.size() &&
           (a.nodes_ == b.nodes_).all();
  }

 private:
  Vector nodes_;
  GridScheme scheme_;
  Scalar ratio_;
  Vector weights_;
  Vector moments_;
};

template <typename Scalar>
using GridPtr = std::shared_ptr<const RadialGrid<Scalar>>;

template <typename Scalar = double>
GridPtr<Scalar> make_grid(Scalar r_max, Index n, GridSpec spec = {}) {
  using Vector = typename RadialGrid<Scalar>::Vector;
  if (!(r_max > 0) || !std::isfinite(static_cast<double>(r_max)))
    throw InvalidArgument("make_grid: R_max must be positive and finite");
  if (n < kMinIntervals) throw InvalidArgument("make_grid: N must be at least 16");
  Vector nodes(n + 1);
  if (spec.scheme == GridScheme::uniform) {
    for (Index i = 0; i <= n; ++i) nodes(i) = r_max * Scalar(i) / Scalar(n);
    return std::make_shared<const RadialGrid<Scalar>>(std::move(nodes), spec.scheme, Scalar(1));
  }
  if (!(spec.ratio > 1)) throw InvalidArgument("make_grid: geometric ratio must exceed 1");
  using std::expm1;
  using std::log;
  const Scalar lg = log(Scalar(spec.ratio));
  const Scalar total = expm1(Scalar(n) * lg);
  for (Index i = 0; i < n; ++i) nodes(i) = r_max * expm1(Scalar(i) * lg) / total;
  nodes(n) = r_max;
  return std::make_shared<const RadialGrid<Scalar>>(std::move(nodes), spec.scheme, Scalar(spec.ratio));
}

template <typename Scalar>
RadialGrid<Scalar> RadialGrid<Scalar>::refined() const {
  using std::sqrt;
  const double fine_ratio = scheme_ == GridScheme::geometric ? static_cast<double>(sqrt(ratio_)) : 1.0;
  auto fine = make_grid<Scalar>(r_max(), 2 * intervals(), GridSpec{scheme_, fine_ratio});
  // keep the coarse nodes bit-exact
  Vector nodes = fine->nodes();
  for (Index i = 0; i <= intervals(); ++i) nodes(2 * i) = nodes_(i);
  return RadialGrid(std::move(nodes), scheme_, fine->ratio());
}

/// Sampled radial function on a shared grid. Values are finite and the
/// length always matches the grid.
template <typename Scalar>
class RadialField {
 public:
  using Grid = RadialGrid<Scalar>;
  using Vector = typename Grid::Vector;

  RadialField(GridPtr<Scalar> grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("radial field needs a grid");
    if (values_.size() != grid_->size()) throw InvalidArgument("radial field length does not match its grid");
    if (!values_.allFinite()) throw InvalidArgument("radial field contains non-finite values");
  }

  static RadialField zero(GridPtr<Scalar> grid) {
    const Index n = grid->size();
    return RadialField(std::move(grid), Vector::Zero(n));
  }

  template <class F>
  static RadialField sample(GridPtr<Scalar> grid, F&& f) {
    Vector v(grid->size());
    for (Index i = 0; i < v.size(); ++i) v(i) = f(grid->r(i));
    return RadialField(std::move(grid), std::move(v));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr<Scalar>& grid_ptr() const { return grid_; }
  const Vector& values() const { return values_; }
  Scalar operator()(Index i) const { return values_(i); }
  Index size() const { return values_.size(); }

  RadialField with_values(Vector v) const { return RadialField(grid_, std::move(v)); }

  /// Linear interpolation; zero beyond R_max.
  Scalar at(Scalar r) const {
    if (r > grid_->r_max()) return Scalar(0);
    if (r <= 0) return values_(0);
    const Index i = grid_->locate(r);
    const Scalar t = (r - grid_->r(i)) / grid_->gap(i);
    return (1 - t) * values_(i) + t * values_(i + 1);
  }

  friend bool operator==(const RadialField& a, const RadialField& b) {
    return *a.grid_ == *b.grid_ && (a.values_ == b.values_).all();
  }

  friend RadialField operator*(Scalar c, const RadialField& f) { return f.with_values(c * f.values_); }
  friend RadialField operator+(const RadialField& a, const RadialField& b) {
    return a.with_values(a.values_ + b.values_);
  }
  friend RadialField operator-(const RadialField& a, const RadialField& b) {
    return a.with_values(a.values_ - b.values_);
  }

 private:
  GridPtr<Scalar> grid_;
  Vector values_;
};

using Grid = RadialGrid<double>;
using Field = RadialField<double>;
using Vector = Grid::Vector;

// ---------------------------------------------------------------------------
// Quadrature

/// Integral of f over [0, R_max] against dr.
template <typename Scalar>
Scalar integrate_radial(const RadialField<Scalar>& f) {
  return (f.grid().weights() * f.values()).sum();
}

/// 4 pi \int_0^{R_max} f(r) r^2 dr.
template <typename Scalar>
Scalar integrate3d(const RadialField<Scalar>& f) {
  return 4 * std::numbers::pi_v<Scalar> * (f.grid().moments() * f.values()).sum();
}

template <typename Scalar>
Scalar integrate3d(const RadialGrid<Scalar>& grid, const typename RadialGrid<Scalar>::Vector& values) {
  return 4 * std::numbers::pi_v<Scalar> * (grid.moments() * values).sum();
}

/// C_i = \int_0^{r_i} f dr (trapezoid).
template <typename Scalar>
typename RadialGrid<Scalar>::Vector cumulative_radial(const RadialGrid<Scalar>& grid,
                                                      const typename RadialGrid<Scalar>::Vector& f) {
  typename RadialGrid<Scalar>::Vector c(grid.size());
  c(0) = 0;
  for (Index i = 0; i < grid.intervals(); ++i) c(i + 1) = c(i) + grid.gap(i) * (f(i) + f(i + 1)) / 2;
  return c;
}

/// Cumulative integral evaluated at an arbitrary radius, exact for the
/// piecewise-linear interpolant of f. Radii beyond R_max clamp to R_max.
template <typename Scalar>
Scalar cumulative_at(const RadialGrid<Scalar>& grid, const typename RadialGrid<Scalar>::Vector& f,
                     const typename RadialGrid<Scalar>::Vector& cumulative, Scalar r) {
  if (r <= 0) return 0;
  if (r >= grid.r_max()) return cumulative(grid.intervals());
  const Index i = grid.locate(r);
  const Scalar d = r - grid.r(i);
  const Scalar t = d / grid.gap(i);
  const Scalar fr = (1 - t) * f(i) + t * f(i + 1);
  return cumulative(i) + d * (f(i) + fr) / 2;
}

// ---------------------------------------------------------------------------
// Derivatives

namespace detail {

/// Weights of the derivative at x of the quadratic through (x0, x1, x2).
template <typename Scalar>
std::array<Scalar, 3> quadratic_derivative_weights(Scalar x0, Scalar x1, Scalar x2, Scalar x) {
  return {((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)), ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
          ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1))};
}

}  // namespace detail

/// Nodal first derivative: three-point second-order stencils, u'(0) = 0 for
/// radial regularity and a one-sided stencil at R_max.
template <typename Scalar>
typename RadialGrid<Scalar>::Vector derivative(const RadialGrid<Scalar>& grid,
                                               const typename RadialGrid<Scalar>::Vector& u) {
  const Index n = grid.intervals();
  typename RadialGrid<Scalar>::Vector d(n + 1);
  d(0) = 0;
  for (Index i = 1; i < n; ++i) {
    const auto w = detail::quadratic_derivative_weights(grid.r(i - 1), grid.r(i), grid.r(i + 1), grid.r(i));
    d(i) = w[0] * u(i - 1) + w[1] * u(i) + w[2] * u(i + 1);
  }
  const auto w = detail::quadratic_derivative_weights(grid.r(n - 2), grid.r(n - 1), grid.r(n), grid.r(n));
  d(n) = w[0] * u(n - 2) + w[1] * u(n - 1) + w[2] * u(n);
  return d;
}

template <typename Scalar>
typename RadialGrid<Scalar>::Vector derivative(const RadialField<Scalar>& u) {
  return derivative(u.grid(), u.values());
}

/// u'' + (2/r) u' at interior nodes 1..N-1 by three-point stencils; the two
/// end entries are left at zero.
template <typename Scalar>
typename RadialGrid<Scalar>::Vector radial_laplacian(const RadialField<Scalar>& u) {
  const auto& g = u.grid();
  const auto& v = u.values();
  const Index n = g.intervals();
  typename RadialGrid<Scalar>::Vector lap = RadialGrid<Scalar>::Vector::Zero(n + 1);
  for (Index i = 1; i < n; ++i) {
    const Scalar hm = g.r(i) - g.r(i - 1), hp = g.r(i + 1) - g.r(i);
    const Scalar second = 2 * (v(i - 1) / (hm * (hm + hp)) - v(i) / (hm * hp) + v(i + 1) / (hp * (hm + hp)));
    const Scalar first = (-hp / (hm * (hm + hp))) * v(i - 1) + ((hp - hm) / (hm * hp)) * v(i) +
                         (hm / (hp * (hm + hp))) * v(i + 1);
    lap(i) = second + 2 * first / g.r(i);
  }
  return lap;
}

// ---------------------------------------------------------------------------
// Norms

/// 4 pi \int u'(r)^2 r^2 dr over the grid.
template <typename Scalar>
Scalar dirichlet_energy(const RadialField<Scalar>& u) {
  const auto d = derivative(u);
  return integrate3d(u.grid(), typename RadialGrid<Scalar>::Vector(d.square()));
}

template <typename Scalar>
Scalar lp_norm(const RadialField<Scalar>& u, Scalar q) {
  if (!(q >= 1)) throw InvalidArgument("lp_norm: exponent must be >= 1");
  const typename RadialGrid<Scalar>::Vector a = u.values().abs().pow(q);
  using std::pow;
  return pow(integrate3d(u.grid(), a), Scalar(1) / q);
}

/// \int u^2 / (sqrt|x| (1 + |log|x||)^alpha) dx. The r = 0 node carries zero
/// weight in the r^2 Jacobian and is set to zero.
template <typename Scalar>
Scalar weighted_l2(const RadialField<Scalar>& u, Scalar alpha) {
  if (!(alpha > Scalar(0.5))) throw InvalidArgument("weighted_l2: alpha must exceed 1/2");
  using std::abs;
  using std::log;
  using std::pow;
  using std::sqrt;
  const auto& g = u.grid();
  typename RadialGrid<Scalar>::Vector w(g.size());
  w(0) = 0;
  for (Index i = 1; i < g.size(); ++i) {
    const Scalar r = g.r(i);
    w(i) = u(i) * u(i) / (sqrt(r) * pow(1 + abs(log(r)), alpha));
  }
  return integrate3d(g, w);
}

}  // namespace kgm
