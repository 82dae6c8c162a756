#include "kgm/ground_state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "kgm/radial_operator.hpp"

namespace kgm {

namespace {

double cubic_at(const Grid& g, const Vector& f, Index cell, double x) {
  const Index n = g.intervals();
  const Index first = std::clamp<Index>(cell - 1, 0, n - 3);
  std::array<double, 4> xs{}, ys{};
  for (int k = 0; k < 4; ++k) {
    xs[k] = g.r(first + k);
    ys[k] = f(first + k);
  }
  double value = 0;
  for (int j = 0; j < 4; ++j) {
    double basis = 1;
    for (int k = 0; k < 4; ++k) {
      if (k != j) basis *= (x - xs[k]) / (xs[j] - xs[k]);
    }
    value += basis * ys[j];
  }
  return value;
}

double power_term(double u, double p) { return u * std::pow(std::abs(u), p - 2); }

void check_solver_exponent(double p) {
  if (!(p > 2 && p < 6)) throw InvalidArgument("ground-state solver needs p in (2, 6)");
}

struct State {
  double u;
  double v;
};

/// Right-hand side of u' = v, v' = W u - u^{p-1} - 2v/r.
State rhs(double r, const State& s, double w, double p) {
  return {s.v, w * s.u - power_term(s.u, p) - 2 * s.v / r};
}

State rk4(double r, double h, const State& s, double w0, double wm, double w1, double p) {
  const State k1 = rhs(r, s, w0, p);
  const State k2 = rhs(r + h / 2, {s.u + h / 2 * k1.u, s.v + h / 2 * k1.v}, wm, p);
  const State k3 = rhs(r + h / 2, {s.u + h / 2 * k2.u, s.v + h / 2 * k2.v}, wm, p);
  const State k4 = rhs(r + h, {s.u + h * k3.u, s.v + h * k3.v}, w1, p);
  return {s.u + h / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u), s.v + h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
}

struct Trajectory {
  ShotOutcome outcome;
  std::vector<double> u;  // values at nodes 0..last
  std::vector<double> v;
};

/// State at r_1: Taylor start u = a + F r²/6 close to the origin, then RK4
/// substeps across the first cell.
State first_cell(const FrozenPotential& w, double p, double a) {
  const Grid& g = w.grid();
  const double r1 = g.r(1);
  const double w0 = w.W()(0), w1 = w.W()(1);
  const double f0 = w0 * a - power_term(a, p);
  double r = 1e-3 * r1;
  State s{a + f0 * r * r / 6, f0 * r / 3};
  constexpr int substeps = 16;
  const double h = (r1 - r) / substeps;
  auto wat = [&](double x) { return w0 + (w1 - w0) * x / r1; };
  for (int k = 0; k < substeps; ++k) {
    s = rk4(r, h, s, wat(r), wat(r + h / 2), wat(r + h), p);
    r += h;
  }
  return s;
}

Trajectory integrate(const FrozenPotential& w, double p, double a, bool keep) {
  const Grid& g = w.grid();
  const Vector& wv = w.W().values();
  const Index n = g.intervals();
  Trajectory t;
  if (keep) {
    t.u.reserve(n + 1);
    t.v.reserve(n + 1);
    t.u.push_back(a);
    t.v.push_back(0);
  }
  State s = first_cell(w, p, a);
  // A shot that rises from the origin is in the small-amplitude regime and can
  // only oscillate about the equilibrium; it is never classified diverged.
  const bool rising = s.v > 0;
  bool descending = false;
  bool past_minimum = false;
  double prev_u = a;
  for (Index i = 1;; ++i) {
    const double r = g.r(i);
    if (!std::isfinite(s.u) || !std::isfinite(s.v) || std::abs(s.u) > 1e200) {
      t.outcome = {rising ? ShotKind::decayed : ShotKind::diverged, r, s.u};
      return t;
    }
    if (s.u <= 0) {
      const double r0 = g.r(i - 1);
      const double rc = r0 + (r - r0) * prev_u / (prev_u - s.u);
      t.outcome = {ShotKind::crossed_zero, rc, s.u};
      return t;
    }
    if (keep) {
      t.u.push_back(s.u);
      t.v.push_back(s.v);
    }
    if (s.v < 0) descending = true;
    if (descending && s.v > 0) past_minimum = true;
    if (!rising && past_minimum && s.u > 10 * a) {
      t.outcome = {ShotKind::diverged, r, s.u};
      return t;
    }
    if (i == n) break;
    prev_u = s.u;
    s = rk4(r, g.gap(i), s, wv(i), w.midpoints()(i), wv(i + 1), p);
  }
  t.outcome = {ShotKind::decayed, g.r_max(), s.u};
  return t;
}

bool crosses(const FrozenPotential& w, double p, double a) {
  return integrate(w, p, a, false).outcome.kind == ShotKind::crossed_zero;
}

/// Decaying solution of (r u)'' = W (r u) on nodes [from, N], integrated
/// inward from R_max and normalized to 1 at `from`.
std::vector<double> decaying_tail(const FrozenPotential& w, Index from) {
  const Grid& g = w.grid();
  const Vector& wv = w.W().values();
  const Index n = g.intervals();
  std::vector<double> v(n + 1, 0.0);
  const double kappa = std::sqrt(std::max(wv(n), 0.0));
  double y = 1, dy = -kappa;
  v[n] = y;
  for (Index i = n; i > from; --i) {
    const double h = -g.gap(i - 1);
    const double w1 = wv(i), wm = w.midpoints()(i - 1), w0 = wv(i - 1);
    // RK4 for y'' = W y
    const double k1y = dy, k1d = w1 * y;
    const double k2y = dy + h / 2 * k1d, k2d = wm * (y + h / 2 * k1y);
    const double k3y = dy + h / 2 * k2d, k3d = wm * (y + h / 2 * k2y);
    const double k4y = dy + h * k3d, k4d = w0 * (y + h * k3y);
    y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
    dy += h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d);
    v[i - 1] = y;
    if (std::abs(y) > 1e150) {
      for (Index j = i - 1; j <= n; ++j) v[j] *= 1e-150;
      y *= 1e-150;
      dy *= 1e-150;
    }
  }
  const double norm = v[from];
  for (Index j = from; j <= n; ++j) v[j] /= norm;
  return v;
}

}  // namespace

FrozenPotential::FrozenPotential(Field w) : w_(std::move(w)) {
  const Grid& g = w_.grid();
  floor_ = w_.values().minCoeff();
  mid_.resize(g.intervals());
  for (Index i = 0; i < g.intervals(); ++i) mid_(i) = cubic_at(g, w_.values(), i, g.r(i) + g.gap(i) / 2);
}

FrozenPotential FrozenPotential::constant(GridPtr<double> grid, double value) {
  const Index n = grid->size();
  return FrozenPotential(Field(std::move(grid), Vector::Constant(n, value)));
}

FrozenPotential FrozenPotential::from_phi(const Field& phi, const ModelParams& params) {
  const double e = params.e;
  const Vector& f = phi.values();
  return FrozenPotential(phi.with_values(params.epsilon + e * (2 * params.omega - e * f) * f));
}

const char* to_string(ShotKind k) {
  switch (k) {
    case ShotKind::crossed_zero: return "crossed_zero";
    case ShotKind::diverged: return "diverged";
    case ShotKind::decayed: return "decayed";
  }
  return "unknown";
}

ShotOutcome shoot(const FrozenPotential& w, double p, double a) {
  check_solver_exponent(p);
  if (!(a > 0) || !std::isfinite(a)) throw InvalidArgument("shoot: amplitude must be positive");
  return integrate(w, p, a, false).outcome;
}

Bracket bracket_amplitude(const FrozenPotential& w, double p, double guess, const BracketPolicy& policy) {
  check_solver_exponent(p);
  if (!(guess > 0)) throw InvalidArgument("bracket_amplitude: guess must be positive");
  if (!(policy.expand > 1)) throw InvalidArgument("bracket_amplitude: expansion factor must exceed 1");
  double lo = guess, hi = guess;
  const bool crossed = crosses(w, p, guess);
  for (int k = 0; k < policy.max_expansions; ++k) {
    if (crossed) {
      lo /= policy.expand;
      if (!crosses(w, p, lo)) return {lo, lo * policy.expand};
    } else {
      hi *= policy.expand;
      if (crosses(w, p, hi)) return {hi / policy.expand, hi};
    }
  }
  throw NoBracket("bracket_amplitude: no sign change of the shot kind after expansion");
}

GroundState find_ground_state(const FrozenPotential& w, double p, Bracket bracket) {
  check_solver_exponent(p);
  if (!(bracket.lo > 0 && bracket.hi > 0)) throw InvalidArgument("find_ground_state: amplitudes must be positive");
  const bool lo_crosses = crosses(w, p, bracket.lo);
  const bool hi_crosses = crosses(w, p, bracket.hi);
  if (lo_crosses == hi_crosses) throw NoBracket("find_ground_state: bracket does not separate shot kinds");
  double crossing = lo_crosses ? bracket.lo : bracket.hi;
  double settled = lo_crosses ? bracket.hi : bracket.lo;

  GroundState gs{Field::zero(w.W().grid_ptr())};
  // Bisect to the resolution of double precision; this is well below the
  // 1e-12 amplitude tolerance and pushes the shot separation radius outward.
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (crossing + settled);
    if (mid == crossing || mid == settled) break;
    ++gs.bisection_steps;
    (crosses(w, p, mid) ? crossing : settled) = mid;
  }
  if (std::abs(crossing - settled) > 1e-12 * std::max(1.0, settled))
    throw InternalError("find_ground_state: bisection stalled above tolerance");

  const Trajectory below = integrate(w, p, settled, true);
  const Trajectory above = integrate(w, p, crossing, true);
  const Grid& g = w.grid();
  const Index n = g.intervals();

  // Trust the settled shot up to the first node where the bracketing shots
  // separate or the settled shot turns upward.
  Index cut = static_cast<Index>(std::min(below.u.size(), above.u.size())) - 1;
  for (Index i = 1; i <= cut; ++i) {
    const double ub = below.u[i];
    if (std::abs(above.u[i] - ub) > 1e-7 * ub || below.v[i] > 0) {
      cut = i;
      break;
    }
  }
  cut = std::max<Index>(cut, 2);

  Vector u(n + 1);
  for (Index i = 0; i <= std::min(cut, n); ++i) u(i) = below.u[i];
  if (cut < n) {
    const std::vector<double> tail = decaying_tail(w, cut);
    const double scale = below.u[cut] * g.r(cut);
    for (Index i = cut + 1; i <= n; ++i) u(i) = scale * tail[i] / g.r(i);
  }
  gs.u = Field(w.W().grid_ptr(), std::move(u));
  gs.amplitude = settled;
  gs.match_radius = g.r(std::min(cut, n));
  gs.tail_resolved = gs.u(n) < 1e-10 * gs.u(0);
  return gs;
}

double nehari_scale(const Field& u, const FrozenPotential& w, double p) {
  const double lp = integrate3d(u.grid(), Vector(u.values().abs().pow(p)));
  if (!(lp > 0)) throw InvalidArgument("nehari_scale: u vanishes");
  const double quad = dirichlet_energy(u) + integrate3d(u.grid(), Vector(w.W().values() * u.values().square()));
  return std::pow(quad / lp, 1.0 / (p - 2));
}

double frozen_functional(const Field& u, const FrozenPotential& w, double p) {
  const double quad = dirichlet_energy(u) + integrate3d(u.grid(), Vector(w.W().values() * u.values().square()));
  const double lp = integrate3d(u.grid(), Vector(u.values().abs().pow(p)));
  return 0.5 * quad - lp / p;
}

double frozen_nehari_residual(const Field& u, const FrozenPotential& w, double p) {
  const double lp = integrate3d(u.grid(), Vector(u.values().abs().pow(p)));
  if (!(lp > 0)) throw InvalidArgument("frozen_nehari_residual: u vanishes");
  const double quad = dirichlet_energy(u) + integrate3d(u.grid(), Vector(w.W().values() * u.values().square()));
  return std::abs(quad - lp) / lp;
}

DescentResult nehari_descent(const Field& u0, const FrozenPotential& w, double p, const DescentSettings& settings) {
  check_solver_exponent(p);
  if (!(u0.values().abs().maxCoeff() > 0)) throw InvalidArgument("nehari_descent: initial guess vanishes");
  if (!(settings.step > 0 && settings.step <= 1)) throw InvalidArgument("nehari_descent: step must lie in (0, 1]");
  const Grid& g = u0.grid();
  const Vector& m = g.moments();
  const double robin = std::sqrt(std::max(w.W()(g.intervals()), 0.0)) + 1 / g.r_max();
  const auto op = radial_operator(g, w.W().values(), robin);

  // Nehari projection for the discrete quadratic form of op
  auto project = [&](Vector x) {
    const double quad = (x * op.apply(x)).sum();
    const double lp = (m * x.abs().pow(p)).sum();
    if (!(lp > 0) || !(quad > 0)) throw NonConvergence("nehari_descent: iterate left the admissible cone");
    return Vector(x * std::pow(quad / lp, 1.0 / (p - 2)));
  };
  auto norm = [&](const Vector& x) { return std::sqrt((m * x.square()).sum()); };

  Vector u = project(u0.values().abs());
  double tau = settings.step;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k < settings.max_steps; ++k) {
    const Vector z = op.solve(Vector(m * u.pow(p - 1)));
    const Vector grad = u - z;
    const double residual = norm(grad) / norm(u);
    if (residual < settings.tolerance) return {u0.with_values(u), residual, k};
    if (residual > 2 * previous) {
      tau /= 2;
      if (tau < 1e-8) throw NonConvergence("nehari_descent: step size collapsed", u0.with_values(u));
    }
    previous = residual;
    u = project(Vector((u - tau * grad).max(0.0)));
  }
  throw NonConvergence("nehari_descent: step budget exhausted", u0.with_values(u));
}

}  // namespace kgm
