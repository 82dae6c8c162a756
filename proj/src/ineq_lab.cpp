#include "kgm/ineq_lab.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "kgm/diagnostics.hpp"
#include "kgm/poisson.hpp"

namespace kgm {

namespace {

/// Uniform doubles taken from the top 53 bits of the raw 64-bit output.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 gen_;
};

std::uint64_t member_seed(std::uint64_t seed, int index) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index) * 0xBF58476D1CE4E5B9ULL + 1;
}

/// 1 up to 0.8 c, C² smoothstep down to 0 at c.
double taper(double r, double cutoff) {
  const double a = 0.8 * cutoff;
  if (r <= a) return 1;
  if (r >= cutoff) return 0;
  const double x = (cutoff - r) / (cutoff - a);
  return x * x * x * (10 - 15 * x + 6 * x * x);
}

Member gaussian_mixture(Stream& s, double cutoff) {
  const int k = s.integer(1, 4);
  std::vector<std::array<double, 3>> parts;
  double scale = 0;
  for (int j = 0; j < k; ++j) {
    const double a = s.uniform(0.2, 2.0), c = s.uniform(0.0, 15.0), w = s.uniform(0.5, 5.0);
    parts.push_back({a, c, w});
    scale = std::max(scale, c + w);
  }
  return {[parts, cutoff](double r) {
            double v = 0;
            for (const auto& [a, c, w] : parts) v += a * std::exp(-((r - c) / w) * ((r - c) / w));
            return v * taper(r, cutoff);
          },
          scale};
}

Member power_tail(Stream& s, double beta, double cutoff) {
  const double a = s.uniform(0.5, 2.0), c = s.uniform(0.5, 4.0);
  return {[a, c, beta, cutoff](double r) { return a * std::pow(1 + (r / c) * (r / c), -beta / 2) * taper(r, cutoff); },
          c};
}

Member dyadic_comb(Stream& s, int depth, double cutoff) {
  std::vector<double> amp(depth);
  double mass = 0, centroid = 0;
  for (int n = 0; n < depth; ++n) {
    amp[n] = s.uniform(0.0, 1.0);
    mass += amp[n];
    centroid += amp[n] * std::ldexp(1.5, n);
  }
  return {[amp, cutoff](double r) {
            if (r < 1) return 0.0;
            const int n = static_cast<int>(std::floor(std::log2(r)));
            if (n >= static_cast<int>(amp.size())) return 0.0;
            const double lo = std::ldexp(1.0, n);
            const double x = std::sin(std::numbers::pi * (r - lo) / lo);
            return amp[n] * x * x * taper(r, cutoff);
          },
          mass > 0 ? centroid / mass : 1.0};
}

/// Cubic Hermite through random knot values with Catmull-Rom slopes, flat at
/// the origin and zero at the last knot.
Member random_spline(Stream& s, double cutoff) {
  constexpr int knots = 8;
  const double length = s.uniform(5.0, 40.0);
  std::vector<double> v(knots);
  for (int j = 0; j + 1 < knots; ++j) v[j] = s.uniform(0.0, 1.0);
  v[knots - 1] = 0;
  const double h = length / (knots - 1);
  std::vector<double> m(knots, 0.0);
  for (int j = 1; j + 1 < knots; ++j) m[j] = (v[j + 1] - v[j - 1]) / (2 * h);
  return {[v, m, h, length, cutoff](double r) {
            if (r >= length) return 0.0;
            const int j = std::min(static_cast<int>(r / h), knots - 2);
            const double t = (r - j * h) / h;
            const double t2 = t * t, t3 = t2 * t;
            const double val = (2 * t3 - 3 * t2 + 1) * v[j] + (t3 - 2 * t2 + t) * h * m[j] +
                               (-2 * t3 + 3 * t2) * v[j + 1] + (t3 - t2) * h * m[j + 1];
            return val * taper(r, cutoff);
          },
          length};
}

double radial_integral(const Grid& g, const Vector& f) { return (g.weights() * f).sum(); }

RatioSample ratio_of(double lhs, double rhs) {
  RatioSample s{lhs, rhs, 0};
  if (rhs > 0) s.ratio = lhs / rhs;
  else if (lhs > 0) s.ratio = std::numeric_limits<double>::infinity();
  return s;
}

template <typename F>
auto parallel_map(int count, F&& f) {
  using R = decltype(f(0));
  std::vector<R> out(count);
  const int workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (int i = w; i < count; i += workers) out[i] = f(i);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace

const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::gaussian_mixture: return "gaussian-mixture";
    case FamilyKind::truncated_power_tail: return "truncated-power-tail";
    case FamilyKind::dyadic_comb: return "dyadic-comb";
    case FamilyKind::random_spline: return "random-spline";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& s) {
  for (auto k : {FamilyKind::gaussian_mixture, FamilyKind::truncated_power_tail, FamilyKind::dyadic_comb,
                 FamilyKind::random_spline}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidArgument("unknown test function family '" + s + "'");
}

std::vector<Member> generate(const TestFunctionFamily& family, double cutoff) {
  if (family.count < 0) throw InvalidArgument("generate: count must be >= 0");
  if (!(cutoff > 0)) throw InvalidArgument("generate: cutoff must be positive");
  if (family.kind == FamilyKind::truncated_power_tail && !(family.beta > 0))
    throw InvalidArgument("generate: power-tail exponent must be positive");
  if (family.kind == FamilyKind::dyadic_comb && !(family.depth >= 1 && family.depth <= 40))
    throw InvalidArgument("generate: comb depth must lie in [1, 40]");
  std::vector<Member> out;
  out.reserve(family.count);
  for (int i = 0; i < family.count; ++i) {
    Stream s(member_seed(family.seed, i));
    switch (family.kind) {
      case FamilyKind::gaussian_mixture: out.push_back(gaussian_mixture(s, cutoff)); break;
      case FamilyKind::truncated_power_tail: out.push_back(power_tail(s, family.beta, cutoff)); break;
      case FamilyKind::dyadic_comb: out.push_back(dyadic_comb(s, family.depth, cutoff)); break;
      case FamilyKind::random_spline: out.push_back(random_spline(s, cutoff)); break;
    }
  }
  return out;
}

Field sample_member(const Member& m, const GridPtr<double>& grid, double t) {
  if (!(t > 0)) throw InvalidArgument("sample_member: scaling t must be positive");
  return Field::sample(grid, [&](double r) { return t * t * m.profile(t * r); });
}

RatioReport aggregate(const std::vector<RatioSample>& samples, const std::vector<double>& scales) {
  if (samples.size() != scales.size()) throw InvalidArgument("aggregate: sample and scale counts differ");
  RatioReport rep;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rep.lhs.push_back(samples[i].lhs);
    rep.rhs.push_back(samples[i].rhs);
    rep.ratio.push_back(samples[i].ratio);
    rep.scale.push_back(scales[i]);
    rep.empirical_sup_constant = std::max(rep.empirical_sup_constant, samples[i].ratio);
    if (scales[i] > 0 && std::isfinite(samples[i].ratio)) {
      x.push_back(std::log(scales[i]));
      y.push_back(samples[i].ratio);
    }
  }
  if (x.size() >= 2) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i] / n;
      my += y[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    rep.trend_slope = sxx > 0 ? sxy / sxx : 0;
  }
  return rep;
}

double dyadic_constant(double alpha) {
  if (!(alpha > 0.5)) throw InvalidArgument("dyadic_constant: alpha must exceed 1/2");
  return std::riemann_zeta(2 * alpha) * std::pow(std::numbers::log2e, 2 * alpha);
}

RatioSample dyadic_check(const Field& h, double alpha, double R) {
  if (!(alpha > 0.5)) throw InvalidArgument("dyadic_check: alpha must exceed 1/2");
  if (!(R > 1)) throw InvalidArgument("dyadic_check: R must exceed 1");
  const Grid& g = h.grid();
  if ((h.values() < 0).any()) throw InvalidArgument("dyadic_check: h must be nonnegative");
  const Vector ch = cumulative_radial(g, h.values());
  const double tail = ch(g.intervals()) - cumulative_at(g, h.values(), ch, 3 * R);
  const double lhs = tail * tail;

  Vector wh(g.size());
  for (Index i = 0; i < g.size(); ++i) wh(i) = g.r(i) < 0.5 ? 0.0 : std::pow(1 + std::log(g.r(i)), alpha) * h(i);
  const Vector cw = cumulative_radial(g, wh);
  Vector outer(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    outer(i) = wh(i) * (cumulative_at(g, wh, cw, 2 * r) - cumulative_at(g, wh, cw, r / 2));
  }
  const Vector co = cumulative_radial(g, outer);
  const double rhs = co(g.intervals()) - cumulative_at(g, outer, co, R);
  return ratio_of(lhs, rhs);
}

double min_kernel_double_integral(const Field& u, double r0) {
  if (!(r0 >= 0)) throw InvalidArgument("min_kernel_double_integral: R0 must be >= 0");
  const Grid& g = u.grid();
  const Vector gr = u.values().square() * g.nodes();  // u² r
  const Vector grs = gr * g.nodes();                  // u² r²
  const Vector cg = cumulative_radial(g, gr);
  const Vector cgs = cumulative_radial(g, grs);
  const double below = cumulative_at(g, grs, cgs, r0);
  const double total = cg(g.intervals());
  const double before = cumulative_at(g, gr, cg, r0);
  Vector integrand(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    const double inner = std::max(cgs(i) - below, 0.0) + r * (total - std::max(cg(i), before));
    integrand(i) = gr(i) * inner;
  }
  const Vector ci = cumulative_radial(g, integrand);
  return ci(g.intervals()) - cumulative_at(g, integrand, ci, r0);
}

LemmaDueSample lemma_due_check(const Field& u, const ModelParams& params) {
  params.validate();
  if (!(params.e > 0)) throw InvalidArgument("lemma_due_check: coupling e must be positive");
  const Field phi = solve_phi(u, params).phi;
  LemmaDueSample out;
  out.bound = 2 / (params.e * params.omega);
  out.r0 = lower_bound_threshold(phi, params);
  const double lhs = min_kernel_double_integral(u, out.r0);
  const double rhs = integrate3d(u.grid(), Vector(phi.values() * u.values().square()));
  out.sample = ratio_of(lhs, rhs);
  out.radial_ratio = rhs > 0 ? lhs / (rhs / (4 * std::numbers::pi)) : 0;
  return out;
}

RatioSample weight_lemma_check(const Field& u, double alpha, double r0) {
  if (!(alpha > 0.5)) throw InvalidArgument("weight_lemma_check: alpha must exceed 1/2");
  if (!(r0 > 1)) throw InvalidArgument("weight_lemma_check: R0 must exceed 1");
  const Grid& g = u.grid();
  Vector f(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    f(i) = r > 0 ? u(i) * u(i) * std::pow(r, 1.5) / std::pow(1 + std::abs(std::log(r)), alpha) : 0.0;
  }
  const double grad = dirichlet_energy(u);
  return ratio_of(radial_integral(g, f), std::sqrt(grad * grad + min_kernel_double_integral(u, r0)));
}

RatioSample prop_est_check(const Field& u, const ModelParams& params, double alpha, double M) {
  if (!(alpha > 0.5)) throw InvalidArgument("prop_est_check: alpha must exceed 1/2");
  if (!(M >= 0)) throw InvalidArgument("prop_est_check: M must be >= 0");
  const Field phi = solve_phi(u, params).phi;
  const double grad_phi = std::sqrt(potential_dirichlet_energy(phi));
  if (grad_phi > M) throw NotInClass("prop_est_check: ||grad phi_u|| = " + std::to_string(grad_phi) + " exceeds M");
  const double grad = dirichlet_energy(u);
  const double coupling = integrate3d(u.grid(), Vector(phi.values() * u.values().square()));
  return ratio_of(weighted_l2(u, alpha), std::sqrt(grad * grad + coupling));
}

EmbeddingSample lp_embedding_check(const Field& u, double q, double r0) {
  if (!(q > 18.0 / 7 && q <= 6)) throw InvalidArgument("lp_embedding_check: q must lie in (18/7, 6]");
  if (!(r0 > 1)) throw InvalidArgument("lp_embedding_check: R0 must exceed 1");
  EmbeddingSample out;
  const double norm = lp_norm(u, q);
  out.sample = ratio_of(norm, mn_functionals(u, r0).N);
  const double grad = dirichlet_energy(u);
  const Grid& g = u.grid();
  for (double eta : default_eta_scan()) {
    const Vector v = u.values().square() / (1 + g.nodes().pow(eta));
    const double denom = std::sqrt(grad + integrate3d(g, v));
    out.eta.push_back(eta);
    out.eta_ratio.push_back(denom > 0 ? norm / denom : 0.0);
  }
  return out;
}

MN mn_functionals(const Field& u, double r0) {
  if (!(r0 > 1)) throw InvalidArgument("mn_functionals: R0 must exceed 1");
  const double grad = dirichlet_energy(u);
  const double d = min_kernel_double_integral(u, r0);
  return {grad + d, std::sqrt(grad + std::sqrt(d))};
}

RatioSample lp_upper_bound_check(const Field& u, double p, double r0) {
  if (!(p > 3 && p < 6)) throw InvalidArgument("lp_upper_bound_check: p must lie in (3, 6)");
  const double lp = integrate3d(u.grid(), Vector(u.values().abs().pow(p)));
  return ratio_of(lp, std::pow(mn_functionals(u, r0).M, (2 * p - 3) / 3));
}

std::vector<SuiteReport> run_lab(const LabSettings& s) {
  s.params.validate();
  const auto grid = make_grid(s.r_max, s.intervals, s.grid);
  const double cutoff = s.cutoff_fraction * s.r_max;
  std::vector<SuiteReport> out;
  for (const auto& family : s.families) {
    const std::vector<Member> members = generate(family, cutoff);
    std::vector<double> scales;
    for (const auto& m : members) scales.push_back(m.scale);

    // per member: one sample per suite, NaN lhs marks a rejected member
    constexpr int kSuites = 8;
    const auto rows = parallel_map(static_cast<int>(members.size()), [&](int i) {
      const Field u = sample_member(members[i], grid);
      std::array<RatioSample, kSuites> r{};
      Vector h(grid->size());
      for (Index k = 0; k < grid->size(); ++k) {
        const double x = grid->r(k);
        h(k) = x > 0 ? u(k) * u(k) * std::pow(x, 1.5) / std::pow(1 + std::abs(std::log(x)), s.alpha) : 0.0;
      }
      r[0] = dyadic_check(u.with_values(h), s.alpha, s.r0);
      r[1] = lemma_due_check(u, s.params).sample;
      r[2] = weight_lemma_check(u, s.alpha, s.r0);
      try {
        r[3] = prop_est_check(u, s.params, s.alpha, s.M);
      } catch (const NotInClass&) {
        r[3] = {std::numeric_limits<double>::quiet_NaN(), 0, 0};
      }
      r[4] = lp_embedding_check(u, s.q, s.r0).sample;
      // M/N implication on the member rescaled in amplitude to M = 1
      const MN mn = mn_functionals(u, s.r0);
      const double grad = dirichlet_energy(u), d = mn.M - grad;
      double c2 = 0;
      if (d > 0) c2 = (-grad + std::sqrt(grad * grad + 4 * d)) / (2 * d);
      else if (grad > 0) c2 = 1 / grad;
      const MN unit = mn_functionals(std::sqrt(c2) * u, s.r0);
      r[5] = ratio_of(0.5 * std::pow(unit.N, 4), unit.M);
      r[6] = lp_upper_bound_check(u, s.p, s.r0);
      r[7] = ratio_of(strauss_bound_check(u, 2.0).max_ratio, 1.0);
      return r;
    });
    static const char* names[kSuites] = {"dyadic",      "lemma_due",        "weight_lemma",   "prop_est",
                                         "lp_embedding", "mn_implication", "lp_upper_bound", "strauss"};
    for (int k = 0; k < kSuites; ++k) {
      std::vector<RatioSample> samples;
      std::vector<double> sc;
      int skipped = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (std::isnan(rows[i][k].lhs)) {
          ++skipped;
          continue;
        }
        samples.push_back(rows[i][k]);
        sc.push_back(scales[i]);
      }
      out.push_back({names[k], family.kind, aggregate(samples, sc), skipped});
    }
  }
  return out;
}

}  // namespace kgm
