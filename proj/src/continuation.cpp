#include "kgm/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "kgm/poisson.hpp"

namespace kgm {

namespace {

Field on_grid(const Field& f, const GridPtr<double>& grid) {
  if (f.grid() == *grid) return Field(grid, f.values());
  return Field::sample(grid, [&](double r) { return f.at(r); });
}

double relative_l2_change(const Field& next, const Field& prev) {
  const double base = std::sqrt(integrate3d(next.grid(), Vector(next.values().square())));
  const double diff = std::sqrt(integrate3d(next.grid(), Vector((next.values() - prev.values()).square())));
  return base > 0 ? diff / base : diff;
}

bool residuals_within(const DiagnosticsReport& d) {
  return d.matter_residual < Tolerances::equation && d.gauge_residual < Tolerances::equation &&
         d.nehari_residual < Tolerances::nehari && d.pohozaev_residual < Tolerances::pohozaev;
}

}  // namespace

void SolveSettings::validate() const {
  if (!(damping > 0 && damping <= 1)) throw InvalidArgument("damping must lie in (0, 1]");
  if (!(outer_tol > 0)) throw InvalidArgument("outer_tol must be positive");
  if (max_outer < 1) throw InvalidArgument("max_outer must be at least 1");
  if (!(r_max > 0)) throw InvalidArgument("r_max must be positive");
  if (intervals < kMinIntervals) throw InvalidArgument("grid needs at least 16 intervals");
}

SolutionRecord solve_coupled(const ModelParams& params, const SolveSettings& settings,
                             const std::optional<WarmStart>& warm) {
  params.validate();
  settings.validate();
  if (params.epsilon == 0 && !warm) throw InvalidArgument("solve_coupled: epsilon = 0 needs a warm start");
  const auto grid = make_grid(settings.r_max, settings.intervals, settings.grid);
  const double p = params.p;

  Field u = Field::zero(grid);
  Field w = Field(grid, Vector::Constant(grid->size(), params.epsilon));
  double amplitude = 1;
  if (warm) {
    u = on_grid(warm->u, grid);
    w = FrozenPotential::from_phi(on_grid(warm->phi, grid), params).W();
    amplitude = u(0);
  } else {
    const FrozenPotential frozen(w);
    const GroundState gs = find_ground_state(frozen, p, bracket_amplitude(frozen, p, amplitude, settings.bracket));
    u = gs.u;
    amplitude = gs.amplitude;
  }

  SolutionRecord rec{params, u, Field::zero(grid), {}};
  const double theta = settings.damping;
  for (int k = 1; k <= settings.max_outer; ++k) {
    const Field phi = solve_phi(u, params).phi;
    const Field target = FrozenPotential::from_phi(phi, params).W();
    w = w.with_values((1 - theta) * w.values() + theta * target.values());
    const FrozenPotential frozen(w);
    const GroundState gs = find_ground_state(frozen, p, bracket_amplitude(frozen, p, amplitude, settings.bracket));
    const double change = relative_l2_change(gs.u, u);
    u = gs.u;
    amplitude = gs.amplitude;
    rec.outer_iterations = k;
    rec.final_change = change;
    rec.tail_resolved = gs.tail_resolved;
    if (change < settings.outer_tol) {
      rec.u = u;
      rec.phi = solve_phi(u, params).phi;
      rec.amplitude = amplitude;
      rec.diagnostics = diagnose(rec.u, rec.phi, params);
      rec.converged = residuals_within(rec.diagnostics);
      return rec;
    }
  }
  throw NonConvergence("solve_coupled: no convergence within " + std::to_string(settings.max_outer) +
                           " outer iterations",
                       u);
}

BranchTrends trends_of(const std::vector<SolutionRecord>& records) {
  BranchTrends t;
  for (const auto& r : records) {
    const auto& d = r.diagnostics;
    t.epsilon.push_back(r.params.epsilon);
    t.l2_norm.push_back(d.L2_norm);
    t.lp_norm.push_back(d.Lp_norm);
    t.grad_norm.push_back(d.grad_norm);
    t.phi_source.push_back(d.phi_source_integral);
    t.energy.push_back(d.energy);
    t.charge.push_back(d.charge);
    t.tail_constant.push_back(d.tail_constant);
    t.decay_exp_rate.push_back(d.decay_exp_rate);
    t.decay_sqrt_rate.push_back(d.decay_sqrt_rate);
  }
  return t;
}

std::vector<double> default_schedule() {
  std::vector<double> s;
  for (int k = 0; k <= 9; ++k) s.push_back(std::ldexp(1.0, -k));
  s.push_back(1e-3);
  s.push_back(0);
  return s;
}

BranchRecord continue_in_epsilon(const ModelParams& params, const std::vector<double>& schedule,
                                 const SolveSettings& settings) {
  if (schedule.empty()) throw InvalidArgument("continue_in_epsilon: empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] >= 0) || !std::isfinite(schedule[i]))
      throw InvalidArgument("continue_in_epsilon: schedule entries must be finite and >= 0");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw InvalidArgument("continue_in_epsilon: schedule must be strictly decreasing");
  }
  BranchRecord branch;
  branch.schedule = schedule;
  std::optional<WarmStart> warm;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    ModelParams q = params;
    q.epsilon = schedule[i];
    if (i == 0) {
      branch.records.push_back(solve_coupled(q, settings));
    } else {
      try {
        branch.records.push_back(solve_coupled(q, settings, warm));
      } catch (const std::runtime_error& err) {
        branch.truncated = true;
        branch.failure = "epsilon = " + std::to_string(schedule[i]) + ": " + err.what();
        break;
      }
    }
    warm = WarmStart{branch.records.back().u, branch.records.back().phi};
  }
  branch.trends = trends_of(branch.records);
  return branch;
}

double g_threshold(double p) {
  if (!(p > 2 && p < 6)) throw InvalidArgument("g_threshold: p must lie in (2, 6)");
  return p < 3 ? std::sqrt((p - 2) * (4 - p)) : 1.0;
}

std::vector<SweepCell> sweep(const std::vector<double>& p_values, const std::vector<double>& omega_over_m,
                             double e, const SolveSettings& settings) {
  if (p_values.empty() || omega_over_m.empty()) throw InvalidArgument("sweep: empty parameter list");
  settings.validate();
  for (double p : p_values) g_threshold(p);
  for (double ratio : omega_over_m) {
    if (!(ratio > 0 && ratio <= 1)) throw InvalidArgument("sweep: omega/m must lie in (0, 1]");
  }
  std::vector<double> ps = p_values, rs = omega_over_m;
  std::sort(ps.begin(), ps.end());
  std::sort(rs.begin(), rs.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());

  auto run_cell = [e, settings](double p, double ratio) {
    SweepCell cell;
    cell.p = p;
    cell.omega_over_m = ratio;
    cell.epsilon = 1 - ratio * ratio;
    cell.g = g_threshold(p);
    cell.in_theorem_region = ratio < cell.g;
    const ModelParams params{e, ratio, p, cell.epsilon};
    try {
      std::optional<SolutionRecord> rec;
      if (cell.epsilon > 0) {
        rec = solve_coupled(params, settings);
      } else {
        BranchRecord branch = continue_in_epsilon(params, default_schedule(), settings);
        if (branch.truncated) throw NonConvergence(branch.failure);
        rec = std::move(branch.records.back());
      }
      cell.converged = rec->converged;
      cell.outer_iterations = rec->outer_iterations;
      cell.diagnostics = rec->diagnostics;
      cell.message = rec->converged ? "converged" : "residuals above tolerance";
    } catch (const std::exception& err) {
      cell.converged = false;
      cell.message = err.what();
    }
    return cell;
  };

  std::vector<std::future<SweepCell>> jobs;
  for (double p : ps) {
    for (double ratio : rs) jobs.push_back(std::async(std::launch::async, run_cell, p, ratio));
  }
  std::vector<SweepCell> cells;
  cells.reserve(jobs.size());
  for (auto& job : jobs) cells.push_back(job.get());
  return cells;
}

}  // namespace kgm
