#include "kgm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "kgm/io.hpp"

namespace kgm {

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string record;
  std::string warm;
};

class Session {
 public:
  Session(const Options& opt, std::string command, std::ostream& out)
      : out_(out), config_(opt.config.empty() ? RunConfig{} : load_config(opt.config)) {
    manifest_.command = std::move(command);
    manifest_.config_hash = config_hash(config_);
    manifest_.started = utc_timestamp();
    if (const char* env = std::getenv("KGM_OUTPUT_DIR"); env && *env) dir_ = env;
    else if (!opt.out.empty()) dir_ = opt.out;
    else dir_ = config_.output;
  }

  const RunConfig& config() const { return config_; }
  std::ostream& out() { return out_; }

  std::filesystem::path file(const std::string& name) {
    manifest_.files.push_back(name);
    return dir_ / name;
  }

  void finish() {
    manifest_.finished = utc_timestamp();
    write_manifest(manifest_, dir_ / "manifest.json");
    out_ << "wrote " << manifest_.files.size() << " file(s) to " << dir_.string() << "\n";
  }

 private:
  std::ostream& out_;
  RunConfig config_;
  RunManifest manifest_;
  std::filesystem::path dir_;
};

void write_jsonl(const std::vector<nlohmann::json>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& r : rows) f << r.dump() << "\n";
  if (!f) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void summarize(std::ostream& out, const SolutionRecord& r) {
  const auto& d = r.diagnostics;
  out << "eps=" << fmt(r.params.epsilon) << " converged=" << (r.converged ? "yes" : "no")
      << " iterations=" << r.outer_iterations << " u(0)=" << fmt(r.amplitude) << " nehari=" << fmt(d.nehari_residual)
      << " pohozaev=" << fmt(d.pohozaev_residual) << " energy=" << fmt(d.energy) << " charge=" << fmt(d.charge)
      << "\n";
}

int cmd_solve(Session& s, const Options& opt) {
  const RunConfig& c = s.config();
  std::optional<WarmStart> warm;
  if (!opt.warm.empty()) {
    const SolutionRecord w = load_solutions(opt.warm).back();
    warm = WarmStart{w.u, w.phi};
  }
  const SolutionRecord r = solve_coupled(c.model, c.settings, warm);
  persist_record(r, s.file("solution.jsonl"));
  summarize(s.out(), r);
  s.finish();
  return r.converged ? kExitOk : kExitFailure;
}

int cmd_branch(Session& s) {
  const RunConfig& c = s.config();
  const BranchRecord b = continue_in_epsilon(c.model, c.schedule, c.settings);
  persist_branch(b, s.file("branch.jsonl"));
  for (const auto& r : b.records) summarize(s.out(), r);
  if (b.truncated) s.out() << "branch truncated: " << b.failure << "\n";
  s.finish();
  const bool all = std::all_of(b.records.begin(), b.records.end(), [](const auto& r) { return r.converged; });
  return !b.truncated && all ? kExitOk : kExitFailure;
}

int cmd_sweep(Session& s) {
  const RunConfig& c = s.config();
  const auto cells = sweep(c.sweep.p_values, c.sweep.omega_over_m, c.model.e, c.settings);
  std::vector<nlohmann::json> index;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto j = to_json(cells[i]);
    write_jsonl({j}, s.file("sweep/cell_" + std::to_string(i) + ".jsonl"));
    index.push_back(j);
    s.out() << "p=" << fmt(cells[i].p) << " omega/m=" << fmt(cells[i].omega_over_m)
            << " g=" << fmt(cells[i].g) << " theorem_region=" << (cells[i].in_theorem_region ? "yes" : "no")
            << " converged=" << (cells[i].converged ? "yes" : "no")
            << (cells[i].message.empty() ? "" : " (" + cells[i].message + ")") << "\n";
  }
  write_jsonl(index, s.file("sweep.jsonl"));
  s.finish();
  return kExitOk;
}

int cmd_diagnose(Session& s, const Options& opt) {
  if (opt.record.empty()) throw InvalidArgument("diagnose: --record is required");
  const auto records = load_solutions(opt.record);
  std::vector<nlohmann::json> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const DiagnosticsReport d = diagnose(r.u, r.phi, r.params);
    rows.push_back({{"schema_version", kSchemaVersion},
                    {"kind", "diagnostics"},
                    {"index", i},
                    {"params", to_json(r.params)},
                    {"report", to_json(d)}});
    s.out() << "eps=" << fmt(r.params.epsilon) << " nehari=" << fmt(d.nehari_residual)
            << " pohozaev=" << fmt(d.pohozaev_residual) << " matter=" << fmt(d.matter_residual)
            << " gauge=" << fmt(d.gauge_residual) << " decay=" << to_string(d.decay_fit_preference) << "\n";
  }
  write_jsonl(rows, s.file("diagnostics.jsonl"));
  s.finish();
  return kExitOk;
}

int cmd_ineqlab(Session& s) {
  const RunConfig& c = s.config();
  LabSettings ls;
  for (FamilyKind k : c.lab.families) ls.families.push_back({k, c.seed, c.lab.count, c.lab.beta, c.lab.depth});
  ls.r_max = c.settings.r_max;
  ls.intervals = c.settings.intervals;
  ls.grid = c.settings.grid;
  ls.alpha = c.lab.alpha;
  ls.r0 = c.lab.r0;
  ls.q = c.lab.q;
  ls.p = c.model.p;
  ls.M = c.lab.M;
  ls.params = c.model;
  const auto reports = run_lab(ls);
  std::vector<nlohmann::json> rows;
  for (const auto& r : reports) {
    rows.push_back(to_json(r));
    s.out() << r.suite << " " << to_string(r.family) << " sup=" << fmt(r.report.empirical_sup_constant)
            << " slope=" << fmt(r.report.trend_slope) << " skipped=" << r.skipped << "\n";
  }
  write_jsonl(rows, s.file("ineqlab.jsonl"));
  s.finish();
  return kExitOk;
}

int cmd_emit_plots(Session& s, const Options& opt) {
  if (opt.record.empty()) throw InvalidArgument("emit-plots: --record is required");
  const auto records = load_solutions(opt.record);
  const std::string stem = std::filesystem::path(opt.record).stem().string();
  for (std::size_t i = 0; i < records.size(); ++i) {
    write_columns(records[i], s.file("plots/" + stem + "_" + std::to_string(i) + ".csv"));
  }
  s.finish();
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radial Klein-Gordon-Maxwell solver and inequality lab", "kgm"};
  app.require_subcommand(1);
  Options opt;

  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (KGM_OUTPUT_DIR takes precedence)");
    return sub;
  };
  auto* solve = add("solve", "solve the coupled system at one epsilon");
  solve->add_option("--warm", opt.warm, "record file whose last solution seeds the solve")->check(CLI::ExistingFile);
  auto* branch = add("branch", "continue in epsilon along the configured schedule");
  auto* sw = add("sweep", "map convergence over (p, omega/m)");
  auto* diag = add("diagnose", "recompute diagnostics for stored solutions");
  diag->add_option("--record", opt.record, "record or branch file")->required()->check(CLI::ExistingFile);
  auto* lab = add("ineqlab", "run the inequality ratio suites");
  auto* plots = add("emit-plots", "write r,u,phi,log_ru,r_phi columns");
  plots->add_option("--record", opt.record, "record or branch file")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  std::string command;
  for (const auto& a : args) command += (command.empty() ? "" : " ") + a;

  try {
    Session s(opt, command, out);
    if (solve->parsed()) return cmd_solve(s, opt);
    if (branch->parsed()) return cmd_branch(s);
    if (sw->parsed()) return cmd_sweep(s);
    if (diag->parsed()) return cmd_diagnose(s, opt);
    if (lab->parsed()) return cmd_ineqlab(s);
    if (plots->parsed()) return cmd_emit_plots(s, opt);
    throw InternalError("no subcommand dispatched");
  } catch (const SchemaVersionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const NonConvergence& e) {
    err << "nonconvergence: " << e.what() << "\n";
    return kExitFailure;
  } catch (const NoBracket& e) {
    err << "nonconvergence: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace kgm
