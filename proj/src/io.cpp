#include "kgm/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace kgm {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading helpers

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      const std::string full = where.empty() ? key : where + "." + key;
      throw ConfigError("unknown key '" + full + "'");
    }
  }
}

const json& section(const json& root, const std::string& key) {
  static const json empty = json::object();
  if (!root.contains(key)) return empty;
  const json& s = root.at(key);
  if (!s.is_object()) throw ConfigError(key + ": expected a table");
  return s;
}

double number(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& obj, const std::string& key, const std::string& where, std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + ": expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

/// Runs a validator and re-raises its message under the given key.
template <class F>
void checked(const std::string& where, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& err) {
    throw ConfigError(where + ": " + err.what());
  }
}

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// ---------------------------------------------------------------------------
// Record helpers

template <class V>
json array_of(const V& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from(const json& a, const std::string& what) {
  if (!a.is_array()) throw InvalidArgument("record: '" + what + "' is not an array");
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = a[i].get<double>();
  return v;
}

void check_version(const json& j) {
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
    throw SchemaVersionError("record has no schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion)
    throw SchemaVersionError("record schema version " + std::to_string(v) + " is not supported (expected " +
                             std::to_string(kSchemaVersion) + ")");
}

std::vector<json> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::vector<json> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& err) {
      throw InvalidArgument(path.string() + ":" + std::to_string(number) + ": " + err.what());
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string full_precision(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(source + ": " + line_context(text, err.byte) + ": " + err.what());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be a table");
  reject_unknown(root, {"model", "grid", "solver", "schedule", "output", "seed", "sweep", "lab"}, "");

  RunConfig c;
  const json& model = section(root, "model");
  reject_unknown(model, {"e", "omega", "p", "epsilon", "mass"}, "model");
  c.model.e = number(model, "e", "model", c.model.e);
  c.model.omega = number(model, "omega", "model", c.model.omega);
  c.model.p = number(model, "p", "model", c.model.p);
  if (model.contains("mass") && model.contains("epsilon"))
    throw ConfigError("model: give either epsilon or mass, not both");
  if (model.contains("mass")) {
    const double mass = number(model, "mass", "model", 0);
    checked("model.mass", [&] { c.model = ModelParams::from_mass(c.model.e, c.model.omega, mass, c.model.p); });
  } else {
    c.model.epsilon = number(model, "epsilon", "model", c.model.epsilon);
  }
  checked("model", [&] { c.model.validate(); });

  const json& grid = section(root, "grid");
  reject_unknown(grid, {"r_max", "intervals", "scheme", "ratio"}, "grid");
  c.settings.r_max = number(grid, "r_max", "grid", c.settings.r_max);
  c.settings.intervals = integer(grid, "intervals", "grid", c.settings.intervals);
  if (grid.contains("scheme")) {
    if (!grid.at("scheme").is_string()) throw ConfigError("grid.scheme: expected a string");
    checked("grid.scheme", [&] { c.settings.grid.scheme = grid_scheme_from_string(grid.at("scheme")); });
  }
  c.settings.grid.ratio = number(grid, "ratio", "grid", c.settings.grid.ratio);
  checked("grid", [&] { make_grid(c.settings.r_max, c.settings.intervals, c.settings.grid); });

  const json& solver = section(root, "solver");
  reject_unknown(solver, {"damping", "outer_tol", "max_outer", "bracket_expand", "bracket_max_expansions"}, "solver");
  c.settings.damping = number(solver, "damping", "solver", c.settings.damping);
  c.settings.outer_tol = number(solver, "outer_tol", "solver", c.settings.outer_tol);
  c.settings.max_outer = static_cast<int>(integer(solver, "max_outer", "solver", c.settings.max_outer));
  c.settings.bracket.expand = number(solver, "bracket_expand", "solver", c.settings.bracket.expand);
  c.settings.bracket.max_expansions =
      static_cast<int>(integer(solver, "bracket_max_expansions", "solver", c.settings.bracket.max_expansions));
  checked("solver", [&] { c.settings.validate(); });
  if (!(c.settings.bracket.expand > 1)) throw ConfigError("solver.bracket_expand: must exceed 1");
  if (c.settings.bracket.max_expansions < 1) throw ConfigError("solver.bracket_max_expansions: must be >= 1");

  if (root.contains("schedule")) {
    const json& s = root.at("schedule");
    if (s.is_string() && s.get<std::string>() == "default") c.schedule = default_schedule();
    else c.schedule = numbers(s, "schedule");
  }
  if (c.schedule.empty()) throw ConfigError("schedule: must not be empty");
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    if (!(c.schedule[i] >= 0)) throw ConfigError("schedule: entries must be >= 0");
    if (i > 0 && !(c.schedule[i] < c.schedule[i - 1])) throw ConfigError("schedule: must be strictly decreasing");
  }
  if (c.schedule.front() == 0) throw ConfigError("schedule: first entry must be positive (epsilon = 0 needs a warm start)");

  if (root.contains("output")) {
    if (!root.at("output").is_string()) throw ConfigError("output: expected a string");
    c.output = root.at("output").get<std::string>();
  }
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }

  const json& sweep = section(root, "sweep");
  reject_unknown(sweep, {"p", "omega_over_m"}, "sweep");
  if (sweep.contains("p")) c.sweep.p_values = numbers(sweep.at("p"), "sweep.p");
  if (sweep.contains("omega_over_m")) c.sweep.omega_over_m = numbers(sweep.at("omega_over_m"), "sweep.omega_over_m");
  if (c.sweep.p_values.empty()) throw ConfigError("sweep.p: must not be empty");
  if (c.sweep.omega_over_m.empty()) throw ConfigError("sweep.omega_over_m: must not be empty");
  for (double p : c.sweep.p_values) checked("sweep.p", [&] { g_threshold(p); });
  for (double r : c.sweep.omega_over_m) {
    if (!(r > 0 && r <= 1)) throw ConfigError("sweep.omega_over_m: entries must lie in (0, 1]");
  }

  const json& lab = section(root, "lab");
  reject_unknown(lab, {"families", "count", "beta", "depth", "alpha", "r0", "q", "M"}, "lab");
  if (lab.contains("families")) {
    const json& f = lab.at("families");
    if (!f.is_array()) throw ConfigError("lab.families: expected a list of names");
    c.lab.families.clear();
    for (const auto& name : f) {
      if (!name.is_string()) throw ConfigError("lab.families: expected a list of names");
      checked("lab.families", [&] { c.lab.families.push_back(family_kind_from_string(name)); });
    }
  }
  c.lab.count = static_cast<int>(integer(lab, "count", "lab", c.lab.count));
  c.lab.beta = number(lab, "beta", "lab", c.lab.beta);
  c.lab.depth = static_cast<int>(integer(lab, "depth", "lab", c.lab.depth));
  c.lab.alpha = number(lab, "alpha", "lab", c.lab.alpha);
  c.lab.r0 = number(lab, "r0", "lab", c.lab.r0);
  c.lab.q = number(lab, "q", "lab", c.lab.q);
  c.lab.M = number(lab, "M", "lab", c.lab.M);
  if (c.lab.count < 0) throw ConfigError("lab.count: must be >= 0");
  if (!(c.lab.beta > 0)) throw ConfigError("lab.beta: must be positive");
  if (!(c.lab.depth >= 1 && c.lab.depth <= 40)) throw ConfigError("lab.depth: must lie in [1, 40]");
  if (!(c.lab.alpha > 0.5)) throw ConfigError("lab.alpha: must exceed 1/2");
  if (!(c.lab.r0 > 1)) throw ConfigError("lab.r0: must exceed 1");
  if (!(c.lab.q > 18.0 / 7 && c.lab.q <= 6)) throw ConfigError("lab.q: must lie in (18/7, 6]");
  if (!(c.lab.M >= 0)) throw ConfigError("lab.M: must be >= 0");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

json config_to_json(const RunConfig& c) {
  json j;
  j["model"] = to_json(c.model);
  j["grid"] = {{"r_max", c.settings.r_max},
               {"intervals", c.settings.intervals},
               {"scheme", to_string(c.settings.grid.scheme)},
               {"ratio", c.settings.grid.ratio}};
  j["solver"] = {{"damping", c.settings.damping},
                 {"outer_tol", c.settings.outer_tol},
                 {"max_outer", c.settings.max_outer},
                 {"bracket_expand", c.settings.bracket.expand},
                 {"bracket_max_expansions", c.settings.bracket.max_expansions}};
  j["schedule"] = c.schedule;
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["sweep"] = {{"p", c.sweep.p_values}, {"omega_over_m", c.sweep.omega_over_m}};
  json families = json::array();
  for (auto f : c.lab.families) families.push_back(to_string(f));
  j["lab"] = {{"families", families}, {"count", c.lab.count}, {"beta", c.lab.beta}, {"depth", c.lab.depth},
              {"alpha", c.lab.alpha},  {"r0", c.lab.r0},       {"q", c.lab.q},       {"M", c.lab.M}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path output_directory(const RunConfig& c) {
  if (const char* env = std::getenv("KGM_OUTPUT_DIR"); env && *env) return env;
  return c.output;
}

json to_json(const ModelParams& p) {
  return {{"e", p.e}, {"omega", p.omega}, {"p", p.p}, {"epsilon", p.epsilon}};
}

ModelParams model_params_from_json(const json& j) {
  return {j.at("e").get<double>(), j.at("omega").get<double>(), j.at("p").get<double>(),
          j.at("epsilon").get<double>()};
}

json to_json(const Grid& g) {
  return {{"scheme", to_string(g.scheme())}, {"ratio", g.ratio()}, {"nodes", array_of(g.nodes())}};
}

GridPtr<double> grid_from_json(const json& j) {
  return std::make_shared<const Grid>(vector_from(j.at("nodes"), "nodes"),
                                      grid_scheme_from_string(j.at("scheme").get<std::string>()),
                                      j.at("ratio").get<double>());
}

#define KGM_DIAGNOSTIC_FIELDS(X)                                                                          \
  X(nehari_residual) X(pohozaev_residual) X(dilation_derivative) X(energy_identity_residual) X(energy)   \
  X(charge) X(I_value) X(J_paper_value) X(J_standard_value) X(functional_gap) X(functional_gap_relative) \
  X(decay_exp_rate) X(decay_sqrt_rate) X(decay_exp_residual) X(decay_sqrt_residual) X(tail_constant)    \
  X(tail_K1) X(tail_K2) X(L2_norm) X(Lp_norm) X(grad_norm) X(phi_source_integral) X(matter_residual)     \
  X(gauge_residual) X(min_u) X(min_phi) X(max_ephi_over_omega)

json to_json(const DiagnosticsReport& d) {
  json j;
#define X(name) j[#name] = d.name;
  KGM_DIAGNOSTIC_FIELDS(X)
#undef X
  j["decay_fit_preference"] = to_string(d.decay_fit_preference);
  return j;
}

DiagnosticsReport diagnostics_from_json(const json& j) {
  DiagnosticsReport d;
#define X(name) d.name = j.at(#name).get<double>();
  KGM_DIAGNOSTIC_FIELDS(X)
#undef X
  d.decay_fit_preference = decay_model_from_string(j.at("decay_fit_preference").get<std::string>());
  return d;
}

#undef KGM_DIAGNOSTIC_FIELDS

json to_json(const SolutionRecord& r) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "solution"},
          {"params", to_json(r.params)},
          {"grid", to_json(r.u.grid())},
          {"u", array_of(r.u.values())},
          {"phi", array_of(r.phi.values())},
          {"diagnostics", to_json(r.diagnostics)},
          {"converged", r.converged},
          {"outer_iterations", r.outer_iterations},
          {"final_change", r.final_change},
          {"amplitude", r.amplitude},
          {"tail_resolved", r.tail_resolved}};
}

SolutionRecord solution_record_from_json(const json& j) {
  check_version(j);
  if (j.value("kind", "") != "solution") throw InvalidArgument("record: not a solution record");
  const auto grid = grid_from_json(j.at("grid"));
  SolutionRecord r{model_params_from_json(j.at("params")), Field(grid, vector_from(j.at("u"), "u")),
                   Field(grid, vector_from(j.at("phi"), "phi")), diagnostics_from_json(j.at("diagnostics"))};
  r.converged = j.at("converged").get<bool>();
  r.outer_iterations = j.at("outer_iterations").get<int>();
  r.final_change = j.at("final_change").get<double>();
  r.amplitude = j.at("amplitude").get<double>();
  r.tail_resolved = j.at("tail_resolved").get<bool>();
  return r;
}

json to_json(const BranchTrends& t) {
  return {{"epsilon", t.epsilon},       {"l2_norm", t.l2_norm},
          {"lp_norm", t.lp_norm},       {"grad_norm", t.grad_norm},
          {"phi_source", t.phi_source}, {"energy", t.energy},
          {"charge", t.charge},         {"tail_constant", t.tail_constant},
          {"decay_exp_rate", t.decay_exp_rate}, {"decay_sqrt_rate", t.decay_sqrt_rate}};
}

json to_json(const SweepCell& c) {
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "sweep_cell"},
            {"p", c.p},
            {"omega_over_m", c.omega_over_m},
            {"epsilon", c.epsilon},
            {"g", c.g},
            {"in_theorem_region", c.in_theorem_region},
            {"converged", c.converged},
            {"outer_iterations", c.outer_iterations},
            {"message", c.message}};
  j["diagnostics"] = c.diagnostics ? to_json(*c.diagnostics) : json(nullptr);
  return j;
}

json to_json(const RatioReport& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"ratio", r.ratio},
          {"scale", r.scale},
          {"empirical_sup_constant", r.empirical_sup_constant},
          {"trend_slope", r.trend_slope}};
}

json to_json(const SuiteReport& s) {
  return {{"schema_version", kSchemaVersion}, {"kind", "ratio_report"}, {"suite", s.suite},
          {"family", to_string(s.family)},    {"skipped", s.skipped},   {"report", to_json(s.report)}};
}

void persist_record(const SolutionRecord& record, const std::filesystem::path& path) {
  write_text(path, to_json(record).dump() + "\n");
}

SolutionRecord load_record(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() != 1) throw InvalidArgument("'" + path.string() + "' does not hold exactly one record");
  return solution_record_from_json(lines.front());
}

void persist_branch(const BranchRecord& branch, const std::filesystem::path& path) {
  json head = {{"schema_version", kSchemaVersion},
               {"kind", "branch"},
               {"schedule", branch.schedule},
               {"truncated", branch.truncated},
               {"failure", branch.failure},
               {"trends", to_json(branch.trends)}};
  std::string text = head.dump() + "\n";
  for (const auto& r : branch.records) text += to_json(r).dump() + "\n";
  write_text(path, text);
}

BranchRecord load_branch(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InvalidArgument("'" + path.string() + "' is empty");
  const json& head = lines.front();
  check_version(head);
  if (head.value("kind", "") != "branch") throw InvalidArgument("'" + path.string() + "' is not a branch file");
  BranchRecord b;
  b.schedule = head.at("schedule").get<std::vector<double>>();
  b.truncated = head.at("truncated").get<bool>();
  b.failure = head.at("failure").get<std::string>();
  for (std::size_t i = 1; i < lines.size(); ++i) b.records.push_back(solution_record_from_json(lines[i]));
  b.trends = trends_of(b.records);
  return b;
}

std::vector<SolutionRecord> load_solutions(const std::filesystem::path& path) {
  std::vector<SolutionRecord> out;
  for (const auto& j : read_lines(path)) {
    check_version(j);
    if (j.value("kind", "") == "solution") out.push_back(solution_record_from_json(j));
  }
  if (out.empty()) throw InvalidArgument("'" + path.string() + "' holds no solution records");
  return out;
}

void write_columns(const SolutionRecord& record, const std::filesystem::path& path) {
  const Grid& g = record.u.grid();
  std::string text = "r,u,phi,log_ru,r_phi\n";
  for (Index i = 0; i < g.size(); ++i) {
    const double r = g.r(i), u = record.u(i), phi = record.phi(i);
    text += full_precision(r) + "," + full_precision(u) + "," + full_precision(phi) + ",";
    if (r * u > 0) text += full_precision(std::log(r * u));
    text += "," + full_precision(r * phi) + "\n";
  }
  write_text(path, text);
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  json j = {{"schema_version", kSchemaVersion}, {"config_hash", m.config_hash},
            {"artifact_version", m.artifact_version}, {"command", m.command},
            {"started", m.started}, {"finished", m.finished}, {"files", m.files}};
  write_text(path, j.dump(2) + "\n");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace kgm
