#pragma once

// Run configuration, record persistence and plot columns.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgm/continuation.hpp"
#include "kgm/diagnostics.hpp"
#include "kgm/ineq_lab.hpp"

namespace kgm {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct SweepConfig {
  std::vector<double> p_values{4.0};
  std::vector<double> omega_over_m{0.5};
};

struct LabConfig {
  std::vector<FamilyKind> families{FamilyKind::gaussian_mixture, FamilyKind::truncated_power_tail,
                                   FamilyKind::dyadic_comb, FamilyKind::random_spline};
  int count = 100;
  double beta = 1.2;
  int depth = 6;
  double alpha = 1.0;
  double r0 = 2.0;
  double q = 4.0;
  double M = 50.0;
};

struct RunConfig {
  ModelParams model;
  SolveSettings settings;
  std::vector<double> schedule = default_schedule();
  std::string output = "kgm-out";
  std::uint64_t seed = 1;
  SweepConfig sweep;
  LabConfig lab;
};

/// Parses a JSON configuration. Every key is optional; unknown keys, wrong
/// types and violated preconditions raise ConfigError naming the key.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical form: all keys present, sorted.
nlohmann::json config_to_json(const RunConfig& config);

/// FNV-1a over the canonical serialization, 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Output directory: KGM_OUTPUT_DIR when set, the configured one otherwise.
std::filesystem::path output_directory(const RunConfig& config);

nlohmann::json to_json(const ModelParams& p);
ModelParams model_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Grid& g);
GridPtr<double> grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiagnosticsReport& d);
DiagnosticsReport diagnostics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SolutionRecord& r);
SolutionRecord solution_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BranchTrends& t);
nlohmann::json to_json(const SweepCell& c);
nlohmann::json to_json(const RatioReport& r);
nlohmann::json to_json(const SuiteReport& s);

/// One JSON object per line, each carrying schema_version.
void persist_record(const SolutionRecord& record, const std::filesystem::path& path);
SolutionRecord load_record(const std::filesystem::path& path);

/// Header line (kind "branch") followed by one line per record.
void persist_branch(const BranchRecord& branch, const std::filesystem::path& path);
BranchRecord load_branch(const std::filesystem::path& path);

/// Every solution record in a record or branch file, in file order.
std::vector<SolutionRecord> load_solutions(const std::filesystem::path& path);

/// Columns r,u,phi,log_ru,r_phi; log_ru is left empty where r u <= 0.
void write_columns(const SolutionRecord& record, const std::filesystem::path& path);

struct RunManifest {
  std::string config_hash;
  std::string artifact_version = kArtifactVersion;
  std::string command;
  std::string started;
  std::string finished;
  std::vector<std::string> files;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

/// UTC time in ISO 8601.
std::string utc_timestamp();

}  // namespace kgm
