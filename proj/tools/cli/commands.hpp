#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tte::cli {

using nlohmann::json;

struct SimulateConfig {
  json scenario;  // ScenarioParams as JSON
  std::size_t n = 1000;
  int reps = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> methods{"msm_iptw", "msm_iptw_l0", "sequential"};
  std::string family = "aalen";
  std::optional<double> truncate;
  std::size_t n_truth = 1000000;
  std::uint64_t truth_seed = 20240101;
  std::vector<double> horizons{1, 2, 3, 4, 5};

  json to_json() const;
  static SimulateConfig from_json(const json& j);
};

struct AnalyzeConfig {
  std::string visits;
  std::string subjects;
  double tau_max = 5.0;
  std::vector<std::string> methods{"msm_iptw_l0", "sequential"};
  std::string family = "aalen";
  std::string form = "per-visit";
  std::vector<std::string> covariates;  // empty: every covariate
  std::optional<double> truncate;
  int bootstrap = 0;
  std::optional<std::uint64_t> seed;
  double level = 0.95;
  std::vector<double> horizons;  // empty: 1..floor(tau_max)
  std::string transform = "exponential";
  bool jump_times = false;
  int max_trial = -1;
  bool stratified = false;

  json to_json() const;
  static AnalyzeConfig from_json(const json& j);
};

struct TruthConfig {
  json scenario;
  std::size_t n_large = 1000000;
  std::uint64_t seed = 0;
  std::vector<double> horizons{1, 2, 3, 4, 5};
};

struct CohortConfig {
  json scenario;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

struct OracleConfig {
  std::uint64_t seed = 1;
  int lattices = 1000;
  int min_leaf = 1;
  int max_leaf = 30;
  std::string lattice_file;
};

// --out, else $TTE_OUT_DIR, else the working directory; created if missing.
std::filesystem::path resolve_out_dir(const std::string& flag);

json load_replay(const std::filesystem::path& file, const std::string& command);

int run_simulate(const SimulateConfig& config, const std::filesystem::path& out_dir, int threads, std::ostream& log);
int run_analyze(const AnalyzeConfig& config, const std::filesystem::path& out_dir, int threads, std::ostream& log);
int run_truth(const TruthConfig& config, const std::filesystem::path& out_dir, int threads, std::ostream& log);
int run_cohort(const CohortConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int run_oracle(const OracleConfig& config, std::ostream& out);

}  // namespace tte::cli
