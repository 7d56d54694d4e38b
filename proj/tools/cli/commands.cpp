#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "tte/cohort.hpp"
#include "tte/errors.hpp"
#include "tte/estimators.hpp"
#include "tte/export.hpp"
#include "tte/oracle.hpp"
#include "tte/simgen.hpp"

namespace tte::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw UsageError("failed writing " + path.string());
}

ModelFamily parse_family(const std::string& s) {
  if (s == "aalen") return ModelFamily::kAalen;
  if (s == "cox") return ModelFamily::kCox;
  throw UsageError("unknown family '" + s + "' (expected aalen or cox)");
}

TreatmentForm parse_form(const std::string& s) {
  if (s == "per-visit") return TreatmentForm::kPerVisit;
  if (s == "current") return TreatmentForm::kCurrent;
  if (s == "duration") return TreatmentForm::kDuration;
  throw UsageError("unknown treatment form '" + s + "' (expected per-visit, current or duration)");
}

SurvivalTransform parse_transform(const std::string& s) {
  if (s == "exponential") return SurvivalTransform::kExponential;
  if (s == "product-limit") return SurvivalTransform::kProductLimit;
  throw UsageError("unknown transform '" + s + "' (expected exponential or product-limit)");
}

std::vector<std::size_t> covariate_indices(const Cohort& cohort, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    auto it = std::find(cohort.covariate_names.begin(), cohort.covariate_names.end(), name);
    if (it == cohort.covariate_names.end()) throw UsageError("unknown covariate '" + name + "'");
    idx.push_back(static_cast<std::size_t>(it - cohort.covariate_names.begin()));
  }
  if (idx.empty()) {
    for (std::size_t c = 0; c < cohort.n_covariates(); ++c) idx.push_back(c);
  }
  return idx;
}

void write_summary(const fs::path& out_dir, const std::string& command, const json& config, double wall_time,
                   const std::vector<std::string>& outputs, json extra = json::object()) {
  json j = {{"version", TTE_VERSION},
            {"command", command},
            {"config", config},
            {"wall_time_seconds", wall_time},
            {"outputs", outputs}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_file(out_dir / "summary.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

json SimulateConfig::to_json() const {
  return {{"scenario", scenario},   {"n", n},         {"reps", reps},
          {"seed", seed},           {"methods", methods}, {"family", family},
          {"truncate", optional_json(truncate)}, {"n_truth", n_truth}, {"truth_seed", truth_seed},
          {"horizons", horizons}};
}

SimulateConfig SimulateConfig::from_json(const json& j) {
  SimulateConfig c;
  try {
    c.scenario = j.at("scenario");
    read(j, "n", c.n);
    read(j, "reps", c.reps);
    c.seed = j.at("seed").get<std::uint64_t>();
    read(j, "methods", c.methods);
    read(j, "family", c.family);
    read_optional(j, "truncate", c.truncate);
    read(j, "n_truth", c.n_truth);
    read(j, "truth_seed", c.truth_seed);
    read(j, "horizons", c.horizons);
  } catch (const json::exception& e) {
    throw UsageError(std::string("replay config: ") + e.what());
  }
  return c;
}

json AnalyzeConfig::to_json() const {
  return {{"visits", visits},
          {"subjects", subjects},
          {"tau_max", tau_max},
          {"methods", methods},
          {"family", family},
          {"form", form},
          {"covariates", covariates},
          {"truncate", optional_json(truncate)},
          {"bootstrap", bootstrap},
          {"seed", optional_json(seed)},
          {"level", level},
          {"horizons", horizons},
          {"transform", transform},
          {"jump_times", jump_times},
          {"max_trial", max_trial},
          {"stratified", stratified}};
}

AnalyzeConfig AnalyzeConfig::from_json(const json& j) {
  AnalyzeConfig c;
  try {
    c.visits = j.at("visits").get<std::string>();
    c.subjects = j.at("subjects").get<std::string>();
    read(j, "tau_max", c.tau_max);
    read(j, "methods", c.methods);
    read(j, "family", c.family);
    read(j, "form", c.form);
    read(j, "covariates", c.covariates);
    read_optional(j, "truncate", c.truncate);
    read(j, "bootstrap", c.bootstrap);
    read_optional(j, "seed", c.seed);
    read(j, "level", c.level);
    read(j, "horizons", c.horizons);
    read(j, "transform", c.transform);
    read(j, "jump_times", c.jump_times);
    read(j, "max_trial", c.max_trial);
    read(j, "stratified", c.stratified);
  } catch (const json::exception& e) {
    throw UsageError(std::string("replay config: ") + e.what());
  }
  return c;
}

fs::path resolve_out_dir(const std::string& flag) {
  fs::path dir = ".";
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* env = std::getenv("TTE_OUT_DIR"); env != nullptr && *env != '\0') {
    dir = env;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("output directory " + dir.string() + " is not writable");
  return dir;
}

json load_replay(const fs::path& file, const std::string& command) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open replay file " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("replay file " + file.string() + ": " + e.what());
  }
  if (!j.contains("command") || j.at("command") != command || !j.contains("config")) {
    throw UsageError("replay file " + file.string() + " does not hold a '" + command + "' run");
  }
  return j.at("config");
}

int run_simulate(const SimulateConfig& config, const fs::path& out_dir, int threads, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioParams params = scenario_from_json(config.scenario.dump());
  ScenarioOptions options;
  options.n = config.n;
  options.reps = config.reps;
  options.seed = config.seed;
  options.threads = threads;
  options.methods.clear();
  for (const auto& m : config.methods) options.methods.push_back(method_from_name(m));
  options.family = parse_family(config.family);
  options.truncation_percentile = config.truncate;
  options.horizons = config.horizons;
  options.n_truth = config.n_truth;
  options.truth_seed = config.truth_seed;

  const PerformanceTable table = run_scenario(params, options);

  write_file(out_dir / "performance.csv", [&](std::ostream& os) { write_performance_csv(os, table); });
  write_file(out_dir / "weights_diag.csv", [&](std::ostream& os) { write_scenario_diagnostics_csv(os, table); });
  write_file(out_dir / "truth.csv", [&](std::ostream& os) { write_truth_csv(os, table.truth); });
  const double wall = seconds_since(t0);
  write_summary(out_dir, "simulate", config.to_json(), wall,
                {"performance.csv", "weights_diag.csv", "truth.csv", "summary.json"},
                {{"performance", json::parse(performance_to_json(table))}});

  log << "scenario " << params.name << ": n=" << config.n << " reps=" << config.reps << " seed=" << config.seed
      << '\n';
  log << std::fixed << std::setprecision(4);
  for (const auto& mp : table.methods) {
    log << "  " << std::left << std::setw(12) << method_name(mp.method) << " RD";
    for (std::size_t j = 0; j < table.horizons.size(); ++j) log << ' ' << mp.rd.mean[j] << " (" << mp.rd.sd[j] << ')';
    if (mp.n_failed > 0) log << "  failed=" << mp.n_failed;
    log << '\n';
  }
  log << "  truth        RD";
  for (double v : table.truth.rd) log << ' ' << v;
  log << "\nwrote " << (out_dir / "performance.csv").string() << " and companions in " << std::setprecision(1)
      << wall << "s\n";
  return 0;
}

int run_analyze(const AnalyzeConfig& config, const fs::path& out_dir, int threads, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  if (config.bootstrap > 0 && !config.seed) throw UsageError("--bootstrap requires --seed");
  if (config.bootstrap < 0) throw UsageError("--bootstrap must be non-negative");
  if (config.methods.empty()) throw UsageError("no methods selected");
  const Cohort cohort = load_cohort(fs::path(config.visits), fs::path(config.subjects), config.tau_max);
  const auto cov = covariate_indices(cohort, config.covariates);

  PipelineOptions options;
  options.truncation_percentile = config.truncate;
  options.max_trial = config.max_trial;
  options.stratified_baseline = config.stratified;

  std::vector<std::pair<std::string, MarginalResults>> curves;
  std::vector<std::pair<std::string, std::vector<IntervalDiagnostic>>> diagnostics;
  std::vector<std::string> outputs;
  for (const auto& name : config.methods) {
    const Method method = method_from_name(name);
    MsmSpec msm;
    msm.family = parse_family(config.family);
    msm.form = parse_form(config.form);
    msm.horizons = config.horizons;
    msm.transform = parse_transform(config.transform);
    msm.include_jump_times = config.jump_times;
    if (method != Method::kMsmIptw) msm.baseline_covariates = cov;
    WeightModelSpec weights = method == Method::kSequential ? ipacw_spec(cohort, cov)
                                                            : iptw_spec(cohort, method == Method::kMsmIptwL0, cov);
    const Pipeline pipeline = method == Method::kSequential ? Pipeline::kSequential : Pipeline::kMsmIptw;
    PipelineRun run = pipeline == Pipeline::kSequential ? run_sequential_trials(cohort, msm, weights, options)
                                                        : run_msm_iptw(cohort, msm, weights, options);
    if (config.bootstrap > 0) {
      BootstrapOptions b;
      b.replicates = config.bootstrap;
      b.seed = *config.seed;
      b.threads = threads;
      b.level = config.level;
      run.results = bootstrap_ci(cohort, pipeline, msm, weights, options, b);
    }
    curves.emplace_back(name, run.results);
    diagnostics.emplace_back(name, weight_diagnostics(run.weights));
  }

  for (const auto& [name, results] : curves) {
    const std::string file = curves.size() == 1 ? "curves.csv" : "curves_" + name + ".csv";
    write_file(out_dir / file, [&](std::ostream& os) { write_results_csv(os, results); });
    outputs.push_back(file);
  }
  write_file(out_dir / "weights_diag.csv", [&](std::ostream& os) { write_diagnostics_csv(os, diagnostics); });
  write_file(out_dir / "curves.svg", [&](std::ostream& os) { write_curves_svg(os, curves); });
  outputs.insert(outputs.end(), {"weights_diag.csv", "curves.svg", "summary.json"});
  write_summary(out_dir, "analyze", config.to_json(), seconds_since(t0), outputs);

  log << "cohort: " << cohort.size() << " subjects, " << cohort.n_covariates() << " covariates\n";
  log << std::fixed << std::setprecision(4);
  for (const auto& [name, r] : curves) {
    log << "  " << std::left << std::setw(12) << name << " RD";
    for (std::size_t i = 0; i < r.tau.size(); ++i) {
      if (r.tau[i] == std::floor(r.tau[i])) log << ' ' << r.rd[i];
    }
    if (r.n_increases > 0) log << "  (survival increases: " << r.n_increases << ')';
    log << '\n';
  }
  return 0;
}

int run_truth(const TruthConfig& config, const fs::path& out_dir, int threads, std::ostream& log) {
  const ScenarioParams params = scenario_from_json(config.scenario.dump());
  const TruthCurves truth = generate_truth(params, config.n_large, config.horizons, config.seed, threads);
  write_file(out_dir / "truth.csv", [&](std::ostream& os) { write_truth_csv(os, truth); });
  log << std::fixed << std::setprecision(4) << "scenario " << params.name << " truth (n=" << config.n_large << ")\n";
  for (std::size_t i = 0; i < truth.horizons.size(); ++i) {
    log << "  tau=" << truth.horizons[i] << "  S1=" << truth.s1[i] << "  S0=" << truth.s0[i] << "  RD=" << truth.rd[i]
        << '\n';
  }
  return 0;
}

int run_cohort(const CohortConfig& config, const fs::path& out_dir, std::ostream& log) {
  const ScenarioParams params = scenario_from_json(config.scenario.dump());
  const GeneratedCohort g = generate_cohort(params, config.n, config.seed);
  write_cohort(g.cohort, out_dir / "visits.csv", out_dir / "subjects.csv");
  log << "wrote " << g.cohort.size() << " subjects of scenario " << params.name << " to " << out_dir.string()
      << " (tau_max " << params.tau_max << ")\n";
  return 0;
}

namespace {

void echo_lattice(const oracle::TreeCounts& c, std::ostream& out) {
  out << "l0,a0,y1,l1,a1,y2,count\n";
  for (int i = 0; i < 2; ++i) {
    for (int a = 0; a < 2; ++a) {
      if (c.y1[i][a][1] > 0) out << i << ',' << a << ",1,,,," << c.y1[i][a][1] << '\n';
      for (int j = 0; j < 2; ++j) {
        for (int b = 0; b < 2; ++b) {
          for (int y = 0; y < 2; ++y) {
            if (c.y2[i][a][j][b][y] > 0) {
              out << i << ',' << a << ",0," << j << ',' << b << ',' << y << ',' << c.y2[i][a][j][b][y] << '\n';
            }
          }
        }
      }
    }
  }
}

}  // namespace

int run_oracle(const OracleConfig& config, std::ostream& out) {
  std::vector<oracle::TreeCounts> lattices;
  if (!config.lattice_file.empty()) {
    std::ifstream in(config.lattice_file);
    if (!in) throw UsageError("cannot open lattice file " + config.lattice_file);
    lattices.push_back(oracle::read_lattice(in));
  } else {
    if (config.lattices < 1) throw UsageError("--lattices must be at least 1");
    if (config.min_leaf < 0 || config.max_leaf < config.min_leaf) throw UsageError("invalid leaf range");
    std::mt19937_64 rng(config.seed);
    for (int i = 0; i < config.lattices; ++i) lattices.push_back(oracle::random_lattice(rng, config.min_leaf, config.max_leaf));
  }
  const bool echo = lattices.size() == 1;
  double max1 = 0.0, max2 = 0.0;
  out << std::setprecision(17);
  for (const auto& c : lattices) {
    if (echo) echo_lattice(c, out);
    for (int a = 0; a <= 1; ++a) {
      double msm1 = 0.0, seq1 = 0.0, msm2 = 0.0, seq2 = 0.0;
      try {
        msm1 = oracle::np_msm_surv1(c, a);
        seq1 = oracle::np_seq_surv1(c, a);
        msm2 = oracle::np_msm_surv2(c, a);
        seq2 = oracle::np_seq_surv2(c, a);
      } catch (const PositivityError& e) {
        out << "positivity: a=" << a << ": " << e.what() << '\n';
        return 4;
      }
      max1 = std::max(max1, std::abs(msm1 - seq1));
      max2 = std::max(max2, std::abs(msm2 - seq2));
      if (echo) {
        out << "a=" << a << "  msm_surv1=" << msm1 << "  seq_surv1=" << seq1 << "  msm_surv2=" << msm2
            << "  seq_surv2=" << seq2 << '\n';
      }
    }
  }
  out << std::scientific << std::setprecision(3);
  out << "lattices: " << lattices.size() << '\n';
  out << "max |msm_surv1 - seq_surv1| = " << max1 << '\n';
  out << "max |msm_surv2 - seq_surv2| = " << max2 << '\n';
  return 0;
}

}  // namespace tte::cli
