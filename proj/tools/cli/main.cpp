#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"
#include "tte/errors.hpp"
#include "tte/simgen.hpp"

namespace {

using tte::cli::json;

json scenario_json(int id, const std::string& file) {
  const tte::ScenarioParams p = file.empty() ? tte::builtin_scenario(id) : tte::load_scenario(file);
  return json::parse(tte::scenario_to_json(p));
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Target trial emulation: MSM-IPTW and sequential trials on longitudinal cohorts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TTE_VERSION));

  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string out_flag;
  std::string replay;

  auto* sim = app.add_subcommand("simulate", "Run a simulation scenario and summarize performance");
  tte::cli::SimulateConfig sim_cfg;
  int sim_scenario = 1;
  std::string sim_file;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--scenario", sim_scenario, "Built-in scenario id (1, 2 or 3)");
  sim->add_option("--scenario-file", sim_file, "Scenario JSON file")->check(CLI::ExistingFile);
  sim->add_option("--n", sim_cfg.n, "Subjects per repetition")->check(CLI::PositiveNumber);
  sim->add_option("--reps", sim_cfg.reps, "Repetitions");
  sim->add_option("--seed", sim_seed, "Base seed; repetition r uses seed + r");
  sim->add_option("--methods", sim_cfg.methods, "msm_iptw, msm_iptw_l0, sequential")->delimiter(',');
  sim->add_option("--family", sim_cfg.family, "aalen or cox");
  sim->add_option("--truncate", sim_cfg.truncate, "Truncate weights at this percentile");
  sim->add_option("--n-truth", sim_cfg.n_truth, "Size of the simulated trial for the truth");
  sim->add_option("--truth-seed", sim_cfg.truth_seed, "Seed of the truth simulation");
  sim->add_option("--horizons", sim_cfg.horizons, "Evaluation times")->delimiter(',');
  sim->add_option("--out", out_flag, "Output directory (default $TTE_OUT_DIR or .)");
  sim->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--replay", replay, "Re-run the configuration stored in a summary.json")->check(CLI::ExistingFile);

  auto* ana = app.add_subcommand("analyze", "Estimate marginal survival curves from cohort files");
  tte::cli::AnalyzeConfig ana_cfg;
  ana->add_option("--visits", ana_cfg.visits, "visits.csv (id,k,A,covariates...)");
  ana->add_option("--subjects", ana_cfg.subjects, "subjects.csv (id,t_end,status)");
  ana->add_option("--tau-max", ana_cfg.tau_max, "Administrative end of follow-up");
  ana->add_option("--methods", ana_cfg.methods, "msm_iptw, msm_iptw_l0, sequential")->delimiter(',');
  ana->add_option("--family", ana_cfg.family, "aalen or cox");
  ana->add_option("--form", ana_cfg.form, "Treatment form: per-visit, current or duration");
  ana->add_option("--covariates", ana_cfg.covariates, "Covariates for weights and conditioning (default all)")
      ->delimiter(',');
  ana->add_option("--truncate", ana_cfg.truncate, "Truncate weights at this percentile");
  ana->add_option("--bootstrap", ana_cfg.bootstrap, "Bootstrap replicates for RD bands (0 = none)");
  ana->add_option("--seed", ana_cfg.seed, "Bootstrap seed");
  ana->add_option("--level", ana_cfg.level, "Bootstrap band level");
  ana->add_option("--horizons", ana_cfg.horizons, "Evaluation times (default 1..tau_max)")->delimiter(',');
  ana->add_option("--transform", ana_cfg.transform, "exponential or product-limit");
  ana->add_flag("--jump-times", ana_cfg.jump_times, "Also report every jump time");
  ana->add_option("--max-trial", ana_cfg.max_trial, "Last trial start for sequential trials");
  ana->add_flag("--stratified", ana_cfg.stratified, "Trial-specific baseline hazards");
  ana->add_option("--out", out_flag, "Output directory (default $TTE_OUT_DIR or .)");
  ana->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  ana->add_option("--replay", replay, "Re-run the configuration stored in a summary.json")->check(CLI::ExistingFile);

  auto* tru = app.add_subcommand("truth", "True survival curves from a large simulated trial");
  tte::cli::TruthConfig tru_cfg;
  int tru_scenario = 1;
  std::string tru_file;
  std::optional<std::uint64_t> tru_seed;
  tru->add_option("--scenario", tru_scenario, "Built-in scenario id (1, 2 or 3)");
  tru->add_option("--scenario-file", tru_file, "Scenario JSON file")->check(CLI::ExistingFile);
  tru->add_option("--n-large", tru_cfg.n_large, "Trial size")->check(CLI::PositiveNumber);
  tru->add_option("--seed", tru_seed, "Seed");
  tru->add_option("--horizons", tru_cfg.horizons, "Evaluation times")->delimiter(',');
  tru->add_option("--out", out_flag, "Output directory (default $TTE_OUT_DIR or .)");
  tru->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* coh = app.add_subcommand("cohort", "Write one simulated cohort as visits.csv and subjects.csv");
  tte::cli::CohortConfig coh_cfg;
  int coh_scenario = 1;
  std::string coh_file;
  std::optional<std::uint64_t> coh_seed;
  coh->add_option("--scenario", coh_scenario, "Built-in scenario id (1, 2 or 3)");
  coh->add_option("--scenario-file", coh_file, "Scenario JSON file")->check(CLI::ExistingFile);
  coh->add_option("--n", coh_cfg.n, "Subjects")->check(CLI::PositiveNumber);
  coh->add_option("--seed", coh_seed, "Seed");
  coh->add_option("--out", out_flag, "Output directory (default $TTE_OUT_DIR or .)");

  auto* ora = app.add_subcommand("oracle", "Check the two-period non-parametric equivalences");
  tte::cli::OracleConfig ora_cfg;
  ora->add_option("--seed", ora_cfg.seed, "Lattice seed");
  ora->add_option("--lattices", ora_cfg.lattices, "Number of random lattices");
  ora->add_option("--min-leaf", ora_cfg.min_leaf, "Smallest leaf count");
  ora->add_option("--max-leaf", ora_cfg.max_leaf, "Largest leaf count");
  ora->add_option("--lattice-file", ora_cfg.lattice_file, "CSV lattice l0,a0,y1,l1,a1,y2[,count]")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    if (!replay.empty()) {
      sim_cfg = tte::cli::SimulateConfig::from_json(tte::cli::load_replay(replay, "simulate"));
    } else {
      if (!sim_seed) throw tte::UsageError("simulate requires --seed");
      sim_cfg.seed = *sim_seed;
      sim_cfg.scenario = scenario_json(sim_scenario, sim_file);
    }
    return tte::cli::run_simulate(sim_cfg, tte::cli::resolve_out_dir(out_flag), threads, std::cout);
  }
  if (ana->parsed()) {
    if (!replay.empty()) {
      ana_cfg = tte::cli::AnalyzeConfig::from_json(tte::cli::load_replay(replay, "analyze"));
    } else if (ana_cfg.visits.empty() || ana_cfg.subjects.empty()) {
      throw tte::UsageError("analyze requires --visits and --subjects");
    }
    return tte::cli::run_analyze(ana_cfg, tte::cli::resolve_out_dir(out_flag), threads, std::cout);
  }
  if (tru->parsed()) {
    if (!tru_seed) throw tte::UsageError("truth requires --seed");
    tru_cfg.seed = *tru_seed;
    tru_cfg.scenario = scenario_json(tru_scenario, tru_file);
    return tte::cli::run_truth(tru_cfg, tte::cli::resolve_out_dir(out_flag), threads, std::cout);
  }
  if (coh->parsed()) {
    if (!coh_seed) throw tte::UsageError("cohort requires --seed");
    coh_cfg.seed = *coh_seed;
    coh_cfg.scenario = scenario_json(coh_scenario, coh_file);
    return tte::cli::run_cohort(coh_cfg, tte::cli::resolve_out_dir(out_flag), std::cout);
  }
  return tte::cli::run_oracle(ora_cfg, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const tte::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const tte::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const tte::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const tte::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
