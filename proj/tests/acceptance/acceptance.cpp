// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//   tte_acceptance [--tier smoke|full]

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "kernel_oracles.hpp"
#include "tte/errors.hpp"
#include "tte/glm.hpp"
#include "tte/oracle.hpp"
#include "tte/simgen.hpp"
#include "tte/survfit.hpp"

namespace fs = std::filesystem;
using namespace tte;

namespace {

struct Tier {
  std::string name;
  int reps = 0;
  double mean_tolerance = 0.0;
};

constexpr std::size_t kCohortSize = 1000;
constexpr std::uint64_t kScenarioSeed = 20240601;
constexpr double kSdTolerance = 0.25;  // relative
constexpr double kBiasMcSe = 2.0;
constexpr double kSequentialBiasTolerance = 0.010;
constexpr double kEquivalenceTolerance = 1e-12;
constexpr double kPipelineTolerance = 1e-10;
constexpr double kCollapsibilityTolerance = 0.010;
constexpr std::size_t kCollapsibilityN = 100000;
constexpr double kLogisticTolerance = 1e-6;
constexpr double kCoxTolerance = 1e-5;
constexpr double kAalenTolerance = 1e-12;

const std::vector<double> kHorizons{1, 2, 3, 4, 5};
const double kMsmMean[] = {0.034, 0.067, 0.097, 0.121, 0.138};
const double kSeqMean[] = {0.034, 0.067, 0.097, 0.121, 0.137};
const double kMsmSd[] = {0.026, 0.033, 0.040, 0.044, 0.047};
const double kSeqSd[] = {0.018, 0.027, 0.036, 0.044, 0.055};

int g_failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << title << "  [" << detail << "]"
            << std::endl;
  if (!pass) ++g_failures;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string series(const std::vector<double>& v, int digits = 4) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fixed(v[i], digits);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> median_max_weight(const MethodPerformance& m, std::size_t intervals) {
  std::vector<double> out;
  for (std::size_t k = 0; k < intervals; ++k) {
    std::vector<double> column;
    for (const auto& rep : m.max_weight) {
      if (k < rep.size()) column.push_back(rep[k]);
    }
    out.push_back(column.empty() ? NAN : median(column));
  }
  return out;
}

PerformanceTable run(int scenario, const Tier& tier) {
  ScenarioOptions o;
  o.n = kCohortSize;
  o.reps = tier.reps;
  o.seed = kScenarioSeed;
  o.horizons = kHorizons;
  o.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return run_scenario(builtin_scenario(scenario), o);
}

void print_method(const PerformanceTable& t, Method m) {
  const MethodPerformance& p = t.method(m);
  std::cout << "      " << method_name(m) << " (" << p.reps.size() << " reps, " << p.n_failed << " failed)\n"
            << "        RD mean " << series(p.rd.mean) << "\n        RD sd   " << series(p.rd.sd) << "\n        S1 bias "
            << series(p.s1.bias) << "  mc_se " << series(p.s1.mc_se) << '\n';
  if (!p.var_ratio.empty()) std::cout << "        var ratio vs sequential " << series(p.var_ratio, 3) << '\n';
}

void criterion1(const PerformanceTable& s1, const Tier& tier) {
  bool pass = true;
  std::string detail;
  const struct {
    Method method;
    const double* mean;
    const double* sd;
  } rows[] = {{Method::kMsmIptwL0, kMsmMean, kMsmSd}, {Method::kSequential, kSeqMean, kSeqSd}};
  for (const auto& r : rows) {
    const MethodPerformance& p = s1.method(r.method);
    double worst_mean = 0.0, worst_sd = 0.0;
    for (std::size_t i = 0; i < kHorizons.size(); ++i) {
      worst_mean = std::max(worst_mean, std::abs(p.rd.mean[i] - r.mean[i]));
      worst_sd = std::max(worst_sd, std::abs(p.rd.sd[i] / r.sd[i] - 1.0));
    }
    pass = pass && worst_mean <= tier.mean_tolerance && worst_sd <= kSdTolerance;
    detail += std::string(detail.empty() ? "" : "; ") + method_name(r.method) + " max|mean diff| " +
              fixed(worst_mean) + " (tol " + fixed(tier.mean_tolerance, 3) + "), max rel sd diff " +
              fixed(worst_sd, 3) + " (tol " + fixed(kSdTolerance, 2) + ")";
  }
  report(1, "scenario 1 risk differences and SDs", pass, detail);
}

void criterion2(const PerformanceTable& s1) {
  const auto& v = s1.method(Method::kMsmIptwL0).var_ratio;
  const bool pass = v[0] > 1.0 && v[1] > 1.0 && v[4] < 1.0;
  report(2, "efficiency crossover Var(MSM-IPTW)/Var(sequential)", pass,
         "tau=1 " + fixed(v[0], 3) + ", tau=2 " + fixed(v[1], 3) + ", tau=5 " + fixed(v[4], 3) +
             " (need >1, >1, <1)");
}

void criterion3(const PerformanceTable& s2) {
  const MethodPerformance& seq = s2.method(Method::kSequential);
  double worst = 0.0;
  for (std::size_t i = 0; i < kHorizons.size(); ++i) worst = std::max(worst, std::abs(seq.rd.bias[i]));
  const MethodPerformance& msm = s2.method(Method::kMsmIptwL0);
  const double z4 = msm.s1.bias[3] / msm.s1.mc_se[3];
  const double z5 = msm.s1.bias[4] / msm.s1.mc_se[4];
  const bool pass = worst <= kSequentialBiasTolerance && z4 > kBiasMcSe && z5 > kBiasMcSe;
  report(3, "scenario 2 bias pattern", pass,
         "sequential max|RD bias| " + fixed(worst) + " (tol " + fixed(kSequentialBiasTolerance, 3) +
             "); MSM-IPTW S1 bias tau=4 " + fixed(msm.s1.bias[3]) + " = " + fixed(z4, 2) + " mc_se, tau=5 " +
             fixed(msm.s1.bias[4]) + " = " + fixed(z5, 2) + " mc_se (need > " + fixed(kBiasMcSe, 1) + ")");
}

void criterion4(const PerformanceTable& s1, const PerformanceTable& s2) {
  bool pass = true;
  std::string detail;
  for (const auto* t : {&s1, &s2}) {
    const bool all_times = t == &s2;
    const auto iptw = median_max_weight(t->method(Method::kMsmIptw), 5);
    const auto ipacw = median_max_weight(t->method(Method::kSequential), 5);
    std::cout << "      scenario " << (all_times ? 2 : 1) << " median max weight  IPTW " << series(iptw, 3)
              << "  IPACW " << series(ipacw, 3) << '\n';
    const std::size_t limit = all_times ? 5 : 3;
    int held = 0;
    for (std::size_t k = 0; k < limit; ++k) held += iptw[k] > ipacw[k];
    pass = pass && held == static_cast<int>(limit);
    detail += std::string(detail.empty() ? "" : "; ") + "scenario " + (all_times ? "2" : "1") + " IPTW > IPACW at " +
              std::to_string(held) + "/" + std::to_string(limit) + " times";
  }
  report(4, "weight-magnitude ordering", pass, detail);
}

void criterion5() {
  std::mt19937_64 rng(5);
  double eq1 = 0.0, eq2 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = oracle::random_lattice(rng);
    for (int a = 0; a < 2; ++a) {
      eq1 = std::max(eq1, std::abs(oracle::np_msm_surv1(c, a) - oracle::np_seq_surv1(c, a)));
      eq2 = std::max(eq2, std::abs(oracle::np_msm_surv2(c, a) - oracle::np_seq_surv2(c, a)));
    }
  }
  double pipeline = 0.0;
  std::mt19937_64 lattice_rng(55);
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::absorbing_lattice(lattice_rng, 1, 25);
    const Cohort cohort = testing::two_period_cohort(testing::lattice_records(c));
    const MarginalResults msm = testing::saturated_msm(cohort);
    const MarginalResults seq = testing::saturated_sequential(cohort);
    for (int a = 0; a < 2; ++a) {
      const auto& m = a == 1 ? msm.s1 : msm.s0;
      const auto& s = a == 1 ? seq.s1 : seq.s0;
      pipeline = std::max({pipeline, std::abs(m[0] - oracle::np_msm_surv1(c, a)),
                           std::abs(m[1] - oracle::np_msm_surv2(c, a)), std::abs(s[0] - oracle::np_seq_surv1(c, a)),
                           std::abs(s[1] - oracle::np_seq_surv2(c, a))});
    }
  }
  std::ostringstream d;
  d.precision(3);
  d << std::scientific << "1000 lattices: max|msm1-seq1| " << eq1 << ", max|msm2-seq2| " << eq2
    << "; 20 saturated pipelines: max|fit-oracle| " << pipeline;
  report(5, "non-parametric equivalence", eq1 <= kEquivalenceTolerance && eq2 <= kEquivalenceTolerance &&
                                             pipeline <= kPipelineTolerance,
         d.str());
}

void criterion6(const TruthCurves& truth) {
  const Cohort cohort = generate_cohort(builtin_scenario(1), kCollapsibilityN, kScenarioSeed).cohort;
  const MarginalResults plain = run_method(Method::kMsmIptw, cohort, ModelFamily::kAalen, kHorizons).results;
  const MarginalResults cond = run_method(Method::kMsmIptwL0, cohort, ModelFamily::kAalen, kHorizons).results;
  double between = 0.0, to_truth = 0.0;
  for (std::size_t i = 0; i < kHorizons.size(); ++i) {
    between = std::max(between, std::abs(plain.rd[i] - cond.rd[i]));
    to_truth = std::max({to_truth, std::abs(plain.rd[i] - truth.rd[i]), std::abs(cond.rd[i] - truth.rd[i])});
  }
  std::cout << "      unconditional RD " << series(plain.rd) << "\n      L0-conditional RD " << series(cond.rd)
            << "\n      truth RD " << series(truth.rd) << '\n';
  report(6, "additive collapsibility", between <= kCollapsibilityTolerance && to_truth <= kCollapsibilityTolerance,
         "max|uncond-cond| " + fixed(between) + ", max|estimate-truth| " + fixed(to_truth) + " (tol " +
             fixed(kCollapsibilityTolerance, 3) + ")");
}

IntervalRow row(std::size_t subject, double t_out, bool event, double x, double weight = 1.0) {
  IntervalRow r;
  r.subject = subject;
  r.t_out = t_out;
  r.event = event;
  r.x = {x};
  r.weight = weight;
  return r;
}

void criterion7() {
  const std::vector<double> x{-1.2, 0.3, 0.8, 1.5, -0.4, 2.0};
  const std::vector<double> y{0, 1, 0, 1, 1, 1};
  const std::vector<double> w{1.0, 2.0, 0.5, 1.5, 1.0, 0.7};
  Eigen::MatrixXd design(6, 2);
  for (int i = 0; i < 6; ++i) design.row(i) << 1.0, x[static_cast<std::size_t>(i)];
  const LogisticFit lf = fit_weighted_logistic(design, Eigen::Map<const Eigen::VectorXd>(y.data(), 6),
                                               Eigen::Map<const Eigen::VectorXd>(w.data(), 6));
  const auto [b0, b1] = testing::logistic_grid_maximizer(x, y, w);
  const double logistic = std::max(std::abs(lf.coefficients[0] - b0), std::abs(lf.coefficients[1] - b1));

  const std::vector<std::vector<IntervalRow>> cox_cases{
      {row(0, 1, true, 1), row(1, 2, true, 0), row(2, 3, true, 1)},
      {row(0, 0.5, true, 0.3, 2.0), row(1, 1.0, true, -1.0), row(2, 1.5, false, 0.8), row(3, 2.0, true, 1.2, 0.5),
       row(4, 2.5, true, -0.2), row(5, 3.0, false, 0.1)},
      {row(0, 1, true, 1), row(1, 1, true, 0), row(2, 2, true, 0), row(3, 3, false, 1), row(4, 3, true, 1)}};
  double cox = 0.0;
  for (const auto& rows : cox_cases) {
    cox = std::max(cox, std::abs(fit_weighted_cox(rows).log_hazard_ratios[0] - testing::cox_grid_maximizer(rows)));
  }

  const std::vector<IntervalRow> aalen_rows{row(0, 1, true, 0, 1.5), row(1, 2, true, 1), row(2, 3, false, 0),
                                            row(3, 4, true, 1, 0.5), row(4, 5, true, 0), row(5, 6, false, 1)};
  const AalenFit af = fit_weighted_aalen(aalen_rows);
  std::vector<double> times;
  const auto expected = testing::group_nelson_aalen(aalen_rows, times);
  double aalen = af.jump_times == times ? 0.0 : INFINITY;
  for (std::size_t j = 0; j < times.size() && std::isfinite(aalen); ++j) {
    for (int c = 0; c < 2; ++c) {
      aalen = std::max(aalen, std::abs(af.increments(static_cast<Eigen::Index>(j), c) - expected[j][static_cast<std::size_t>(c)]));
    }
  }

  const SurvivalCurve km = kaplan_meier(std::vector<double>{1, 2, 2, 3, 4}, std::vector<int>{1, 0, 1, 1, 0});
  const double s1 = 4.0 / 5.0, s2 = s1 * (3.0 / 4.0), s3 = s2 * (1.0 / 2.0);
  const bool km_exact = km.at(1.0) == s1 && km.at(2.0) == s2 && km.at(3.0) == s3 && km.at(4.0) == s3;

  std::ostringstream d;
  d.precision(2);
  d << std::scientific << "logistic " << logistic << " (tol 1e-6), cox " << cox << " (tol 1e-5), aalen " << aalen
    << " (tol 1e-12), kaplan-meier " << (km_exact ? "exact" : "mismatch");
  report(7, "kernel oracles",
         logistic <= kLogisticTolerance && cox <= kCoxTolerance && aalen <= kAalenTolerance && km_exact, d.str());
}

#ifdef TTE_CLI_PATH
int shell(const std::string& args) {
  const std::string command = std::string(TTE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Compares every file of two output directories; summary.json without its wall time.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& note) {
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (!fs::exists(b / name)) {
      note = name + " missing";
      return false;
    }
    std::string x = slurp(entry.path()), y = slurp(b / name);
    if (name == "summary.json") {
      auto jx = nlohmann::json::parse(x), jy = nlohmann::json::parse(y);
      jx.erase("wall_time_seconds");
      jy.erase("wall_time_seconds");
      x = jx.dump();
      y = jy.dump();
    }
    if (x != y) {
      note = name + " differs";
      return false;
    }
    ++files;
  }
  note = std::to_string(files) + " files identical";
  return files > 0;
}
#endif

void criterion8() {
#ifdef TTE_CLI_PATH
  const fs::path root = fs::temp_directory_path() / ("tte_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string sim = "simulate --scenario 2 --n 300 --reps 4 --seed 11 --n-truth 20000 --out ";
  const std::string data = (root / "data").string();
  const std::string ana = "analyze --visits " + data + "/visits.csv --subjects " + data +
                          "/subjects.csv --tau-max 5 --methods msm_iptw,msm_iptw_l0,sequential --bootstrap 5 "
                          "--seed 3 --out ";
  const bool ran = shell(sim + (root / "sim_a").string()) == 0 && shell(sim + (root / "sim_b").string()) == 0 &&
                   shell("cohort --scenario 1 --n 800 --seed 4 --out " + data) == 0 &&
                   shell(ana + (root / "ana_a").string()) == 0 && shell(ana + (root / "ana_b").string()) == 0;
  std::string note_sim = "not run", note_ana = "not run";
  const bool pass = ran && same_outputs(root / "sim_a", root / "sim_b", note_sim) &&
                    same_outputs(root / "ana_a", root / "ana_b", note_ana);
  fs::remove_all(root);
  report(8, "determinism of simulate and analyze outputs", pass,
         "simulate: " + note_sim + "; analyze: " + note_ana);
#else
  report(8, "determinism of simulate and analyze outputs", false, "command-line tool not built");
#endif
}

}  // namespace

int main(int argc, char** argv) {
  Tier tier{"smoke", 200, 0.015};
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--tier" && i + 1 < argc) {
      const std::string v = argv[++i];
      if (v == "full") {
        tier = {"full", 1000, 0.010};
      } else if (v != "smoke") {
        std::cerr << "unknown tier " << v << " (expected smoke or full)\n";
        return 2;
      }
    } else {
      std::cerr << "usage: tte_acceptance [--tier smoke|full]\n";
      return 2;
    }
  }
  std::cout << "tier " << tier.name << ": " << tier.reps << " repetitions of n=" << kCohortSize << std::endl;

  try {
    const PerformanceTable s1 = run(1, tier);
    std::cout << "    scenario 1, truth RD " << series(s1.truth.rd) << '\n';
    for (Method m : {Method::kMsmIptw, Method::kMsmIptwL0, Method::kSequential}) print_method(s1, m);
    criterion1(s1, tier);
    criterion2(s1);
    const PerformanceTable s2 = run(2, tier);
    std::cout << "    scenario 2, truth RD " << series(s2.truth.rd) << '\n';
    for (Method m : {Method::kMsmIptw, Method::kMsmIptwL0, Method::kSequential}) print_method(s2, m);
    criterion3(s2);
    criterion4(s1, s2);
    criterion5();
    criterion6(s1.truth);
  } catch (const std::exception& e) {
    std::cout << "FAIL  simulation criteria aborted: " << e.what() << std::endl;
    ++g_failures;
  }
  criterion7();
  criterion8();
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
