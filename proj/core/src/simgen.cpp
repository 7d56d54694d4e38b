#include "tte/simgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "tte/errors.hpp"
#include "tte/survfit.hpp"
#include "tte/trials.hpp"

namespace tte {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Random inputs of one subject, drawn in a fixed order so that the same
// stream yields the same subject under any treatment regime.
struct SubjectDraws {
  double u = 0.0;
  std::vector<double> noise;    // covariate noise per visit
  std::vector<double> uniform;  // treatment uniforms per visit
  double exposure = 0.0;        // Exp(1) threshold for the cumulative hazard
};

SubjectDraws draw_subject(const ScenarioParams& p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  SubjectDraws d;
  d.u = std::sqrt(p.u_variance) * normal(rng);
  d.noise.resize(static_cast<std::size_t>(p.n_visits));
  d.uniform.resize(static_cast<std::size_t>(p.n_visits));
  for (int k = 0; k < p.n_visits; ++k) {
    d.noise[static_cast<std::size_t>(k)] = normal(rng);
    d.uniform[static_cast<std::size_t>(k)] = unif(rng);
  }
  d.exposure = expo(rng);
  return d;
}

struct Trajectory {
  std::vector<VisitRecord> visits;
  double t_end = 0.0;
  int status = 0;
  std::size_t n_clamped = 0;
  std::size_t n_intervals = 0;
};

// forced < 0: treatment assigned by the logistic model; otherwise A_k = forced.
Trajectory evolve(const ScenarioParams& p, const SubjectDraws& d, int forced) {
  Trajectory tr;
  double cumulative = 0.0;
  double l_prev = 0.0;
  int a_prev = 0;
  int initiation = -1;
  for (int k = 0; k < p.n_visits && k < p.tau_max; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    double l = 0.0;
    if (k == 0) {
      l = d.u + d.noise[ks];
    } else {
      l = p.delta_0 + p.delta_L * l_prev + p.delta_A * a_prev + p.delta_T * k + d.u + d.noise[ks];
    }
    int a = 0;
    if (forced >= 0) {
      a = forced;
    } else if (a_prev == 1) {
      a = 1;
    } else {
      a = d.uniform[ks] < expit(p.gamma_0 + p.gamma_A * a_prev + p.gamma_L * l) ? 1 : 0;
    }
    if (a == 1 && initiation < 0) initiation = k;
    tr.visits.push_back(VisitRecord{k, a, {l}});

    double alpha_a = p.alpha_A;
    if (p.late_effect_visit >= 0 && initiation >= p.late_effect_visit) alpha_a *= p.late_effect_factor;
    double h = p.alpha_0 + alpha_a * a + p.alpha_L * l + p.alpha_U * d.u;
    if (h < 0.0) {
      h = 0.0;
      ++tr.n_clamped;
    }
    ++tr.n_intervals;
    const double end = std::min<double>(k + 1, p.tau_max);
    const double length = end - k;
    if (h > 0.0 && cumulative + h * length >= d.exposure) {
      double t = k + (d.exposure - cumulative) / h;
      if (!(t > k)) t = std::nextafter(static_cast<double>(k), end);
      tr.t_end = std::min(t, end);
      tr.status = 1;
      return tr;
    }
    cumulative += h * length;
    l_prev = l;
    a_prev = a;
  }
  tr.t_end = p.tau_max;
  tr.status = 0;
  return tr;
}

// Runs f(i) for i in [0, n) on up to `threads` workers.
template <typename F>
void parallel_for(int n, int threads, F&& f) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

QuantitySummary summarize(const std::vector<std::vector<double>>& estimates, const std::vector<double>& truth) {
  QuantitySummary s;
  const std::size_t h = truth.size();
  const auto r = static_cast<double>(estimates.size());
  s.mean.assign(h, 0.0);
  s.sd.assign(h, 0.0);
  for (const auto& e : estimates) {
    for (std::size_t j = 0; j < h; ++j) s.mean[j] += e[j];
  }
  for (double& m : s.mean) m /= r;
  for (const auto& e : estimates) {
    for (std::size_t j = 0; j < h; ++j) s.sd[j] += (e[j] - s.mean[j]) * (e[j] - s.mean[j]);
  }
  for (double& v : s.sd) v = estimates.size() > 1 ? std::sqrt(v / (r - 1.0)) : 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    s.bias.push_back(s.mean[j] - truth[j]);
    s.mc_se.push_back(s.sd[j] / std::sqrt(r));
  }
  return s;
}

struct MethodOutcome {
  bool ok = false;
  std::vector<double> s1, s0, rd;
  std::vector<IntervalDiagnostic> diagnostics;
};

struct RepOutcome {
  std::vector<MethodOutcome> methods;
  std::vector<double> msm_observed, msm_always, msm_never;
  std::vector<double> trial_observed, trial_initiators, trial_non_initiators;
  std::size_t n_a0 = 0;
  std::size_t n_events = 0;
  std::size_t n_clamped = 0;
  std::size_t n_intervals = 0;
};

void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  if (acc.size() < v.size()) acc.resize(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

}  // namespace

GeneratedCohort generate_cohort(const ScenarioParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  if (n < 1) throw UsageError("generate_cohort: n must be at least 1");
  std::mt19937_64 rng(seed);
  GeneratedCohort out;
  std::vector<SubjectHistory> subjects;
  subjects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SubjectDraws d = draw_subject(params, rng);
    Trajectory tr = evolve(params, d, -1);
    out.n_clamped += tr.n_clamped;
    out.n_person_intervals += tr.n_intervals;
    SubjectHistory s;
    s.id = std::to_string(i);
    s.visits = std::move(tr.visits);
    s.t_end = tr.t_end;
    s.status = tr.status;
    subjects.push_back(std::move(s));
  }
  out.cohort = make_cohort(std::move(subjects), {"L"}, params.tau_max);
  return out;
}

TruthCurves generate_truth(const ScenarioParams& params, std::size_t n_large, const std::vector<double>& horizons,
                           std::uint64_t seed, int threads) {
  params.validate();
  if (n_large < 1) throw UsageError("generate_truth: n_large must be at least 1");
  constexpr std::size_t kChunk = 1 << 16;
  const std::size_t n_chunks = (n_large + kChunk - 1) / kChunk;
  std::vector<double> times1(n_large), times0(n_large);
  std::vector<int> status1(n_large), status0(n_large);
  parallel_for(static_cast<int>(n_chunks), threads, [&](int c) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(c)};
    std::mt19937_64 rng(seq);
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(n_large, begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const SubjectDraws d = draw_subject(params, rng);
      const Trajectory treated = evolve(params, d, 1);
      const Trajectory untreated = evolve(params, d, 0);
      times1[i] = treated.t_end;
      status1[i] = treated.status;
      times0[i] = untreated.t_end;
      status0[i] = untreated.status;
    }
  });
  const SurvivalCurve km1 = kaplan_meier(times1, status1);
  const SurvivalCurve km0 = kaplan_meier(times0, status0);
  TruthCurves truth;
  truth.horizons = horizons;
  for (double t : horizons) {
    truth.s1.push_back(km1.at(t));
    truth.s0.push_back(km0.at(t));
    truth.rd.push_back(truth.s1.back() - truth.s0.back());
  }
  return truth;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kMsmIptw:
      return "msm_iptw";
    case Method::kMsmIptwL0:
      return "msm_iptw_l0";
    case Method::kSequential:
      return "sequential";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "msm_iptw") return Method::kMsmIptw;
  if (name == "msm_iptw_l0") return Method::kMsmIptwL0;
  if (name == "sequential") return Method::kSequential;
  throw UsageError("unknown method '" + name + "' (expected msm_iptw, msm_iptw_l0 or sequential)");
}

MsmSpec method_msm_spec(Method m, ModelFamily family, const std::vector<double>& horizons) {
  MsmSpec spec;
  spec.family = family;
  spec.horizons = horizons;
  spec.form = TreatmentForm::kPerVisit;
  if (m == Method::kMsmIptwL0 || m == Method::kSequential) spec.baseline_covariates = {0};
  return spec;
}

WeightModelSpec method_weight_spec(Method m, const Cohort& cohort) {
  switch (m) {
    case Method::kMsmIptw:
      return iptw_spec(cohort, false);
    case Method::kMsmIptwL0:
      return iptw_spec(cohort, true);
    case Method::kSequential:
      return ipacw_spec(cohort);
  }
  throw UsageError("unknown method");
}

PipelineRun run_method(Method m, const Cohort& cohort, ModelFamily family, const std::vector<double>& horizons,
                       std::optional<double> truncation_percentile) {
  const MsmSpec msm = method_msm_spec(m, family, horizons);
  const WeightModelSpec weights = method_weight_spec(m, cohort);
  PipelineOptions options;
  options.truncation_percentile = truncation_percentile;
  if (m == Method::kSequential) return run_sequential_trials(cohort, msm, weights, options);
  return run_msm_iptw(cohort, msm, weights, options);
}

const MethodPerformance& PerformanceTable::method(Method m) const {
  for (const auto& mp : methods) {
    if (mp.method == m) return mp;
  }
  throw UsageError(std::string("method ") + method_name(m) + " was not run");
}

PerformanceTable run_scenario(const ScenarioParams& params, const ScenarioOptions& options) {
  params.validate();
  if (options.reps < 2) throw UsageError("run_scenario: reps must be at least 2");
  if (options.methods.empty()) throw UsageError("run_scenario: no methods selected");
  if (options.horizons.empty()) throw UsageError("run_scenario: no horizons");

  PerformanceTable table;
  table.params = params;
  table.n = options.n;
  table.reps = options.reps;
  table.seed = options.seed;
  table.horizons = options.horizons;
  table.truth = options.truth ? *options.truth
                              : generate_truth(params, options.n_truth, options.horizons, options.truth_seed,
                                               options.threads);
  if (table.truth.horizons != options.horizons) throw UsageError("run_scenario: truth horizons differ");

  const std::size_t n_methods = options.methods.size();
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(options.reps));
  parallel_for(options.reps, options.threads, [&](int r) {
    RepOutcome& out = outcomes[static_cast<std::size_t>(r)];
    const GeneratedCohort g = generate_cohort(params, options.n, options.seed + static_cast<std::uint64_t>(r));
    const Cohort& cohort = g.cohort;
    out.n_clamped = g.n_clamped;
    out.n_intervals = g.n_person_intervals;
    const int k_max = cohort.max_visits();
    out.msm_observed.assign(static_cast<std::size_t>(k_max), 0.0);
    out.msm_always.assign(static_cast<std::size_t>(k_max), 0.0);
    out.msm_never.assign(static_cast<std::size_t>(k_max), 0.0);
    for (const auto& s : cohort.subjects) {
      if (s.treatment(0) == 1) ++out.n_a0;
      if (s.status == 1) ++out.n_events;
      bool always = true, never = true;
      for (int k = 0; k < s.n_visits(); ++k) {
        always = always && s.treatment(k) == 1;
        never = never && s.treatment(k) == 0;
        const auto ks = static_cast<std::size_t>(k);
        out.msm_observed[ks] += 1.0;
        if (always) out.msm_always[ks] += 1.0;
        if (never) out.msm_never[ks] += 1.0;
      }
    }
    const std::vector<TrialRow> rows = expand_sequential_trials(cohort);
    for (const auto& row : rows) {
      const auto j = static_cast<std::size_t>(row.follow_up);
      if (out.trial_observed.size() <= j) {
        out.trial_observed.resize(j + 1, 0.0);
        out.trial_initiators.resize(j + 1, 0.0);
        out.trial_non_initiators.resize(j + 1, 0.0);
      }
      out.trial_observed[j] += 1.0;
      (row.initiator ? out.trial_initiators : out.trial_non_initiators)[j] += 1.0;
    }

    out.methods.resize(n_methods);
    for (std::size_t m = 0; m < n_methods; ++m) {
      MethodOutcome& mo = out.methods[m];
      try {
        const PipelineRun run = run_method(options.methods[m], cohort, options.family, options.horizons,
                                           options.truncation_percentile);
        mo.s1 = run.results.s1;
        mo.s0 = run.results.s0;
        mo.rd = run.results.rd;
        mo.diagnostics = weight_diagnostics(run.weights);
        mo.ok = true;
      } catch (const Error&) {
        mo.ok = false;
      }
    }
  });

  const double reps = options.reps;
  std::size_t n_a0 = 0, n_events = 0;
  for (const auto& out : outcomes) {
    add_into(table.msm_rows.observed, out.msm_observed);
    add_into(table.msm_rows.always_treated, out.msm_always);
    add_into(table.msm_rows.never_treated, out.msm_never);
    add_into(table.trial_rows.observed, out.trial_observed);
    add_into(table.trial_rows.always_treated, out.trial_initiators);
    add_into(table.trial_rows.never_treated, out.trial_non_initiators);
    n_a0 += out.n_a0;
    n_events += out.n_events;
    table.n_clamped += out.n_clamped;
    table.n_person_intervals += out.n_intervals;
  }
  for (auto* v : {&table.msm_rows.observed, &table.msm_rows.always_treated, &table.msm_rows.never_treated,
                  &table.trial_rows.observed, &table.trial_rows.always_treated, &table.trial_rows.never_treated}) {
    for (double& x : *v) x /= reps;
  }
  const double total = reps * static_cast<double>(options.n);
  table.fraction_a0_treated = static_cast<double>(n_a0) / total;
  table.fraction_events = static_cast<double>(n_events) / total;

  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodPerformance mp;
    mp.method = options.methods[m];
    for (int r = 0; r < options.reps; ++r) {
      const MethodOutcome& mo = outcomes[static_cast<std::size_t>(r)].methods[m];
      if (!mo.ok) {
        ++mp.n_failed;
        continue;
      }
      mp.reps.push_back(r);
      mp.s1_estimates.push_back(mo.s1);
      mp.s0_estimates.push_back(mo.s0);
      mp.rd_estimates.push_back(mo.rd);
      std::vector<double> maxima;
      for (const auto& d : mo.diagnostics) maxima.push_back(d.max);
      mp.max_weight.push_back(std::move(maxima));
      mp.diagnostics.push_back(mo.diagnostics);
    }
    if (static_cast<double>(mp.n_failed) > 0.05 * reps) {
      throw FitError(std::string("run_scenario: ") + method_name(mp.method) + " failed in " +
                     std::to_string(mp.n_failed) + " of " + std::to_string(options.reps) + " repetitions");
    }
    if (mp.reps.size() < 2) throw FitError("run_scenario: fewer than two successful repetitions");
    mp.s1 = summarize(mp.s1_estimates, table.truth.s1);
    mp.s0 = summarize(mp.s0_estimates, table.truth.s0);
    mp.rd = summarize(mp.rd_estimates, table.truth.rd);
    table.methods.push_back(std::move(mp));
  }

  const MethodPerformance* seq = nullptr;
  for (const auto& mp : table.methods) {
    if (mp.method == Method::kSequential) seq = &mp;
  }
  if (seq != nullptr) {
    for (auto& mp : table.methods) {
      if (mp.method == Method::kSequential) continue;
      for (std::size_t j = 0; j < table.horizons.size(); ++j) {
        const double v_seq = seq->rd.sd[j] * seq->rd.sd[j];
        mp.var_ratio.push_back(v_seq > 0.0 ? mp.rd.sd[j] * mp.rd.sd[j] / v_seq
                                           : std::numeric_limits<double>::quiet_NaN());
      }
    }
  }
  return table;
}

}  // namespace tte
