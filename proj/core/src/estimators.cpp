#include "tte/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "tte/errors.hpp"

namespace tte {
namespace {

std::size_t index_of(const std::vector<double>& grid, double t) {
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  return it == grid.begin() ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(it - grid.begin()) - 1;
}

double step_at(const std::vector<double>& grid, const std::vector<double>& values, double t, double at_zero) {
  const auto i = index_of(grid, t);
  return i == static_cast<std::size_t>(-1) ? at_zero : values[i];
}

std::vector<double> default_horizons(const Cohort& cohort, const MsmSpec& spec) {
  std::vector<double> h = spec.horizons;
  if (h.empty()) {
    for (int t = 1; t <= static_cast<int>(std::floor(cohort.tau_max)); ++t) h.push_back(t);
  }
  for (double t : h) {
    if (!(t >= 0.0) || t > cohort.tau_max) throw UsageError("horizons must lie in [0, tau_max]");
  }
  std::sort(h.begin(), h.end());
  h.erase(std::unique(h.begin(), h.end()), h.end());
  return h;
}

std::vector<std::vector<double>> time_zero_population(const Cohort& cohort) {
  std::vector<std::vector<double>> pop;
  pop.reserve(cohort.size());
  for (const auto& s : cohort.subjects) pop.push_back(s.covariates(0));
  return pop;
}

void check_conditioning(const Cohort& cohort, const MsmSpec& spec) {
  for (std::size_t c : spec.baseline_covariates) {
    if (c >= cohort.n_covariates()) throw UsageError("conditioning covariate index out of range");
  }
}

HazardFit fit_hazard(const std::vector<IntervalRow>& rows, ModelFamily family, const MsmDesign& design) {
  HazardFit fit;
  fit.family = family;
  fit.design = design;
  if (family == ModelFamily::kCox) {
    fit.cox = fit_weighted_cox(rows);
  } else {
    AalenOptions opts;
    opts.add_intercept = design.n_trial_columns == 0;
    fit.aalen = fit_weighted_aalen(rows, opts);
  }
  return fit;
}

}  // namespace

double MarginalResults::s1_at(double t) const { return step_at(tau, s1, t, 1.0); }
double MarginalResults::s0_at(double t) const { return step_at(tau, s0, t, 1.0); }
double MarginalResults::rd_at(double t) const { return step_at(tau, rd, t, 0.0); }

std::size_t MsmDesign::width() const {
  std::size_t w = static_cast<std::size_t>(n_trial_columns);
  if (trial_timescale || form != TreatmentForm::kPerVisit) {
    w += 1;
  } else {
    w += static_cast<std::size_t>(n_visits);
  }
  w += baseline_covariates.size();
  if (interaction) w += baseline_covariates.size();
  return w;
}

std::vector<std::string> MsmDesign::column_names(const std::vector<std::string>& covariate_names) const {
  std::vector<std::string> names;
  for (int t = 0; t < n_trial_columns; ++t) names.push_back("trial" + std::to_string(t));
  if (trial_timescale) {
    names.emplace_back("A");
  } else if (form == TreatmentForm::kCurrent) {
    names.emplace_back("A");
  } else if (form == TreatmentForm::kDuration) {
    names.emplace_back("A_duration");
  } else {
    for (int j = 0; j < n_visits; ++j) names.push_back("A" + std::to_string(j));
  }
  auto label = [&](std::size_t c) { return c < covariate_names.size() ? covariate_names[c] : "L" + std::to_string(c); };
  for (std::size_t c : baseline_covariates) names.push_back(label(c) + (trial_timescale ? "_k" : "_0"));
  if (interaction) {
    for (std::size_t c : baseline_covariates) names.push_back("A:" + label(c));
  }
  return names;
}

std::vector<double> MsmDesign::encode(const std::vector<int>& history, int k, const std::vector<double>& baseline,
                                      int trial) const {
  std::vector<double> x;
  x.reserve(width());
  for (int t = 0; t < n_trial_columns; ++t) x.push_back(t == trial ? 1.0 : 0.0);
  double current = 0.0;
  if (trial_timescale) {
    current = history.at(0);
    x.push_back(current);
  } else {
    current = history.at(static_cast<std::size_t>(k));
    if (form == TreatmentForm::kCurrent) {
      x.push_back(current);
    } else if (form == TreatmentForm::kDuration) {
      double total = 0.0;
      for (int j = 0; j <= k; ++j) total += history.at(static_cast<std::size_t>(j));
      x.push_back(total);
    } else {
      if (k >= n_visits) throw UsageError("per-visit treatment form: more intervals than visit columns");
      for (int j = 0; j < n_visits; ++j) x.push_back(j <= k ? history.at(static_cast<std::size_t>(j)) : 0.0);
    }
  }
  for (std::size_t c : baseline_covariates) x.push_back(baseline.at(c));
  if (interaction) {
    for (std::size_t c : baseline_covariates) x.push_back(current * baseline.at(c));
  }
  return x;
}

CovariatePath MsmDesign::regime_path(int a, const std::vector<double>& baseline, int n_intervals, int trial) const {
  const std::vector<int> history(static_cast<std::size_t>(std::max(n_intervals, 1)), a);
  CovariatePath path;
  path.reserve(static_cast<std::size_t>(n_intervals));
  for (int k = 0; k < n_intervals; ++k) path.push_back(encode(history, k, baseline, trial));
  return path;
}

MarginalResults standardize(const HazardFit& fit, const MsmSpec& spec,
                            const std::vector<std::vector<double>>& population, const std::vector<double>& horizons) {
  if (population.empty()) throw UsageError("standardize: empty population");
  if (horizons.empty()) throw UsageError("standardize: no horizons");
  const double max_h = *std::max_element(horizons.begin(), horizons.end());
  const int n_intervals = std::max(1, static_cast<int>(std::ceil(max_h)));
  MarginalResults out;
  std::vector<double> sum1;
  std::vector<double> sum0;
  for (const auto& member : population) {
    for (std::size_t c : fit.design.baseline_covariates) {
      if (c >= member.size()) throw UsageError("standardize: population member lacks a conditioning covariate");
    }
    for (int a = 0; a <= 1; ++a) {
      const auto path = fit.design.regime_path(a, member, n_intervals, fit.reference_stratum);
      const SurvivalCurve curve =
          fit.family == ModelFamily::kCox
              ? survival_from_cox(fit.cox, path, horizons, fit.design.n_trial_columns ? 0 : fit.reference_stratum,
                                  spec.transform, spec.include_jump_times)
              : survival_from_aalen(fit.aalen, path, horizons, spec.transform, spec.include_jump_times);
      auto& sum = a == 1 ? sum1 : sum0;
      if (out.tau.empty()) out.tau = curve.times;
      if (curve.times.size() != out.tau.size()) throw FitError("standardize: inconsistent evaluation grid");
      if (sum.empty()) sum.assign(curve.times.size(), 0.0);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += curve.survival[i];
      out.n_clamped += curve.n_clamped;
      out.n_increases += curve.n_increases;
      out.extrapolated = out.extrapolated || curve.extrapolated;
    }
  }
  const double n = static_cast<double>(population.size());
  const bool keep_origin =
      spec.include_jump_times || std::find(horizons.begin(), horizons.end(), 0.0) != horizons.end();
  std::vector<double> tau;
  for (std::size_t i = 0; i < out.tau.size(); ++i) {
    if (out.tau[i] == 0.0 && !keep_origin) continue;
    tau.push_back(out.tau[i]);
    out.s1.push_back(sum1[i] / n);
    out.s0.push_back(sum0[i] / n);
    out.rd.push_back(out.s1.back() - out.s0.back());
  }
  out.tau = std::move(tau);
  out.population_size = population.size();
  return out;
}

PipelineRun run_msm_iptw(const Cohort& cohort, const MsmSpec& msm, const WeightModelSpec& weight_spec,
                         const PipelineOptions& options) {
  if (cohort.size() == 0) throw UsageError("run_msm_iptw: empty cohort");
  check_conditioning(cohort, msm);
  const auto horizons = default_horizons(cohort, msm);

  MsmDesign design;
  design.form = msm.form;
  design.n_visits = msm.n_visits > 0 ? msm.n_visits : cohort.max_visits();
  if (design.form == TreatmentForm::kPerVisit && design.n_visits < cohort.max_visits()) {
    throw UsageError("per-visit treatment form needs a column for every visit");
  }
  design.baseline_covariates = msm.baseline_covariates;
  design.interaction = msm.treatment_by_baseline;

  WeightSeries w = compute_iptw(cohort, weight_spec);
  if (cohort.has_dropout()) {
    const WeightSeries c = compute_ipcw(cohort, ipcw_spec(cohort));
    for (std::size_t i = 0; i < w.tracks.size(); ++i) {
      for (std::size_t j = 0; j < w.tracks[i].weight.size(); ++j) w.tracks[i].weight[j] *= c.tracks[i].weight[j];
    }
  }
  if (options.truncation_percentile) w = truncate_weights(w, *options.truncation_percentile);

  std::vector<int> history;
  auto rows = to_interval_rows(cohort, [&](const SubjectHistory& s, int k) {
    history.resize(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) history[static_cast<std::size_t>(j)] = s.treatment(j);
    return design.encode(history, k, s.covariates(0));
  });
  for (auto& r : rows) r.weight = w.tracks[r.subject].weight.at(static_cast<std::size_t>(r.t_in));

  PipelineRun run;
  run.n_rows = rows.size();
  run.fit = fit_hazard(rows, msm.family, design);
  const auto population = options.population ? *options.population : time_zero_population(cohort);
  run.results = standardize(run.fit, msm, population, horizons);
  run.results.population = options.population ? "supplied" : "C0";
  run.weights = std::move(w);
  return run;
}

std::vector<TrialRow> expand_sequential_trials(const Cohort& cohort, int max_trial) {
  std::vector<TrialRow> rows;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort.subjects[i];
    const int last = max_trial < 0 ? s.n_visits() - 1 : std::min(max_trial, s.n_visits() - 1);
    for (int k = 0; k <= last; ++k) {
      if (k > 0 && s.treatment(k - 1) != 0) break;  // eligibility: untreated through k-1
      const int a = s.treatment(k);
      for (int m = k; m < s.n_visits(); ++m) {
        if (m > k && s.treatment(m) != a) {
          rows.back().artificially_censored = true;
          break;
        }
        TrialRow r;
        r.subject = i;
        r.trial = k;
        r.initiator = a;
        r.baseline = s.covariates(k);
        r.follow_up = m - k;
        r.s_in = m - k;
        r.s_out = std::min(static_cast<double>(m + 1), s.t_end) - k;
        r.event = s.status == 1 && static_cast<double>(m + 1) >= s.t_end;
        rows.push_back(std::move(r));
        if (static_cast<double>(m + 1) >= s.t_end) break;
      }
    }
  }
  return rows;
}

PipelineRun run_sequential_trials(const Cohort& cohort, const MsmSpec& msm, const WeightModelSpec& weight_spec,
                                  const PipelineOptions& options) {
  if (cohort.size() == 0) throw UsageError("run_sequential_trials: empty cohort");
  check_conditioning(cohort, msm);
  const auto horizons = default_horizons(cohort, msm);
  if (options.stratified_baseline) {
    const double limit = cohort.tau_max - options.reference_trial;
    if (options.reference_trial < 0 || horizons.back() > limit) {
      throw UsageError("stratified baseline of trial " + std::to_string(options.reference_trial) +
                       " only identifies horizons up to " + std::to_string(limit));
    }
  }

  auto trial_rows = expand_sequential_trials(cohort, options.max_trial);
  WeightSeries w = compute_ipacw(cohort, trial_rows, weight_spec);
  if (cohort.has_dropout()) {
    const WeightSeries c = compute_ipcw(cohort, ipcw_spec(cohort));
    for (auto& t : w.tracks) {
      const auto& cw = c.tracks[t.subject].weight;
      const double at_start = cw.at(static_cast<std::size_t>(t.trial));
      for (std::size_t j = 0; j < t.weight.size(); ++j) t.weight[j] *= cw.at(static_cast<std::size_t>(t.trial) + j) / at_start;
    }
  }
  if (options.truncation_percentile) w = truncate_weights(w, *options.truncation_percentile);

  MsmDesign design;
  design.trial_timescale = true;
  design.baseline_covariates = msm.baseline_covariates;
  design.interaction = msm.treatment_by_baseline;
  int n_trials = 0;
  for (const auto& r : trial_rows) n_trials = std::max(n_trials, r.trial + 1);
  if (options.stratified_baseline && msm.family == ModelFamily::kAalen) design.n_trial_columns = n_trials;

  std::vector<IntervalRow> rows;
  rows.reserve(trial_rows.size());
  std::size_t track = 0;
  std::size_t offset = 0;
  for (auto& tr : trial_rows) {
    while (w.tracks[track].subject != tr.subject || w.tracks[track].trial != tr.trial) {
      ++track;
      offset = 0;
    }
    tr.weight = w.tracks[track].weight.at(offset++);
    IntervalRow r;
    r.subject = tr.subject;
    r.t_in = tr.s_in;
    r.t_out = tr.s_out;
    r.event = tr.event;
    r.weight = tr.weight;
    r.stratum = options.stratified_baseline ? tr.trial : 0;
    r.x = design.encode({tr.initiator}, 0, tr.baseline, tr.trial);
    rows.push_back(std::move(r));
  }

  PipelineRun run;
  run.n_rows = rows.size();
  run.fit = fit_hazard(rows, msm.family, design);
  run.fit.reference_stratum = options.stratified_baseline ? options.reference_trial : 0;
  const auto population = options.population ? *options.population : time_zero_population(cohort);
  run.results = standardize(run.fit, msm, population, horizons);
  run.results.population = options.population ? "supplied" : "C0";
  run.weights = std::move(w);
  return run;
}

}  // namespace tte
