#include "tte/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tte/errors.hpp"
#include "tte/glm.hpp"

namespace tte {
namespace {

std::vector<std::size_t> resolve(const Cohort& cohort, std::vector<std::size_t> covariates) {
  if (covariates.empty()) {
    covariates.resize(cohort.n_covariates());
    std::iota(covariates.begin(), covariates.end(), 0);
  }
  for (std::size_t c : covariates) {
    if (c >= cohort.n_covariates()) throw UsageError("weight model: covariate index out of range");
  }
  return covariates;
}

void one_hot(std::vector<double>& out, int level, int n_levels) {
  if (level < 0 || level >= n_levels) throw UsageError("weight model: visit index beyond the design");
  for (int i = 0; i < n_levels; ++i) out.push_back(i == level ? 1.0 : 0.0);
}

// One treatment (or censoring) decision entering a weight model.
struct Decision {
  std::size_t subject = 0;
  int origin = 0;
  int visit = 0;
  int branch = 0;  // previous treatment level for non-absorbing treatment
  int group = 0;   // visit or follow-up time, used when fits are not pooled
  double outcome = 0.0;
};

enum class SingleClass { kPositivity, kDeterministic };

// Returns P(outcome = 1) for every decision.
std::vector<double> fit_and_predict(const Cohort& cohort, const std::vector<Decision>& decisions,
                                    const FeatureBuilder& builder, bool pooled, SingleClass policy,
                                    const char* what) {
  std::vector<double> prob(decisions.size(), 0.5);
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    groups[{decisions[i].branch, pooled ? 0 : decisions[i].group}].push_back(i);
  }
  for (const auto& [key, members] : groups) {
    double n1 = 0.0;
    for (std::size_t i : members) n1 += decisions[i].outcome;
    if (n1 == 0.0 || n1 == static_cast<double>(members.size())) {
      if (policy == SingleClass::kPositivity) {
        std::string where = pooled ? std::string("all visits") : "visit " + std::to_string(key.second);
        throw PositivityError(std::string(what) + ": positivity violation: no variation in the outcome (" + where +
                              ", previous treatment " + std::to_string(key.first) + ")");
      }
      for (std::size_t i : members) prob[i] = n1 == 0.0 ? 0.0 : 1.0;
      continue;
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(members.size());
    for (std::size_t i : members) {
      const auto& d = decisions[i];
      rows.push_back(builder(cohort.subjects[d.subject], d.origin, d.visit));
    }
    const std::size_t width = rows.front().size();
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < width; ++j) {
      bool nonzero = false;
      for (const auto& r : rows) {
        if (r.size() != width) throw UsageError(std::string(what) + ": ragged feature rows");
        if (r[j] != 0.0) {
          nonzero = true;
          break;
        }
      }
      if (nonzero) keep.push_back(j);
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size()));
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rows[static_cast<std::size_t>(r)][keep[static_cast<std::size_t>(c)]];
      y[r] = decisions[members[static_cast<std::size_t>(r)]].outcome;
    }
    const LogisticFit fit = fit_weighted_logistic(x, y, Eigen::VectorXd::Ones(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      prob[members[static_cast<std::size_t>(r)]] = predict_prob(fit, Eigen::VectorXd(x.row(r).transpose()));
    }
  }
  return prob;
}

double observed(double p_one, double outcome) { return outcome == 1.0 ? p_one : 1.0 - p_one; }

}  // namespace

WeightModelSpec iptw_spec(const Cohort& cohort, bool condition_on_baseline, std::vector<std::size_t> covariates) {
  const auto cov = resolve(cohort, std::move(covariates));
  const int n_visits = cohort.max_visits();
  WeightModelSpec spec;
  spec.numerator = [cov, n_visits, condition_on_baseline](const SubjectHistory& s, int, int visit) {
    std::vector<double> f;
    one_hot(f, visit, n_visits);
    if (condition_on_baseline) {
      for (std::size_t c : cov) {
        for (int v = 0; v < n_visits; ++v) f.push_back(v == visit ? s.covariates(0)[c] : 0.0);
      }
    }
    return f;
  };
  spec.denominator = [cov](const SubjectHistory& s, int, int visit) {
    std::vector<double> f{1.0};
    for (std::size_t c : cov) f.push_back(s.covariates(visit)[c]);
    return f;
  };
  return spec;
}

WeightModelSpec ipacw_spec(const Cohort& cohort, std::vector<std::size_t> covariates) {
  const auto cov = resolve(cohort, std::move(covariates));
  const int n_visits = cohort.max_visits();
  WeightModelSpec spec;
  spec.numerator = [cov, n_visits](const SubjectHistory& s, int origin, int visit) {
    std::vector<double> f;
    const int j = visit - origin;
    one_hot(f, j, n_visits);
    for (std::size_t c : cov) {
      for (int v = 0; v < n_visits; ++v) f.push_back(v == j ? s.covariates(origin)[c] : 0.0);
    }
    return f;
  };
  spec.denominator = [cov](const SubjectHistory& s, int, int visit) {
    std::vector<double> f{1.0};
    for (std::size_t c : cov) f.push_back(s.covariates(visit)[c]);
    return f;
  };
  return spec;
}

WeightModelSpec ipcw_spec(const Cohort& cohort, std::vector<std::size_t> covariates) {
  const auto cov = resolve(cohort, std::move(covariates));
  const int n_visits = cohort.max_visits() + 1;
  WeightModelSpec spec;
  spec.numerator = [n_visits](const SubjectHistory&, int, int visit) {
    std::vector<double> f;
    one_hot(f, visit, n_visits);
    return f;
  };
  spec.denominator = [cov, n_visits](const SubjectHistory& s, int, int visit) {
    std::vector<double> f;
    one_hot(f, visit, n_visits);
    f.push_back(s.treatment(visit - 1));
    for (std::size_t c : cov) f.push_back(s.covariates(visit - 1)[c]);
    return f;
  };
  return spec;
}

std::vector<double> cumulative_weights(const std::vector<double>& numerator, const std::vector<double>& denominator) {
  if (numerator.size() != denominator.size()) throw UsageError("cumulative_weights: length mismatch");
  std::vector<double> w(numerator.size());
  double running = 1.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    running *= numerator[j] / denominator[j];
    w[j] = running;
  }
  return w;
}

WeightSeries compute_iptw(const Cohort& cohort, const WeightModelSpec& spec) {
  if (!spec.denominator) throw UsageError("compute_iptw: denominator model required");
  std::vector<Decision> decisions;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort.subjects[i];
    for (int m = 0; m < s.n_visits(); ++m) {
      const int prev = s.previous_treatment(m);
      if (spec.absorbing && prev == 1) continue;
      decisions.push_back({i, 0, m, spec.absorbing ? 0 : prev, m, static_cast<double>(s.treatment(m))});
    }
  }
  const auto den = fit_and_predict(cohort, decisions, spec.denominator, spec.pooled, SingleClass::kPositivity,
                                   "treatment weights");
  std::vector<double> num(decisions.size(), -1.0);
  if (spec.numerator) {
    num = fit_and_predict(cohort, decisions, spec.numerator, spec.pooled, SingleClass::kPositivity,
                          "treatment weights");
  }
  WeightSeries series;
  series.tracks.resize(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    auto& t = series.tracks[i];
    t.subject = i;
    t.initiator = cohort.subjects[i].treatment(0);
    t.numerator.assign(static_cast<std::size_t>(cohort.subjects[i].n_visits()), 1.0);
    t.denominator = t.numerator;
  }
  for (std::size_t d = 0; d < decisions.size(); ++d) {
    auto& t = series.tracks[decisions[d].subject];
    const auto m = static_cast<std::size_t>(decisions[d].visit);
    t.denominator[m] = observed(den[d], decisions[d].outcome);
    t.numerator[m] = spec.numerator ? observed(num[d], decisions[d].outcome) : 1.0;
  }
  for (auto& t : series.tracks) t.weight = cumulative_weights(t.numerator, t.denominator);
  return series;
}

WeightSeries compute_ipacw(const Cohort& cohort, const std::vector<TrialRow>& trial_rows,
                           const WeightModelSpec& spec) {
  if (!spec.denominator) throw UsageError("compute_ipacw: denominator model required");
  WeightSeries series;
  std::vector<Decision> decisions;
  std::vector<std::pair<std::size_t, std::size_t>> slot;  // (track, follow-up) per decision; npos = fit only
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  for (std::size_t r = 0; r < trial_rows.size();) {
    const auto& first = trial_rows[r];
    std::size_t end = r;
    while (end < trial_rows.size() && trial_rows[end].subject == first.subject &&
           trial_rows[end].trial == first.trial) {
      ++end;
    }
    WeightTrack track;
    track.subject = first.subject;
    track.trial = first.trial;
    track.initiator = first.initiator;
    const std::size_t n_rows = end - r;
    track.numerator.assign(n_rows, 1.0);
    track.denominator.assign(n_rows, 1.0);
    const std::size_t t_index = series.tracks.size();
    if (first.subject >= cohort.size()) throw UsageError("compute_ipacw: trial row refers to an unknown subject");
    const auto& s = cohort.subjects[first.subject];
    if (!(spec.absorbing && first.initiator == 1)) {
      const int branch = spec.absorbing ? 0 : first.initiator;
      for (std::size_t j = 1; j < n_rows; ++j) {
        const int m = first.trial + static_cast<int>(j);
        decisions.push_back({first.subject, first.trial, m, branch, static_cast<int>(j),
                             static_cast<double>(s.treatment(m))});
        slot.emplace_back(t_index, j);
      }
      if (trial_rows[end - 1].artificially_censored) {
        const int m = first.trial + static_cast<int>(n_rows);
        if (m < s.n_visits()) {
          decisions.push_back({first.subject, first.trial, m, branch, static_cast<int>(n_rows),
                               static_cast<double>(s.treatment(m))});
          slot.emplace_back(t_index, kNone);
        }
      }
    }
    series.tracks.push_back(std::move(track));
    r = end;
  }
  if (!decisions.empty()) {
    const auto den = fit_and_predict(cohort, decisions, spec.denominator, spec.pooled, SingleClass::kDeterministic,
                                     "artificial-censoring weights");
    std::vector<double> num;
    if (spec.numerator) {
      num = fit_and_predict(cohort, decisions, spec.numerator, spec.pooled, SingleClass::kDeterministic,
                            "artificial-censoring weights");
    }
    for (std::size_t d = 0; d < decisions.size(); ++d) {
      if (slot[d].second == kNone) continue;
      auto& t = series.tracks[slot[d].first];
      const double remain = static_cast<double>(t.initiator);
      t.denominator[slot[d].second] = observed(den[d], remain);
      t.numerator[slot[d].second] = spec.numerator ? observed(num[d], remain) : 1.0;
    }
  }
  for (auto& t : series.tracks) t.weight = cumulative_weights(t.numerator, t.denominator);
  return series;
}

WeightSeries compute_ipcw(const Cohort& cohort, const WeightModelSpec& spec) {
  WeightSeries series;
  series.tracks.resize(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    auto& t = series.tracks[i];
    t.subject = i;
    t.initiator = cohort.subjects[i].treatment(0);
    t.numerator.assign(static_cast<std::size_t>(cohort.subjects[i].n_visits()), 1.0);
    t.denominator = t.numerator;
    t.weight = t.numerator;
  }
  if (!cohort.has_dropout()) return series;
  if (!spec.denominator) throw UsageError("compute_ipcw: denominator model required");

  std::vector<Decision> decisions;
  const int last = cohort.max_visits();  // no interval follows a decision at this visit
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort.subjects[i];
    for (int m = 1; m <= s.n_visits() && m < last; ++m) {
      double censored = 0.0;
      if (m < s.n_visits()) {
        censored = 0.0;
      } else if (s.status == 0 && s.t_end < cohort.tau_max && s.t_end <= m) {
        censored = 1.0;
      } else {
        break;
      }
      decisions.push_back({i, 0, m, 0, m, censored});
    }
  }
  const auto den = fit_and_predict(cohort, decisions, spec.denominator, spec.pooled, SingleClass::kDeterministic,
                                   "censoring weights");
  std::vector<double> num;
  if (spec.numerator) {
    num = fit_and_predict(cohort, decisions, spec.numerator, spec.pooled, SingleClass::kDeterministic,
                          "censoring weights");
  }
  for (std::size_t d = 0; d < decisions.size(); ++d) {
    if (decisions[d].outcome == 1.0) continue;  // no interval follows a censoring
    auto& t = series.tracks[decisions[d].subject];
    const auto m = static_cast<std::size_t>(decisions[d].visit);
    t.denominator[m] = 1.0 - den[d];
    t.numerator[m] = spec.numerator ? 1.0 - num[d] : 1.0;
  }
  for (auto& t : series.tracks) t.weight = cumulative_weights(t.numerator, t.denominator);
  return series;
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
  if (!(percentile > 0.0 && percentile <= 100.0)) throw UsageError("percentile must lie in (0, 100]");
  if (values.empty()) throw UsageError("percentile of an empty set");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

WeightSeries truncate_weights(const WeightSeries& series, double percentile) {
  if (!(percentile > 0.0 && percentile <= 100.0)) throw UsageError("truncate_weights: percentile must lie in (0, 100]");
  std::vector<double> all;
  for (const auto& t : series.tracks) all.insert(all.end(), t.weight.begin(), t.weight.end());
  if (all.empty()) throw UsageError("truncate_weights: empty series");
  const double cap = nearest_rank_percentile(std::move(all), percentile);
  WeightSeries out = series;
  for (auto& t : out.tracks) {
    for (double& w : t.weight) w = std::min(w, cap);
  }
  return out;
}

std::vector<IntervalDiagnostic> weight_diagnostics(const WeightSeries& series) {
  std::map<int, std::vector<double>> by_interval;
  for (const auto& t : series.tracks) {
    for (std::size_t j = 0; j < t.weight.size(); ++j) by_interval[static_cast<int>(j)].push_back(t.weight[j]);
  }
  std::vector<IntervalDiagnostic> out;
  for (auto& [j, values] : by_interval) {
    IntervalDiagnostic d;
    d.interval = j;
    d.n_rows = values.size();
    d.max = *std::max_element(values.begin(), values.end());
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    d.p99 = nearest_rank_percentile(values, 99.0);
    out.push_back(d);
  }
  return out;
}

}  // namespace tte
