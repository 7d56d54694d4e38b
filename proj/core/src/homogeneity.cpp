#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "linalg.hpp"
#include "tte/errors.hpp"
#include "tte/estimators.hpp"

namespace tte {

HomogeneityResult test_trial_homogeneity(const std::vector<TrialRow>& trial_rows) {
  std::map<int, std::pair<bool, bool>> events;  // trial -> (non-initiator event, initiator event)
  for (const auto& r : trial_rows) {
    if (!r.event || r.weight <= 0.0) continue;
    auto& e = events[r.trial];
    (r.initiator ? e.second : e.first) = true;
  }
  HomogeneityResult result;
  for (const auto& [trial, e] : events) {
    if (e.first && e.second) result.trials.push_back(trial);
  }
  if (result.trials.size() < 2) throw FitError("homogeneity test: fewer than two trials with events in both arms");
  const std::set<int> tested(result.trials.begin(), result.trials.end());

  std::vector<IntervalRow> rows;
  for (const auto& tr : trial_rows) {
    if (!tested.count(tr.trial)) continue;
    IntervalRow r;
    r.subject = tr.subject;
    r.t_in = tr.s_in;
    r.t_out = tr.s_out;
    r.event = tr.event;
    r.weight = tr.weight;
    r.stratum = tr.trial;
    r.x.push_back(tr.initiator);
    r.x.insert(r.x.end(), tr.baseline.begin(), tr.baseline.end());
    for (std::size_t t = 1; t < result.trials.size(); ++t) {
      r.x.push_back(tr.trial == result.trials[t] ? static_cast<double>(tr.initiator) : 0.0);
    }
    rows.push_back(std::move(r));
  }
  const CoxFit fit = fit_weighted_cox(rows);
  const Eigen::MatrixXd v = cox_robust_variance(rows, fit);
  const Eigen::Index q = static_cast<Eigen::Index>(result.trials.size()) - 1;
  const Eigen::VectorXd b = fit.log_hazard_ratios.tail(q);
  const Eigen::MatrixXd vb = v.bottomRightCorner(q, q);
  detail::CheckedCholesky chol(vb, 1e-12);
  if (!chol.ok()) throw FitError("homogeneity test: singular robust variance of the interaction terms");
  result.statistic = b.dot(chol.solve(b));
  result.df = static_cast<int>(q);
  boost::math::chi_squared dist(static_cast<double>(q));
  result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
  return result;
}

HomogeneityResult test_trial_homogeneity(std::vector<TrialRow> rows, const WeightSeries& weights) {
  std::map<std::pair<std::size_t, int>, const WeightTrack*> index;
  for (const auto& t : weights.tracks) index[{t.subject, t.trial}] = &t;
  for (auto& r : rows) {
    const auto it = index.find({r.subject, r.trial});
    if (it == index.end()) throw UsageError("homogeneity test: trial row without a weight track");
    r.weight = it->second->weight.at(static_cast<std::size_t>(r.follow_up));
  }
  return test_trial_homogeneity(rows);
}

}  // namespace tte
