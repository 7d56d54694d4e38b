#include "tte/survfit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "linalg.hpp"
#include "tte/errors.hpp"

namespace tte {
namespace {

// Walks distinct event times in ascending order while maintaining the risk
// set {rows : t_in < t <= t_out}.
class RiskSetSweep {
 public:
  RiskSetSweep(const std::vector<IntervalRow>& rows, const std::vector<std::size_t>& subset)
      : rows_(rows), by_entry_(subset), by_exit_(subset) {
    std::sort(by_entry_.begin(), by_entry_.end(),
              [&](std::size_t a, std::size_t b) { return rows[a].t_in < rows[b].t_in; });
    std::sort(by_exit_.begin(), by_exit_.end(),
              [&](std::size_t a, std::size_t b) { return rows[a].t_out < rows[b].t_out; });
    for (std::size_t i : subset) {
      if (rows[i].event && rows[i].weight > 0.0) events_.push_back(i);
    }
    std::sort(events_.begin(), events_.end(),
              [&](std::size_t a, std::size_t b) { return rows[a].t_out < rows[b].t_out; });
  }

  bool done() const { return next_event_ >= events_.size(); }

  // Advances to the next event time; calls enter/leave for rows changing
  // membership and returns the event rows at that time.
  template <class Enter, class Leave>
  std::pair<double, std::vector<std::size_t>> advance(Enter&& enter, Leave&& leave) {
    const double t = rows_[events_[next_event_]].t_out;
    while (entry_ < by_entry_.size() && rows_[by_entry_[entry_]].t_in < t) enter(by_entry_[entry_++]);
    while (exit_ < by_exit_.size() && rows_[by_exit_[exit_]].t_out < t) leave(by_exit_[exit_++]);
    std::vector<std::size_t> at;
    while (next_event_ < events_.size() && rows_[events_[next_event_]].t_out == t) {
      at.push_back(events_[next_event_++]);
    }
    return {t, std::move(at)};
  }

 private:
  const std::vector<IntervalRow>& rows_;
  std::vector<std::size_t> by_entry_;
  std::vector<std::size_t> by_exit_;
  std::vector<std::size_t> events_;
  std::size_t entry_ = 0;
  std::size_t exit_ = 0;
  std::size_t next_event_ = 0;
};

void check_rows(const std::vector<IntervalRow>& rows, const char* who) {
  if (rows.empty()) throw UsageError(std::string(who) + ": no rows");
  const std::size_t p = rows.front().x.size();
  for (const auto& r : rows) {
    if (!(r.t_in < r.t_out)) throw UsageError(std::string(who) + ": interval with t_in >= t_out");
    if (r.x.size() != p) throw UsageError(std::string(who) + ": ragged covariate rows");
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) {
      throw UsageError(std::string(who) + ": negative or non-finite weight");
    }
  }
}

std::map<int, std::vector<std::size_t>> by_stratum(const std::vector<IntervalRow>& rows) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) groups[rows[i].stratum].push_back(i);
  return groups;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct CoxState {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

CoxState cox_state(const std::vector<IntervalRow>& rows, const std::map<int, std::vector<std::size_t>>& strata,
                   const Eigen::VectorXd& mean, const Eigen::VectorXd& beta) {
  const Eigen::Index p = beta.size();
  CoxState st;
  st.score = Eigen::VectorXd::Zero(p);
  st.info = Eigen::MatrixXd::Zero(p, p);
  std::vector<double> risk(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    risk[i] = rows[i].weight * std::exp(beta.dot(as_vector(rows[i].x) - mean));
  }
  for (const auto& [id, subset] : strata) {
    RiskSetSweep sweep(rows, subset);
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    std::size_t members = 0;
    auto update = [&](std::size_t i, double sign) {
      const Eigen::VectorXd xc = as_vector(rows[i].x) - mean;
      s0 += sign * risk[i];
      s1.noalias() += sign * risk[i] * xc;
      s2.noalias() += sign * risk[i] * xc * xc.transpose();
    };
    while (!sweep.done()) {
      auto [t, events] = sweep.advance([&](std::size_t i) { update(i, 1.0); ++members; },
                                       [&](std::size_t i) {
                                         update(i, -1.0);
                                         if (--members == 0) {
                                           s0 = 0.0;
                                           s1.setZero();
                                           s2.setZero();
                                         }
                                       });
      double d = 0.0;
      for (std::size_t e : events) {
        const Eigen::VectorXd xc = as_vector(rows[e].x) - mean;
        d += rows[e].weight;
        st.score.noalias() += rows[e].weight * xc;
        st.loglik += rows[e].weight * beta.dot(xc);
      }
      if (!(s0 > 0.0)) throw FitError("cox fit: empty risk set at an event time");
      const Eigen::VectorXd xbar = s1 / s0;
      st.score.noalias() -= d * xbar;
      st.info.noalias() += d * (s2 / s0 - xbar * xbar.transpose());
      st.loglik -= d * std::log(s0);
    }
  }
  return st;
}

}  // namespace

double BreslowBaseline::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return cumulative[static_cast<std::size_t>(it - times.begin()) - 1];
}

const BreslowBaseline& CoxFit::baseline(int stratum) const {
  for (const auto& b : baselines) {
    if (b.stratum == stratum) return b;
  }
  throw UsageError("cox fit: no baseline for stratum " + std::to_string(stratum));
}

Eigen::VectorXd AalenFit::cumulative_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return Eigen::VectorXd::Zero(cumulative.cols());
  return cumulative.row((it - jump_times.begin()) - 1).transpose();
}

double SurvivalCurve::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

SurvivalCurve kaplan_meier(const std::vector<IntervalRow>& rows) {
  if (rows.empty()) throw UsageError("kaplan_meier: empty input");
  for (const auto& r : rows) {
    if (!(r.t_in < r.t_out)) throw UsageError("kaplan_meier: interval with t_in >= t_out");
  }
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  RiskSetSweep sweep(rows, all);
  SurvivalCurve curve;
  curve.times.push_back(0.0);
  curve.survival.push_back(1.0);
  double at_risk = 0.0;
  std::size_t members = 0;
  double s = 1.0;
  while (!sweep.done()) {
    auto [t, events] = sweep.advance(
        [&](std::size_t i) {
          at_risk += rows[i].weight;
          ++members;
        },
        [&](std::size_t i) {
          at_risk -= rows[i].weight;
          if (--members == 0) at_risk = 0.0;
        });
    double d = 0.0;
    for (std::size_t e : events) d += rows[e].weight;
    if (at_risk > 0.0) s *= std::max(0.0, (at_risk - d) / at_risk);
    curve.times.push_back(t);
    curve.survival.push_back(s);
  }
  return curve;
}

SurvivalCurve kaplan_meier(const std::vector<double>& times, const std::vector<int>& status) {
  if (times.size() != status.size()) throw UsageError("kaplan_meier: length mismatch");
  std::vector<IntervalRow> rows(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    rows[i].subject = i;
    rows[i].t_in = 0.0;
    rows[i].t_out = times[i];
    rows[i].event = status[i] == 1;
  }
  return kaplan_meier(rows);
}

CoxFit fit_weighted_cox(const std::vector<IntervalRow>& rows, const CoxOptions& options) {
  check_rows(rows, "cox fit");
  const Eigen::Index p = static_cast<Eigen::Index>(rows.front().x.size());
  if (p == 0) throw UsageError("cox fit: no covariates");
  bool any_event = false;
  double wsum = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const auto& r : rows) {
    any_event = any_event || (r.event && r.weight > 0.0);
    wsum += r.weight;
    mean.noalias() += r.weight * as_vector(r.x);
  }
  if (!any_event) throw FitError("cox fit: no events");
  mean /= wsum;
  const auto strata = by_stratum(rows);

  CoxFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  CoxState st = cox_state(rows, strata, mean, beta);
  const Eigen::MatrixXd info_at_zero = st.info;
  {
    // A column whose information is negligible against its overall variance
    // never varies within a risk set at an event time.
    double event_weight = 0.0;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(p);
    for (const auto& r : rows) {
      if (r.event) event_weight += r.weight;
      var.noalias() += r.weight * (as_vector(r.x) - mean).cwiseAbs2();
    }
    var /= wsum;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(st.info(j, j) > 1e-10 * event_weight * var[j])) {
        throw SingularDesignError("cox fit: column " + std::to_string(j) + " does not vary within any risk set",
                                  static_cast<std::size_t>(j));
      }
    }
    Eigen::VectorXd d = st.info.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    detail::CheckedCholesky chol(d.asDiagonal() * st.info * d.asDiagonal(), 1e-10);
    if (!chol.ok()) {
      throw SingularDesignError("cox fit: design is rank-deficient on the risk sets (column " +
                                    std::to_string(*chol.dependent_column()) + ")",
                                *chol.dependent_column());
    }
  }
  bool settled = false;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.n_iterations = iter;
    if (st.score.cwiseAbs().maxCoeff() <= options.score_tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd step = st.info.ldlt().solve(st.score);
    if (!step.allFinite()) break;
    double factor = 1.0;
    CoxState next;
    Eigen::VectorXd candidate;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      candidate = beta + factor * step;
      next = cox_state(rows, strata, mean, candidate);
      if (std::isfinite(next.loglik) && next.loglik >= st.loglik - 1e-12 * std::abs(st.loglik)) {
        improved = true;
        break;
      }
      factor *= 0.5;
    }
    if (!improved) {
      // No further progress possible in floating point; accept if the score
      // is negligible relative to the total weight.
      fit.converged = st.score.cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, wsum);
      break;
    }
    const double change = std::abs(next.loglik - st.loglik);
    beta = candidate;
    st = std::move(next);
    if (beta.cwiseAbs().maxCoeff() > options.separation_threshold) break;
    if (change <= 1e-15 * std::max(1.0, std::abs(st.loglik))) {
      if (settled && st.score.cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, wsum)) {
        fit.converged = true;
        break;
      }
      settled = true;
    }
  }
  if (beta.cwiseAbs().maxCoeff() > options.separation_threshold) {
    throw SeparationError("cox fit: monotone likelihood (a covariate level has no events)");
  }
  if (!fit.converged) throw ConvergenceError("cox fit: Newton-Raphson did not converge");
  if (detail::information_ratio(st.info, info_at_zero) < options.information_collapse) {
    throw SeparationError("cox fit: monotone likelihood (information collapsed)");
  }

  fit.log_hazard_ratios = beta;
  fit.information = st.info;
  fit.log_partial_likelihood = st.loglik;

  // Breslow baseline at x = 0 (undo the centering).
  const double shift = std::exp(-beta.dot(mean));
  for (const auto& [id, subset] : strata) {
    BreslowBaseline base;
    base.stratum = id;
    RiskSetSweep sweep(rows, subset);
    double s0 = 0.0;
    std::size_t members = 0;
    auto risk = [&](std::size_t i) { return rows[i].weight * std::exp(beta.dot(as_vector(rows[i].x) - mean)); };
    double cum = 0.0;
    while (!sweep.done()) {
      auto [t, events] = sweep.advance(
          [&](std::size_t i) {
            s0 += risk(i);
            ++members;
          },
          [&](std::size_t i) {
            s0 -= risk(i);
            if (--members == 0) s0 = 0.0;
          });
      double d = 0.0;
      for (std::size_t e : events) d += rows[e].weight;
      const double inc = d / s0 * shift;
      cum += inc;
      base.times.push_back(t);
      base.increments.push_back(inc);
      base.cumulative.push_back(cum);
    }
    fit.baselines.push_back(std::move(base));
  }
  return fit;
}

Eigen::MatrixXd cox_robust_variance(const std::vector<IntervalRow>& rows, const CoxFit& fit) {
  check_rows(rows, "cox robust variance");
  const Eigen::VectorXd& beta = fit.log_hazard_ratios;
  const Eigen::Index p = beta.size();
  std::map<std::size_t, Eigen::VectorXd> cluster;
  for (const auto& [id, subset] : by_stratum(rows)) {
    RiskSetSweep sweep(rows, subset);
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    std::size_t members = 0;
    auto risk = [&](std::size_t i) { return std::exp(beta.dot(as_vector(rows[i].x))); };
    std::vector<double> times;
    std::vector<double> c0{0.0};                         // cumulative dLambda
    std::vector<Eigen::VectorXd> c1{Eigen::VectorXd::Zero(p)};  // cumulative xbar dLambda
    std::map<std::size_t, Eigen::VectorXd> event_part;
    while (!sweep.done()) {
      auto [t, events] = sweep.advance(
          [&](std::size_t i) {
            const double r = rows[i].weight * risk(i);
            s0 += r;
            s1.noalias() += r * as_vector(rows[i].x);
            ++members;
          },
          [&](std::size_t i) {
            const double r = rows[i].weight * risk(i);
            s0 -= r;
            s1.noalias() -= r * as_vector(rows[i].x);
            if (--members == 0) {
              s0 = 0.0;
              s1.setZero();
            }
          });
      const Eigen::VectorXd xbar = s1 / s0;
      double d = 0.0;
      for (std::size_t e : events) {
        d += rows[e].weight;
        event_part[e] = as_vector(rows[e].x) - xbar;
      }
      const double dl = d / s0;
      times.push_back(t);
      c0.push_back(c0.back() + dl);
      c1.push_back(c1.back() + xbar * dl);
    }
    auto index_at = [&](double t) {
      return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    };
    for (std::size_t i : subset) {
      const auto& r = rows[i];
      if (r.weight == 0.0) continue;
      const std::size_t a = index_at(r.t_in);
      const std::size_t b = index_at(r.t_out);
      const Eigen::VectorXd x = as_vector(r.x);
      Eigen::VectorXd u = -risk(i) * (x * (c0[b] - c0[a]) - (c1[b] - c1[a]));
      if (const auto it = event_part.find(i); it != event_part.end()) u += it->second;
      u *= r.weight;
      auto [slot, inserted] = cluster.try_emplace(r.subject, Eigen::VectorXd::Zero(p));
      slot->second += u;
    }
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [id, u] : cluster) meat.noalias() += u * u.transpose();
  const Eigen::MatrixXd bread = fit.information.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  return bread * meat * bread;
}

AalenFit fit_weighted_aalen(const std::vector<IntervalRow>& rows, const AalenOptions& options) {
  check_rows(rows, "aalen fit");
  const Eigen::Index q = static_cast<Eigen::Index>(rows.front().x.size());
  const Eigen::Index p = q + (options.add_intercept ? 1 : 0);
  if (p == 0) throw UsageError("aalen fit: empty design");
  auto design = [&](std::size_t i) {
    Eigen::VectorXd x(p);
    if (options.add_intercept) x[0] = 1.0;
    x.tail(q) = as_vector(rows[i].x);
    return x;
  };

  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  RiskSetSweep sweep(rows, all);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  std::vector<long> nonzero(static_cast<std::size_t>(p), 0);
  std::size_t members = 0;
  auto update = [&](std::size_t i, double sign) {
    if (rows[i].weight == 0.0) return;
    const Eigen::VectorXd x = design(i);
    m.noalias() += sign * rows[i].weight * x * x.transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (x[j] != 0.0) nonzero[static_cast<std::size_t>(j)] += sign > 0 ? 1 : -1;
    }
  };

  AalenFit fit;
  fit.has_intercept = options.add_intercept;
  std::vector<Eigen::VectorXd> increments;
  while (!sweep.done()) {
    auto [t, events] = sweep.advance(
        [&](std::size_t i) {
          update(i, 1.0);
          ++members;
        },
        [&](std::size_t i) {
          update(i, -1.0);
          if (--members == 0) m.setZero();
        });
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (nonzero[static_cast<std::size_t>(j)] > 0) active.push_back(j);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (std::size_t e : events) rhs.noalias() += rows[e].weight * design(e);
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd sub(k, k);
    Eigen::VectorXd sub_rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      sub_rhs[a] = rhs[active[a]];
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = m(active[a], active[b]);
    }
    detail::CheckedCholesky chol(sub, options.rank_tolerance);
    fit.jump_times.push_back(t);
    Eigen::VectorXd inc = Eigen::VectorXd::Zero(p);
    if (k == 0 || !chol.ok()) {
      ++fit.n_skipped;
      fit.skipped_times.push_back(t);
    } else {
      const Eigen::VectorXd sol = chol.solve(sub_rhs);
      for (Eigen::Index a = 0; a < k; ++a) inc[active[a]] = sol[a];
    }
    increments.push_back(std::move(inc));
  }
  if (fit.jump_times.empty()) throw FitError("aalen fit: no events");
  if (fit.n_skipped == fit.jump_times.size()) throw FitError("aalen fit: every event time was rank-deficient");
  const auto n = static_cast<Eigen::Index>(increments.size());
  fit.increments.resize(n, p);
  fit.cumulative.resize(n, p);
  Eigen::VectorXd running = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.increments.row(i) = increments[static_cast<std::size_t>(i)].transpose();
    running += increments[static_cast<std::size_t>(i)];
    fit.cumulative.row(i) = running.transpose();
  }
  return fit;
}

namespace {

template <class Contribution>
SurvivalCurve evaluate_curve(const std::vector<double>& jumps, Contribution&& contribution,
                             std::size_t path_length, std::vector<double> horizons,
                             SurvivalTransform transform, bool include_jump_times) {
  for (double h : horizons) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw UsageError("survival: horizons must be finite and >= 0");
  }
  const double max_h = horizons.empty() ? 0.0 : *std::max_element(horizons.begin(), horizons.end());
  const auto needed = static_cast<std::size_t>(std::ceil(max_h));
  if (path_length < needed) throw UsageError("survival: covariate path does not cover the horizons");
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), horizons.begin(), horizons.end());
  if (include_jump_times) {
    for (double t : jumps) {
      if (t > max_h) break;
      grid.push_back(t);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  SurvivalCurve curve;
  curve.extrapolated = jumps.empty() || max_h > jumps.back();
  double cum = 0.0;
  double product = 1.0;
  std::size_t j = 0;
  for (double g : grid) {
    while (j < jumps.size() && jumps[j] <= g) {
      const double t = jumps[j];
      const auto k = static_cast<std::size_t>(std::max(0.0, std::ceil(t) - 1.0));
      const double c = contribution(j, k);
      cum += c;
      product *= 1.0 - c;
      ++j;
    }
    double s = transform == SurvivalTransform::kExponential ? std::exp(-cum) : product;
    if (s > 1.0 || s < 0.0 || !std::isfinite(s)) {
      ++curve.n_clamped;
      s = std::isfinite(s) ? std::clamp(s, 0.0, 1.0) : 0.0;
    }
    if (!curve.survival.empty() && s > curve.survival.back()) ++curve.n_increases;
    curve.times.push_back(g);
    curve.survival.push_back(s);
  }
  return curve;
}


// Exponential transform evaluated only at the horizons: the cumulative hazard
// is linear in the interval increments, so per-jump work is unnecessary.
template <class IntervalHazard>
SurvivalCurve evaluate_at_horizons(IntervalHazard&& interval_hazard, std::size_t path_length,
                                   std::vector<double> horizons, double last_jump) {
  for (double h : horizons) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw UsageError("survival: horizons must be finite and >= 0");
  }
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), horizons.begin(), horizons.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (path_length < static_cast<std::size_t>(std::ceil(grid.back()))) {
    throw UsageError("survival: covariate path does not cover the horizons");
  }
  SurvivalCurve curve;
  curve.extrapolated = grid.back() > last_jump;
  for (double g : grid) {
    double cum = 0.0;
    for (std::size_t k = 0; static_cast<double>(k) < g; ++k) {
      cum += interval_hazard(k, static_cast<double>(k), std::min(static_cast<double>(k + 1), g));
    }
    double s = std::exp(-cum);
    if (s > 1.0 || !std::isfinite(s)) {
      ++curve.n_clamped;
      s = std::isfinite(s) ? 1.0 : 0.0;
    }
    if (!curve.survival.empty() && s > curve.survival.back()) ++curve.n_increases;
    curve.times.push_back(g);
    curve.survival.push_back(s);
  }
  return curve;
}

}  // namespace

SurvivalCurve survival_from_cox(const CoxFit& fit, const CovariatePath& path, const std::vector<double>& horizons,
                                int stratum, SurvivalTransform transform, bool include_jump_times) {
  const auto& base = fit.baseline(stratum);
  std::vector<double> risk(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (static_cast<Eigen::Index>(path[k].size()) != fit.log_hazard_ratios.size()) {
      throw UsageError("survival_from_cox: covariate width mismatch");
    }
    risk[k] = std::exp(fit.log_hazard_ratios.dot(as_vector(path[k])));
  }
  if (!include_jump_times && transform == SurvivalTransform::kExponential) {
    return evaluate_at_horizons(
        [&](std::size_t k, double a, double b) { return risk[k] * (base.at(b) - base.at(a)); }, path.size(),
        horizons, base.times.empty() ? 0.0 : base.times.back());
  }
  return evaluate_curve(
      base.times, [&](std::size_t j, std::size_t k) { return risk.at(k) * base.increments[j]; }, path.size(),
      horizons, transform, include_jump_times);
}

SurvivalCurve survival_from_aalen(const AalenFit& fit, const CovariatePath& path,
                                  const std::vector<double>& horizons, SurvivalTransform transform,
                                  bool include_jump_times) {
  const Eigen::Index p = fit.width();
  std::vector<Eigen::VectorXd> x(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    const Eigen::Index q = static_cast<Eigen::Index>(path[k].size());
    if (q + (fit.has_intercept ? 1 : 0) != p) throw UsageError("survival_from_aalen: covariate width mismatch");
    x[k].resize(p);
    if (fit.has_intercept) x[k][0] = 1.0;
    x[k].tail(q) = as_vector(path[k]);
  }
  if (!include_jump_times && transform == SurvivalTransform::kExponential) {
    return evaluate_at_horizons(
        [&](std::size_t k, double a, double b) { return (fit.cumulative_at(b) - fit.cumulative_at(a)).dot(x[k]); },
        path.size(), horizons, fit.jump_times.empty() ? 0.0 : fit.jump_times.back());
  }
  return evaluate_curve(
      fit.jump_times, [&](std::size_t j, std::size_t k) { return fit.increments.row(static_cast<Eigen::Index>(j)).dot(x.at(k)); },
      path.size(), horizons, transform, include_jump_times);
}

}  // namespace tte
