#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "tte/errors.hpp"
#include "tte/estimators.hpp"
#include "tte/simgen.hpp"
#include "tte/trials.hpp"

using namespace tte;
using testing::subject;

namespace {

std::vector<TrialRow> rows_of(const std::vector<TrialRow>& all, int trial) {
  std::vector<TrialRow> out;
  for (const auto& r : all) {
    if (r.trial == trial) out.push_back(r);
  }
  return out;
}

ScenarioParams null_scenario() {
  ScenarioParams p = builtin_scenario(1);
  p.alpha_A = 0.0;
  p.gamma_L = 0.0;
  p.delta_A = 0.0;  // no path from treatment to the hazard through L
  return p;
}

const std::vector<double> kHorizons{1, 2, 3, 4, 5};

}  // namespace

TEST_CASE("trial expansion on hand cases") {
  const Cohort c = make_cohort({subject("treated", {1, 1, 1, 1, 1}, {0, 0, 0, 0, 0}, 5, 0),
                                subject("never", {0, 0, 0, 0, 0}, {1, 2, 3, 4, 5}, 5, 0),
                                subject("late", {0, 0, 1, 1, 1}, {0, 0, 0, 0, 0}, 5, 0),
                                subject("event", {0, 0, 0, 0}, {0, 0, 0, 0}, 3.4, 1)},
                               {"L"}, 5.0);
  const auto rows = expand_sequential_trials(c);
  auto of = [&](const std::string& id) {
    std::vector<TrialRow> out;
    std::size_t idx = 0;
    while (c.subjects[idx].id != id) ++idx;
    for (const auto& r : rows) {
      if (r.subject == idx) out.push_back(r);
    }
    return out;
  };

  SUBCASE("treated from visit 0 is an initiator of trial 0 only") {
    const auto r = of("treated");
    REQUIRE(r.size() == 5);
    for (std::size_t j = 0; j < r.size(); ++j) {
      CHECK(r[j].trial == 0);
      CHECK(r[j].initiator == 1);
      CHECK(r[j].follow_up == static_cast<int>(j));
      CHECK_FALSE(r[j].artificially_censored);
    }
  }
  SUBCASE("never treated appears in every trial without artificial censoring") {
    const auto r = of("never");
    std::set<int> trials;
    for (const auto& x : r) {
      trials.insert(x.trial);
      CHECK(x.initiator == 0);
      CHECK_FALSE(x.artificially_censored);
      CHECK_FALSE(x.event);
      CHECK(x.baseline[0] == x.trial + 1.0);
    }
    CHECK(trials == std::set<int>{0, 1, 2, 3, 4});
    for (int k = 0; k < 5; ++k) CHECK(rows_of(r, k).size() == static_cast<std::size_t>(5 - k));
  }
  SUBCASE("initiation at visit 2 censors earlier trials there") {
    const auto r = of("late");
    const auto t0 = rows_of(r, 0);
    REQUIRE(t0.size() == 2);
    CHECK_FALSE(t0[0].artificially_censored);
    CHECK(t0[1].artificially_censored);
    CHECK(t0[1].s_out == 2.0);
    const auto t1 = rows_of(r, 1);
    REQUIRE(t1.size() == 1);
    CHECK(t1[0].artificially_censored);
    CHECK(t1[0].s_in == 0.0);
    CHECK(t1[0].s_out == 1.0);
    const auto t2 = rows_of(r, 2);
    REQUIRE(t2.size() == 3);
    for (const auto& x : t2) CHECK(x.initiator == 1);
    CHECK(rows_of(r, 3).empty());
  }
  SUBCASE("event ends follow-up in every trial") {
    const auto r = of("event");
    const auto t0 = rows_of(r, 0);
    REQUIRE(t0.size() == 4);
    CHECK(t0.back().event);
    CHECK(std::abs(t0.back().s_out - 3.4) < 1e-12);
    const auto t3 = rows_of(r, 3);
    REQUIRE(t3.size() == 1);
    CHECK(t3[0].event);
    CHECK(std::abs(t3[0].s_out - 0.4) < 1e-12);
    CHECK(rows_of(r, 4).empty());
  }
  SUBCASE("max_trial limits the trials") {
    for (const auto& x : expand_sequential_trials(c, 1)) CHECK(x.trial <= 1);
  }
}

TEST_CASE("trial expansion invariants on scenario data") {
  const Cohort c = generate_cohort(builtin_scenario(1), 2000, 41).cohort;
  const auto rows = expand_sequential_trials(c);
  std::map<std::size_t, std::set<int>> initiated;
  for (const auto& r : rows) {
    const auto& s = c.subjects[r.subject];
    for (int m = 0; m < r.trial; ++m) REQUIRE(s.treatment(m) == 0);
    REQUIRE(s.t_end > r.trial);
    REQUIRE(r.s_in < r.s_out);
    REQUIRE(r.initiator == s.treatment(r.trial));
    REQUIRE(r.s_out + r.trial <= s.t_end + 1e-12);
    if (r.initiator == 1) initiated[r.subject].insert(r.trial);
  }
  for (const auto& [id, trials] : initiated) CHECK(trials.size() == 1);
  CHECK(initiated.size() <= c.size());
}

TEST_CASE("msm design encodes treatment history") {
  MsmDesign d;
  d.form = TreatmentForm::kPerVisit;
  d.n_visits = 3;
  d.baseline_covariates = {0};
  d.interaction = true;
  CHECK(d.width() == 5);
  CHECK(d.column_names({"L"}) == std::vector<std::string>{"A0", "A1", "A2", "L_0", "A:L"});
  CHECK(d.encode({1, 0, 1}, 2, {2.5}) == std::vector<double>{1, 0, 1, 2.5, 2.5});
  CHECK(d.encode({1, 0, 1}, 1, {2.5}) == std::vector<double>{1, 0, 0, 2.5, 0});
  CHECK_THROWS_AS(d.encode({1, 1, 1, 1}, 3, {0.0}), UsageError);
  d.form = TreatmentForm::kDuration;
  d.interaction = false;
  CHECK(d.encode({1, 0, 1}, 2, {2.5}) == std::vector<double>{2, 2.5});
  d.form = TreatmentForm::kCurrent;
  CHECK(d.encode({1, 0, 0}, 2, {2.5}) == std::vector<double>{0, 2.5});
  const CovariatePath path = d.regime_path(1, {0.5}, 3);
  REQUIRE(path.size() == 3);
  for (const auto& x : path) CHECK(x == std::vector<double>{1, 0.5});
}

TEST_CASE("standardization averages conditional curves") {
  HazardFit fit;
  fit.family = ModelFamily::kAalen;
  fit.design.form = TreatmentForm::kCurrent;
  fit.design.baseline_covariates = {0};
  fit.aalen.jump_times = {0.5};
  fit.aalen.increments.resize(1, 3);
  fit.aalen.increments << 0.0, -std::log(0.9), std::log(0.9 / 0.7);
  fit.aalen.cumulative = fit.aalen.increments;
  MsmSpec spec;

  SUBCASE("two strata with shares one quarter and three quarters") {
    const MarginalResults r = standardize(fit, spec, {{0.0}, {1.0}, {1.0}, {1.0}}, {1.0});
    REQUIRE(r.tau == std::vector<double>{1.0});
    CHECK(std::abs(r.s1[0] - 0.75) < 1e-12);
    CHECK(std::abs(r.s0[0] - (1.0 + 3.0 * 0.7 / 0.9) / 4.0) < 1e-12);
    CHECK(r.rd[0] == r.s1[0] - r.s0[0]);
    CHECK(r.population_size == 4);
  }
  SUBCASE("population of one equals its conditional curve") {
    const MarginalResults r = standardize(fit, spec, {{1.0}}, {1.0, 2.0});
    CHECK(std::abs(r.s1_at(1.0) - 0.7) < 1e-12);
    CHECK(std::abs(r.s1_at(2.0) - 0.7) < 1e-12);
  }
  SUBCASE("origin is reported when requested") {
    const MarginalResults r = standardize(fit, spec, {{1.0}}, {0.0, 1.0});
    REQUIRE(r.tau.front() == 0.0);
    CHECK(r.rd.front() == 0.0);
    CHECK(r.s1.front() == 1.0);
  }
  SUBCASE("empty conditioning set gives the fitted curve") {
    HazardFit marginal = fit;
    marginal.design.baseline_covariates.clear();
    marginal.aalen.increments.resize(1, 2);
    marginal.aalen.increments << 0.1, 0.2;
    marginal.aalen.cumulative = marginal.aalen.increments;
    const MarginalResults r = standardize(marginal, spec, {{3.0}, {-1.0}}, {1.0});
    CHECK(std::abs(r.s1[0] - std::exp(-0.3)) < 1e-15);
    CHECK(std::abs(r.s0[0] - std::exp(-0.1)) < 1e-15);
  }
  SUBCASE("covariate mismatch") {
    CHECK_THROWS_AS(standardize(fit, spec, {{}}, {1.0}), UsageError);
    CHECK_THROWS_AS(standardize(fit, spec, {}, {1.0}), UsageError);
  }
}

TEST_CASE("null simulation gives risk differences near zero") {
  const Cohort c = generate_cohort(null_scenario(), 50000, 42).cohort;
  for (Method m : {Method::kMsmIptw, Method::kMsmIptwL0, Method::kSequential}) {
    INFO(std::string(method_name(m)));
    const MarginalResults r = run_method(m, c, ModelFamily::kAalen, kHorizons).results;
    REQUIRE(r.tau == kHorizons);
    for (double rd : r.rd) CHECK(std::abs(rd) <= 0.02);
    for (std::size_t i = 1; i < r.tau.size(); ++i) {
      CHECK(r.s1[i] <= r.s1[i - 1]);
      CHECK(r.s0[i] <= r.s0[i - 1]);
    }
  }
}

TEST_CASE("an effect mediated through the covariate is recovered") {
  ScenarioParams p = null_scenario();
  p.delta_A = builtin_scenario(1).delta_A;
  const TruthCurves truth = generate_truth(p, 200000, kHorizons, 9);
  const Cohort c = generate_cohort(p, 50000, 48).cohort;
  for (Method m : {Method::kMsmIptw, Method::kMsmIptwL0, Method::kSequential}) {
    INFO(std::string(method_name(m)));
    const MarginalResults r = run_method(m, c, ModelFamily::kAalen, kHorizons).results;
    for (std::size_t i = 0; i < kHorizons.size(); ++i) CHECK(std::abs(r.rd[i] - truth.rd[i]) <= 0.02);
  }
  CHECK(truth.rd.back() > 0.03);
}

TEST_CASE("conditional and unconditional additive msms agree") {
  const Cohort c = generate_cohort(builtin_scenario(1), 5000, 43).cohort;
  const MarginalResults a = run_method(Method::kMsmIptw, c, ModelFamily::kAalen, kHorizons).results;
  const MarginalResults b = run_method(Method::kMsmIptwL0, c, ModelFamily::kAalen, kHorizons).results;
  for (std::size_t i = 0; i < kHorizons.size(); ++i) CHECK(std::abs(a.rd[i] - b.rd[i]) <= 0.015);
}

TEST_CASE("without switching the first trial is a baseline-adjusted analysis") {
  const Cohort source = generate_cohort(builtin_scenario(1), 2000, 44).cohort;
  std::vector<SubjectHistory> subjects = source.subjects;
  for (auto& s : subjects) {
    for (auto& v : s.visits) v.treatment = s.visits.front().treatment;
  }
  const Cohort c = make_cohort(std::move(subjects), source.covariate_names, source.tau_max);

  MsmSpec msm;
  msm.baseline_covariates = {0};
  PipelineOptions first;
  first.max_trial = 0;
  const PipelineRun seq = run_sequential_trials(c, msm, ipacw_spec(c), first);
  for (const auto& t : seq.weights.tracks) {
    for (double w : t.weight) CHECK(w == 1.0);
  }

  WeightModelSpec unit = iptw_spec(c, false);
  unit.numerator = unit.denominator;
  MsmSpec current = msm;
  current.form = TreatmentForm::kCurrent;
  const PipelineRun direct = run_msm_iptw(c, current, unit);
  for (std::size_t i = 0; i < seq.results.tau.size(); ++i) {
    CHECK(std::abs(seq.results.s1[i] - direct.results.s1[i]) < 1e-9);
    CHECK(std::abs(seq.results.s0[i] - direct.results.s0[i]) < 1e-9);
  }
}

TEST_CASE("pipelines reject unusable horizons") {
  const Cohort c = generate_cohort(builtin_scenario(1), 500, 45).cohort;
  MsmSpec msm;
  msm.horizons = {6.0};
  CHECK_THROWS_AS(run_msm_iptw(c, msm, iptw_spec(c, false)), UsageError);
  MsmSpec seq;
  seq.baseline_covariates = {0};
  PipelineOptions stratified;
  stratified.stratified_baseline = true;
  stratified.reference_trial = 1;
  CHECK_THROWS_AS(run_sequential_trials(c, seq, ipacw_spec(c), stratified), UsageError);
  seq.horizons = {1, 2, 3, 4};
  CHECK_NOTHROW(run_sequential_trials(c, seq, ipacw_spec(c), stratified));
}

TEST_CASE("homogeneity test") {
  SUBCASE("a single trial is an error") {
    const Cohort c = generate_cohort(builtin_scenario(1), 1000, 46).cohort;
    CHECK_THROWS_AS(test_trial_homogeneity(expand_sequential_trials(c, 0)), FitError);
  }
  auto rejection_rate = [](const ScenarioParams& p, std::size_t n, int reps, std::uint64_t seed) {
    int rejected = 0;
    for (int r = 0; r < reps; ++r) {
      const Cohort c = generate_cohort(p, n, seed + static_cast<std::uint64_t>(r)).cohort;
      const auto rows = expand_sequential_trials(c);
      const HomogeneityResult h = test_trial_homogeneity(rows, compute_ipacw(c, rows, ipacw_spec(c)));
      CHECK(h.df == static_cast<int>(h.trials.size()) - 1);
      rejected += h.p_value < 0.05;
    }
    return static_cast<double>(rejected) / reps;
  };
  SUBCASE("size under a common effect") {
    CHECK(rejection_rate(builtin_scenario(1), 1000, 200, 1000) <= 0.10);
  }
  SUBCASE("power against a trial-dependent effect") {
    ScenarioParams p = builtin_scenario(1);
    p.late_effect_visit = 2;
    p.late_effect_factor = 0.5;
    CHECK(rejection_rate(p, 5000, 200, 5000) > 0.5);
  }
}

TEST_CASE("bootstrap intervals") {
  const Cohort c = generate_cohort(builtin_scenario(1), 300, 47).cohort;
  const MsmSpec msm = method_msm_spec(Method::kMsmIptwL0, ModelFamily::kAalen, kHorizons);
  const WeightModelSpec w = method_weight_spec(Method::kMsmIptwL0, c);

  SUBCASE("two replicates give distinct curves") {
    BootstrapOptions b;
    b.replicates = 2;
    b.seed = 3;
    const MarginalResults r = bootstrap_ci(c, Pipeline::kMsmIptw, msm, w, {}, b);
    CHECK(r.n_bootstrap == 2);
    REQUIRE(r.rd_lo.size() == r.tau.size());
    bool distinct = false;
    for (std::size_t i = 0; i < r.tau.size(); ++i) {
      CHECK(r.rd_lo[i] <= r.rd_hi[i]);
      distinct = distinct || r.rd_lo[i] < r.rd_hi[i];
    }
    CHECK(distinct);
  }
  SUBCASE("deterministic given the seed and independent of threads") {
    BootstrapOptions b;
    b.replicates = 8;
    b.seed = 11;
    const MarginalResults one = bootstrap_ci(c, Pipeline::kSequential,
                                             method_msm_spec(Method::kSequential, ModelFamily::kAalen, kHorizons),
                                             method_weight_spec(Method::kSequential, c), {}, b);
    b.threads = 3;
    const MarginalResults three = bootstrap_ci(c, Pipeline::kSequential,
                                               method_msm_spec(Method::kSequential, ModelFamily::kAalen, kHorizons),
                                               method_weight_spec(Method::kSequential, c), {}, b);
    CHECK(one.rd_lo == three.rd_lo);
    CHECK(one.rd_hi == three.rd_hi);
  }
  SUBCASE("identical subjects within each arm give zero width") {
    std::vector<SubjectHistory> subjects;
    for (int i = 0; i < 20; ++i) {
      subjects.push_back(i % 2 ? subject(std::to_string(i), {1}, {0.0}, 0.5, 1)
                               : subject(std::to_string(i), {0}, {0.0}, 1.0, 0));
    }
    const Cohort d = make_cohort(std::move(subjects), {"L"}, 1.0);
    MsmSpec one;
    one.horizons = {1.0};
    BootstrapOptions b;
    b.replicates = 20;
    b.seed = 5;
    const MarginalResults r = bootstrap_ci(d, Pipeline::kMsmIptw, one, iptw_spec(d, false), {}, b);
    CHECK(std::abs(r.rd[0] - (std::exp(-1.0) - 1.0)) < 1e-12);
    CHECK(std::abs(r.rd_hi[0] - r.rd_lo[0]) < 1e-12);
  }
  SUBCASE("too few replicates") {
    BootstrapOptions b;
    b.replicates = 1;
    CHECK_THROWS_AS(bootstrap_ci(c, Pipeline::kMsmIptw, msm, w, {}, b), UsageError);
  }
}

TEST_CASE("type 7 quantiles interpolate order statistics") {
  CHECK(type7_quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(type7_quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(type7_quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(type7_quantile({4, 1, 3, 2}, 0.25) == 1.75);
  CHECK(type7_quantile({7}, 0.3) == 7.0);
  CHECK_THROWS_AS(type7_quantile({}, 0.5), UsageError);
  CHECK_THROWS_AS(type7_quantile({1}, 1.5), UsageError);
}
