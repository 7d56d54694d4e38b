#pragma once

#include <random>
#include <string>
#include <vector>

#include "tte/cohort.hpp"
#include "tte/estimators.hpp"
#include "tte/oracle.hpp"

namespace tte::testing {

// Subject with one covariate L; treatment and covariate given per visit.
inline SubjectHistory subject(const std::string& id, const std::vector<int>& a, const std::vector<double>& l,
                              double t_end, int status) {
  SubjectHistory s;
  s.id = id;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s.visits.push_back(VisitRecord{static_cast<int>(k), a[k], {l[k]}});
  }
  s.t_end = t_end;
  s.status = status;
  return s;
}

// Two-period records as a cohort on [0, 2]: an event in period j happens at
// j + 0.5, survivors of both periods are censored at 2.
inline Cohort two_period_cohort(const std::vector<oracle::TwoPeriodRecord>& records) {
  std::vector<SubjectHistory> subjects;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.y1 == 1) {
      subjects.push_back(subject(std::to_string(i), {r.a0}, {double(r.l0)}, 0.5, 1));
    } else {
      subjects.push_back(subject(std::to_string(i), {r.a0, r.a1}, {double(r.l0), double(r.l1)},
                                 r.y2 == 1 ? 1.5 : 2.0, r.y2));
    }
  }
  return make_cohort(std::move(subjects), {"L"}, 2.0);
}

// Records reproducing a lattice leaf by leaf.
inline std::vector<oracle::TwoPeriodRecord> lattice_records(const oracle::TreeCounts& c) {
  std::vector<oracle::TwoPeriodRecord> out;
  for (int l0 = 0; l0 < 2; ++l0) {
    for (int a0 = 0; a0 < 2; ++a0) {
      for (long i = 0; i < c.y1[l0][a0][1]; ++i) out.push_back({l0, a0, 1, -1, -1, -1});
      for (int l1 = 0; l1 < 2; ++l1) {
        for (int a1 = 0; a1 < 2; ++a1) {
          for (int y2 = 0; y2 < 2; ++y2) {
            for (long i = 0; i < c.y2[l0][a0][l1][a1][y2]; ++i) out.push_back({l0, a0, 0, l1, a1, y2});
          }
        }
      }
    }
  }
  return out;
}

// Recomputes every parent count from the leaves y1[..][1] and y2[..].
inline void rebuild_parents(oracle::TreeCounts& c) {
  oracle::TreeCounts out;
  for (int i = 0; i < 2; ++i) {
    for (int a = 0; a < 2; ++a) {
      out.y1[i][a][1] = c.y1[i][a][1];
      for (int j = 0; j < 2; ++j) {
        for (int b = 0; b < 2; ++b) {
          for (int y = 0; y < 2; ++y) {
            out.y2[i][a][j][b][y] = c.y2[i][a][j][b][y];
            out.l1a1[i][a][j][b] += c.y2[i][a][j][b][y];
          }
          out.l1[i][a][j] += out.l1a1[i][a][j][b];
        }
        out.y1[i][a][0] += out.l1[i][a][j];
      }
      out.l0a0[i][a] = out.y1[i][a][0] + out.y1[i][a][1];
      out.l0[i] += out.l0a0[i][a];
    }
    out.n += out.l0[i];
  }
  c = out;
}

// Random lattice consistent with absorbing treatment: nobody stops after A0 = 1.
inline oracle::TreeCounts absorbing_lattice(std::mt19937_64& rng, int min_leaf = 1, int max_leaf = 30) {
  oracle::TreeCounts c = oracle::random_lattice(rng, min_leaf, max_leaf);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      c.y2[i][1][j][0][0] = 0;
      c.y2[i][1][j][0][1] = 0;
    }
  }
  rebuild_parents(c);
  return c;
}

// MSM-IPTW with saturated per-visit treatment models, unstabilized weights and
// the product-limit transform of a saturated additive MSM.
inline MarginalResults saturated_msm(const Cohort& cohort) {
  MsmSpec msm;
  msm.family = ModelFamily::kAalen;
  msm.form = TreatmentForm::kPerVisit;
  msm.n_visits = 2;
  msm.horizons = {1.0, 2.0};
  msm.transform = SurvivalTransform::kProductLimit;
  WeightModelSpec w;
  w.pooled = false;
  w.denominator = [](const SubjectHistory& s, int, int visit) {
    const double l0 = s.covariates(0)[0];
    if (visit == 0) return std::vector<double>{1.0, l0};
    const double l1 = s.covariates(1)[0];
    return std::vector<double>{1.0, l0, l1, l0 * l1};
  };
  return run_msm_iptw(cohort, msm, w).results;
}

// First emulated trial only, saturated in initiator and baseline covariate,
// with saturated artificial-censoring models.
inline MarginalResults saturated_sequential(const Cohort& cohort) {
  MsmSpec msm;
  msm.family = ModelFamily::kAalen;
  msm.baseline_covariates = {0};
  msm.treatment_by_baseline = true;
  msm.horizons = {1.0, 2.0};
  msm.transform = SurvivalTransform::kProductLimit;
  WeightModelSpec w;
  w.pooled = false;
  w.numerator = [](const SubjectHistory& s, int origin, int) {
    return std::vector<double>{1.0, s.covariates(origin)[0]};
  };
  w.denominator = [](const SubjectHistory& s, int origin, int visit) {
    const double lo = s.covariates(origin)[0];
    const double lv = s.covariates(visit)[0];
    return std::vector<double>{1.0, lo, lv, lo * lv};
  };
  PipelineOptions options;
  options.max_trial = 0;
  return run_sequential_trials(cohort, msm, w, options).results;
}

}  // namespace tte::testing
