#pragma once

#include <cstddef>
#include <vector>

#include "tte/cohort.hpp"

namespace tte {

// One follow-up interval of one subject in the trial starting at visit
// `trial`. Follow-up time is measured from the trial start.
struct TrialRow {
  std::size_t subject = 0;  // index into the cohort
  int trial = 0;
  int initiator = 0;              // treatment at the trial's baseline visit
  std::vector<double> baseline;   // covariates at the trial's baseline visit
  int follow_up = 0;              // interval index j: [j, j+1) after the start
  double s_in = 0.0;
  double s_out = 0.0;
  bool event = false;
  bool artificially_censored = false;  // follow-up stops at s_out on deviation
  double weight = 1.0;
};

// Trials start at visits 0..max_trial (all visits when max_trial < 0).
// Rows are ordered by subject, then trial, then follow-up.
std::vector<TrialRow> expand_sequential_trials(const Cohort& cohort, int max_trial = -1);

}  // namespace tte
