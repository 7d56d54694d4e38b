#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace tte::oracle {

// Two-period binary data: L0, A0, Y1 and, for survivors (y1 == 0), L1, A1, Y2.
// Unobserved second-period fields are -1.
struct TwoPeriodRecord {
  int l0 = 0;
  int a0 = 0;
  int y1 = 0;
  int l1 = -1;
  int a1 = -1;
  int y2 = -1;
};

// Count lattice of the causal tree. Index order follows the path:
// l0, a0, (y1), l1, a1, (y2); second-period counts are among Y1 = 0.
struct TreeCounts {
  long n = 0;
  long l0[2] = {};
  long l0a0[2][2] = {};
  long y1[2][2][2] = {};            // [l0][a0][y1]
  long l1[2][2][2] = {};            // [l0][a0][l1]
  long l1a1[2][2][2][2] = {};       // [l0][a0][l1][a1]
  long y2[2][2][2][2][2] = {};      // [l0][a0][l1][a1][y2]

  // Throws DataError unless every level sums to its parent.
  void validate() const;
};

TreeCounts tree_counts(const std::vector<TwoPeriodRecord>& data);

// CSV with header l0,a0,y1,l1,a1,y2[,count]; second-period fields are empty
// or -1 when y1 == 1. Each line adds `count` (default 1) identical records.
TreeCounts read_lattice(std::istream& in);

// Lattice with every leaf count drawn uniformly from [min_leaf, max_leaf].
TreeCounts random_lattice(std::mt19937_64& rng, int min_leaf = 1, int max_leaf = 30);

// Survival to time 1 under A0 = a: inverse-probability-weighted form.
double np_msm_surv1(const TreeCounts& c, int a);
// Survival to time 1 under A0 = a: trial-0 conditional estimates standardized over L0.
double np_seq_surv1(const TreeCounts& c, int a);
// Trial-1 estimate among survivors untreated at time 0, over the distribution of L1.
double np_trial1_surv(const TreeCounts& c, int a);
// Trial-1 conditional estimates standardized to the time-0 distribution.
double np_trial1_standardized(const TreeCounts& c, int a);
// Survival to time 2 under A0 = A1 = a: inverse-probability-weighted form.
double np_msm_surv2(const TreeCounts& c, int a);
// Survival to time 2 chained from the trial-0 pieces with artificial-censoring weights.
double np_seq_surv2(const TreeCounts& c, int a);

struct CombinedEstimate {
  double estimate = 0.0;
  double variance = 0.0;
  double weight_trial0 = 0.0;  // share of the trial-0 estimate
};

// Inverse-variance combination of the trial-0 and standardized trial-1
// estimates using binomial variances (illustrative).
CombinedEstimate inverse_variance_combination(const TreeCounts& c, int a);

}  // namespace tte::oracle
