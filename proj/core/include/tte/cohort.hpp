#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace tte {

// One subject-visit. Visit k happens at time t_k = k.
struct VisitRecord {
  int k = 0;
  int treatment = 0;               // A_k in {0,1}
  std::vector<double> covariates;  // L_k, time-fixed covariates repeated
};

struct SubjectHistory {
  std::string id;
  std::vector<VisitRecord> visits;  // visits[k].k == k
  double t_end = 0.0;               // end of observed follow-up
  int status = 0;                   // 1 = event at t_end, 0 = censored

  int n_visits() const { return static_cast<int>(visits.size()); }
  const VisitRecord& visit(int k) const { return visits.at(static_cast<std::size_t>(k)); }
  int treatment(int k) const { return visit(k).treatment; }
  const std::vector<double>& covariates(int k) const { return visit(k).covariates; }
  // Treatment at visit k-1, with the convention A_{-1} = 0.
  int previous_treatment(int k) const { return k <= 0 ? 0 : treatment(k - 1); }
};

struct Cohort {
  std::vector<SubjectHistory> subjects;  // sorted by id
  std::vector<std::string> covariate_names;
  double tau_max = 0.0;

  std::size_t size() const { return subjects.size(); }
  std::size_t n_covariates() const { return covariate_names.size(); }
  // Number of visit slots 0..K-1 that can fall before tau_max.
  int max_visits() const;
  // True when some subject is censored before tau_max (loss to follow-up).
  bool has_dropout() const;
};

// Natural ordering for subject ids: numeric ids compare numerically.
bool subject_id_less(const std::string& a, const std::string& b);

// Validates, applies administrative censoring at tau_max and sorts subjects.
// Throws DataError naming the offending subject.
Cohort make_cohort(std::vector<SubjectHistory> subjects,
                   std::vector<std::string> covariate_names, double tau_max);

// visits.csv: id,k,A,<cov1>,...,<covp>     subjects.csv: id,t_end,status
Cohort load_cohort(std::istream& visits, std::istream& subjects, double tau_max);
Cohort load_cohort(const std::filesystem::path& visits_file,
                   const std::filesystem::path& subjects_file, double tau_max);

void write_cohort(const Cohort& cohort, std::ostream& visits, std::ostream& subjects);
void write_cohort(const Cohort& cohort, const std::filesystem::path& visits_file,
                  const std::filesystem::path& subjects_file);

// Counting-process row: covariates x hold on (t_in, t_out]; an event, if
// flagged, happens at t_out.
struct IntervalRow {
  std::size_t subject = 0;  // cluster key (index into the cohort)
  double t_in = 0.0;
  double t_out = 0.0;
  bool event = false;
  std::vector<double> x;
  double weight = 1.0;
  int stratum = 0;
};

using CovariateBuilder = std::function<std::vector<double>(const SubjectHistory&, int k)>;

// One row per visit interval [k, min(k+1, t_end)); the last row carries the
// event flag when status == 1.
std::vector<IntervalRow> to_interval_rows(const Cohort& cohort, const CovariateBuilder& builder);

}  // namespace tte
