#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tte/estimators.hpp"
#include "tte/simgen.hpp"
#include "tte/weights.hpp"

namespace tte {

// tau,S1,S0,RD plus RD_lo,RD_hi when bootstrap bands are present.
void write_results_csv(std::ostream& out, const MarginalResults& results);
std::string results_to_json(const MarginalResults& results);

// series,interval,max,mean,p99,n_rows
void write_diagnostics_csv(std::ostream& out,
                           const std::vector<std::pair<std::string, std::vector<IntervalDiagnostic>>>& series);

// method,rep,interval,max,mean,p99,n_rows (one block per successful repetition)
void write_scenario_diagnostics_csv(std::ostream& out, const PerformanceTable& table);

// tau,S1,S0,RD
void write_truth_csv(std::ostream& out, const TruthCurves& truth);

// method,quantity,tau,truth,mean,sd,bias,mc_se,var_ratio,n_success,n_failed
void write_performance_csv(std::ostream& out, const PerformanceTable& table);
std::string performance_to_json(const PerformanceTable& table);

// Survival step-lines of both regimes per method above a risk-difference panel.
void write_curves_svg(std::ostream& out, const std::vector<std::pair<std::string, MarginalResults>>& curves);

}  // namespace tte
