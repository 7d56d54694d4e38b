#include "tte/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "tte/csv.hpp"

namespace tte {

namespace {

using nlohmann::json;
using csv::format;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

json summary_json(const QuantitySummary& s) {
  return {{"mean", numbers(s.mean)}, {"sd", numbers(s.sd)}, {"bias", numbers(s.bias)}, {"mc_se", numbers(s.mc_se)}};
}

json rows_json(const RowCounts& r) {
  return {{"observed", numbers(r.observed)},
          {"always_treated", numbers(r.always_treated)},
          {"never_treated", numbers(r.never_treated)}};
}

void diagnostic_fields(std::ostream& out, const IntervalDiagnostic& d) {
  out << d.interval << ',' << format(d.max) << ',' << format(d.mean) << ',' << format(d.p99) << ',' << d.n_rows
      << '\n';
}

}  // namespace

void write_results_csv(std::ostream& out, const MarginalResults& r) {
  const bool bands = !r.rd_lo.empty();
  out << "tau,S1,S0,RD" << (bands ? ",RD_lo,RD_hi" : "") << '\n';
  for (std::size_t i = 0; i < r.tau.size(); ++i) {
    out << format(r.tau[i]) << ',' << format(r.s1[i]) << ',' << format(r.s0[i]) << ',' << format(r.rd[i]);
    if (bands) out << ',' << format(r.rd_lo[i]) << ',' << format(r.rd_hi[i]);
    out << '\n';
  }
}

std::string results_to_json(const MarginalResults& r) {
  json j = {{"tau", numbers(r.tau)},
            {"S1", numbers(r.s1)},
            {"S0", numbers(r.s0)},
            {"RD", numbers(r.rd)},
            {"population", r.population},
            {"population_size", r.population_size},
            {"n_clamped", r.n_clamped},
            {"n_increases", r.n_increases},
            {"extrapolated", r.extrapolated}};
  if (!r.rd_lo.empty()) {
    j["RD_lo"] = numbers(r.rd_lo);
    j["RD_hi"] = numbers(r.rd_hi);
    j["n_bootstrap"] = r.n_bootstrap;
    j["n_bootstrap_failed"] = r.n_bootstrap_failed;
  }
  return j.dump(2);
}

void write_diagnostics_csv(std::ostream& out,
                           const std::vector<std::pair<std::string, std::vector<IntervalDiagnostic>>>& series) {
  out << "series,interval,max,mean,p99,n_rows\n";
  for (const auto& [name, diags] : series) {
    for (const auto& d : diags) {
      out << name << ',';
      diagnostic_fields(out, d);
    }
  }
}

void write_scenario_diagnostics_csv(std::ostream& out, const PerformanceTable& table) {
  out << "method,rep,interval,max,mean,p99,n_rows\n";
  for (const auto& mp : table.methods) {
    for (std::size_t i = 0; i < mp.reps.size(); ++i) {
      for (const auto& d : mp.diagnostics[i]) {
        out << method_name(mp.method) << ',' << mp.reps[i] << ',';
        diagnostic_fields(out, d);
      }
    }
  }
}

void write_truth_csv(std::ostream& out, const TruthCurves& truth) {
  out << "tau,S1,S0,RD\n";
  for (std::size_t i = 0; i < truth.horizons.size(); ++i) {
    out << format(truth.horizons[i]) << ',' << format(truth.s1[i]) << ',' << format(truth.s0[i]) << ','
        << format(truth.rd[i]) << '\n';
  }
}

void write_performance_csv(std::ostream& out, const PerformanceTable& table) {
  out << "method,quantity,tau,truth,mean,sd,bias,mc_se,var_ratio,n_success,n_failed\n";
  for (const auto& mp : table.methods) {
    const std::pair<const char*, std::pair<const QuantitySummary*, const std::vector<double>*>> blocks[] = {
        {"S1", {&mp.s1, &table.truth.s1}}, {"S0", {&mp.s0, &table.truth.s0}}, {"RD", {&mp.rd, &table.truth.rd}}};
    for (const auto& [quantity, data] : blocks) {
      const QuantitySummary& s = *data.first;
      for (std::size_t j = 0; j < table.horizons.size(); ++j) {
        const bool ratio = quantity == std::string("RD") && !mp.var_ratio.empty();
        out << method_name(mp.method) << ',' << quantity << ',' << format(table.horizons[j]) << ','
            << format((*data.second)[j]) << ',' << format(s.mean[j]) << ',' << format(s.sd[j]) << ','
            << format(s.bias[j]) << ',' << format(s.mc_se[j]) << ',' << (ratio ? format(mp.var_ratio[j]) : "")
            << ',' << mp.reps.size() << ',' << mp.n_failed << '\n';
      }
    }
  }
}

std::string performance_to_json(const PerformanceTable& table) {
  json methods = json::array();
  for (const auto& mp : table.methods) {
    methods.push_back({{"method", method_name(mp.method)},
                       {"S1", summary_json(mp.s1)},
                       {"S0", summary_json(mp.s0)},
                       {"RD", summary_json(mp.rd)},
                       {"var_ratio", numbers(mp.var_ratio)},
                       {"n_success", mp.reps.size()},
                       {"n_failed", mp.n_failed}});
  }
  json j = {{"scenario", json::parse(scenario_to_json(table.params))},
            {"n", table.n},
            {"reps", table.reps},
            {"seed", table.seed},
            {"horizons", numbers(table.horizons)},
            {"truth", {{"S1", numbers(table.truth.s1)}, {"S0", numbers(table.truth.s0)}, {"RD", numbers(table.truth.rd)}}},
            {"methods", methods},
            {"msm_rows", rows_json(table.msm_rows)},
            {"trial_rows", rows_json(table.trial_rows)},
            {"fraction_a0_treated", number(table.fraction_a0_treated)},
            {"fraction_events", number(table.fraction_events)},
            {"n_clamped", table.n_clamped},
            {"n_person_intervals", table.n_person_intervals}};
  return j.dump(2);
}

namespace {

struct Panel {
  double left, top, width, height;
  double x_max, y_min, y_max;
  double x(double v) const { return left + width * v / x_max; }
  double y(double v) const { return top + height * (y_max - v) / (y_max - y_min); }
};

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void step_path(std::ostream& out, const Panel& p, const std::vector<double>& t, const std::vector<double>& v,
               double start, const std::string& colour, const char* dash) {
  out << "<path fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"";
  if (dash != nullptr) out << " stroke-dasharray=\"" << dash << '"';
  out << " d=\"M" << fmt1(p.x(0)) << ',' << fmt1(p.y(start));
  double prev = start;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(v[i])) continue;
    out << " H" << fmt1(p.x(t[i]));
    if (v[i] != prev) out << " V" << fmt1(p.y(v[i]));
    prev = v[i];
  }
  out << "\"/>\n";
}

void axes(std::ostream& out, const Panel& p, const std::string& label) {
  out << "<rect x=\"" << fmt1(p.left) << "\" y=\"" << fmt1(p.top) << "\" width=\"" << fmt1(p.width)
      << "\" height=\"" << fmt1(p.height) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = p.y_min + (p.y_max - p.y_min) * i / 4.0;
    out << "<text x=\"" << fmt1(p.left - 6) << "\" y=\"" << fmt1(p.y(v) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt3(v) << "</text>\n";
  }
  const int ticks = static_cast<int>(std::ceil(p.x_max));
  for (int i = 0; i <= ticks; ++i) {
    if (i > p.x_max) break;
    out << "<text x=\"" << fmt1(p.x(i)) << "\" y=\"" << fmt1(p.top + p.height + 16)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << i << "</text>\n";
  }
  out << "<text x=\"" << fmt1(p.left) << "\" y=\"" << fmt1(p.top - 8) << "\" font-size=\"13\">" << label
      << "</text>\n";
}

}  // namespace

void write_curves_svg(std::ostream& out, const std::vector<std::pair<std::string, MarginalResults>>& curves) {
  static const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  double x_max = 1.0, s_min = 1.0, rd_min = 0.0, rd_max = 0.0;
  for (const auto& [name, r] : curves) {
    for (std::size_t i = 0; i < r.tau.size(); ++i) {
      x_max = std::max(x_max, r.tau[i]);
      for (double s : {r.s1[i], r.s0[i]}) {
        if (std::isfinite(s)) s_min = std::min(s_min, s);
      }
      std::vector<double> rds{r.rd[i]};
      if (!r.rd_lo.empty()) {
        rds.push_back(r.rd_lo[i]);
        rds.push_back(r.rd_hi[i]);
      }
      for (double d : rds) {
        if (!std::isfinite(d)) continue;
        rd_min = std::min(rd_min, d);
        rd_max = std::max(rd_max, d);
      }
    }
  }
  s_min = std::max(0.0, std::floor(s_min * 10.0) / 10.0);
  if (s_min >= 1.0) s_min = 0.0;
  if (rd_max - rd_min < 1e-9) rd_max = rd_min + 0.01;
  const double pad = 0.05 * (rd_max - rd_min);
  const Panel surv{70, 40, 600, 300, x_max, s_min, 1.0};
  const Panel diff{70, 400, 600, 160, x_max, rd_min - pad, rd_max + pad};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"620\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"760\" height=\"620\" fill=\"white\"/>\n";
  axes(out, surv, "Survival: always treated (solid), never treated (dashed)");
  axes(out, diff, "Risk difference S1 - S0");
  out << "<line x1=\"" << fmt1(diff.x(0)) << "\" x2=\"" << fmt1(diff.x(x_max)) << "\" y1=\"" << fmt1(diff.y(0))
      << "\" y2=\"" << fmt1(diff.y(0)) << "\" stroke=\"#aaa\"/>\n";
  out << "<text x=\"370\" y=\"605\" font-size=\"12\" text-anchor=\"middle\">time</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& [name, r] = curves[c];
    const std::string colour = kColours[c % 4];
    step_path(out, surv, r.tau, r.s1, 1.0, colour, nullptr);
    step_path(out, surv, r.tau, r.s0, 1.0, colour, "6,4");
    step_path(out, diff, r.tau, r.rd, 0.0, colour, nullptr);
    if (!r.rd_lo.empty()) {
      step_path(out, diff, r.tau, r.rd_lo, 0.0, colour, "2,3");
      step_path(out, diff, r.tau, r.rd_hi, 0.0, colour, "2,3");
    }
    const double ly = 60 + 18.0 * static_cast<double>(c);
    out << "<line x1=\"560\" x2=\"590\" y1=\"" << fmt1(ly) << "\" y2=\"" << fmt1(ly) << "\" stroke=\"" << colour
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"596\" y=\"" << fmt1(ly + 4) << "\" font-size=\"12\">" << name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace tte
