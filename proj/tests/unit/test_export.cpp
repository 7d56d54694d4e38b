#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tte/csv.hpp"
#include "tte/export.hpp"

using namespace tte;

namespace {

MarginalResults hand_results() {
  MarginalResults r;
  r.tau = {1, 2};
  r.s1 = {0.9, 0.75};
  r.s0 = {0.8, 0.5};
  r.rd = {0.9 - 0.8, 0.75 - 0.5};
  r.population = "C0";
  r.population_size = 10;
  return r;
}

int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(csv::format(0.25) == "0.25");
  CHECK(csv::format(1.0) == "1");
  CHECK(csv::format(-3.5) == "-3.5");
  CHECK(csv::format(std::numeric_limits<double>::quiet_NaN()) == "nan");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    double back = 0.0;
    REQUIRE(csv::parse_double(csv::format(v), back));
    CHECK(back == v);
  }
  double x = 0.0;
  CHECK_FALSE(csv::parse_double("1.5x", x));
  CHECK_FALSE(csv::parse_double("", x));
  long long k = 0;
  CHECK(csv::parse_int(" 42 ", k));
  CHECK(k == 42);
  CHECK_FALSE(csv::parse_int("4.2", k));
}

TEST_CASE("curve tables") {
  SUBCASE("without bands") {
    std::ostringstream out;
    write_results_csv(out, hand_results());
    const MarginalResults r = hand_results();
    CHECK(out.str() == "tau,S1,S0,RD\n1,0.9,0.8," + csv::format(r.rd[0]) + "\n2,0.75,0.5,0.25\n");
  }
  SUBCASE("with bands") {
    MarginalResults r = hand_results();
    r.rd_lo = {0.0, 0.1};
    r.rd_hi = {0.2, 0.4};
    std::ostringstream out;
    write_results_csv(out, r);
    const std::string text = out.str();
    CHECK(text.rfind("tau,S1,S0,RD,RD_lo,RD_hi\n", 0) == 0);
    CHECK(text.find("\n2,0.75,0.5,0.25,0.1,0.4\n") != std::string::npos);
  }
  SUBCASE("json") {
    MarginalResults r = hand_results();
    r.s1[1] = std::numeric_limits<double>::quiet_NaN();
    const auto j = nlohmann::json::parse(results_to_json(r));
    CHECK(j.at("tau").size() == 2);
    CHECK(j.at("S0")[1].get<double>() == 0.5);
    CHECK(j.at("S1")[1].is_null());
    CHECK(j.at("population") == "C0");
    CHECK_FALSE(j.contains("RD_lo"));
  }
}

TEST_CASE("diagnostic and truth tables") {
  IntervalDiagnostic d;
  d.interval = 1;
  d.max = 3.5;
  d.mean = 1.25;
  d.p99 = 3.0;
  d.n_rows = 40;
  std::ostringstream diag;
  write_diagnostics_csv(diag, {{"iptw", {d}}, {"ipacw", {}}});
  CHECK(diag.str() == "series,interval,max,mean,p99,n_rows\niptw,1,3.5,1.25,3,40\n");

  TruthCurves t;
  t.horizons = {1, 5};
  t.s1 = {0.5, 0.25};
  t.s0 = {0.5, 0.125};
  t.rd = {0.0, 0.125};
  std::ostringstream truth;
  write_truth_csv(truth, t);
  CHECK(truth.str() == "tau,S1,S0,RD\n1,0.5,0.5,0\n5,0.25,0.125,0.125\n");
}

TEST_CASE("performance tables export every method, quantity and horizon") {
  ScenarioOptions o;
  o.n = 300;
  o.reps = 2;
  o.seed = 4;
  o.horizons = {1, 3};
  o.truth = generate_truth(builtin_scenario(1), 5000, o.horizons, 2);
  const PerformanceTable table = run_scenario(builtin_scenario(1), o);

  std::ostringstream csv_out;
  write_performance_csv(csv_out, table);
  std::istringstream lines(csv_out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "method,quantity,tau,truth,mean,sd,bias,mc_se,var_ratio,n_success,n_failed");
  int rows = 0;
  int ratios = 0;
  while (std::getline(lines, line)) {
    const auto fields = csv::split(line);
    REQUIRE(fields.size() == 11);
    if (!fields[8].empty()) ++ratios;
    ++rows;
  }
  CHECK(rows == 3 * 3 * 2);
  CHECK(ratios == 2 * 2);

  const auto j = nlohmann::json::parse(performance_to_json(table));
  CHECK(j.at("methods").size() == 3);
  CHECK(j.at("reps") == 2);
  CHECK(j.at("truth").at("RD")[1].get<double>() == table.truth.rd[1]);

  std::ostringstream diag;
  write_scenario_diagnostics_csv(diag, table);
  CHECK(diag.str().rfind("method,rep,interval,max,mean,p99,n_rows\n", 0) == 0);
  CHECK(count_of(diag.str(), "\nsequential,1,") > 0);
}

TEST_CASE("curve plot") {
  MarginalResults r = hand_results();
  r.rd_lo = {0.0, 0.1};
  r.rd_hi = {0.2, 0.4};
  std::ostringstream out;
  write_curves_svg(out, {{"msm_iptw", r}, {"sequential", hand_results()}});
  const std::string svg = out.str();
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count_of(svg, "<path") >= 6);
  CHECK(svg.find("msm_iptw") != std::string::npos);
  std::ostringstream again;
  write_curves_svg(again, {{"msm_iptw", r}, {"sequential", hand_results()}});
  CHECK(again.str() == svg);
}
