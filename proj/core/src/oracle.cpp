#include "tte/oracle.hpp"

#include <istream>
#include <string>

#include "tte/csv.hpp"
#include "tte/errors.hpp"

namespace tte::oracle {
namespace {

double ratio(long num, long den, const std::string& stratum) {
  if (den <= 0) throw PositivityError("positivity violation: empty stratum " + stratum);
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string cell(const char* name, std::initializer_list<int> idx) {
  std::string s = std::string(name) + "[";
  bool first = true;
  for (int i : idx) {
    if (!first) s += ",";
    s += std::to_string(i);
    first = false;
  }
  return s + "]";
}

void check_binary(int v, const char* name) {
  if (v != 0 && v != 1) throw DataError(std::string("two-period data: ") + name + " must be 0 or 1");
}

}  // namespace

void TreeCounts::validate() const {
  auto fail = [](const std::string& what) { throw DataError("tree counts: " + what + " does not sum to its parent"); };
  if (n <= 0) throw DataError("tree counts: n must be positive");
  if (l0[0] + l0[1] != n) fail("l0");
  for (int i = 0; i < 2; ++i) {
    if (l0a0[i][0] + l0a0[i][1] != l0[i]) fail(cell("l0a0", {i}));
    for (int a = 0; a < 2; ++a) {
      if (y1[i][a][0] + y1[i][a][1] != l0a0[i][a]) fail(cell("y1", {i, a}));
      if (l1[i][a][0] + l1[i][a][1] != y1[i][a][0]) fail(cell("l1", {i, a}));
      for (int j = 0; j < 2; ++j) {
        if (l1a1[i][a][j][0] + l1a1[i][a][j][1] != l1[i][a][j]) fail(cell("l1a1", {i, a, j}));
        for (int b = 0; b < 2; ++b) {
          if (y2[i][a][j][b][0] + y2[i][a][j][b][1] != l1a1[i][a][j][b]) fail(cell("y2", {i, a, j, b}));
          for (int y = 0; y < 2; ++y) {
            if (y2[i][a][j][b][y] < 0) throw DataError("tree counts: negative count");
          }
        }
      }
    }
  }
}

TreeCounts tree_counts(const std::vector<TwoPeriodRecord>& data) {
  TreeCounts c;
  for (const auto& r : data) {
    check_binary(r.l0, "L0");
    check_binary(r.a0, "A0");
    check_binary(r.y1, "Y1");
    ++c.n;
    ++c.l0[r.l0];
    ++c.l0a0[r.l0][r.a0];
    ++c.y1[r.l0][r.a0][r.y1];
    if (r.y1 == 1) continue;
    check_binary(r.l1, "L1");
    check_binary(r.a1, "A1");
    check_binary(r.y2, "Y2");
    ++c.l1[r.l0][r.a0][r.l1];
    ++c.l1a1[r.l0][r.a0][r.l1][r.a1];
    ++c.y2[r.l0][r.a0][r.l1][r.a1][r.y2];
  }
  return c;
}

TreeCounts read_lattice(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("lattice file: empty input");
  const auto header = csv::split(csv::trim(line));
  const bool counted = header.size() == 7;
  const char* expected[] = {"l0", "a0", "y1", "l1", "a1", "y2", "count"};
  if (header.size() != 6 && !counted) throw DataError("lattice file line 1: expected header l0,a0,y1,l1,a1,y2[,count]");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (csv::trim(header[i]) != expected[i]) {
      throw DataError("lattice file line 1: expected column '" + std::string(expected[i]) + "'");
    }
  }
  TreeCounts c;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = csv::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = csv::split(trimmed);
    const std::string where = "lattice file line " + std::to_string(line_no);
    if (fields.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    long long v[7] = {-1, -1, -1, -1, -1, -1, 1};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = csv::trim(fields[i]);
      if (f.empty() && i >= 3 && i <= 5) continue;
      if (!csv::parse_int(f, v[i])) throw DataError(where + ": bad value in column " + expected[i]);
    }
    if (v[6] < 0) throw DataError(where + ": negative count");
    TwoPeriodRecord r{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                      static_cast<int>(v[3]), static_cast<int>(v[4]), static_cast<int>(v[5])};
    if (r.y1 == 1 && (r.l1 != -1 || r.a1 != -1 || r.y2 != -1)) {
      throw DataError(where + ": second-period fields must be empty after an event at time 1");
    }
    TreeCounts one;
    try {
      one = tree_counts({r});
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    const long k = static_cast<long>(v[6]);
    c.n += k * one.n;
    for (int i = 0; i < 2; ++i) {
      c.l0[i] += k * one.l0[i];
      for (int a = 0; a < 2; ++a) {
        c.l0a0[i][a] += k * one.l0a0[i][a];
        for (int j = 0; j < 2; ++j) {
          c.y1[i][a][j] += k * one.y1[i][a][j];
          c.l1[i][a][j] += k * one.l1[i][a][j];
          for (int b = 0; b < 2; ++b) {
            c.l1a1[i][a][j][b] += k * one.l1a1[i][a][j][b];
            for (int y = 0; y < 2; ++y) c.y2[i][a][j][b][y] += k * one.y2[i][a][j][b][y];
          }
        }
      }
    }
  }
  c.validate();
  return c;
}

TreeCounts random_lattice(std::mt19937_64& rng, int min_leaf, int max_leaf) {
  std::uniform_int_distribution<int> draw(min_leaf, max_leaf);
  TreeCounts c;
  for (int i = 0; i < 2; ++i) {
    for (int a = 0; a < 2; ++a) {
      c.y1[i][a][1] = draw(rng);
      for (int j = 0; j < 2; ++j) {
        for (int b = 0; b < 2; ++b) {
          for (int y = 0; y < 2; ++y) {
            c.y2[i][a][j][b][y] = draw(rng);
            c.l1a1[i][a][j][b] += c.y2[i][a][j][b][y];
          }
          c.l1[i][a][j] += c.l1a1[i][a][j][b];
        }
        c.y1[i][a][0] += c.l1[i][a][j];
      }
      c.l0a0[i][a] = c.y1[i][a][0] + c.y1[i][a][1];
      c.l0[i] += c.l0a0[i][a];
    }
    c.n += c.l0[i];
  }
  return c;
}

double np_msm_surv1(const TreeCounts& c, int a) {
  double total = 0.0;
  for (int l = 0; l < 2; ++l) {
    const double p = ratio(c.l0a0[l][a], c.l0[l], cell("n_l0", {l}));
    if (c.l0a0[l][a] == 0) throw PositivityError("positivity violation: empty stratum " + cell("n_l0a0", {l, a}));
    total += static_cast<double>(c.y1[l][a][0]) / p;
  }
  return total / static_cast<double>(c.n);
}

double np_seq_surv1(const TreeCounts& c, int a) {
  double total = 0.0;
  for (int l = 0; l < 2; ++l) {
    total += ratio(c.y1[l][a][0], c.l0a0[l][a], cell("n_l0a0", {l, a})) * ratio(c.l0[l], c.n, "n");
  }
  return total;
}

namespace {

// Pooled-over-L0 trial-1 survival among those with L1 = l1 and A1 = a.
double trial1_conditional(const TreeCounts& c, int a, int l1) {
  const long survivors = c.y2[0][0][l1][a][0] + c.y2[1][0][l1][a][0];
  const long at_risk = c.l1a1[0][0][l1][a] + c.l1a1[1][0][l1][a];
  return ratio(survivors, at_risk, cell("n_l0a0,l1a1 (A0=0)", {l1, a}));
}

}  // namespace

double np_trial1_surv(const TreeCounts& c, int a) {
  const long eligible = c.y1[0][0][0] + c.y1[1][0][0];
  double total = 0.0;
  for (int l1 = 0; l1 < 2; ++l1) {
    const long share = c.l1[0][0][l1] + c.l1[1][0][l1];
    total += trial1_conditional(c, a, l1) * ratio(share, eligible, "n^0_l0a0 (A0=0)");
  }
  return total;
}

double np_trial1_standardized(const TreeCounts& c, int a) {
  double total = 0.0;
  for (int l = 0; l < 2; ++l) total += trial1_conditional(c, a, l) * ratio(c.l0[l], c.n, "n");
  return total;
}

double np_msm_surv2(const TreeCounts& c, int a) {
  double total = 0.0;
  for (int l0 = 0; l0 < 2; ++l0) {
    const double p0 = ratio(c.l0a0[l0][a], c.l0[l0], cell("n_l0", {l0}));
    if (c.l0a0[l0][a] == 0) throw PositivityError("positivity violation: empty stratum " + cell("n_l0a0", {l0, a}));
    for (int l1 = 0; l1 < 2; ++l1) {
      const double p1 = ratio(c.l1a1[l0][a][l1][a], c.l1[l0][a][l1], cell("n_l0a0,l1", {l0, a, l1}));
      if (c.l1a1[l0][a][l1][a] == 0) {
        throw PositivityError("positivity violation: empty stratum " + cell("n_l0a0,l1a1", {l0, a, l1, a}));
      }
      total += static_cast<double>(c.y2[l0][a][l1][a][0]) / (p0 * p1);
    }
  }
  return total / static_cast<double>(c.n);
}

double np_seq_surv2(const TreeCounts& c, int a) {
  double total = 0.0;
  for (int l0 = 0; l0 < 2; ++l0) {
    // Second-period survival among trial-0 survivors, weighted for artificial censoring.
    const long survivors = c.y1[l0][a][0];
    double second = 0.0;
    for (int l1 = 0; l1 < 2; ++l1) {
      const double p1 = ratio(c.l1a1[l0][a][l1][a], c.l1[l0][a][l1], cell("n_l0a0,l1", {l0, a, l1}));
      if (c.l1a1[l0][a][l1][a] == 0) {
        throw PositivityError("positivity violation: empty stratum " + cell("n_l0a0,l1a1", {l0, a, l1, a}));
      }
      second += static_cast<double>(c.y2[l0][a][l1][a][0]) / p1;
    }
    if (survivors <= 0) throw PositivityError("positivity violation: empty stratum " + cell("n^0_l0a0", {l0, a}));
    second /= static_cast<double>(survivors);
    const double first = ratio(c.y1[l0][a][0], c.l0a0[l0][a], cell("n_l0a0", {l0, a}));
    total += ratio(c.l0[l0], c.n, "n") * first * second;
  }
  return total;
}

CombinedEstimate inverse_variance_combination(const TreeCounts& c, int a) {
  double e0 = 0.0;
  double v0 = 0.0;
  double e1 = 0.0;
  double v1 = 0.0;
  for (int l = 0; l < 2; ++l) {
    const double share = ratio(c.l0[l], c.n, "n");
    const double p0 = ratio(c.y1[l][a][0], c.l0a0[l][a], cell("n_l0a0", {l, a}));
    e0 += share * p0;
    v0 += share * share * p0 * (1.0 - p0) / static_cast<double>(c.l0a0[l][a]);
    const long at_risk = c.l1a1[0][0][l][a] + c.l1a1[1][0][l][a];
    const double p1 = trial1_conditional(c, a, l);
    e1 += share * p1;
    v1 += share * share * p1 * (1.0 - p1) / static_cast<double>(at_risk);
  }
  CombinedEstimate out;
  if (v0 == 0.0 && v1 == 0.0) {
    out.weight_trial0 = 0.5;
  } else if (v0 == 0.0) {
    out.weight_trial0 = 1.0;
  } else if (v1 == 0.0) {
    out.weight_trial0 = 0.0;
  } else {
    out.weight_trial0 = (1.0 / v0) / (1.0 / v0 + 1.0 / v1);
  }
  out.estimate = out.weight_trial0 * e0 + (1.0 - out.weight_trial0) * e1;
  out.variance = out.weight_trial0 * out.weight_trial0 * v0 +
                 (1.0 - out.weight_trial0) * (1.0 - out.weight_trial0) * v1;
  return out;
}

}  // namespace tte::oracle
