#include "tte/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "tte/csv.hpp"
#include "tte/errors.hpp"

namespace tte {
namespace {

std::optional<unsigned long long> as_unsigned(const std::string& s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  unsigned long long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<unsigned long long>(c - '0');
  }
  return v;
}

[[noreturn]] void fail(const std::string& file, std::size_t line, const std::string& id,
                       const std::string& message) {
  std::ostringstream os;
  os << file << ":" << line;
  if (!id.empty()) os << ": subject " << id;
  os << ": " << message;
  throw DataError(os.str());
}

[[noreturn]] void fail_subject(const std::string& id, const std::string& message) {
  throw DataError("subject " + id + ": " + message);
}

std::vector<std::string> read_header(std::istream& in, const std::string& file) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(file + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  std::vector<std::string> names;
  for (auto field : csv::split(line)) names.emplace_back(field);
  return names;
}

}  // namespace

bool subject_id_less(const std::string& a, const std::string& b) {
  const auto na = as_unsigned(a);
  const auto nb = as_unsigned(b);
  if (na && nb) return *na != *nb ? *na < *nb : a < b;
  if (na != nb) return static_cast<bool>(na);  // numeric ids first
  return a < b;
}

int Cohort::max_visits() const {
  int k = 0;
  for (const auto& s : subjects) k = std::max(k, s.n_visits());
  return k;
}

bool Cohort::has_dropout() const {
  for (const auto& s : subjects) {
    if (s.status == 0 && s.t_end < tau_max) return true;
  }
  return false;
}

Cohort make_cohort(std::vector<SubjectHistory> subjects, std::vector<std::string> covariate_names,
                   double tau_max) {
  if (!(tau_max > 0.0) || !std::isfinite(tau_max)) {
    throw DataError("tau_max must be a positive finite number");
  }
  const std::size_t p = covariate_names.size();
  for (auto& s : subjects) {
    if (s.status != 0 && s.status != 1) fail_subject(s.id, "status must be 0 or 1");
    if (!(s.t_end >= 0.0) || !std::isfinite(s.t_end)) fail_subject(s.id, "t_end must be >= 0");
    if (s.t_end > tau_max) {
      s.t_end = tau_max;
      s.status = 0;
      // Visits beyond the administrative horizon carry no person-time.
      while (!s.visits.empty() && static_cast<double>(s.visits.back().k) >= tau_max) s.visits.pop_back();
    }
    if (s.visits.empty()) fail_subject(s.id, "no visits recorded");
    for (std::size_t i = 0; i < s.visits.size(); ++i) {
      const auto& v = s.visits[i];
      if (v.k != static_cast<int>(i)) fail_subject(s.id, "gap in visit indices at k=" + std::to_string(i));
      if (v.treatment != 0 && v.treatment != 1) fail_subject(s.id, "non-binary treatment");
      if (v.covariates.size() != p) fail_subject(s.id, "covariate count mismatch");
      if (static_cast<double>(v.k) >= s.t_end) {
        fail_subject(s.id, "visit after t_end (k=" + std::to_string(v.k) + ")");
      }
    }
  }
  std::sort(subjects.begin(), subjects.end(),
            [](const SubjectHistory& a, const SubjectHistory& b) { return subject_id_less(a.id, b.id); });
  for (std::size_t i = 1; i < subjects.size(); ++i) {
    if (subjects[i].id == subjects[i - 1].id) fail_subject(subjects[i].id, "duplicate subject id");
  }
  Cohort cohort;
  cohort.subjects = std::move(subjects);
  cohort.covariate_names = std::move(covariate_names);
  cohort.tau_max = tau_max;
  return cohort;
}

Cohort load_cohort(std::istream& visits, std::istream& subjects_in, double tau_max) {
  const std::string vfile = "visits.csv";
  const std::string sfile = "subjects.csv";

  const auto vheader = read_header(visits, vfile);
  if (vheader.size() < 3 || vheader[0] != "id" || vheader[1] != "k" || vheader[2] != "A") {
    throw DataError(vfile + ":1: header must start with id,k,A");
  }
  const std::vector<std::string> names(vheader.begin() + 3, vheader.end());
  const auto sheader = read_header(subjects_in, sfile);
  if (sheader.size() != 3 || sheader[0] != "id" || sheader[1] != "t_end" || sheader[2] != "status") {
    throw DataError(sfile + ":1: header must be id,t_end,status");
  }

  std::vector<SubjectHistory> subjects;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(subjects_in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const std::string id(f[0]);
    if (f.size() != 3) fail(sfile, line_no, id, "expected 3 fields");
    if (id.empty()) fail(sfile, line_no, id, "empty id");
    SubjectHistory s;
    s.id = id;
    long long status = 0;
    if (!csv::parse_double(f[1], s.t_end) || s.t_end < 0.0) fail(sfile, line_no, id, "malformed t_end");
    if (!csv::parse_int(f[2], status) || (status != 0 && status != 1)) {
      fail(sfile, line_no, id, "status must be 0 or 1");
    }
    s.status = static_cast<int>(status);
    if (!index.emplace(id, subjects.size()).second) fail(sfile, line_no, id, "duplicate subject id");
    subjects.push_back(std::move(s));
  }

  // Visit rows may arrive in any order; collect then check contiguity.
  std::vector<std::map<int, std::pair<VisitRecord, std::size_t>>> collected(subjects.size());
  line_no = 1;
  while (std::getline(visits, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    const std::string id(f[0]);
    if (f.size() != vheader.size()) {
      fail(vfile, line_no, id, "expected " + std::to_string(vheader.size()) + " fields");
    }
    const auto it = index.find(id);
    if (it == index.end()) fail(vfile, line_no, id, "subject missing from subjects file");
    long long k = 0;
    long long a = 0;
    if (!csv::parse_int(f[1], k) || k < 0) fail(vfile, line_no, id, "malformed visit index");
    if (!csv::parse_int(f[2], a)) fail(vfile, line_no, id, "malformed treatment");
    if (a != 0 && a != 1) fail(vfile, line_no, id, "non-binary treatment");
    VisitRecord v;
    v.k = static_cast<int>(k);
    v.treatment = static_cast<int>(a);
    v.covariates.resize(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (csv::trim(f[3 + j]).empty()) fail(vfile, line_no, id, "missing value for " + names[j]);
      if (!csv::parse_double(f[3 + j], v.covariates[j])) {
        fail(vfile, line_no, id, "malformed value for " + names[j]);
      }
    }
    const auto& subject = subjects[it->second];
    const double t_end = std::min(subject.t_end, tau_max);
    if (static_cast<double>(v.k) >= t_end) {
      if (subject.t_end > tau_max && static_cast<double>(v.k) >= tau_max) continue;
      fail(vfile, line_no, id, "visit after t_end (k=" + std::to_string(v.k) + ")");
    }
    if (!collected[it->second].emplace(v.k, std::make_pair(std::move(v), line_no)).second) {
      fail(vfile, line_no, id, "duplicate visit k=" + std::to_string(k));
    }
  }
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    int expected = 0;
    for (auto& [k, entry] : collected[i]) {
      if (k != expected) fail(vfile, entry.second, subjects[i].id, "gap in visit indices before k=" + std::to_string(k));
      subjects[i].visits.push_back(std::move(entry.first));
      ++expected;
    }
    if (subjects[i].visits.empty()) fail(sfile, 0, subjects[i].id, "no visits recorded");
  }
  return make_cohort(std::move(subjects), names, tau_max);
}

Cohort load_cohort(const std::filesystem::path& visits_file, const std::filesystem::path& subjects_file,
                   double tau_max) {
  std::ifstream v(visits_file);
  if (!v) throw DataError("cannot open " + visits_file.string());
  std::ifstream s(subjects_file);
  if (!s) throw DataError("cannot open " + subjects_file.string());
  return load_cohort(v, s, tau_max);
}

void write_cohort(const Cohort& cohort, std::ostream& visits, std::ostream& subjects) {
  visits << "id,k,A";
  for (const auto& name : cohort.covariate_names) visits << ',' << name;
  visits << '\n';
  subjects << "id,t_end,status\n";
  for (const auto& s : cohort.subjects) {
    subjects << s.id << ',' << csv::format(s.t_end) << ',' << s.status << '\n';
    for (const auto& v : s.visits) {
      visits << s.id << ',' << v.k << ',' << v.treatment;
      for (double x : v.covariates) visits << ',' << csv::format(x);
      visits << '\n';
    }
  }
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& visits_file,
                  const std::filesystem::path& subjects_file) {
  std::ofstream v(visits_file);
  std::ofstream s(subjects_file);
  if (!v || !s) throw Error("cannot write cohort files");
  write_cohort(cohort, v, s);
}

std::vector<IntervalRow> to_interval_rows(const Cohort& cohort, const CovariateBuilder& builder) {
  std::vector<IntervalRow> rows;
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    const auto& s = cohort.subjects[i];
    for (int k = 0; k < s.n_visits(); ++k) {
      IntervalRow row;
      row.subject = i;
      row.t_in = k;
      row.t_out = std::min(static_cast<double>(k + 1), s.t_end);
      row.event = s.status == 1 && row.t_out == s.t_end;
      row.x = builder(s, k);
      rows.push_back(std::move(row));
      if (rows.back().t_out >= s.t_end) break;
    }
  }
  return rows;
}

}  // namespace tte
