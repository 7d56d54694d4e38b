#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tte/errors.hpp"
#include "tte/simgen.hpp"

namespace tte {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("scenario field '") + key + "' has the wrong type");
  }
}

}  // namespace

void ScenarioParams::validate() const {
  const double values[] = {delta_0, delta_L, delta_A, delta_T, gamma_0, gamma_A, gamma_L, alpha_0,
                           alpha_A, alpha_L, alpha_U, u_variance, tau_max, late_effect_factor};
  for (double v : values) {
    if (!std::isfinite(v)) throw UsageError("scenario '" + name + "': parameters must be finite");
  }
  if (!(alpha_0 > 0.0)) throw UsageError("scenario '" + name + "': alpha_0 must be positive");
  if (u_variance < 0.0) throw UsageError("scenario '" + name + "': u_variance must be non-negative");
  if (n_visits < 1) throw UsageError("scenario '" + name + "': n_visits must be at least 1");
  if (!(tau_max > 0.0)) throw UsageError("scenario '" + name + "': tau_max must be positive");
}

ScenarioParams builtin_scenario(int id) {
  ScenarioParams p;
  switch (id) {
    case 1:
      p.name = "scenario1";
      break;
    case 2:
      p.name = "scenario2";
      p.gamma_0 = -3.0;
      break;
    case 3:
      p.name = "scenario3";
      p.gamma_L = 3.0;
      break;
    default:
      throw UsageError("unknown scenario id " + std::to_string(id) + " (expected 1, 2 or 3)");
  }
  return p;
}

ScenarioParams scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("scenario file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("scenario file must hold a JSON object");
  ScenarioParams p;
  if (j.contains("base")) p = builtin_scenario(j.at("base").get<int>());
  read_field(j, "name", p.name);
  read_field(j, "delta_0", p.delta_0);
  read_field(j, "delta_L", p.delta_L);
  read_field(j, "delta_A", p.delta_A);
  read_field(j, "delta_T", p.delta_T);
  read_field(j, "gamma_0", p.gamma_0);
  read_field(j, "gamma_A", p.gamma_A);
  read_field(j, "gamma_L", p.gamma_L);
  read_field(j, "alpha_0", p.alpha_0);
  read_field(j, "alpha_A", p.alpha_A);
  read_field(j, "alpha_L", p.alpha_L);
  read_field(j, "alpha_U", p.alpha_U);
  read_field(j, "u_variance", p.u_variance);
  read_field(j, "n_visits", p.n_visits);
  read_field(j, "tau_max", p.tau_max);
  read_field(j, "late_effect_visit", p.late_effect_visit);
  read_field(j, "late_effect_factor", p.late_effect_factor);
  p.validate();
  return p;
}

std::string scenario_to_json(const ScenarioParams& p) {
  json j = {{"name", p.name},
            {"delta_0", p.delta_0},
            {"delta_L", p.delta_L},
            {"delta_A", p.delta_A},
            {"delta_T", p.delta_T},
            {"gamma_0", p.gamma_0},
            {"gamma_A", p.gamma_A},
            {"gamma_L", p.gamma_L},
            {"alpha_0", p.alpha_0},
            {"alpha_A", p.alpha_A},
            {"alpha_L", p.alpha_L},
            {"alpha_U", p.alpha_U},
            {"u_variance", p.u_variance},
            {"n_visits", p.n_visits},
            {"tau_max", p.tau_max},
            {"late_effect_visit", p.late_effect_visit},
            {"late_effect_factor", p.late_effect_factor}};
  return j.dump(2);
}

ScenarioParams load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open scenario file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

}  // namespace tte
