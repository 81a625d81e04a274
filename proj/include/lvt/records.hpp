#pragma once

// Machine-readable output: JSON run records, CSV estimate tables and the
// JSON settings-file format {"a": [[x,y,z], ...], "b": [[x,y,z], ...]}.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lvt/core_model.hpp"
#include "lvt/errors.hpp"
#include "lvt/estimate.hpp"
#include "lvt/lhv_construct.hpp"
#include "lvt/mc_search.hpp"

namespace lvt {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

inline void to_json(json& j, const VisibilityEstimate& e) {
  j = json{{"value", e.value},
           {"std_error", e.std_error},
           {"n_settings", e.n_settings},
           {"provenance", std::string(to_string(e.provenance))},
           {"seed", e.seed},
           {"iterations_used", e.iterations_used}};
}

inline void from_json(const json& j, VisibilityEstimate& e) {
  j.at("value").get_to(e.value);
  j.at("std_error").get_to(e.std_error);
  j.at("n_settings").get_to(e.n_settings);
  e.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  j.at("seed").get_to(e.seed);
  j.at("iterations_used").get_to(e.iterations_used);
}

inline void to_json(json& j, const SearchConfig& c) {
  j = json{{"n_settings", c.n_settings}, {"m_states", c.m_states},   {"inner_iters", c.inner_iters},
           {"outer_iters", c.outer_iters}, {"restarts", c.restarts}, {"step_scale", c.step_scale},
           {"patience", c.patience},     {"seed", c.seed},           {"rho_min", c.rho_min},
           {"threads", c.threads}};
}

inline void from_json(const json& j, SearchConfig& c) {
  j.at("n_settings").get_to(c.n_settings);
  j.at("m_states").get_to(c.m_states);
  j.at("inner_iters").get_to(c.inner_iters);
  j.at("outer_iters").get_to(c.outer_iters);
  j.at("restarts").get_to(c.restarts);
  j.at("step_scale").get_to(c.step_scale);
  j.at("patience").get_to(c.patience);
  j.at("seed").get_to(c.seed);
  j.at("rho_min").get_to(c.rho_min);
  j.at("threads").get_to(c.threads);
}

/// One CLI invocation: what ran, with which parameters, and what came out.
struct RunRecord {
  std::string command;
  json config = json::object();
  std::vector<VisibilityEstimate> estimates;
  double wall_time_s = 0.0;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  json details = json::object();  // command-specific extras

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline void to_json(json& j, const RunRecord& r) {
  j = json{{"command", r.command}, {"config", r.config},   {"estimates", r.estimates}, {"wall_time_s", r.wall_time_s},
           {"version", r.version}, {"seed", r.seed},       {"details", r.details}};
}

inline void from_json(const json& j, RunRecord& r) {
  j.at("command").get_to(r.command);
  r.config = j.at("config");
  j.at("estimates").get_to(r.estimates);
  j.at("wall_time_s").get_to(r.wall_time_s);
  j.at("version").get_to(r.version);
  j.at("seed").get_to(r.seed);
  r.details = j.value("details", json::object());
}

inline constexpr const char* kCsvHeader = "n,visibility,std_error,provenance,seed,iterations,wall_time_s";

namespace detail {
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

inline std::string csv_row(const VisibilityEstimate& e, double wall_time_s) {
  std::ostringstream os;
  os << e.n_settings << ',' << detail::format_real(e.value) << ',' << detail::format_real(e.std_error) << ','
     << to_string(e.provenance) << ',' << e.seed << ',' << e.iterations_used << ',' << detail::format_real(wall_time_s);
  return os.str();
}

/// Header plus one row per estimate; wall_time_s[i] pairs with estimates[i].
inline std::string to_csv(const std::vector<VisibilityEstimate>& estimates, const std::vector<double>& wall_time_s) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    os << csv_row(estimates[i], i < wall_time_s.size() ? wall_time_s[i] : 0.0) << '\n';
  }
  return os.str();
}

inline std::vector<VisibilityEstimate> estimates_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw InvalidInput("CSV header mismatch");
  std::vector<VisibilityEstimate> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(row, field, ',')) f.push_back(field);
    if (f.size() != 7) throw InvalidInput("CSV row must have 7 fields: " + line);
    VisibilityEstimate e;
    e.n_settings = std::stoi(f[0]);
    e.value = std::stod(f[1]);
    e.std_error = std::stod(f[2]);
    e.provenance = provenance_from_string(f[3]);
    e.seed = std::stoull(f[4]);
    e.iterations_used = std::stoull(f[5]);
    out.push_back(e);
  }
  return out;
}

inline json settings_to_json(const SettingsEnsemble& s) {
  auto side = [](const std::vector<Direction>& dirs) {
    json arr = json::array();
    for (const auto& d : dirs) arr.push_back({d.x(), d.y(), d.z()});
    return arr;
  };
  return json{{"a", side(s.a_side())}, {"b", side(s.b_side())}};
}

/// Vectors are normalized on load; zero vectors, ragged triples and
/// mismatched side lengths are rejected.
inline SettingsEnsemble settings_from_json(const json& j) {
  auto side = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw InvalidInput(std::string("settings: missing array '") + key + "'");
    std::vector<Direction> dirs;
    for (const auto& v : j.at(key)) {
      if (!v.is_array() || v.size() != 3) throw InvalidInput("settings: each direction must be an [x, y, z] triple");
      dirs.push_back(Direction::normalized(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()));
    }
    return dirs;
  };
  auto a = side("a");
  auto b = side("b");
  if (a.size() != b.size()) throw InvalidInput("settings: sides must have the same number of directions");
  return {std::move(a), std::move(b)};
}

inline SettingsEnsemble load_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open settings file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("settings file " + path + ": " + e.what());
  }
  return settings_from_json(j);
}

}  // namespace lvt
