#pragma once

// Parameter decks. Two spellings of one schema are accepted:
//
//   topology = "two-stage"          {"topology": "two-stage",
//   [two-stage]                      "two-stage": {"gm": 1e-3, ...}}
//   gm = 1e-3
//   ...
//
// A deck may carry sections for several topologies; the active one is
// chosen by the top-level tag or by the caller.

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "millerpole/error.hpp"
#include "millerpole/io.hpp"
#include "millerpole/netlist.hpp"

namespace millerpole {

struct RunConfig {
  Topology topology{};
  CircuitParams params;
};

/// Section name -> key -> value, plus top-level string entries.
struct RawDeck {
  std::optional<std::string> topology;
  std::map<std::string, std::map<std::string, double>> sections;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline double parse_number(const std::string& key, const std::string& text) {
  double v = 0;
  std::string t = text;
  std::erase(t, '_');
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  if (!std::isfinite(v)) throw ConfigError("key '" + key + "': value must be finite");
  return v;
}

}  // namespace detail

inline RawDeck parse_toml_deck(std::string_view text) {
  RawDeck deck;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      deck.sections[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    const std::string value = detail::trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": missing key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      if (!section.empty() || key != "topology") throw ConfigError("key '" + key + "': string values are not allowed");
      deck.topology = value.substr(1, value.size() - 2);
      continue;
    }
    if (section.empty()) throw ConfigError("key '" + key + "': numeric keys belong inside a topology section");
    auto& sec = deck.sections[section];
    if (sec.count(key)) throw ConfigError("key '" + key + "': duplicated in [" + section + "]");
    sec[key] = detail::parse_number(key, value);
  }
  return deck;
}

inline RawDeck parse_json_deck(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("top level must be an object");
  RawDeck deck;
  for (const auto& [key, value] : j.items()) {
    if (key == "topology") {
      if (!value.is_string()) throw ConfigError("key 'topology': expected a string");
      deck.topology = value.get<std::string>();
      continue;
    }
    if (!value.is_object()) throw ConfigError("key '" + key + "': expected a parameter section");
    auto& sec = deck.sections[key];
    for (const auto& [k, v] : value.items()) {
      if (!v.is_number()) throw ConfigError("key '" + k + "': expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError("key '" + k + "': value must be finite");
      sec[k] = d;
    }
  }
  return deck;
}

namespace detail {

class SectionReader {
 public:
  SectionReader(const std::map<std::string, double>& sec, std::string name) : sec_(sec), name_(std::move(name)) {}

  double required(const std::string& key) {
    used_.push_back(key);
    auto it = sec_.find(key);
    if (it == sec_.end()) throw ConfigError("missing required key '" + key + "' in [" + name_ + "]");
    return it->second;
  }

  std::optional<double> optional(const std::string& key) {
    used_.push_back(key);
    auto it = sec_.find(key);
    if (it == sec_.end()) return std::nullopt;
    return it->second;
  }

  void finish() const {
    for (const auto& [k, v] : sec_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
        throw ConfigError("unknown key '" + k + "' in [" + name_ + "]");
      }
    }
  }

 private:
  const std::map<std::string, double>& sec_;
  std::string name_;
  std::vector<std::string> used_;
};

}  // namespace detail

inline CircuitParams params_from_section(Topology t, const std::map<std::string, double>& sec) {
  detail::SectionReader r(sec, std::string(to_string(t)));
  CircuitParams out;
  switch (t) {
    case Topology::two_stage: {
      TwoStageParams p;
      p.gm = r.required("gm");
      p.R1 = r.required("R1");
      p.R2 = r.required("R2");
      p.C1 = r.required("C1");
      p.C2 = r.required("C2");
      p.Cc = r.required("Cc");
      p.gm0 = r.optional("gm0");
      out = p;
      break;
    }
    case Topology::current_buffer: {
      CurrentBufferParams p;
      p.gm = r.required("gm");
      p.gmc = r.required("gmc");
      p.R1 = r.required("R1");
      p.R2 = r.required("R2");
      p.C1 = r.required("C1");
      p.C2 = r.required("C2");
      p.Cc = r.required("Cc");
      p.gm0 = r.optional("gm0");
      out = p;
      break;
    }
    case Topology::nmc: {
      NmcParams p;
      p.gm0 = r.optional("gm0").value_or(0.0);
      p.gm1 = r.required("gm1");
      p.gm2 = r.required("gm2");
      p.R0 = r.required("R0");
      p.R1 = r.required("R1");
      p.R2 = r.required("R2");
      p.C0 = r.required("C0");
      p.C1 = r.required("C1");
      p.C2 = r.required("C2");
      p.Cc0 = r.required("Cc0");
      p.Cc1 = r.required("Cc1");
      out = p;
      break;
    }
  }
  r.finish();
  try {
    validate(out);
  } catch (const Error& e) {
    throw ConfigError(e.what() + std::string("; in [") + std::string(to_string(t)) + "]");
  }
  return out;
}

/// Resolves a deck into a run configuration. `forced` (from the command line)
/// takes precedence over the deck's own topology tag.
inline RunConfig resolve(const RawDeck& deck, std::optional<Topology> forced) {
  std::optional<Topology> t = forced;
  if (!t && deck.topology) {
    try {
      t = parse_topology(*deck.topology);
    } catch (const Error&) {
      throw ConfigError("key 'topology': unknown tag '" + *deck.topology + "'");
    }
  }
  if (!t && deck.sections.size() == 1) {
    try {
      t = parse_topology(deck.sections.begin()->first);
    } catch (const Error&) {
    }
  }
  if (!t) throw ConfigError("key 'topology': not given");
  for (const auto& [name, sec] : deck.sections) {
    try {
      parse_topology(name);
    } catch (const Error&) {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  const auto it = deck.sections.find(std::string(to_string(*t)));
  if (it == deck.sections.end()) throw ConfigError("missing section [" + std::string(to_string(*t)) + "]");
  return {*t, params_from_section(*t, it->second)};
}

inline RawDeck parse_deck(std::string_view text, bool json) { return json ? parse_json_deck(text) : parse_toml_deck(text); }

inline RunConfig load_config(const std::filesystem::path& path, std::optional<Topology> forced) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = path.extension() == ".json" || (first != std::string::npos && text[first] == '{');
  return resolve(parse_deck(text, json), forced);
}

/// Built-in example decks, used when no config file is given.
inline CircuitParams default_params(Topology t) {
  switch (t) {
    case Topology::two_stage:
      return TwoStageParams{1e-3, 1e6, 1e6, 1e-13, 1e-11, 1e-12, 1e-5};
    case Topology::current_buffer:
      return CurrentBufferParams{1e-3, 1e-3, 1e6, 1e6, 1e-14, 1e-10, 1e-12, 1e-5};
    case Topology::nmc: {
      NmcParams p;
      p.gm0 = 1e-5;
      p.Cc0 = 1e-12;
      p.Cc1 = 0.5e-12;
      p.gm1 = 1e-5;   // gm1/Cc1 = 2 GBW
      p.gm2 = 8e-4;   // -gm2/C2 = -8 GBW
      p.C2 = 1e-11;
      p.C0 = p.C1 = 1e-15;
      p.R0 = p.R1 = p.R2 = 1e7;
      return p;
    }
  }
  return TwoStageParams{};
}

}  // namespace millerpole
