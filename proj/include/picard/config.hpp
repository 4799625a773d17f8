#pragma once

// Run configuration files.
//
//   # comment
//   [problem]
//   builtin = heat2d_forced          ; optional, explicit keys override it
//   F = "u_xx - u_yy - u + (1+t)*sinh(x+y)"
//   c = ["sinh(x+y)"]
//   lo = [0, 0]
//
// Sections: problem, grid, run, analysis, output. Values are numbers, bare
// words, double-quoted strings (\" and \\ escapes) or bracketed arrays of
// those. Unknown sections and keys are rejected.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "picard/analysis.hpp"
#include "picard/error.hpp"
#include "picard/picard.hpp"
#include "picard/problems.hpp"

namespace picard {

enum class TimeInterval { config, delta1 };
enum class DumpMode { none, final, all };

inline const char* to_string(TimeInterval t) { return t == TimeInterval::config ? "config" : "delta1"; }
inline const char* to_string(DumpMode d) {
  switch (d) {
    case DumpMode::none: return "none";
    case DumpMode::final: return "final";
    case DumpMode::all: return "all";
  }
  return "none";
}

struct GridConfig {
  int n_t = 65;
  std::vector<int> n_x;
  int ghost = 2;
  bool operator==(const GridConfig&) const = default;
};

struct RunSettings {
  int p_max = 10;
  double tol = 1e-8;
  NormKind norm = NormKind::sup;
  bool symmetric_time = false;
  TimeInterval time_interval = TimeInterval::config;
  std::optional<int> halo;
  bool operator==(const RunSettings&) const = default;
};

struct AnalysisConfig {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 12345;
  BoxCenter box_center = BoxCenter::u0;
  bool operator==(const AnalysisConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::string report = "report.json";
  std::string iterations_csv = "iterations.csv";
  DumpMode dump = DumpMode::final;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  ProblemSource problem;
  GridConfig grid;
  RunSettings run;
  AnalysisConfig analysis;
  OutputConfig output;
  bool operator==(const RunConfig&) const = default;
};

inline int default_nodes(int k) { return k <= 2 ? 33 : (k == 3 ? 17 : 9); }

namespace detail {

struct ConfigValue {
  bool is_array = false;
  std::vector<std::string> items;
  std::vector<bool> quoted;
  int line = 0;
};

using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

inline Error config_error(int line, const std::string& msg) {
  return Error(ErrorCode::config, "line " + std::to_string(line) + ": " + msg);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class ValueLexer {
 public:
  ValueLexer(std::string_view s, int line) : s_(s), line_(line) {}

  ConfigValue parse() {
    ConfigValue v;
    v.line = line_;
    skip();
    if (peek() == '[') {
      ++pos_;
      v.is_array = true;
      skip();
      if (peek() == ']') {
        ++pos_;
      } else {
        while (true) {
          scalar(v);
          skip();
          if (peek() == ',') {
            ++pos_;
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          throw config_error(line_, "expected ',' or ']' in array");
        }
      }
    } else {
      scalar(v);
    }
    skip();
    if (pos_ < s_.size() && s_[pos_] != '#' && s_[pos_] != ';') throw config_error(line_, "trailing characters after value");
    return v;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  void scalar(ConfigValue& v) {
    skip();
    if (peek() == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (pos_ >= s_.size()) throw config_error(line_, "unterminated string");
        const char c = s_[pos_++];
        if (c == '"') break;
        if (c == '\\') {
          if (pos_ >= s_.size()) throw config_error(line_, "dangling escape");
          const char e = s_[pos_++];
          if (e != '"' && e != '\\') throw config_error(line_, std::string("unknown escape \\") + e);
          out += e;
        } else {
          out += c;
        }
      }
      v.items.push_back(out);
      v.quoted.push_back(true);
      return;
    }
    const std::size_t b = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ';') ++pos_;
    const auto word = trim(s_.substr(b, pos_ - b));
    if (word.empty()) throw config_error(line_, "missing value");
    v.items.emplace_back(word);
    v.quoted.push_back(false);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

inline ConfigTable parse_table(std::string_view text) {
  static const std::map<std::string, std::vector<std::string>> schema{
      {"problem",
       {"builtin", "name", "n", "m", "k", "F", "G", "g", "c", "lo", "hi", "t_lo", "t_hi", "R", "exact", "L_override",
        "M_override"}},
      {"grid", {"n_t", "n_x", "ghost"}},
      {"run", {"p_max", "tol", "norm", "symmetric_time", "time_interval", "halo"}},
      {"analysis", {"samples", "seed", "box_center"}},
      {"output", {"dir", "report", "iterations_csv", "dump"}},
  };
  ConfigTable table;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) throw config_error(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, close - 1)));
      if (!schema.count(section)) throw config_error(line_no, "unknown section [" + section + "]");
      const auto rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest[0] != '#' && rest[0] != ';') throw config_error(line_no, "text after section header");
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw config_error(line_no, "expected 'key = value'");
    if (section.empty()) throw config_error(line_no, "key outside of a section");
    const std::string key(trim(line.substr(0, eq)));
    const auto& keys = schema.at(section);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw config_error(line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    if (table[section].count(key)) throw config_error(line_no, "duplicate key '" + key + "'");
    table[section][key] = ValueLexer(line.substr(eq + 1), line_no).parse();
  }
  return table;
}

class SectionReader {
 public:
  SectionReader(const ConfigTable& t, const std::string& section) {
    if (auto it = t.find(section); it != t.end()) values_ = &it->second;
  }

  bool has(const std::string& key) const { return values_ && values_->count(key); }
  const ConfigValue& get(const std::string& key) const { return values_->at(key); }

  std::string scalar(const std::string& key) const {
    const auto& v = get(key);
    if (v.is_array || v.items.size() != 1) throw config_error(v.line, "'" + key + "' must be a single value");
    return v.items[0];
  }

  template <class T>
  static T number(const std::string& s, int line, const std::string& key) {
    T out{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && s[0] == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || ptr != e) throw config_error(line, "'" + key + "' is not a valid number: " + s);
    return out;
  }

  template <class T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    out = number<T>(scalar(key), get(key).line, key);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) const {
    if (!has(key)) return;
    out = number<T>(scalar(key), get(key).line, key);
  }

  void read(const std::string& key, std::string& out) const {
    if (has(key)) out = scalar(key);
  }

  void read(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const auto s = scalar(key);
    if (s == "true") {
      out = true;
    } else if (s == "false") {
      out = false;
    } else {
      throw config_error(get(key).line, "'" + key + "' must be true or false");
    }
  }

  template <class T>
  void read_array(const std::string& key, std::vector<T>& out) const {
    if (!has(key)) return;
    const auto& v = get(key);
    if (!v.is_array) throw config_error(v.line, "'" + key + "' must be a bracketed array");
    out.clear();
    for (const auto& item : v.items) {
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(item);
      } else {
        out.push_back(number<T>(item, v.line, key));
      }
    }
  }

  template <class E>
  void read_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> options) const {
    if (!has(key)) return;
    const auto s = scalar(key);
    for (const auto& [name, value] : options) {
      if (s == name) {
        out = value;
        return;
      }
    }
    throw config_error(get(key).line, "invalid value '" + s + "' for '" + key + "'");
  }

 private:
  const std::map<std::string, ConfigValue>* values_ = nullptr;
};

}  // namespace detail

/// Parses configuration text; missing keys take the defaults of RunConfig,
/// and `builtin` seeds the problem section.
inline RunConfig parse_config(std::string_view text) {
  const auto table = detail::parse_table(text);
  RunConfig cfg;
  const detail::SectionReader prob(table, "problem");
  ProblemSource& p = cfg.problem;
  if (prob.has("builtin")) {
    try {
      p = builtin(prob.scalar("builtin")).source;
    } catch (const Error& e) {
      throw detail::config_error(prob.get("builtin").line, e.what());
    }
  }
  prob.read("name", p.name);
  prob.read("n", p.n);
  prob.read("m", p.m);
  prob.read("k", p.k);
  prob.read("F", p.F);
  prob.read("G", p.G);
  prob.read("g", p.g);
  prob.read_array("c", p.c);
  prob.read_array("lo", p.lo);
  prob.read_array("hi", p.hi);
  prob.read("t_lo", p.t_lo);
  prob.read("t_hi", p.t_hi);
  prob.read("R", p.R);
  prob.read("exact", p.exact);
  prob.read("L_override", p.L_override);
  prob.read("M_override", p.M_override);
  if (p.F.empty()) throw Error(ErrorCode::config, "[problem] needs F or builtin");
  if (p.k < 1) throw Error(ErrorCode::config, "[problem] k must be >= 1");
  if (p.lo.empty()) p.lo.assign(static_cast<std::size_t>(p.k), 0.0);
  if (p.hi.empty()) p.hi.assign(static_cast<std::size_t>(p.k), 1.0);
  if (p.c.empty()) p.c.assign(static_cast<std::size_t>(p.n), "0");

  const detail::SectionReader grid(table, "grid");
  grid.read("n_t", cfg.grid.n_t);
  grid.read_array("n_x", cfg.grid.n_x);
  grid.read("ghost", cfg.grid.ghost);
  if (cfg.grid.n_x.empty()) cfg.grid.n_x.assign(static_cast<std::size_t>(p.k), default_nodes(p.k));
  if (cfg.grid.n_x.size() == 1 && p.k > 1) cfg.grid.n_x.assign(static_cast<std::size_t>(p.k), cfg.grid.n_x[0]);

  const detail::SectionReader run(table, "run");
  run.read("p_max", cfg.run.p_max);
  run.read("tol", cfg.run.tol);
  run.read_enum("norm", cfg.run.norm, {{"sup", NormKind::sup}, {"cN", NormKind::cn}, {"cn", NormKind::cn}});
  run.read("symmetric_time", cfg.run.symmetric_time);
  // Without an explicit time interval the run uses [0, delta1].
  if (!prob.has("builtin") && !prob.has("t_hi") && !prob.has("t_lo")) cfg.run.time_interval = TimeInterval::delta1;
  run.read_enum("time_interval", cfg.run.time_interval,
                {{"config", TimeInterval::config}, {"delta1", TimeInterval::delta1}});
  if (run.has("halo")) {
    const auto s = run.scalar("halo");
    if (s == "auto") {
      cfg.run.halo.reset();
    } else {
      cfg.run.halo = detail::SectionReader::number<int>(s, run.get("halo").line, "halo");
    }
  }

  const detail::SectionReader an(table, "analysis");
  an.read("samples", cfg.analysis.samples);
  an.read("seed", cfg.analysis.seed);
  an.read_enum("box_center", cfg.analysis.box_center, {{"u0", BoxCenter::u0}, {"start", BoxCenter::start}});

  const detail::SectionReader out(table, "output");
  out.read("dir", cfg.output.dir);
  out.read("report", cfg.output.report);
  out.read("iterations_csv", cfg.output.iterations_csv);
  out.read_enum("dump", cfg.output.dump,
                {{"none", DumpMode::none}, {"final", DumpMode::final}, {"all", DumpMode::all}});
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <class T>
std::string list(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      out += quote(v[i]);
    } else if constexpr (std::is_floating_point_v<T>) {
      out += format_number(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out + "]";
}

}  // namespace detail

/// Writes every field explicitly; parse_config(write_config(c)) == c.
inline std::string write_config(const RunConfig& cfg) {
  using detail::format_number;
  using detail::quote;
  std::ostringstream os;
  const ProblemSource& p = cfg.problem;
  os << "[problem]\n";
  os << "name = " << quote(p.name) << "\n";
  os << "n = " << p.n << "\n";
  os << "m = " << p.m << "\n";
  os << "k = " << p.k << "\n";
  os << "F = " << quote(p.F) << "\n";
  if (!p.G.empty()) os << "G = " << quote(p.G) << "\n";
  if (!p.g.empty()) os << "g = " << quote(p.g) << "\n";
  os << "c = " << detail::list(p.c) << "\n";
  os << "lo = " << detail::list(p.lo) << "\n";
  os << "hi = " << detail::list(p.hi) << "\n";
  os << "t_lo = " << format_number(p.t_lo) << "\n";
  os << "t_hi = " << format_number(p.t_hi) << "\n";
  os << "R = " << format_number(p.R) << "\n";
  if (!p.exact.empty()) os << "exact = " << quote(p.exact) << "\n";
  if (p.L_override) os << "L_override = " << format_number(*p.L_override) << "\n";
  if (p.M_override) os << "M_override = " << format_number(*p.M_override) << "\n";
  os << "\n[grid]\n";
  os << "n_t = " << cfg.grid.n_t << "\n";
  os << "n_x = " << detail::list(cfg.grid.n_x) << "\n";
  os << "ghost = " << cfg.grid.ghost << "\n";
  os << "\n[run]\n";
  os << "p_max = " << cfg.run.p_max << "\n";
  os << "tol = " << format_number(cfg.run.tol) << "\n";
  os << "norm = " << to_string(cfg.run.norm) << "\n";
  os << "symmetric_time = " << (cfg.run.symmetric_time ? "true" : "false") << "\n";
  os << "time_interval = " << to_string(cfg.run.time_interval) << "\n";
  os << "halo = " << (cfg.run.halo ? std::to_string(*cfg.run.halo) : std::string("auto")) << "\n";
  os << "\n[analysis]\n";
  os << "samples = " << cfg.analysis.samples << "\n";
  os << "seed = " << cfg.analysis.seed << "\n";
  os << "box_center = " << to_string(cfg.analysis.box_center) << "\n";
  os << "\n[output]\n";
  os << "dir = " << quote(cfg.output.dir) << "\n";
  os << "report = " << quote(cfg.output.report) << "\n";
  os << "iterations_csv = " << quote(cfg.output.iterations_csv) << "\n";
  os << "dump = " << to_string(cfg.output.dump) << "\n";
  return os.str();
}

/// Configuration reproducing a built-in problem at its default resolution.
inline RunConfig builtin_config(const std::string& id) {
  RunConfig cfg;
  cfg.problem = builtin(id).source;
  cfg.grid.n_x.assign(static_cast<std::size_t>(cfg.problem.k), default_nodes(cfg.problem.k));
  return cfg;
}

inline void export_builtin(const std::string& id, const std::string& path) {
  const std::string text = write_config(builtin_config(id));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io, "write to '" + path + "' failed");
}

}  // namespace picard
