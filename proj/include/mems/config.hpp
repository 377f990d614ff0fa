#pragma once

// key = value run configuration with [section] headers and '#' comments.
// Every key has a default; unknown keys and duplicates are errors so that a
// typo never silently falls back to a default.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mems/continuation.hpp"
#include "mems/errors.hpp"
#include "mems/problem.hpp"
#include "mems/solver.hpp"

namespace mems {

struct RunConfig {
  // [problem]
  int dimension = 2;
  double alpha = 0.0;
  std::string h_modifier = "constant:1";

  // [mesh]
  int intervals = 4096;
  /// Empty means "auto": 1 for N <= 7, 2 for N >= 8.
  std::optional<double> gamma;

  // [solver]
  double tol_newton = 1e-10;
  double delta_reg = 1e-6;
  int max_iter = 50;
  double eigen_tol = 1e-10;

  // [continuation]
  double ds0 = 0.02;
  double amplitude_max = 0.999;
  int max_steps = 20000;
  int thin_every = 10;
  int stop_after_folds = 0;
  int eigen_count = 3;
  double min_core_cells = 1.0;

  // [sweep]: minimal-branch λ grid and oracle amplitudes
  double lambda_min = 0.0;
  double lambda_max = 1.0;
  int lambda_steps = 64;
  std::vector<double> amplitudes{0.1, 0.5, 0.9};
  int shooting_steps = 20000;

  // [spectrum] and [pohozaev]: the solution is the minimal one at this λ
  double lambda = 0.5;
  int eigen_k = 5;
  double pohozaev_a = 0.0;

  // [certificate]: A row-major (empty means I/N), b (empty means 0)
  std::vector<double> field_A;
  std::vector<double> field_b;
  std::string samples_path;
  int sample_count = 256;

  // [output]
  bool write_csv = true;
  bool write_json = true;
  std::string csv_name = "branch.csv";
  std::string json_name = "summary.json";

  [[nodiscard]] double resolved_gamma() const { return gamma ? *gamma : (dimension >= 8 ? 2.0 : 1.0); }

  [[nodiscard]] ProblemSpec problem() const;
  [[nodiscard]] NewtonOptions newton() const {
    NewtonOptions o;
    o.tol = tol_newton;
    o.delta_reg = delta_reg;
    o.max_iter = max_iter;
    return o;
  }
  [[nodiscard]] ContinuationOptions continuation() const {
    ContinuationOptions o;
    o.ds0 = ds0;
    o.amplitude_max = amplitude_max;
    o.max_steps = max_steps;
    o.thin_every = thin_every;
    o.stop_after_folds = stop_after_folds;
    o.eigen_count = eigen_count;
    o.min_core_cells = min_core_cells;
    o.eigen_tol = eigen_tol;
    o.newton = newton();
    return o;
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<int> to_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_g17(v[i]);
  }
  return s;
}

}  // namespace detail

/// "constant:<c>" or "quadratic:<c0>,<c2>" (h = c0 + c2 r^2).
inline ProfileModifier parse_profile_modifier(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DomainError("h_modifier: expected kind:parameters");
  const auto kind = detail::trim(text.substr(0, colon));
  const auto args = detail::split_list(text.substr(colon + 1));
  std::vector<double> vals;
  for (auto a : args) {
    auto v = detail::to_double(a);
    if (!v) throw DomainError("h_modifier: bad number '" + std::string(a) + "'");
    vals.push_back(*v);
  }
  if (kind == "constant" && vals.size() == 1) return ProfileModifier::constant(vals[0]);
  if (kind == "quadratic" && vals.size() == 2) return ProfileModifier::quadratic(vals[0], vals[1]);
  throw DomainError("h_modifier: unknown form '" + std::string(text) + "'");
}

inline ProblemSpec RunConfig::problem() const {
  return ProblemSpec(dimension, alpha, parse_profile_modifier(h_modifier));
}

/// Range checks shared by the parser and programmatic construction.
inline void validate_config(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
  };
  require(c.dimension >= 1, "dimension must be >= 1");
  require(c.alpha >= 0.0 && std::isfinite(c.alpha), "alpha must be >= 0");
  (void)c.problem();
  require(c.intervals >= 16, "M must be >= 16");
  require(!c.gamma || *c.gamma >= 1.0, "gamma must be >= 1 or auto");
  require(c.tol_newton > 0.0, "tol_newton must be > 0");
  require(c.delta_reg > 0.0 && c.delta_reg < 0.5, "delta_reg must lie in (0, 0.5)");
  require(c.max_iter >= 1, "max_iter must be >= 1");
  require(c.eigen_tol > 0.0, "eigen_tol must be > 0");
  require(c.ds0 > 0.0, "ds0 must be > 0");
  require(c.amplitude_max > 0.0 && c.amplitude_max < 1.0 - c.delta_reg,
          "amplitude_max must lie in (0, 1 - delta_reg)");
  require(c.max_steps >= 1, "max_steps must be >= 1");
  require(c.thin_every >= 1, "thin_every must be >= 1");
  require(c.stop_after_folds >= 0, "stop_after_folds must be >= 0");
  require(c.eigen_count >= 1 && c.eigen_count <= 10, "eigen_count must lie in [1, 10]");
  require(c.min_core_cells >= 0.0, "min_core_cells must be >= 0");
  require(c.lambda_min >= 0.0 && c.lambda_max > c.lambda_min, "need 0 <= lambda_min < lambda_max");
  require(c.lambda_steps >= 1, "lambda_steps must be >= 1");
  for (double a : c.amplitudes) require(a > 0.0 && a < 1.0, "amplitudes must lie in (0, 1)");
  require(c.shooting_steps >= 1000, "shooting_steps must be >= 1000");
  require(c.lambda >= 0.0, "lambda must be >= 0");
  require(c.eigen_k >= 1 && c.eigen_k <= 10, "eigen_k must lie in [1, 10]");
  const auto n = static_cast<std::size_t>(c.dimension);
  require(c.field_A.empty() || c.field_A.size() == n * n, "field_A must have N*N entries");
  require(c.field_b.empty() || c.field_b.size() == n, "field_b must have N entries");
  require(c.sample_count >= 0, "sample_count must be >= 0");
  require(!c.write_csv || !c.csv_name.empty(), "csv_name must be set when write_csv is on");
  require(!c.write_json || !c.json_name.empty(), "json_name must be set when write_json is on");
}

namespace detail {

struct KeyInfo {
  const char* section;
  const char* key;
};

inline constexpr KeyInfo kKeys[] = {
    {"problem", "dimension"},     {"problem", "alpha"},          {"problem", "h_modifier"},
    {"mesh", "M"},                {"mesh", "gamma"},             {"solver", "tol_newton"},
    {"solver", "delta_reg"},      {"solver", "max_iter"},        {"solver", "eigen_tol"},
    {"continuation", "ds0"},      {"continuation", "amplitude_max"},
    {"continuation", "max_steps"}, {"continuation", "thin_every"},
    {"continuation", "stop_after_folds"}, {"continuation", "eigen_count"}, {"continuation", "min_core_cells"},
    {"sweep", "lambda_min"},      {"sweep", "lambda_max"},       {"sweep", "lambda_steps"},
    {"sweep", "amplitudes"},      {"sweep", "shooting_steps"},   {"spectrum", "lambda"},
    {"spectrum", "eigen_k"},      {"pohozaev", "a"},             {"certificate", "A"},
    {"certificate", "b"},         {"certificate", "samples"},    {"certificate", "sample_count"},
    {"output", "write_csv"},      {"output", "write_json"},      {"output", "csv_name"},
    {"output", "json_name"},
};

inline const KeyInfo* find_key(std::string_view key) {
  for (const auto& k : kKeys) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

inline bool known_section(std::string_view s) {
  return std::any_of(std::begin(kKeys), std::end(kKeys), [&](const KeyInfo& k) { return s == k.section; });
}

}  // namespace detail

/// Parses the configuration text. Keys may appear before any section header;
/// inside a section they must belong to it.
inline RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", lineno);
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (!detail::known_section(section)) throw ParseError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    const auto* info = detail::find_key(key);
    if (info == nullptr) throw ParseError("unknown key '" + key + "'", lineno);
    if (!section.empty() && section != info->section) {
      throw ParseError("key '" + key + "' belongs to [" + info->section + "], not [" + section + "]", lineno);
    }
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", lineno);

    auto num = [&]() {
      auto v = detail::to_double(val);
      if (!v) throw ParseError(key + ": expected a number, got '" + std::string(val) + "'", lineno);
      return *v;
    };
    auto integer = [&]() {
      auto v = detail::to_int(val);
      if (!v) throw ParseError(key + ": expected an integer, got '" + std::string(val) + "'", lineno);
      return *v;
    };
    auto list = [&]() {
      std::vector<double> out;
      for (auto item : detail::split_list(val)) {
        auto v = detail::to_double(item);
        if (!v) throw ParseError(key + ": bad list entry '" + std::string(item) + "'", lineno);
        out.push_back(*v);
      }
      return out;
    };
    auto boolean = [&]() {
      if (val == "true" || val == "1") return true;
      if (val == "false" || val == "0") return false;
      throw ParseError(key + ": expected true or false", lineno);
    };

    if (key == "dimension") c.dimension = integer();
    else if (key == "alpha") c.alpha = num();
    else if (key == "h_modifier") c.h_modifier = std::string(val);
    else if (key == "M") c.intervals = integer();
    else if (key == "gamma") c.gamma = val == "auto" ? std::nullopt : std::optional<double>(num());
    else if (key == "tol_newton") c.tol_newton = num();
    else if (key == "delta_reg") c.delta_reg = num();
    else if (key == "max_iter") c.max_iter = integer();
    else if (key == "eigen_tol") c.eigen_tol = num();
    else if (key == "ds0") c.ds0 = num();
    else if (key == "amplitude_max") c.amplitude_max = num();
    else if (key == "max_steps") c.max_steps = integer();
    else if (key == "thin_every") c.thin_every = integer();
    else if (key == "stop_after_folds") c.stop_after_folds = integer();
    else if (key == "eigen_count") c.eigen_count = integer();
    else if (key == "min_core_cells") c.min_core_cells = num();
    else if (key == "lambda_min") c.lambda_min = num();
    else if (key == "lambda_max") c.lambda_max = num();
    else if (key == "lambda_steps") c.lambda_steps = integer();
    else if (key == "amplitudes") c.amplitudes = list();
    else if (key == "shooting_steps") c.shooting_steps = integer();
    else if (key == "lambda") c.lambda = num();
    else if (key == "eigen_k") c.eigen_k = integer();
    else if (key == "a") c.pohozaev_a = num();
    else if (key == "A") c.field_A = list();
    else if (key == "b") c.field_b = list();
    else if (key == "samples") c.samples_path = std::string(val);
    else if (key == "sample_count") c.sample_count = integer();
    else if (key == "write_csv") c.write_csv = boolean();
    else if (key == "write_json") c.write_json = boolean();
    else if (key == "csv_name") c.csv_name = std::string(val);
    else if (key == "json_name") c.json_name = std::string(val);
  }
  validate_config(c);
  return c;
}

/// Canonical text form; parse_config(render_config(c)) == c.
inline std::string render_config(const RunConfig& c) {
  using detail::format_g17;
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[problem]\n"
    << "dimension = " << c.dimension << "\n"
    << "alpha = " << format_g17(c.alpha) << "\n"
    << "h_modifier = " << c.h_modifier << "\n\n"
    << "[mesh]\n"
    << "M = " << c.intervals << "\n"
    << "gamma = " << (c.gamma ? format_g17(*c.gamma) : std::string("auto")) << "\n\n"
    << "[solver]\n"
    << "tol_newton = " << format_g17(c.tol_newton) << "\n"
    << "delta_reg = " << format_g17(c.delta_reg) << "\n"
    << "max_iter = " << c.max_iter << "\n"
    << "eigen_tol = " << format_g17(c.eigen_tol) << "\n\n"
    << "[continuation]\n"
    << "ds0 = " << format_g17(c.ds0) << "\n"
    << "amplitude_max = " << format_g17(c.amplitude_max) << "\n"
    << "max_steps = " << c.max_steps << "\n"
    << "thin_every = " << c.thin_every << "\n"
    << "stop_after_folds = " << c.stop_after_folds << "\n"
    << "eigen_count = " << c.eigen_count << "\n"
    << "min_core_cells = " << format_g17(c.min_core_cells) << "\n\n"
    << "[sweep]\n"
    << "lambda_min = " << format_g17(c.lambda_min) << "\n"
    << "lambda_max = " << format_g17(c.lambda_max) << "\n"
    << "lambda_steps = " << c.lambda_steps << "\n"
    << "amplitudes = " << detail::join_numbers(c.amplitudes) << "\n"
    << "shooting_steps = " << c.shooting_steps << "\n\n"
    << "[spectrum]\n"
    << "lambda = " << format_g17(c.lambda) << "\n"
    << "eigen_k = " << c.eigen_k << "\n\n"
    << "[pohozaev]\n"
    << "a = " << format_g17(c.pohozaev_a) << "\n\n"
    << "[certificate]\n"
    << "A = " << detail::join_numbers(c.field_A) << "\n"
    << "b = " << detail::join_numbers(c.field_b) << "\n"
    << "samples = " << c.samples_path << "\n"
    << "sample_count = " << c.sample_count << "\n\n"
    << "[output]\n"
    << "write_csv = " << b(c.write_csv) << "\n"
    << "write_json = " << b(c.write_json) << "\n"
    << "csv_name = " << c.csv_name << "\n"
    << "json_name = " << c.json_name << "\n";
  return o.str();
}

}  // namespace mems
