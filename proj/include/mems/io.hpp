#pragma once

// Text artifacts. CSV numbers carry 17 significant digits so a value read
// back is bit-identical; nothing time-dependent goes into data files.

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mems/continuation.hpp"
#include "mems/errors.hpp"
#include "mems/pohozaev.hpp"
#include "mems/problem.hpp"

namespace mems {

using Json = nlohmann::ordered_json;

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline constexpr const char* kBranchCsvHeader = "step,t,lambda,amplitude,mu1,morse_index_radial,is_fold";

inline std::string branch_csv(const Branch& branch) {
  using detail::format_g17;
  std::string s = kBranchCsvHeader;
  s += '\n';
  for (const auto& p : branch.points) {
    s += std::to_string(p.step) + ',' + format_g17(p.t) + ',' + format_g17(p.lambda) + ',' +
         format_g17(p.amplitude) + ',' + format_g17(p.mu1) + ',' +
         std::to_string(p.morse_index_radial) + ',' + (p.is_fold ? '1' : '0') + '\n';
  }
  return s;
}

inline void export_branch_csv(const Branch& branch, const std::filesystem::path& path) {
  if (branch.points.empty()) throw SizeError("export_branch_csv: empty branch");
  write_text_file(path, branch_csv(branch));
}

/// JSON numbers use nlohmann's shortest round-trip form, which is exact for
/// binary64 like %.17g. Non-finite values become null.
inline Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline Json to_json(const Fold& f) {
  return Json{{"index", f.index},
              {"t", number(f.t)},
              {"lambda", number(f.lambda)},
              {"amplitude", number(f.amplitude)},
              {"direction", f.direction > 0 ? "max" : "min"},
              {"fit_residual", number(f.fit_residual)},
              {"morse_before", f.index_before},
              {"morse_after", f.index_after},
              {"mu_critical", number(f.mu_critical)},
              {"mu_spacing", number(f.mu_spacing)}};
}

inline Json branch_summary(const Branch& br) {
  Json folds = Json::array();
  for (const auto& f : br.folds) folds.push_back(to_json(f));
  const auto& last = br.points.back();
  return Json{{"status", to_string(br.status)},
              {"dimension", br.dimension},
              {"alpha", number(br.alpha)},
              {"M", br.mesh_intervals},
              {"gamma", number(br.grading)},
              {"points", br.points.size()},
              {"min_ds", number(br.min_ds)},
              {"last", {{"lambda", number(last.lambda)},
                        {"amplitude", number(last.amplitude)},
                        {"morse_index_radial", last.morse_index_radial}}},
              {"fold_count", br.folds.size()},
              {"folds", folds}};
}

inline Json to_json(const PohozaevReport& r) {
  return Json{{"lhs_volume", number(r.lhs_volume)},
              {"rhs_volume", number(r.rhs_volume)},
              {"boundary_term", number(r.boundary_term)},
              {"residual", number(r.residual)},
              {"relative_residual", number(r.relative_residual)},
              {"coarse_mesh_warning", r.coarse_mesh_warning}};
}

inline Json to_json(const StarShapeCertificate& c) {
  Json a = Json::array(), b = Json::array();
  for (double x : c.field.A) a.push_back(number(x));
  for (double x : c.field.b) b.push_back(number(x));
  return Json{{"dimension", c.field.dimension},
              {"alpha", number(c.alpha)},
              {"A", a},
              {"b", b},
              {"div_check", number(c.div_check)},
              {"mu_bar_sup", number(c.mu_bar_sup)},
              {"boundary_min_flux", number(c.boundary_min_flux)},
              {"M_bound", number(c.M_bound)},
              {"verdict", to_string(c.verdict)},
              {"notes", c.notes}};
}

inline Json to_json(const ClosedFormExtremal& e) {
  return Json{{"dimension", e.dimension},
              {"alpha", number(e.alpha)},
              {"lambda_star", number(e.lambda_star)},
              {"beta", number(e.beta)},
              {"regime", to_string(e.regime)}};
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace mems
