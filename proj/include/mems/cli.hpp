#pragma once

// Subcommand orchestration for the command-line driver. Exit codes:
// 0 success, 1 usage/configuration/I-O error, 2 numerical failure.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "mems/config.hpp"
#include "mems/continuation.hpp"
#include "mems/discretization.hpp"
#include "mems/errors.hpp"
#include "mems/io.hpp"
#include "mems/mesh.hpp"
#include "mems/pohozaev.hpp"
#include "mems/problem.hpp"
#include "mems/shooting.hpp"
#include "mems/solver.hpp"
#include "mems/spectrum.hpp"

namespace mems {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"trace",    "minimal",     "spectrum", "extremal",
                                              "pohozaev", "certificate", "oracle"};
  return names;
}

inline std::string usage_text(const std::string& program = "mems_bifurcate") {
  std::string s = "usage: " + program + " <subcommand> --config <path> [--out <dir>]\nsubcommands:";
  for (const auto& n : subcommand_names()) s += " " + n;
  return s + "\n";
}

/// Worker count from MEMS_BIFURCATE_THREADS (advisory; at least 1).
inline int worker_threads() {
  const char* env = std::getenv("MEMS_BIFURCATE_THREADS");
  if (env == nullptr) return 1;
  auto v = detail::to_int(env);
  return v && *v >= 1 ? *v : 1;
}

/// Raised for failures that map to exit code 2.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline Discretization make_discretization(const RunConfig& c) {
  return Discretization(build_mesh(c.intervals, c.resolved_gamma(), c.dimension), c.problem());
}

/// Minimal solution at λ by a warm-started sweep from 0.
inline Solution minimal_solution(const Discretization& disc, double lambda, const NewtonOptions& opt) {
  if (lambda == 0.0) {
    Solution s;
    s.u.assign(disc.mesh().size(), 0.0);
    return s;
  }
  std::vector<double> grid;
  constexpr int kSteps = 32;
  for (int k = 1; k <= kSteps; ++k) grid.push_back(lambda * k / kSteps);
  auto sweep = minimal_branch(disc, grid, opt);
  if (sweep.truncated) {
    throw NumericalFailure("no minimal solution found at lambda = " + format_g17(lambda) +
                           " (Newton failed at " + format_g17(*sweep.failed_lambda) + ")");
  }
  return sweep.solutions.back();
}

struct Artifacts {
  const RunConfig& config;
  std::filesystem::path dir;

  void csv(const std::string& content) const {
    if (config.write_csv) write_text_file(dir / config.csv_name, content);
  }
  void json(const Json& j) const {
    if (config.write_json) write_text_file(dir / config.json_name, dump(j));
  }
};

inline int run_trace(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  const auto disc = make_discretization(c);
  const Branch br = trace_branch(disc, c.continuation());
  if (c.write_csv) export_branch_csv(br, out.dir / c.csv_name);
  out.json(branch_summary(br));
  const auto& last = br.points.back();
  log << "trace: " << br.points.size() << " points, " << br.folds.size() << " folds, status "
      << to_string(br.status) << ", last (lambda, u(0)) = (" << format_g17(last.lambda) << ", "
      << format_g17(last.amplitude) << ")\n";
  for (const auto& f : br.folds) {
    log << "  fold lambda = " << format_g17(f.lambda) << " at u(0) = " << format_g17(f.amplitude)
        << ", index " << f.index_before << " -> " << f.index_after << "\n";
  }
  const bool ok = br.status == TraceStatus::Completed || br.status == TraceStatus::FoldLimit;
  return ok ? kExitOk : kExitNumerical;
}

inline int run_minimal(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  const auto disc = make_discretization(c);
  std::vector<double> grid;
  if (c.lambda_min == 0.0) grid.push_back(0.0);
  for (int k = 0; k <= c.lambda_steps; ++k) {
    const double l = c.lambda_min + (c.lambda_max - c.lambda_min) * k / c.lambda_steps;
    if (l > 0.0 && (grid.empty() || l > grid.back())) grid.push_back(l);
  }
  const auto sweep = minimal_branch(disc, grid, c.newton());
  std::string csv = "lambda,amplitude,residual_norm,newton_iters\n";
  for (const auto& s : sweep.solutions) {
    csv += format_g17(s.lambda) + ',' + format_g17(s.amplitude) + ',' + format_g17(s.residual_norm) +
           ',' + std::to_string(s.newton_iters) + '\n';
  }
  out.csv(csv);
  Json j{{"solutions", sweep.solutions.size()},
         {"truncated", sweep.truncated},
         {"last_good_lambda", number(sweep.last_good_lambda)},
         {"failed_lambda", sweep.failed_lambda ? number(*sweep.failed_lambda) : Json(nullptr)}};
  if (sweep.truncated) j["note"] = "Newton failed past the last converged lambda; no minimal solution was found beyond it";
  out.json(j);
  log << "minimal: " << sweep.solutions.size() << " solutions"
      << (sweep.truncated ? ", truncated at lambda = " + format_g17(*sweep.failed_lambda) : std::string())
      << "\n";
  return kExitOk;
}

inline int run_spectrum(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  const auto disc = make_discretization(c);
  const auto sol = minimal_solution(disc, c.lambda, c.newton());
  EigenOptions eo;
  eo.tol = c.eigen_tol;
  const auto spec = smallest_eigenvalues(symmetrize(disc, sol.u, c.lambda), c.eigen_k, eo);
  std::string csv = "index,eigenvalue,residual\n";
  Json ev = Json::array();
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    csv += std::to_string(i + 1) + ',' + format_g17(spec.eigenvalues[i]) + ',' + format_g17(spec.residuals[i]) + '\n';
    ev.push_back(number(spec.eigenvalues[i]));
  }
  out.csv(csv);
  const auto stab = classify_stability(spec.eigenvalues.front());
  out.json(Json{{"lambda", number(c.lambda)},
                {"amplitude", number(sol.amplitude)},
                {"eigenvalues", ev},
                {"morse_index_radial", spec.morse_index_radial},
                {"stability", to_string(stab.kind)}});
  log << "spectrum: mu1 = " << format_g17(spec.eigenvalues.front()) << ", Morse index "
      << spec.morse_index_radial << "\n";
  return kExitOk;
}

inline int run_extremal(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  (void)c.problem();
  const auto e = exact_extremal(c.dimension, c.alpha);
  Json j = to_json(e);
  if (c.dimension >= 2) j["identity_defect"] = number(verify_extremal_identity(c.dimension, c.alpha));
  if (c.dimension >= 8) j["alpha_threshold"] = number(alpha_threshold(c.dimension));
  out.json(j);
  log << "extremal: lambda* = " << format_g17(e.lambda_star) << ", beta = " << format_g17(e.beta)
      << ", " << to_string(e.regime) << "\n";
  return kExitOk;
}

inline int run_pohozaev(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  const auto disc = make_discretization(c);
  const auto sol = minimal_solution(disc, c.lambda, c.newton());
  const auto rep = pohozaev_residual(disc.mesh(), disc.spec(), c.lambda, sol.u, {}, c.pohozaev_a);
  Json j = to_json(rep);
  j["lambda"] = number(c.lambda);
  j["a"] = number(c.pohozaev_a);
  out.json(j);
  log << "pohozaev: relative residual " << format_g17(rep.relative_residual)
      << (rep.coarse_mesh_warning ? " (mesh too coarse)" : "") << "\n";
  return kExitOk;
}

inline int run_certificate(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  AffineField field = AffineField::radial(c.dimension);
  if (!c.field_A.empty()) field.A = c.field_A;
  if (!c.field_b.empty()) field.b = c.field_b;
  const auto samples = c.samples_path.empty()
                           ? unit_sphere_samples(c.dimension, c.sample_count)
                           : parse_boundary_samples(read_text_file(c.samples_path), c.dimension);
  const auto cert = star_certificate(samples, c.dimension, c.alpha, field);
  out.json(to_json(cert));
  log << "certificate: " << to_string(cert.verdict) << ", M = " << format_g17(cert.M_bound)
      << ", min flux = " << format_g17(cert.boundary_min_flux) << "\n";
  return kExitOk;
}

inline int run_oracle(const RunConfig& c, const Artifacts& out, std::ostream& log) {
  const auto spec = c.problem();
  const auto& amps = c.amplitudes;
  std::vector<double> shoot(amps.size());
  // Shooting runs are independent; results land in input order.
  const int threads = std::min<int>(worker_threads(), std::max<std::size_t>(amps.size(), 1));
  std::vector<std::future<void>> jobs;
  for (int w = 0; w < threads; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < amps.size(); i += static_cast<std::size_t>(threads)) {
        shoot[i] = shooting_oracle(spec, amps[i], c.shooting_steps).lambda;
      }
    }));
  }
  for (auto& j : jobs) j.get();

  const auto disc = make_discretization(c);
  AmplitudeOptions ao;
  ao.newton = c.newton();
  std::string csv = "amplitude,lambda_shooting,lambda_fd,relative_difference\n";
  Json rows = Json::array();
  std::vector<AmplitudeSolution> states;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    auto res = amplitude_solve(disc, amps[i], ao);
    if (!res) throw NumericalFailure("amplitude_solve failed at u(0) = " + format_g17(amps[i]) + ": " + res.error().reason);
    const double fd = res.value().lambda;
    const double rel = std::abs(fd - shoot[i]) / std::abs(shoot[i]);
    csv += format_g17(amps[i]) + ',' + format_g17(shoot[i]) + ',' + format_g17(fd) + ',' + format_g17(rel) + '\n';
    rows.push_back(Json{{"amplitude", number(amps[i])},
                        {"lambda_shooting", number(shoot[i])},
                        {"lambda_fd", number(fd)},
                        {"relative_difference", number(rel)}});
    log << "oracle: u(0) = " << format_g17(amps[i]) << "  shooting " << format_g17(shoot[i]) << "  fd "
        << format_g17(fd) << "\n";
  }
  out.csv(csv);
  out.json(Json{{"rows", rows}});
  return kExitOk;
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

/// Runs one subcommand and writes its artifacts plus a run_meta.json sidecar
/// (the only file with timestamps) into out_dir.
inline int run_subcommand(const std::string& name, const RunConfig& config,
                          const std::filesystem::path& out_dir, std::ostream& log = std::cout,
                          std::ostream& err = std::cerr) {
  const auto& names = subcommand_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    err << "unknown subcommand '" << name << "'\n" << usage_text();
    return kExitUsage;
  }
  const auto started = detail::utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  std::string failure;
  try {
    validate_config(config);
    std::filesystem::create_directories(out_dir);
    const detail::Artifacts out{config, out_dir};
    if (name == "trace") code = detail::run_trace(config, out, log);
    else if (name == "minimal") code = detail::run_minimal(config, out, log);
    else if (name == "spectrum") code = detail::run_spectrum(config, out, log);
    else if (name == "extremal") code = detail::run_extremal(config, out, log);
    else if (name == "pohozaev") code = detail::run_pohozaev(config, out, log);
    else if (name == "certificate") code = detail::run_certificate(config, out, log);
    else code = detail::run_oracle(config, out, log);
  } catch (const NumericalFailure& e) {
    failure = e.what();
    code = kExitNumerical;
  } catch (const SingularityError& e) {
    failure = e.what();
    code = kExitNumerical;
  } catch (const PivotError& e) {
    failure = e.what();
    code = kExitNumerical;
  } catch (const BracketError& e) {
    failure = e.what();
    code = kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    failure = e.what();
    code = kExitUsage;
  } catch (const std::exception& e) {
    failure = e.what();
    code = kExitUsage;
  }
  if (!failure.empty()) err << name << ": " << failure << "\n";

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    if (std::filesystem::is_directory(out_dir)) {
      Json meta{{"subcommand", name},
                {"started_utc", started},
                {"elapsed_seconds", elapsed},
                {"threads", worker_threads()},
                {"exit_code", code},
                {"config", render_config(config)}};
      if (!failure.empty()) meta["error"] = failure;
      write_text_file(out_dir / "run_meta.json", dump(meta));
    }
  } catch (const std::exception& e) {
    err << "run_meta.json: " << e.what() << "\n";
    if (code == kExitOk) code = kExitUsage;
  }
  return code;
}

}  // namespace mems
