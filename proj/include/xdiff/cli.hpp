#pragma once

// Command-line entry points: run, stability, energies.
//
// Exit codes: 0 success, 2 usage/config/input errors, 3 solver failure.
// Failures print exactly one line to the error stream:
//   error kind=<config|input|solver> [key=value ...] message="..."

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xdiff/config.hpp"
#include "xdiff/csv.hpp"
#include "xdiff/integrate.hpp"
#include "xdiff/stability.hpp"

namespace xdiff::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_solver = 3;

namespace detail {

inline std::string quoted(std::string s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    if (ch == '\n') {
      out += "\\n";
      continue;
    }
    out += ch;
  }
  return out + "\"";
}

inline int fail(std::ostream& err, const std::string& kind, const std::string& fields, const std::string& message,
                int code) {
  err << "error kind=" << kind << (fields.empty() ? "" : " " + fields) << " message=" << quoted(message) << '\n';
  return code;
}

// Runs a configured CLI11 app over argv; returns an exit code if parsing ended
// the command (help or error), otherwise -1.
inline int parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    return fail(err, "config", "", e.what(), exit_usage);
  }
  return -1;
}

}  // namespace detail

/// xdiff run --config PATH --out DIR [--override key=value ...]
inline int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Integrate the cross-diffusion system and write CSV outputs", "run");
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (created if missing)")->required();
  app.add_option("--override", overrides, "dotted-path override, e.g. params.beta=0.6");
  if (int rc = detail::parse(app, args, out, err); rc >= 0) return rc;

  RunConfig cfg;
  Json resolved;
  try {
    Json j = read_json_file(config_path);
    for (const auto& o : overrides) apply_override(j, o);
    cfg = parse_config(j);
    resolved = to_json(cfg);
  } catch (const ConfigError& e) {
    return detail::fail(err, "config", "path=" + detail::quoted(e.path()), e.what(), exit_usage);
  }

  RunResult result;
  try {
    result = run_simulation(cfg);
  } catch (const SolverError& e) {
    std::string fields = "type=" + std::string(to_string(e.kind())) + " t=" + format_number(e.time());
    if (e.cell() != SolverError::no_cell) fields += " cell=" + std::to_string(e.cell());
    return detail::fail(err, "solver", fields, e.what(), exit_solver);
  }

  try {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "config_resolved.json", resolved.dump(2) + "\n");
    write_file_atomic(dir / "timeseries.csv", timeseries_csv(result.series));
    for (const auto& s : result.snapshots) write_file_atomic(dir / snapshot_filename(s.t), snapshot_csv(s));
  } catch (const std::exception& e) {
    return detail::fail(err, "config", "path=" + detail::quoted(out_dir), e.what(), exit_usage);
  }
  out << "wrote " << result.series.size() << " report rows and " << result.snapshots.size() << " snapshots to "
      << out_dir << " (" << result.steps << " steps)\n";
  return exit_ok;
}

/// xdiff stability --beta B --c C --rho-a A --rho-b B --length L --n-max N [--d0 D]
inline int cmd_stability(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Tabulate the dispersion relation over Neumann wavenumbers", "stability");
  double beta = 0, c = 0, rho_a = 0, rho_b = 0, length = 0, d0 = 0.25;
  int n_max = 0;
  app.add_option("--beta", beta)->required();
  app.add_option("--c", c)->required();
  app.add_option("--rho-a", rho_a)->required();
  app.add_option("--rho-b", rho_b)->required();
  app.add_option("--length", length)->required();
  app.add_option("--n-max", n_max)->required();
  app.add_option("--d0", d0, "diffusion prefactor (default 0.25)");
  if (int rc = detail::parse(app, args, out, err); rc >= 0) return rc;

  if (!(beta > 0) || !(c > 0) || !(rho_a > 0) || !(rho_b > 0) || !(length > 0) || !(d0 > 0))
    return detail::fail(err, "config", "", "beta, c, rho-a, rho-b, length and d0 must be positive", exit_usage);
  if (n_max < 1) return detail::fail(err, "config", "", "n-max must be >= 1", exit_usage);

  const ModelParams params{beta, c, d0, Scaling::physical};
  const SteadyStatePair bar{rho_a, rho_b};
  const GridSpec grid = GridSpec::line(length, 3);
  out << "k,alpha_plus,alpha_minus\n";
  for (double k : neumann_wavenumbers(grid, n_max)) {
    const DispersionPoint p = growth_rates(k, bar, params);
    out << format_number(p.k) << ',' << format_number(p.alpha_plus) << ',' << format_number(p.alpha_minus) << '\n';
  }
  out << "# threshold_beta_c=" << format_number(stability_threshold(bar)) << '\n';
  return exit_ok;
}

/// xdiff energies --snapshot PATH --beta B --c C [--d0 D] [--scaling physical|scaled]
inline int cmd_energies(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Recompute the energy report of a stored snapshot", "energies");
  std::string path, scaling = "physical";
  double beta = 0, c = 0;
  std::optional<double> d0;
  app.add_option("--snapshot", path)->required();
  app.add_option("--beta", beta)->required();
  app.add_option("--c", c)->required();
  app.add_option("--d0", d0, "diffusion prefactor (default 0.25, or 1 when scaled)");
  app.add_option("--scaling", scaling)->check(CLI::IsMember({"physical", "scaled"}));
  if (int rc = detail::parse(app, args, out, err); rc >= 0) return rc;

  ModelParams params{beta, c, 0.25, scaling == "scaled" ? Scaling::scaled : Scaling::physical};
  params.d0 = d0 ? *d0 : (params.scaling == Scaling::scaled ? 1.0 : 0.25);
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    return detail::fail(err, "config", "", e.what(), exit_usage);
  }

  Snapshot snap;
  try {
    snap = read_snapshot(path);
  } catch (const SnapshotError& e) {
    return detail::fail(err, "input", "path=" + detail::quoted(path) + " line=" + std::to_string(e.line()), e.what(),
                        exit_usage);
  }
  const SystemState state = snap.state();
  out << timeseries_header << '\n' << timeseries_row(energy_report(state, params, steady_state_of(state))) << '\n';
  return exit_ok;
}

inline std::string usage() {
  return "usage: xdiff <command> [options]\n"
         "commands:\n"
         "  run        --config PATH --out DIR [--override key=value ...]\n"
         "  stability  --beta B --c C --rho-a A --rho-b B --length L --n-max N [--d0 D]\n"
         "  energies   --snapshot PATH --beta B --c C [--d0 D] [--scaling physical|scaled]\n";
}

/// Dispatches on the first argument (argv[0] excluded).
inline int main(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (args.empty() || args[0] == "-h" || args[0] == "--help") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? exit_usage : exit_ok;
  }
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (args[0] == "run") return cmd_run(rest, out, err);
  if (args[0] == "stability") return cmd_stability(rest, out, err);
  if (args[0] == "energies") return cmd_energies(rest, out, err);
  return detail::fail(err, "config", "", "unknown command '" + args[0] + "'", exit_usage);
}

}  // namespace xdiff::cli
