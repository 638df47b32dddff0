// rydchirp command-line front end.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 partial failure
// (a solve or some sweep cells failed), 4 sweep marked failed.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rydchirp/classical.hpp"
#include "rydchirp/coupling_table.hpp"
#include "rydchirp/errors.hpp"
#include "rydchirp/predictors.hpp"
#include "rydchirp/quantum.hpp"
#include "rydchirp/sweep.hpp"

using namespace rydchirp;

namespace {

// Problem keys shared by every subcommand. A --config file is read first; flags override it.
struct SpecFlags {
  std::string config_file;
  std::optional<double> p1, p2, rel_tol, abs_tol, boundary_pop_max;
  std::optional<int> q, n0, m, n_start, n_end, n_th;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    app->add_option("--p1", p1, "drive strength P1");
    app->add_option("--p2", p2, "nonlinearity P2");
    app->add_option("--q", q, "resonance order");
    app->add_option("--n0", n0, "initial principal quantum number");
    app->add_option("--m", m, "magnetic quantum number");
    app->add_option("--n-start", n_start, "level resonant at the sweep start");
    app->add_option("--n-end", n_end, "level resonant at the sweep end");
    app->add_option("--n-th", n_th, "excitation threshold level");
    app->add_option("--rel-tol", rel_tol, "quantum integrator relative tolerance");
    app->add_option("--abs-tol", abs_tol, "quantum integrator absolute tolerance");
    app->add_option("--boundary-pop-max", boundary_pop_max, "truncation guard");
  }

  KeyValueConfig merged() const {
    KeyValueConfig cfg = config_file.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_file);
    auto put = [&](const char* key, const auto& v) {
      if (v) cfg.set(key, *v);
    };
    put("p1", p1);
    put("p2", p2);
    put("q", q);
    put("n0", n0);
    put("m", m);
    put("n_start", n_start);
    put("n_end", n_end);
    put("n_th", n_th);
    put("rel_tol", rel_tol);
    put("abs_tol", abs_tol);
    put("boundary_pop_max", boundary_pop_max);
    return cfg;
  }

  // Defaults follow the 1:1 window (n 30 -> 60) scaled to whatever n0 is given.
  ProblemSpec spec() const {
    KeyValueConfig cfg = merged();
    const int q_v = cfg.get_int("q", 1);
    const int n0_v = cfg.get_int("n0", 40);
    const ProblemSpec d = ProblemSpec::standard_window(1.0, 30.0, q_v, n0_v, cfg.get_int("m", n0_v - 1));
    ProblemSpec s = ProblemSpec::from_config(cfg, d);
    cfg.require_all_consumed();
    return s;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

int chain_levels_for(const ProblemSpec& s) {
  return std::max(default_chain_levels(s), (s.n_th - s.n0) / s.q + 2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chirped-drive excitation of Rydberg atoms: couplings, solvers, predictors and sweeps"};
  app.require_subcommand(1);
  SpecFlags flags;
  std::string cache_dir;

  // couplings
  auto* couplings = app.add_subcommand("couplings", "dipole coupling tables");
  couplings->require_subcommand(1);
  int n_max = 0;
  std::string scope_name = "chain";
  int scope_n_min = 0;
  int scope_max_nl = 6;
  std::string out_path;
  auto* c_build = couplings->add_subcommand("build", "compute (or load from cache) a coupling table");
  auto* c_dump = couplings->add_subcommand("dump", "write a coupling table as CSV");
  std::string table_file;
  for (auto* sub : {c_build, c_dump}) {
    flags.attach(sub);
    sub->add_option("--n-max", n_max, "largest n in the table (default n_end + 10)");
    sub->add_option("--scope", scope_name, "chain | basis")->check(CLI::IsMember({"chain", "basis"}));
    sub->add_option("--n-min", scope_n_min, "basis scope: smallest n");
    sub->add_option("--max-nl", scope_max_nl, "basis scope: largest n - l");
    sub->add_option("--cache-dir", cache_dir, "coupling table cache directory");
    sub->add_option("--out", out_path, "output path (- for stdout)");
  }
  c_dump->add_option("--table", table_file, "serialized table to dump instead of computing one");

  // solve
  auto* solve = app.add_subcommand("solve", "quantum solvers");
  solve->require_subcommand(1);
  auto* s_full = solve->add_subcommand("full", "full multilevel interaction-picture solver");
  auto* s_rwa = solve->add_subcommand("rwa", "rotating-wave chain solver");
  auto* s_two = solve->add_subcommand("two-level", "Landau-Zener two-level solve");
  int samples = 2000;
  int basis_n_lo = 0, basis_n_hi = 0, basis_max_nl = 0, chain_levels = 0;
  std::string snapshot_out, resume_in;
  std::optional<double> stop_tau;
  bool no_guard = false;
  for (auto* sub : {s_full, s_rwa}) {
    flags.attach(sub);
    sub->add_option("--samples", samples, "number of output samples");
    sub->add_option("--out", out_path, "trajectory CSV (- for stdout)");
    sub->add_option("--cache-dir", cache_dir, "coupling table cache directory");
    sub->add_option("--snapshot", snapshot_out, "write the final amplitudes to this file");
    sub->add_option("--resume", resume_in, "continue from a snapshot");
    sub->add_option("--stop-tau", stop_tau, "stop at this internal time (0 at the sweep start)");
    sub->add_flag("--no-truncation-guard", no_guard, "report boundary leakage instead of failing");
  }
  s_full->add_option("--n-lo", basis_n_lo, "basis: smallest n");
  s_full->add_option("--n-hi", basis_n_hi, "basis: largest n");
  s_full->add_option("--max-nl", basis_max_nl, "basis: largest n - l");
  s_rwa->add_option("--levels", chain_levels, "chain length");
  double lambda = 0.5;
  s_two->add_option("--lambda", lambda, "adiabaticity parameter")->required();

  // classical
  auto* classical = app.add_subcommand("classical", "classical trajectories");
  classical->require_subcommand(1);
  auto* k_traj = classical->add_subcommand("trajectory", "single trajectory");
  auto* k_ens = classical->add_subcommand("ensemble", "phase-averaged ensemble");
  std::optional<double> i3, i1;
  double drive_phase = 0.0, orbit_phase = 0.0;
  int count = 64, threads = 1;
  std::string scan_name, summary_path;
  for (auto* sub : {k_traj, k_ens}) {
    flags.attach(sub);
    sub->add_option("--i3", i3, "initial principal action (default n0)");
    sub->add_option("--i1", i1, "initial angular-momentum projection");
    sub->add_option("--drive-phase", drive_phase, "initial drive phase");
    sub->add_option("--orbit-phase", orbit_phase, "initial orbital phase");
    sub->add_option("--samples", samples, "samples per trajectory");
    sub->add_option("--out", out_path, "CSV output (- for stdout)");
  }
  k_traj->get_option("--samples")->default_val(2000);
  k_ens->add_option("--count", count, "trajectories");
  k_ens->add_option("--scan", scan_name, "drive_phase | orbit_phase")
      ->check(CLI::IsMember({"drive_phase", "orbit_phase"}));
  k_ens->add_option("--threads", threads, "worker threads");
  k_ens->add_option("--summary", summary_path, "summary file");

  // predict
  auto* predict = app.add_subcommand("predict", "closed-form regime predictors");
  predict->require_subcommand(1);
  auto* p_lines = predict->add_subcommand("lines", "regime-boundary lines as CSV");
  auto* p_class = predict->add_subcommand("classify", "classify one (P1, P2) point");
  double gamma = 1.0;
  double lo1 = 0.03, hi1 = 3.0, lo2 = 0.3, hi2 = 100.0;
  int line_samples = 200;
  for (auto* sub : {p_lines, p_class}) {
    flags.attach(sub);
    sub->add_option("--gamma", gamma, "SRA line factor");
    sub->add_option("--cache-dir", cache_dir, "coupling table cache directory");
  }
  p_lines->add_option("--p1-min", lo1, "window: smallest P1");
  p_lines->add_option("--p1-max", hi1, "window: largest P1");
  p_lines->add_option("--p2-min", lo2, "window: smallest P2");
  p_lines->add_option("--p2-max", hi2, "window: largest P2");
  p_lines->add_option("--count", line_samples, "samples per line");
  p_lines->add_option("--out", out_path, "CSV output (- for stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "(P1, P2) grid sweeps");
  sweep->require_subcommand(1);
  auto* w_run = sweep->add_subcommand("run", "run (or continue) a sweep");
  auto* w_resume = sweep->add_subcommand("resume", "resume the sweep stored in a directory");
  auto* w_emit = sweep->add_subcommand("emit", "write figure data for a completed sweep");
  SweepConfig sc;
  std::string engine_name;
  std::optional<double> s_p1_min, s_p1_max, s_p2_min, s_p2_max, s_gamma;
  std::optional<int> s_p1_count, s_p2_count, s_count, s_max_cells;
  std::optional<std::string> s_out, s_cache, s_scan;
  bool allow_sra = false;
  flags.attach(w_run);
  w_run->add_option("--engine", engine_name, "full | rwa | classical | predictors");
  w_run->add_option("--p1-min", s_p1_min, "smallest P1 (log grid)");
  w_run->add_option("--p1-max", s_p1_max, "largest P1");
  w_run->add_option("--p1-count", s_p1_count, "P1 grid points");
  w_run->add_option("--p2-min", s_p2_min, "smallest P2 (log grid)");
  w_run->add_option("--p2-max", s_p2_max, "largest P2");
  w_run->add_option("--p2-count", s_p2_count, "P2 grid points");
  w_run->add_option("--ensemble-count", s_count, "classical trajectories per cell");
  w_run->add_option("--ensemble-scan", s_scan, "drive_phase | orbit_phase");
  w_run->add_option("--output-dir", s_out, "sweep directory (journal, config, results)");
  w_run->add_option("--cache-dir", s_cache, "coupling table cache directory");
  w_run->add_option("--gamma", s_gamma, "SRA line factor");
  w_run->add_option("--max-cells", s_max_cells, "stop after this many new cells");
  w_run->add_flag("--allow-sra-breakdown", allow_sra, "let quantum engines run above the SRA line");
  std::string sweep_dir;
  int sweep_threads = 1;
  w_run->add_option("--threads", sweep_threads, "worker threads");
  w_resume->add_option("--dir", sweep_dir, "sweep output directory")->required();
  w_resume->add_option("--threads", sweep_threads, "worker threads");
  std::string figure_id, figure_dir;
  w_emit->add_option("--dir", sweep_dir, "sweep output directory")->required();
  w_emit->add_option("--figure", figure_id, "fig3 | fig4a | fig4b | fig5a | fig5b")->required();
  w_emit->add_option("--out", figure_dir, "destination directory (default: the sweep directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (couplings->parsed()) {
      const ProblemSpec spec = flags.spec();
      const int nm = n_max > 0 ? n_max : spec.n_end + 10;
      const TableScope scope = scope_name == "basis"
                                   ? TableScope::basis(scope_n_min > 0 ? scope_n_min : spec.n_start - 5, scope_max_nl)
                                   : TableScope::chain();
      if (c_build->parsed()) {
        const CouplingTable t = build_table(spec, nm, scope, cache_dir);
        if (!out_path.empty()) write_text(out_path, t.serialize());
        std::cerr << "entries " << t.size() << " c0 " << format_double(t.c0()) << " hash " << t.content_hash()
                  << '\n';
      } else {
        CouplingTable t;
        if (!table_file.empty()) {
          std::ifstream in(table_file);
          if (!in) throw IoError("cannot read " + table_file);
          std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
          t = CouplingTable::deserialize(text);
        } else {
          t = build_table(spec, nm, scope, cache_dir);
        }
        write_text(out_path.empty() ? "-" : out_path, t.to_csv());
      }
      return 0;
    }

    if (solve->parsed()) {
      if (s_two->parsed()) {
        std::cout << "lambda " << format_double(lambda) << " P " << format_double(solve_two_level(lambda)) << " LZ "
                  << format_double(lz_probability(lambda)) << '\n';
        return 0;
      }
      const ProblemSpec spec = flags.spec();
      SolveOptions opt;
      opt.samples = samples;
      opt.enforce_truncation = !no_guard;
      if (!resume_in.empty()) opt.resume_from = AmplitudeState::load(resume_in);
      if (stop_tau) opt.stop_tau = *stop_tau;
      QuantumTrajectory traj;
      if (s_full->parsed()) {
        BasisBounds b = BasisBounds::defaults(spec);
        if (basis_n_lo > 0) b.n_lo = basis_n_lo;
        if (basis_n_hi > 0) b.n_hi = basis_n_hi;
        if (basis_max_nl > 0) b.max_nl = basis_max_nl;
        traj = solve_full(spec, b, opt, cache_dir);
      } else {
        const int levels = chain_levels > 0 ? chain_levels : chain_levels_for(spec);
        const CouplingTable t = build_table(spec, spec.n0 + (levels - 1) * spec.q, TableScope::chain(), cache_dir);
        traj = solve_rwa_chain(spec, t, levels, opt);
      }
      if (!out_path.empty()) write_text(out_path, traj.to_csv());
      if (!snapshot_out.empty()) traj.final_state.save(snapshot_out);
      std::cerr << "excited_fraction " << format_double(excited_fraction(traj, spec.n_th)) << " max_norm_drift "
                << format_double(traj.max_norm_drift) << " max_boundary_pop " << format_double(traj.max_boundary_pop)
                << " (" << traj.max_boundary << ")\n";
      return 0;
    }

    if (classical->parsed()) {
      const ProblemSpec spec = flags.spec();
      EnsembleSpec ens = default_ensemble(spec);
      if (i3) ens.i3 = *i3;
      if (i1) ens.i1 = *i1;
      if (k_traj->parsed()) {
        const ClassicalModel model = ClassicalModel::from_spec(spec, drive_phase);
        IntegrationOptions io;
        io.samples = samples;
        const auto traj = integrate_trajectory(model, build_circular_orbit(model, ens.i3, ens.i1, orbit_phase),
                                               sweep_duration(spec), io);
        std::string csv = "tau,energy_norm,i3,r,p_phi\n";
        for (const auto& s : traj.samples) {
          csv += format_double(s.tau) + ',' + format_double(s.energy_norm) + ',' + format_double(s.i3) + ',' +
                 format_double(s.r) + ',' + format_double(s.p_phi) + '\n';
        }
        write_text(out_path.empty() ? "-" : out_path, csv);
        std::cerr << "final_i3 " << format_double(traj.final_i3) << " ionized " << detect_ionization(traj) << '\n';
        return 0;
      }
      ens.count = count;
      ens.threads = threads;
      ens.samples = k_ens->count("--samples") ? samples : 0;
      ens.fixed_drive_phase = drive_phase;
      ens.fixed_orbit_phase = orbit_phase;
      if (!scan_name.empty()) {
        ens.scan = scan_name == "drive_phase" ? EnsembleSpec::Scan::DrivePhase : EnsembleSpec::Scan::OrbitPhase;
      }
      const auto r = ensemble_run(spec, ens, spec.n_th);
      if (!out_path.empty()) write_text(out_path, r.rows_csv());
      if (!summary_path.empty()) write_text(summary_path, r.summary_text());
      std::cout << r.summary_text();
      return r.failures > 0 ? 3 : 0;
    }

    if (predict->parsed()) {
      const ProblemSpec spec = flags.spec();
      const CouplingTable t = build_table(spec, spec.n0 + (chain_levels_for(spec) - 1) * spec.q,
                                          TableScope::chain(), cache_dir);
      const RegimeLines lines = regime_lines(spec, t, gamma);
      if (p_class->parsed()) {
        std::cout << to_string(classify_regime(spec.p1, spec.p2, lines)) << '\n';
        return 0;
      }
      std::string csv = "p1,p2,line_id\n";
      for (const auto& s : lines.sample(lo1, hi1, lo2, hi2, line_samples, true)) {
        csv += format_double(s.p1) + ',' + format_double(s.p2) + ',' + s.line_id + '\n';
      }
      write_text(out_path.empty() ? "-" : out_path, csv);
      std::cerr << "lc_threshold " << format_double(lines.p1_lc_threshold) << '\n';
      return 0;
    }

    if (w_resume->parsed()) {
      const auto r = resume_sweep(sweep_dir, sweep_threads);
      std::cerr << "cells " << r.cells.size() << " new " << r.new_cells << " failed " << r.failed_cells << '\n';
      return sweep_exit_code(r);
    }
    if (w_emit->parsed()) {
      const auto r = load_sweep(sweep_dir);
      for (const auto& f : emit_figure_data(r, figure_id, figure_dir.empty() ? sweep_dir : figure_dir)) {
        std::cout << f << '\n';
      }
      return 0;
    }
    if (w_run->parsed()) {
      KeyValueConfig cfg = flags.merged();
      auto put = [&](const char* key, const auto& v) {
        if (v) cfg.set(key, *v);
      };
      if (!engine_name.empty()) cfg.set("engine", engine_name);
      put("p1_min", s_p1_min);
      put("p1_max", s_p1_max);
      put("p1_count", s_p1_count);
      put("p2_min", s_p2_min);
      put("p2_max", s_p2_max);
      put("p2_count", s_p2_count);
      put("ensemble_count", s_count);
      put("ensemble_scan", s_scan);
      put("output_dir", s_out);
      put("cache_dir", s_cache);
      put("gamma", s_gamma);
      put("max_cells", s_max_cells);
      if (allow_sra) cfg.set("sra_guard", std::string("false"));
      cfg.set("threads", sweep_threads);
      const auto r = run_sweep(SweepConfig::from_config(cfg));
      std::cerr << "cells " << r.cells.size() << " new " << r.new_cells << " failed " << r.failed_cells
                << " refused " << r.refused_cells << " wall " << format_double(r.wall_seconds) << "s\n";
      return sweep_exit_code(r);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
