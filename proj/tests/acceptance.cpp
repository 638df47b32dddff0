// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "rydchirp/classical.hpp"
#include "rydchirp/coupling_table.hpp"
#include "rydchirp/couplings.hpp"
#include "rydchirp/predictors.hpp"
#include "rydchirp/quantum.hpp"
#include "rydchirp/sweep.hpp"

using namespace rydchirp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %d (%s): %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

ProblemSpec fig1_spec(double p2) { return ProblemSpec::standard_window(1.0, p2, 1, 40, 39); }

// Shared between criteria 7 and 11.
struct Fig1Runs {
  QuantumTrajectory full;
  QuantumTrajectory rwa;
};

const Fig1Runs& fig1_runs() {
  static const Fig1Runs runs = [] {
    const auto spec = fig1_spec(30);
    SolveOptions opt;
    opt.samples = 2001;
    opt.enforce_truncation = false;
    Fig1Runs r;
    r.full = solve_full(spec, BasisBounds::defaults(spec), opt);
    r.rwa = solve_rwa_chain(spec, compute_table(spec, 80), 41, opt);
    return r;
  }();
  return runs;
}

// ---------------------------------------------------------------------------

Outcome coupling_oracle() {
  std::mt19937_64 rng(20240611);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  std::string worst_key;
  int drawn = 0;
  while (drawn < 50) {
    const int n = pick(1, 100);
    const int np = pick(1, 100);
    const int l = pick(0, n - 1);
    const int lp = l + (pick(0, 1) ? 1 : -1);
    if (lp < 0 || lp > np - 1) continue;
    const int mmax = std::min(l, lp);
    const int m = pick(-mmax, mmax);
    const CouplingKey key{n, l, m, np, lp};
    const double lib = dipole_element(key).get_d();
    const double ref = static_cast<double>(oracle::radial_integral(n, l, np, lp)) * oracle::angular(l, lp, std::abs(m));
    const double rel = std::fabs(lib - ref) / std::fabs(ref);
    if (rel > worst) {
      worst = rel;
      worst_key = fmt("(%d,%d,%d|%d,%d)", n, l, m, np, lp);
    }
    ++drawn;
  }
  return {worst <= 1e-8, fmt("50 elements, worst relative error %.2e at %s (tol 1e-8)", worst, worst_key.c_str())};
}

Outcome c0_asymptotics() {
  const double a = c0_exact(40, 1, 39), a_ref = std::sqrt(2.0) * std::pow(40.0, 1.5);
  const double b = c0_exact(90, 2, 0), b_ref = std::pow(90.0, 1.5) / std::sqrt(2.0);
  const double da = std::fabs(a / a_ref - 1), db = std::fabs(b / b_ref - 1);
  return {da <= 0.05 && db <= 0.05,
          fmt("C0(40,1,39) = %.4f vs %.4f (%.2f%%); C0(90,2,0) = %.4f vs %.4f (%.2f%%)", a, a_ref, 100 * da, b, b_ref,
              100 * db)};
}

Outcome lz_oracle() {
  double worst = 0.0;
  std::string parts;
  for (double lambda : {0.1, 0.33, 0.5, 1.0, 2.0}) {
    const double got = solve_two_level(lambda), want = oracle::landau_zener(lambda);
    worst = std::max(worst, std::fabs(got - want));
    parts += fmt(" %.2f:%.6f/%.6f", lambda, got, want);
  }
  return {worst <= 5e-3, fmt("max |P - LZ| = %.2e (tol 5e-3);%s", worst, parts.c_str())};
}

Outcome lc_thresholds() {
  struct Case {
    int q, n0, m, n_th;
    double want;
  };
  bool ok = true;
  std::string parts;
  for (const Case c : {Case{1, 40, 39, 50, 0.39}, Case{2, 90, 0, 100, 0.39}, Case{2, 90, 89, 100, 0.34}}) {
    auto spec = ProblemSpec::standard_window(1, 30, c.q, c.n0, c.m);
    spec.n_th = c.n_th;
    const int levels = (c.n_th - c.n0) / c.q + 2;
    const auto table = compute_table(spec, c.n0 + c.q * levels);
    const double got = lc_threshold(build_chain(spec, table, levels), c.n_th);
    ok = ok && std::fabs(got - c.want) <= 0.02;
    parts += fmt(" (q=%d,n0=%d,m=%d): %.5f vs %.2f;", c.q, c.n0, c.m, got, c.want);
  }
  return {ok, parts.substr(1) + " tol 0.02"};
}

Outcome mixing_constants() {
  const int a = min_nonmixing_n(1), b = min_nonmixing_n(2), c = min_nonmixing_n(3);
  return {a == 6 && b == 17 && c == 34, fmt("q=1,2,3 -> %d, %d, %d (want 6, 17, 34)", a, b, c)};
}

// Bisection for the p1 where f crosses `level`, assuming f increases.
double bisect(const std::function<double(double)>& f, double lo, double hi, double level, int iterations) {
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= level ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome classical_capture() {
  bool ok = true;
  std::string parts;
  for (double p2 : {5.0, 10.0, 20.0}) {
    const double pred = classical_threshold_p1(p2);
    std::map<double, double> memo;
    auto f = [&](double p1) {
      auto it = memo.find(p1);
      if (it != memo.end()) return it->second;
      const auto spec = ProblemSpec::standard_window(p1, p2, 1, 40, 39);
      auto ens = default_ensemble(spec);
      ens.count = 64;
      const double v = ensemble_run(spec, ens, spec.n_th).captured_fraction;
      memo[p1] = v;
      return v;
    };
    const double lo = 0.7 * pred, hi = 1.3 * pred;
    const double f_lo = f(lo), f_hi = f(hi);
    if (!(f_lo < 0.1 && f_hi > 0.9)) {
      ok = false;
      parts += fmt(" P2=%g: capture %.3f at 0.7x, %.3f at 1.3x, no bracket;", p2, f_lo, f_hi);
      continue;
    }
    const double p50 = bisect(f, lo, hi, 0.5, 7);
    const double p10 = bisect(f, lo, p50, 0.1, 6);
    const double p90 = bisect(f, p50, hi, 0.9, 6);
    const double off = p50 / pred - 1;
    const double width = (p90 - p10) / p50;
    ok = ok && std::fabs(off) <= 0.15 && width < 0.3;
    parts += fmt(" P2=%g: p50 %.4f vs %.4f (%+.1f%%), 10-90 width %.1f%%;", p2, p50, pred, 100 * off, 100 * width);
  }
  return {ok, parts.substr(1) + " tol 15% / 30%"};
}

Outcome fig1_reproduction() {
  const auto spec = fig1_spec(30);
  const auto& tr = fig1_runs().full;
  const double excited = excited_fraction(tr, spec.n_th);
  const auto chain = build_chain(spec, compute_table(spec, 45), 3);
  bool mids_ok = true;
  std::string mids;
  for (int k = 0; k < 2; ++k) {
    const auto mid = transfer_midpoint(tr, spec.n0, spec.q, k);
    const double cross = crossing_time(spec.n0 + k, spec.q, spec) - reference_time(spec);
    const double window = 1.0 + spec.p1 * chain.c[k];
    const bool good = mid && std::fabs(*mid - cross) <= window;
    mids_ok = mids_ok && good;
    mids += mid ? fmt(" k=%d: %.3f vs %.3f (window %.3f);", k, *mid, cross, window) : fmt(" k=%d: none;", k);
  }
  // Early times: up to the second crossing.
  const double early_end = crossing_time(spec.n0 + 1, spec.q, spec) - reference_time(spec);
  double worst_top2 = 1.0;
  for (std::size_t s = 0; s < tr.tau.size() && tr.tau[s] <= early_end; ++s) {
    auto p = tr.populations[s];
    std::partial_sort(p.begin(), p.begin() + 2, p.end(), std::greater<>());
    worst_top2 = std::min(worst_top2, p[0] + p[1]);
  }
  const bool ok = excited > 0.9 && mids_ok && worst_top2 >= 0.9;
  return {ok, fmt("excited %.4f (> 0.9);%s early top-2 P_n min %.4f (>= 0.9); boundary max %.2e at %s", excited,
                  mids.c_str(), worst_top2, tr.max_boundary_pop, tr.max_boundary.c_str())};
}

Outcome fig2_correspondence() {
  const auto spec = fig1_spec(0.6);
  constexpr int kSamples = 201;
  SolveOptions opt;
  opt.samples = kSamples;
  opt.enforce_truncation = false;
  // Population climbs well past n_end here, so the basis reaches further than the default.
  const auto q = solve_full(spec, BasisBounds{25, 90, 12}, opt);
  auto ens = default_ensemble(spec);
  ens.count = 100;
  ens.samples = kSamples;
  ens.i1 = spec.m;  // semiclassical L_z of the CRS
  const auto band = ensemble_run(spec, ens, spec.n_th);
  int inside = 0;
  double grid_err = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    grid_err = std::max(grid_err, std::fabs(q.tau[k] - band.band_tau[k]));
    const double e = q.mean_energy_norm[k];
    inside += e >= band.band_min[k] && e <= band.band_max[k];
  }
  const double frac = static_cast<double>(inside) / kSamples;
  return {frac >= 0.9 && grid_err < 1e-9 && band.failures == 0,
          fmt("%d/%d samples inside the 100-trajectory band (%.1f%%, need 90%%); boundary max %.2e", inside, kSamples,
              100 * frac, q.max_boundary_pop)};
}

// Two-sided two-proportion z-test.
double proportion_p_value(double a, double b, int n) {
  const double pooled = 0.5 * (a + b);
  const double var = pooled * (1 - pooled) * 2.0 / n;
  if (var <= 0) return 1.0;
  return std::erfc(std::fabs(a - b) / std::sqrt(var) / std::sqrt(2.0));
}

Outcome regime_map() {
  const auto dir = std::filesystem::temp_directory_path() / "rydchirp_acceptance_rwa";
  std::filesystem::remove_all(dir);
  SweepConfig cfg;
  cfg.base = fig1_spec(30);
  cfg.engine = Engine::Rwa;
  cfg.output_dir = dir.string();
  const auto res = run_sweep(cfg);
  int mismatches = 0, refused = 0, failed = 0;
  for (const auto& c : res.cells) {
    if (c.status == "refused") {
      ++refused;
      continue;
    }
    if (c.status != "ok") {
      ++failed;
      ++mismatches;
      continue;
    }
    const bool efficient = c.value > 0.5;
    const bool predicted = c.regime == "LC" || c.regime == "AR";
    mismatches += efficient != predicted;
  }

  // Classical map: adjacent cells on opposite sides of the separation line only.
  const auto p1s = cfg.p1_grid(), p2s = cfg.p2_grid();
  const auto& lines = res.lines;
  auto side = [](double v) { return v > 0; };
  std::map<std::pair<int, int>, double> capture;
  auto cell = [&](int i1, int i2) {
    auto key = std::make_pair(i1, i2);
    if (!capture.count(key)) {
      const auto spec = ProblemSpec::standard_window(p1s[i1], p2s[i2], 1, 40, 39);
      capture[key] = ensemble_run(spec, default_ensemble(spec), spec.n_th).captured_fraction;
    }
    return capture[key];
  };
  int pairs = 0, significant = 0;
  double min_p = 1.0;
  for (int i2 = 0; i2 < cfg.p2_count; ++i2) {
    for (int i1 = 0; i1 < cfg.p1_count; ++i1) {
      for (auto [j1, j2] : {std::pair{i1 + 1, i2}, std::pair{i1, i2 + 1}}) {
        if (j1 >= cfg.p1_count || j2 >= cfg.p2_count) continue;
        const double a1 = p1s[i1], a2 = p2s[i2], b1 = p1s[j1], b2 = p2s[j2];
        const bool across_sep = side(a2 - lines.separation(a1)) != side(b2 - lines.separation(b1));
        const bool across_cl = side(a1 - lines.classical(a2)) != side(b1 - lines.classical(b2));
        const bool across_sra = side(a1 - lines.sra(a2)) != side(b1 - lines.sra(b2));
        if (!across_sep || across_cl || across_sra) continue;
        const double p = proportion_p_value(cell(i1, i2), cell(j1, j2), 64);
        ++pairs;
        min_p = std::min(min_p, p);
        significant += p <= 0.05;
      }
    }
  }
  const bool ok = res.complete && mismatches <= 3 && pairs > 0 && significant == 0;
  return {ok, fmt("RWA: %d mismatches (<= 3) over %zu cells, %d refused above the SRA line, %d failed; classical: "
                  "%d pairs across the separation line, %d significant, min p %.3f",
                  mismatches, res.cells.size() - refused, refused, failed, pairs, significant, min_p)};
}

Outcome ionization_band() {
  // Grid cells of the Fig. 4 window above the SRA line, and the cells three columns
  // to their left (a factor ~0.28 lower in P1).
  SweepConfig cfg;
  cfg.base = fig1_spec(30);
  const auto p1s = cfg.p1_grid(), p2s = cfg.p2_grid();
  bool ok = true;
  int points = 0;
  std::string parts;
  for (int i2 = 0; i2 < cfg.p2_count; ++i2) {
    for (int i1 = 0; i1 < cfg.p1_count; ++i1) {
      const double line = sra_breakdown_p1(p2s[i2], 40, 60, 39);
      if (p1s[i1] <= line) continue;
      for (int k : {i1, i1 - 3}) {
        const auto spec = ProblemSpec::standard_window(p1s[k], p2s[i2], 1, 40, 39);
        const double ion = ensemble_run(spec, default_ensemble(spec), spec.n_th).ionized_fraction;
        const bool above = k == i1;
        ok = ok && (above ? ion > 0.3 : ion < 0.05);
        ++points;
        parts += fmt(" (%.3f,%.3f)=%.2fx line: %.3f;", p1s[k], p2s[i2], p1s[k] / line, ion);
      }
    }
  }
  ok = ok && points == 6;
  return {ok, fmt("%d points, ionized fraction", points) + parts + " need > 0.3 above, < 0.05 below"};
}

Outcome property_suite() {
  std::vector<std::string> bad;
  std::string parts;

  const auto& runs = fig1_runs();
  const double norm_full = runs.full.max_norm_drift, norm_rwa = runs.rwa.max_norm_drift;
  if (norm_full > 1e-6 || norm_rwa > 1e-6) bad.push_back("norm");
  parts += fmt("norm drift full %.1e rwa %.1e;", norm_full, norm_rwa);

  const auto spec = fig1_spec(30);
  const auto model = ClassicalModel::from_spec(spec, 0.4);
  const auto orbit = build_circular_orbit(model, 40, 39, 0.3);
  const auto driven = integrate_trajectory(model, orbit, sweep_duration(spec));
  if (driven.max_p_phi_drift > 1e-9) bad.push_back("p_phi");
  parts += fmt(" p_phi drift %.1e;", driven.max_p_phi_drift);

  auto free_spec = spec;
  free_spec.p1 = 0.0;
  const auto free_model = ClassicalModel::from_spec(free_spec);
  const auto free_tr = integrate_trajectory(free_model, build_circular_orbit(free_model, 40, 39, 0.3),
                                            sweep_duration(free_spec), {400, true});
  double e_err = 0.0;
  for (const auto& s : free_tr.samples) e_err = std::max(e_err, std::fabs(s.energy_norm + 1.0));
  if (e_err > 1e-8) bad.push_back("energy");
  parts += fmt(" P1=0 energy drift %.1e;", e_err);

  // Reversibility through the first two transfers.
  const double mid = crossing_time(spec.n0 + 1, spec.q, spec) + 10.0;
  const auto bounds = BasisBounds::defaults(spec);
  const auto table = compute_table(spec, bounds.n_hi, TableScope::basis(bounds.n_lo, bounds.max_nl));
  const auto s0 = initial_crs_state(full_basis(spec, bounds), spec);
  const auto back = propagate_full(spec, table, propagate_full(spec, table, s0, mid), 0.0);
  double rev_full = 0.0;
  for (std::size_t j = 0; j < s0.amplitudes.size(); ++j) {
    rev_full = std::max(rev_full, std::abs(back.amplitudes[j] - s0.amplitudes[j]));
  }
  const auto chain = build_chain(spec, compute_table(spec, 80), 41);
  const auto c0 = initial_crs_state(chain.levels, spec);
  const auto cback = propagate_rwa(spec, chain, propagate_rwa(spec, chain, c0, mid), 0.0);
  double rev_rwa = 0.0;
  for (std::size_t j = 0; j < c0.amplitudes.size(); ++j) {
    rev_rwa = std::max(rev_rwa, std::abs(cback.amplitudes[j] - c0.amplitudes[j]));
  }
  auto cl_spec = fig1_spec(5);
  const auto cl_model = ClassicalModel::from_spec(cl_spec, 1.2);
  const auto cl_start = build_circular_orbit(cl_model, 40, 39, 0.0);
  const auto cl_there = integrate_trajectory(cl_model, cl_start, 0.5 * sweep_duration(cl_spec));
  const auto cl_back = integrate_trajectory(cl_model, cl_there.final_state, 0.0);
  const double rev_cl = std::max({std::fabs(cl_back.final_state.r - cl_start.r) / cl_start.r,
                                  std::fabs(cl_back.final_state.theta - cl_start.theta), std::fabs(cl_back.final_state.p_r - cl_start.p_r),
                                  std::fabs(cl_back.final_state.p_theta - cl_start.p_theta),
                                  std::fabs(cl_back.final_energy / cl_model.unperturbed_energy(cl_start) - 1)});
  if (rev_full > 1e-6 || rev_rwa > 1e-6 || rev_cl > 1e-6) bad.push_back("reversibility");
  parts += fmt(" reversibility full %.1e rwa %.1e classical %.1e;", rev_full, rev_rwa, rev_cl);

  // Parallel and serial runs must agree bit for bit.
  const auto base_dir = std::filesystem::temp_directory_path() / "rydchirp_acceptance_par";
  std::filesystem::remove_all(base_dir);
  SweepConfig cfg;
  cfg.base = spec;
  cfg.p1_count = 4;
  cfg.p2_count = 4;
  cfg.p2_max = 10.0;
  cfg.output_dir = (base_dir / "serial").string();
  const auto serial = run_sweep(cfg);
  cfg.threads = 4;
  cfg.output_dir = (base_dir / "parallel").string();
  const auto parallel = run_sweep(cfg);
  auto ens_spec = fig1_spec(2);
  auto ens = default_ensemble(ens_spec);
  ens.count = 16;
  const auto e1 = ensemble_run(ens_spec, ens, 50);
  ens.threads = 4;
  const auto e4 = ensemble_run(ens_spec, ens, 50);
  const bool same = serial.cells_csv() == parallel.cells_csv() && e1.rows_csv() == e4.rows_csv();
  if (!same) bad.push_back("parallel");
  parts += fmt(" parallel/serial sweep and ensemble %s", same ? "identical" : "differ");

  std::string failed_parts;
  for (const auto& b : bad) failed_parts += " " + b;
  return {bad.empty(), parts + (bad.empty() ? "" : "; failing:" + failed_parts)};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  report(1, "coupling oracle", coupling_oracle);
  report(2, "C0 asymptotics", c0_asymptotics);
  report(3, "Landau-Zener", lz_oracle);
  report(4, "LC threshold", lc_thresholds);
  report(5, "chain mixing constants", mixing_constants);
  report(6, "classical capture threshold", classical_capture);
  report(7, "P2=30 ladder climbing", fig1_reproduction);
  report(8, "P2=0.6 quantum-classical band", fig2_correspondence);
  report(9, "regime map", regime_map);
  report(10, "ionization band", ionization_band);
  report(11, "property suite", property_suite);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
