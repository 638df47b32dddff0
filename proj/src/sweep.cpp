#include "rydchirp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rydchirp/errors.hpp"
#include "rydchirp/quantum.hpp"

namespace rydchirp {

namespace fs = std::filesystem;

std::string code_version() { return "rydchirp 1.0.0"; }

std::string to_string(Engine e) {
  switch (e) {
    case Engine::Full: return "full";
    case Engine::Rwa: return "rwa";
    case Engine::Classical: return "classical";
    case Engine::Predictors: return "predictors";
  }
  return "?";
}

Engine parse_engine(const std::string& name) {
  if (name == "full") return Engine::Full;
  if (name == "rwa") return Engine::Rwa;
  if (name == "classical") return Engine::Classical;
  if (name == "predictors") return Engine::Predictors;
  throw ConfigError("unknown engine '" + name + "' (expected full, rwa, classical or predictors)");
}

EnsembleSpec default_ensemble(const ProblemSpec& spec) {
  EnsembleSpec e;
  e.i3 = spec.n0;
  e.i1 = spec.m == spec.n0 - 1 ? spec.n0 : spec.m;
  e.scan = spec.q == 1 ? EnsembleSpec::Scan::DrivePhase : EnsembleSpec::Scan::OrbitPhase;
  return e;
}

namespace {

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) {
    g[i] = count == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  }
  return g;
}

std::string scan_name(EnsembleSpec::Scan s) { return s == EnsembleSpec::Scan::DrivePhase ? "drive_phase" : "orbit_phase"; }

}  // namespace

void SweepConfig::validate() const {
  try {
    base.validate();
    ensemble.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  if (p1_count < 1 || p2_count < 1) throw ConfigError("grid counts must be at least 1");
  if (!(p1_min > 0 && p1_max >= p1_min && p2_min > 0 && p2_max >= p2_min)) {
    throw ConfigError("grid bounds must be positive and ordered");
  }
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must lie in (0, 1]");
  if (max_cells < 0) throw ConfigError("max_cells must be non-negative");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::vector<double> SweepConfig::p1_grid() const { return log_grid(p1_min, p1_max, p1_count); }
std::vector<double> SweepConfig::p2_grid() const { return log_grid(p2_min, p2_max, p2_count); }

KeyValueConfig SweepConfig::to_config() const {
  KeyValueConfig cfg = base.to_config();
  cfg.set("schema", kSchemaVersion);
  cfg.set("engine", to_string(engine));
  cfg.set("p1_min", p1_min);
  cfg.set("p1_max", p1_max);
  cfg.set("p1_count", p1_count);
  cfg.set("p2_min", p2_min);
  cfg.set("p2_max", p2_max);
  cfg.set("p2_count", p2_count);
  cfg.set("ensemble_count", ensemble.count);
  cfg.set("ensemble_scan", scan_name(ensemble.scan));
  cfg.set("ensemble_i3", ensemble.i3);
  cfg.set("ensemble_i1", ensemble.i1);
  cfg.set("ensemble_fixed_drive_phase", ensemble.fixed_drive_phase);
  cfg.set("ensemble_fixed_orbit_phase", ensemble.fixed_orbit_phase);
  cfg.set("output_dir", output_dir);
  cfg.set("cache_dir", cache_dir);
  cfg.set("threads", threads);
  cfg.set("sra_guard", std::string(sra_guard ? "true" : "false"));
  cfg.set("gamma", gamma);
  cfg.set("max_cells", max_cells);
  return cfg;
}

SweepConfig SweepConfig::from_config(const KeyValueConfig& cfg) {
  SweepConfig c;
  try {
    const int schema = cfg.get_int("schema", kSchemaVersion);
    if (schema != kSchemaVersion) throw ConfigError("unsupported config schema " + std::to_string(schema));
    const int q = cfg.get_int("q", 1);
    const int n0 = cfg.get_int("n0", 40);
    c.base = ProblemSpec::from_config(cfg, ProblemSpec::standard_window(1.0, 30.0, q, n0, cfg.get_int("m", n0 - 1)));
    c.engine = parse_engine(cfg.get_string("engine", "rwa"));
    c.p1_min = cfg.get_double("p1_min", c.p1_min);
    c.p1_max = cfg.get_double("p1_max", c.p1_max);
    c.p1_count = cfg.get_int("p1_count", c.p1_count);
    c.p2_min = cfg.get_double("p2_min", c.p2_min);
    c.p2_max = cfg.get_double("p2_max", c.p2_max);
    c.p2_count = cfg.get_int("p2_count", c.p2_count);
    c.ensemble = default_ensemble(c.base);
    c.ensemble.count = cfg.get_int("ensemble_count", c.ensemble.count);
    const std::string scan = cfg.get_string("ensemble_scan", scan_name(c.ensemble.scan));
    if (scan == "drive_phase") {
      c.ensemble.scan = EnsembleSpec::Scan::DrivePhase;
    } else if (scan == "orbit_phase") {
      c.ensemble.scan = EnsembleSpec::Scan::OrbitPhase;
    } else {
      throw ConfigError("ensemble_scan must be drive_phase or orbit_phase");
    }
    c.ensemble.i3 = cfg.get_double("ensemble_i3", c.ensemble.i3);
    c.ensemble.i1 = cfg.get_double("ensemble_i1", c.ensemble.i1);
    c.ensemble.fixed_drive_phase = cfg.get_double("ensemble_fixed_drive_phase", 0.0);
    c.ensemble.fixed_orbit_phase = cfg.get_double("ensemble_fixed_orbit_phase", 0.0);
    c.output_dir = cfg.get_string("output_dir", c.output_dir);
    c.cache_dir = cfg.get_string("cache_dir", "");
    c.threads = cfg.get_int("threads", 1);
    c.sra_guard = cfg.get_bool("sra_guard", true);
    c.gamma = cfg.get_double("gamma", 1.0);
    c.max_cells = cfg.get_int("max_cells", 0);
    cfg.require_all_consumed();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

std::string SweepConfig::result_hash() const {
  KeyValueConfig cfg = to_config();
  KeyValueConfig stable;
  for (const auto& [k, v] : cfg.values()) {
    if (k == "threads" || k == "output_dir" || k == "max_cells" || k == "cache_dir") continue;
    stable.set(k, v);
  }
  return hex64(fnv1a64(stable.to_text()));
}

const CellRecord& SweepResult::at(int i1, int i2) const {
  for (const auto& c : cells) {
    if (c.i1 == i1 && c.i2 == i2) return c;
  }
  throw DomainError("no record for cell (" + std::to_string(i1) + ", " + std::to_string(i2) + ")");
}

std::string SweepResult::cells_csv() const {
  std::ostringstream out;
  out << "p1,p2,i1,i2,value,ionized_fraction,status,regime\n";
  for (const auto& c : cells) {
    out << format_double(c.p1) << ',' << format_double(c.p2) << ',' << c.i1 << ',' << c.i2 << ','
        << format_double(c.value) << ',' << format_double(c.ionized) << ',' << c.status << ',' << c.regime << '\n';
  }
  return out.str();
}

std::string SweepResult::lines_csv(bool include_sra) const {
  std::ostringstream out;
  out << "p1,p2,line_id\n";
  for (const auto& s : lines.sample(config.p1_min, config.p1_max, config.p2_min, config.p2_max, 200, include_sra)) {
    out << format_double(s.p1) << ',' << format_double(s.p2) << ',' << s.line_id << '\n';
  }
  return out.str();
}

namespace {

// Journal line: i1 i2 status value ionized p1 p2 regime message...
std::string journal_line(const CellRecord& c) {
  std::string msg = c.message;
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return std::to_string(c.i1) + ' ' + std::to_string(c.i2) + ' ' + c.status + ' ' + format_double(c.value) + ' ' +
         format_double(c.ionized) + ' ' + format_double(c.p1) + ' ' + format_double(c.p2) + ' ' + c.regime + ' ' +
         msg;
}

std::map<std::pair<int, int>, CellRecord> read_journal(const fs::path& path, const std::string& hash) {
  std::map<std::pair<int, int>, CellRecord> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  if (!std::getline(in, line)) return done;
  if (line != "journal " + hash) throw ConfigError("journal " + path.string() + " belongs to a different configuration");
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    CellRecord c;
    std::string value, ionized, p1, p2;
    if (!(ls >> c.i1 >> c.i2 >> c.status >> value >> ionized >> p1 >> p2 >> c.regime)) continue;  // torn last line
    std::getline(ls, c.message);
    if (!c.message.empty() && c.message.front() == ' ') c.message.erase(0, 1);
    try {
      c.value = std::stod(value);
      c.ionized = std::stod(ionized);
      c.p1 = std::stod(p1);
      c.p2 = std::stod(p2);
    } catch (const std::exception&) {
      continue;
    }
    done[{c.i1, c.i2}] = c;
  }
  return done;
}

struct Shared {
  std::optional<CouplingTable> table;
  std::optional<ResonantChain> chain;
  // RWA engine: successively longer chains, tried in turn when population reaches the chain end.
  std::vector<ResonantChain> rwa_chains;
  BasisBounds bounds;
};

double rwa_cell(const ProblemSpec& spec, const Shared& shared) {
  SolveOptions opt;
  opt.samples = 2;
  for (std::size_t i = 0;; ++i) {
    try {
      return excited_fraction(solve_rwa_chain(spec, shared.rwa_chains[i], opt), spec.n_th);
    } catch (const TruncationViolation& e) {
      if (e.boundary() != "chain end" || i + 1 == shared.rwa_chains.size()) throw;
    }
  }
}

CellRecord evaluate_cell(const SweepConfig& cfg, const Shared& shared, const RegimeLines& lines, int i1, int i2,
                         double p1, double p2) {
  CellRecord c;
  c.i1 = i1;
  c.i2 = i2;
  c.p1 = p1;
  c.p2 = p2;
  c.regime = to_string(classify_regime(p1, p2, lines));
  ProblemSpec spec = cfg.base;
  spec.p1 = p1;
  spec.p2 = p2;
  const bool quantum = cfg.engine == Engine::Full || cfg.engine == Engine::Rwa;
  if (quantum && cfg.sra_guard && p1 > lines.sra(p2)) {
    c.status = "refused";
    c.message = "above the SRA breakdown line";
    return c;
  }
  try {
    switch (cfg.engine) {
      case Engine::Predictors: {
        if (p2 > separation_line(p1)) {
          c.value = lc_efficiency(p1, *shared.chain, spec.n_th);
        } else {
          c.value = std::sqrt(p2) * p1 > kClassicalThreshold ? 1.0 : 0.0;
        }
        break;
      }
      case Engine::Rwa:
        c.value = rwa_cell(spec, shared);
        break;
      case Engine::Full: {
        SolveOptions opt;
        opt.samples = 2;
        c.value = excited_fraction(solve_full(spec, *shared.table, shared.bounds, opt), spec.n_th);
        break;
      }
      case Engine::Classical: {
        EnsembleSpec ens = cfg.ensemble;
        ens.threads = 1;
        const auto r = ensemble_run(spec, ens, spec.n_th);
        c.value = r.captured_fraction;
        c.ionized = r.ionized_fraction;
        if (r.failures * 2 > ens.count) throw IntegrationFailure("most trajectories failed");
        if (r.failures > 0) c.message = std::to_string(r.failures) + " trajectories failed";
        break;
      }
    }
    c.status = "ok";
  } catch (const Error& e) {
    c.status = "failed";
    c.value = 0.0;
    c.message = e.what();
  }
  return c;
}

void finalize(SweepResult& res) {
  std::sort(res.cells.begin(), res.cells.end(),
            [](const CellRecord& a, const CellRecord& b) { return std::tie(a.i2, a.i1) < std::tie(b.i2, b.i1); });
  res.failed_cells = 0;
  res.refused_cells = 0;
  for (const auto& c : res.cells) {
    res.failed_cells += c.status == "failed";
    res.refused_cells += c.status == "refused";
  }
  const int total = res.config.p1_count * res.config.p2_count;
  res.complete = static_cast<int>(res.cells.size()) == total;
  res.failed = res.failed_cells * 10 > total;
}

RegimeLines lines_for(const SweepConfig& cfg, Shared& shared) {
  const ProblemSpec& s = cfg.base;
  const int lc_levels = (s.n_th - s.n0) / s.q + 2;
  const int levels = std::max(default_chain_levels(s), lc_levels);
  const int n_chain = s.n0 + (levels - 1) * s.q;
  if (cfg.engine == Engine::Full) {
    shared.bounds = BasisBounds::defaults(s);
    shared.bounds.n_hi = std::max(shared.bounds.n_hi, n_chain);
    shared.table = build_table(s, shared.bounds.n_hi, TableScope::basis(shared.bounds.n_lo, shared.bounds.max_nl),
                               cfg.cache_dir);
  } else if (cfg.engine == Engine::Rwa) {
    const int longest = 4 * levels;
    shared.table = build_table(s, s.n0 + (longest - 1) * s.q, TableScope::chain(), cfg.cache_dir);
    for (int k : {levels, 2 * levels, longest}) shared.rwa_chains.push_back(build_chain(s, *shared.table, k));
  } else {
    shared.table = build_table(s, n_chain, TableScope::chain(), cfg.cache_dir);
  }
  shared.chain = build_chain(s, *shared.table, levels);
  RegimeLines lines;
  lines.n0 = s.n0;
  lines.m = s.m;
  lines.n_f = s.n_end;
  lines.gamma = cfg.gamma;
  lines.p1_lc_threshold = lc_threshold(*shared.chain, s.n_th);
  return lines;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  SweepResult res;
  res.config = config;
  Shared shared;
  res.lines = lines_for(config, shared);

  const std::string hash = config.result_hash();
  const fs::path journal_path = dir / "journal.txt";
  auto done = read_journal(journal_path, hash);
  {
    std::ofstream cfg_out(dir / "config.txt");
    if (!cfg_out) throw IoError("cannot write " + (dir / "config.txt").string());
    cfg_out << "# rydchirp sweep configuration\n" << config.to_config().to_text();
  }
  const bool fresh = !fs::exists(journal_path) || fs::file_size(journal_path) == 0;
  std::ofstream journal(journal_path, std::ios::app);
  if (!journal) throw IoError("cannot open journal " + journal_path.string());
  if (fresh) journal << "journal " << hash << '\n' << std::flush;

  const auto g1 = config.p1_grid();
  const auto g2 = config.p2_grid();
  std::vector<std::pair<int, int>> todo;
  for (int i2 = 0; i2 < config.p2_count; ++i2) {
    for (int i1 = 0; i1 < config.p1_count; ++i1) {
      if (!done.count({i1, i2})) todo.emplace_back(i1, i2);
    }
  }
  if (config.max_cells > 0 && static_cast<int>(todo.size()) > config.max_cells) todo.resize(config.max_cells);

  std::vector<CellRecord> fresh_cells(todo.size());
  std::mutex journal_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const auto [i1, i2] = todo[k];
      fresh_cells[k] = evaluate_cell(config, shared, res.lines, i1, i2, g1[i1], g2[i2]);
      std::lock_guard<std::mutex> lock(journal_mutex);
      journal << journal_line(fresh_cells[k]) << '\n' << std::flush;
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(todo.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& [key, c] : done) res.cells.push_back(c);
  for (auto& c : fresh_cells) res.cells.push_back(c);
  res.new_cells = static_cast<int>(fresh_cells.size());
  finalize(res);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream prov(dir / "provenance.txt");
  prov << "config_hash = " << hash << '\n'
       << "code_version = " << code_version() << '\n'
       << "engine = " << to_string(config.engine) << '\n'
       << "cells_evaluated = " << res.new_cells << '\n'
       << "wall_seconds = " << format_double(res.wall_seconds) << '\n';
  if (res.complete) {
    std::ofstream cells(dir / "cells.csv");
    cells << res.cells_csv();
    std::ofstream lines(dir / "lines.csv");
    lines << res.lines_csv(true);
  }
  return res;
}

namespace {

SweepConfig load_config(const std::string& output_dir) {
  const fs::path path = fs::path(output_dir) / "config.txt";
  if (!fs::exists(path)) throw ConfigError("no sweep configuration in " + output_dir);
  return SweepConfig::from_config(KeyValueConfig::load(path.string()));
}

}  // namespace

SweepResult resume_sweep(const std::string& output_dir, int threads) {
  SweepConfig cfg = load_config(output_dir);
  cfg.output_dir = output_dir;
  cfg.threads = threads;
  cfg.max_cells = 0;
  return run_sweep(cfg);
}

SweepResult load_sweep(const std::string& output_dir) {
  SweepConfig cfg = load_config(output_dir);
  cfg.output_dir = output_dir;
  SweepResult res;
  res.config = cfg;
  Shared shared;
  res.lines = lines_for(cfg, shared);
  for (auto& [key, c] : read_journal(fs::path(output_dir) / "journal.txt", cfg.result_hash())) res.cells.push_back(c);
  finalize(res);
  return res;
}

std::vector<std::string> emit_figure_data(const SweepResult& result, const std::string& figure_id,
                                          const std::string& dir) {
  struct Figure {
    const char* id;
    const char* column;
    const char* title;
    bool sra;
  };
  static const Figure figures[] = {
      {"fig3", "value", "quantum excitation efficiency (fraction with n > n_th)", false},
      {"fig4a", "value", "classical capture fraction (I3 > n_th)", false},
      {"fig4b", "ionized_fraction", "classical ionization fraction", true},
      {"fig5a", "value", "quantum excitation efficiency, 2:1 resonance", false},
      {"fig5b", "value", "classical capture fraction, 2:1 resonance", false},
  };
  const Figure* fig = nullptr;
  for (const auto& f : figures) {
    if (figure_id == f.id) fig = &f;
  }
  if (!fig) throw InvalidParameter("unknown figure id '" + figure_id + "'");
  if (!result.complete) throw InvalidParameter("sweep is incomplete; resume it before emitting figures");
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  const fs::path cells = out / (figure_id + "_cells.csv");
  const fs::path lines = out / (figure_id + "_lines.csv");
  const fs::path recipe = out / (figure_id + "_recipe.txt");
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p.string());
    f << text;
    if (!f) throw IoError("write failed: " + p.string());
  };
  write(cells, result.cells_csv());
  write(lines, result.lines_csv(fig->sra));
  std::ostringstream r;
  r << "figure " << figure_id << '\n'
    << "title " << fig->title << '\n'
    << "engine " << to_string(result.config.engine) << '\n'
    << "heatmap " << cells.filename().string() << " x=p1 y=p2 color=" << fig->column
    << " scale=log-log grid=" << result.config.p1_count << 'x' << result.config.p2_count << " range=[0,1]\n"
    << "mask status!=ok as hatched\n"
    << "overlay " << lines.filename().string() << " line_id=separation style=solid\n"
    << "overlay " << lines.filename().string() << " line_id=classical_threshold style=dashed\n"
    << "overlay " << lines.filename().string() << " line_id=lc_threshold style=dashdot\n";
  if (fig->sra) r << "overlay " << lines.filename().string() << " line_id=sra_breakdown style=dotted\n";
  write(recipe, r.str());
  return {cells.string(), lines.string(), recipe.string()};
}

int sweep_exit_code(const SweepResult& result) {
  if (result.failed) return 4;
  if (result.failed_cells > 0 || !result.complete) return 3;
  return 0;
}

}  // namespace rydchirp
