#include "rydchirp/model.hpp"

#include <cmath>
#include <cstdlib>

#include "rydchirp/errors.hpp"

namespace rydchirp {

QuantumLevel::QuantumLevel(int n_, int l_, int m_) : n(n_), l(l_), m(m_) {
  if (!valid(n, l, m)) {
    throw InvalidParameter("invalid level (n=" + std::to_string(n) + ", l=" + std::to_string(l) +
                           ", m=" + std::to_string(m) + ")");
  }
}

bool QuantumLevel::valid(int n, int l, int m) noexcept {
  return n >= 1 && l >= 0 && l <= n - 1 && std::abs(m) <= l;
}

void PhysicalParams::validate() const {
  if (!(alpha > 0.0)) throw InvalidParameter("chirp rate alpha must be positive");
  if (!(rydberg > 0.0)) throw InvalidParameter("Rydberg energy must be positive");
  if (!(hbar > 0.0)) throw InvalidParameter("hbar must be positive");
  if (!(epsilon >= 0.0)) throw InvalidParameter("drive amplitude must be non-negative");
  if (n0 < 1 || q < 1) throw InvalidParameter("n0 and q must be positive");
}

double PhysicalParams::sweep_time() const { return 1.0 / std::sqrt(alpha); }

double PhysicalParams::rabi_time(double c0) const { return 2.0 * hbar / (c0 * epsilon); }

double PhysicalParams::nonlinearity_time() const {
  const double e2 = 6.0 * rydberg / std::pow(n0, 4);  // |d^2 E_n / dn^2| at n0
  return q * q * e2 / (hbar * alpha);
}

void ProblemSpec::validate() const {
  if (!(p1 >= 0.0)) throw InvalidParameter("P1 must be non-negative");
  if (!(p2 > 0.0)) throw InvalidParameter("P2 must be positive");
  if (q < 1) throw InvalidParameter("resonance order q must be >= 1");
  if (n0 < 1) throw InvalidParameter("n0 must be >= 1");
  if (std::abs(m) > n0 - 1) throw InvalidParameter("|m| must not exceed n0-1");
  if (!(n_start >= 1 && n_start < n0 && n0 < n_th && n_th < n_end)) {
    throw InvalidParameter("sweep window must satisfy n_start < n0 < n_th < n_end");
  }
}

ProblemSpec ProblemSpec::standard_window(double p1, double p2, int q, int n0, int m) {
  ProblemSpec s;
  s.p1 = p1;
  s.p2 = p2;
  s.q = q;
  s.n0 = n0;
  s.m = m;
  s.n_start = n0 - 10;
  s.n_end = n0 + 20;
  s.n_th = n0 + 10;
  return s;
}

KeyValueConfig ProblemSpec::to_config() const {
  KeyValueConfig cfg;
  cfg.set("p1", p1);
  cfg.set("p2", p2);
  cfg.set("q", q);
  cfg.set("n0", n0);
  cfg.set("m", m);
  cfg.set("n_start", n_start);
  cfg.set("n_end", n_end);
  cfg.set("n_th", n_th);
  cfg.set("rel_tol", tol.rel_tol);
  cfg.set("abs_tol", tol.abs_tol);
  cfg.set("classical_rel_tol", tol.classical_rel_tol);
  cfg.set("classical_abs_tol", tol.classical_abs_tol);
  cfg.set("boundary_pop_max", tol.boundary_pop_max);
  cfg.set("norm_drift_max", tol.norm_drift_max);
  return cfg;
}

ProblemSpec ProblemSpec::from_config(const KeyValueConfig& cfg) { return from_config(cfg, ProblemSpec{}); }

ProblemSpec ProblemSpec::from_config(const KeyValueConfig& cfg, const ProblemSpec& d) {
  ProblemSpec s;
  s.p1 = cfg.get_double("p1", d.p1);
  s.p2 = cfg.get_double("p2", d.p2);
  s.q = cfg.get_int("q", d.q);
  s.n0 = cfg.get_int("n0", d.n0);
  s.m = cfg.get_int("m", d.m);
  s.n_start = cfg.get_int("n_start", d.n_start);
  s.n_end = cfg.get_int("n_end", d.n_end);
  s.n_th = cfg.get_int("n_th", d.n_th);
  s.tol.rel_tol = cfg.get_double("rel_tol", d.tol.rel_tol);
  s.tol.abs_tol = cfg.get_double("abs_tol", d.tol.abs_tol);
  s.tol.classical_rel_tol = cfg.get_double("classical_rel_tol", d.tol.classical_rel_tol);
  s.tol.classical_abs_tol = cfg.get_double("classical_abs_tol", d.tol.classical_abs_tol);
  s.tol.boundary_pop_max = cfg.get_double("boundary_pop_max", d.tol.boundary_pop_max);
  s.tol.norm_drift_max = cfg.get_double("norm_drift_max", d.tol.norm_drift_max);
  s.validate();
  return s;
}

ProblemSpec to_dimensionless(const PhysicalParams& p, double c0, const ProblemSpec& window) {
  p.validate();
  if (!(c0 > 0.0)) throw InvalidParameter("C0 must be positive");
  ProblemSpec s = window;
  const double root_alpha = std::sqrt(p.alpha);
  s.p1 = c0 * p.epsilon / (2.0 * p.hbar * root_alpha);
  s.p2 = 6.0 * p.q * p.q * p.rydberg / (p.hbar * root_alpha * std::pow(p.n0, 4));
  s.q = p.q;
  s.n0 = p.n0;
  s.m = p.m;
  return s;
}

PhysicalParams from_dimensionless(const ProblemSpec& spec, double c0, double hbar, double rydberg) {
  if (!(c0 > 0.0) || !(hbar > 0.0) || !(rydberg > 0.0) || !(spec.p2 > 0.0)) {
    throw InvalidParameter("from_dimensionless needs positive C0, hbar, Ry and P2");
  }
  PhysicalParams p;
  p.hbar = hbar;
  p.rydberg = rydberg;
  p.n0 = spec.n0;
  p.q = spec.q;
  p.m = spec.m;
  const double root_alpha = 6.0 * spec.q * spec.q * rydberg / (hbar * spec.p2 * std::pow(spec.n0, 4));
  p.alpha = root_alpha * root_alpha;
  p.epsilon = 2.0 * hbar * root_alpha * spec.p1 / c0;
  return p;
}

namespace {

double energy_scale(const ProblemSpec& s) {
  // P2 n0^4 / (6 q^2)
  return s.p2 * std::pow(static_cast<double>(s.n0), 4) / (6.0 * s.q * s.q);
}

}  // namespace

double dimensionless_energy(int n, const ProblemSpec& spec) {
  if (n < 1) throw DomainError("energy requested for n < 1");
  return -energy_scale(spec) / (static_cast<double>(n) * n);
}

double dimensionless_energy_continuous(double n, const ProblemSpec& spec) {
  if (!(n > 0.0)) throw DomainError("energy requested for non-positive n");
  return -energy_scale(spec) / (n * n);
}

double resonant_frequency(double n, const ProblemSpec& spec) {
  if (!(n >= 1.0)) throw DomainError("resonant frequency requested for n < 1");
  return spec.q * 2.0 * energy_scale(spec) / (n * n * n);
}

double resonant_level(double omega, const ProblemSpec& spec) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("drive frequency outside (0, inf)");
  return std::cbrt(spec.q * 2.0 * energy_scale(spec) / omega);
}

double initial_frequency(const ProblemSpec& spec) { return resonant_frequency(spec.n_start, spec); }
double final_frequency(const ProblemSpec& spec) { return resonant_frequency(spec.n_end, spec); }
double sweep_duration(const ProblemSpec& spec) { return initial_frequency(spec) - final_frequency(spec); }
double drive_frequency(double tau, const ProblemSpec& spec) { return initial_frequency(spec) - tau; }

double drive_phase(double tau, const ProblemSpec& spec, double phase0) {
  return phase0 + initial_frequency(spec) * tau - 0.5 * tau * tau;
}

double crossing_time(int n, int order, const ProblemSpec& spec) {
  if (n < 1 || order < 1) throw DomainError("crossing_time needs n >= 1 and order >= 1");
  const double gap = dimensionless_energy(n + order, spec) - dimensionless_energy(n, spec);
  return initial_frequency(spec) - gap;
}

double reference_time(const ProblemSpec& spec) {
  return initial_frequency(spec) - resonant_frequency(spec.n0, spec);
}

int min_nonmixing_n(int q) {
  if (q < 1) throw DomainError("min_nonmixing_n needs q >= 1");
  // Gaps in units of the energy scale: E_n = -1/n^2. omega0 cancels from every
  // comparison. The order-(q+1) crossing out of n+q always precedes the order-q
  // crossing out of n+q (larger gap, down-chirp); the chains stay separate iff it
  // also precedes the arrival n -> n+q.
  auto gap = [](long double n, long double k) { return 1.0L / (n * n) - 1.0L / ((n + k) * (n + k)); };
  auto separated = [&](int n) { return gap(n + q, q + 1) > gap(n, q); };
  // The leading large-n behaviour is (q+1)/n^3 > q/n^3, so failures are confined to small n.
  constexpr int kScanLimit = 100000;
  int last_failure = 0;
  for (int n = 1; n <= kScanLimit; ++n) {
    if (!separated(n)) last_failure = n;
  }
  return last_failure + 1;
}

double resonant_energy_curve(double tau, const ProblemSpec& spec) {
  const double omega = drive_frequency(tau, spec);
  return dimensionless_energy_continuous(resonant_level(omega, spec), spec);
}

}  // namespace rydchirp
