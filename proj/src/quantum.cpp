#include "rydchirp/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "rydchirp/errors.hpp"

namespace rydchirp {

namespace odeint = boost::numeric::odeint;

namespace {

// Interleaved (re, im) storage keeps the odeint algebra on plain doubles.
using RealState = std::vector<double>;

RealState pack(const std::vector<Complex>& a) {
  RealState y(2 * a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    y[2 * i] = a[i].real();
    y[2 * i + 1] = a[i].imag();
  }
  return y;
}

std::vector<Complex> unpack(const RealState& y) {
  std::vector<Complex> a(y.size() / 2);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = {y[2 * i], y[2 * i + 1]};
  return a;
}

// Full equations of motion in the interaction picture: b_j' = -i 2 P1 cos(phi_d) sum_k V_jk e^{i(E_j-E_k) tau} b_k.
class FullSystem {
 public:
  FullSystem(const ProblemSpec& spec, const CouplingTable& table, const std::vector<QuantumLevel>& basis)
      : spec_(spec), size_(basis.size()) {
    std::map<int, int> group_of_n;
    for (const auto& lv : basis) group_of_n.emplace(lv.n, 0);
    const double e0 = dimensionless_energy(spec.n0, spec);
    for (auto& [n, g] : group_of_n) {
      g = static_cast<int>(group_freq_.size());
      group_freq_.push_back(dimensionless_energy(n, spec) - e0);
    }
    group_.resize(size_);
    std::map<std::pair<int, int>, int> index;
    for (std::size_t j = 0; j < size_; ++j) {
      group_[j] = group_of_n.at(basis[j].n);
      index[{basis[j].n, basis[j].l}] = static_cast<int>(j);
    }
    for (std::size_t j = 0; j < size_; ++j) {
      const auto& a = basis[j];
      for (std::size_t k = j + 1; k < size_; ++k) {
        const auto& b = basis[k];
        if (std::abs(a.l - b.l) != 1) continue;
        const double v = table.normalized({a.n, a.l, a.m, b.n, b.l});
        if (v != 0.0) links_.push_back({static_cast<int>(j), static_cast<int>(k), v});
      }
    }
    phase_.resize(group_freq_.size());
    w_.resize(size_);
    z_.resize(size_);
  }

  void operator()(const RealState& y, RealState& dy, double tau) {
    for (std::size_t g = 0; g < group_freq_.size(); ++g) {
      const double th = group_freq_[g] * tau;
      phase_[g] = {std::cos(th), std::sin(th)};
    }
    for (std::size_t j = 0; j < size_; ++j) {
      w_[j] = std::conj(phase_[group_[j]]) * Complex(y[2 * j], y[2 * j + 1]);
      z_[j] = 0.0;
    }
    for (const auto& l : links_) {
      z_[l.j] += l.v * w_[l.k];
      z_[l.k] += l.v * w_[l.j];
    }
    const double drive = 2.0 * spec_.p1 * std::cos(drive_phase(tau, spec_));
    for (std::size_t j = 0; j < size_; ++j) {
      const Complex d = Complex(0.0, -drive) * phase_[group_[j]] * z_[j];
      dy[2 * j] = d.real();
      dy[2 * j + 1] = d.imag();
    }
  }

  std::size_t link_count() const { return links_.size(); }

 private:
  struct Link {
    int j;
    int k;
    double v;
  };
  ProblemSpec spec_;
  std::size_t size_;
  std::vector<double> group_freq_;
  std::vector<int> group_;
  std::vector<Link> links_;
  std::vector<Complex> phase_;
  std::vector<Complex> w_;
  std::vector<Complex> z_;
};

// RWA chain: b_k' = -i P1 [c_k e^{i psi_k} b_{k+1} + c_{k-1} e^{-i psi_{k-1}} b_{k-1}],
// psi_k = phi_d - (E_{k+1} - E_k) tau.
class RwaSystem {
 public:
  RwaSystem(const ProblemSpec& spec, const ResonantChain& chain) : spec_(spec), c_(chain.c) {
    for (std::size_t k = 0; k + 1 < chain.levels.size(); ++k) {
      gap_.push_back(dimensionless_energy(chain.levels[k + 1].n, spec) -
                     dimensionless_energy(chain.levels[k].n, spec));
    }
    e_.resize(gap_.size());
  }

  void operator()(const RealState& y, RealState& dy, double tau) {
    const double phi = drive_phase(tau, spec_);
    for (std::size_t k = 0; k < gap_.size(); ++k) {
      const double psi = phi - gap_[k] * tau;
      e_[k] = spec_.p1 * c_[k] * Complex(std::cos(psi), std::sin(psi));
    }
    const std::size_t n = gap_.size() + 1;
    for (std::size_t k = 0; k < n; ++k) {
      Complex s = 0.0;
      if (k + 1 < n) s += e_[k] * Complex(y[2 * k + 2], y[2 * k + 3]);
      if (k > 0) s += std::conj(e_[k - 1]) * Complex(y[2 * k - 2], y[2 * k - 1]);
      dy[2 * k] = s.imag();
      dy[2 * k + 1] = -s.real();
    }
  }

 private:
  ProblemSpec spec_;
  std::vector<double> c_;
  std::vector<double> gap_;
  std::vector<Complex> e_;
};

using Stepper = odeint::runge_kutta_fehlberg78<RealState>;

// Adaptive propagation that keeps its step size across calls.
class Propagator {
 public:
  Propagator(const Tolerances& tol, double max_dt) : tol_(tol), max_dt_(max_dt), stepper_(make(1.0)) {}

  template <class System>
  void advance(System& sys, RealState& y, double from, double to) {
    if (from == to) return;
    const double dir = to > from ? 1.0 : -1.0;
    if (dt_ == 0.0 || dt_ * dir < 0) {
      // The step limit must carry the sign of the direction of integration.
      stepper_ = make(dir);
      dt_ = dir * std::min(1e-3, std::fabs(to - from));
    }
    double t = from;
    int rejected = 0;
    while ((to - t) * dir > 0) {
      const bool last = std::fabs(dt_) >= std::fabs(to - t);
      double dt = last ? to - t : dt_;
      const double t_prev = t;
      if (stepper_.try_step(std::ref(sys), y, t, dt) == odeint::success) {
        rejected = 0;
        if (last && std::fabs(to - t) < 1e-12 * std::max(1.0, std::fabs(to))) t = to;
        if (!last || std::fabs(dt) > std::fabs(dt_)) dt_ = dt;
      } else {
        if (++rejected > 500 || std::fabs(dt) < 1e-14 * std::max(1.0, std::fabs(t_prev))) {
          throw IntegrationFailure("step size underflow at tau = " + std::to_string(t));
        }
        dt_ = dt;
      }
    }
  }

 private:
  odeint::controlled_runge_kutta<Stepper> make(double dir) const {
    return odeint::make_controlled(tol_.abs_tol, tol_.rel_tol, dir * max_dt_, Stepper());
  }

  Tolerances tol_;
  double max_dt_;
  odeint::controlled_runge_kutta<Stepper> stepper_;
  double dt_ = 0.0;
};

template <class System>
void advance(System& sys, RealState& y, double from, double to, const Tolerances& tol, double max_dt) {
  Propagator p(tol, max_dt);
  p.advance(sys, y, from, to);
}

struct Boundary {
  std::vector<std::pair<std::string, std::vector<int>>> groups;  // label -> basis indices
};

Boundary full_boundary(const std::vector<QuantumLevel>& basis, const BasisBounds& b, int m) {
  Boundary out;
  std::vector<int> top;
  std::vector<int> nl;
  std::vector<int> bottom;
  const int n_lo = std::max(b.n_lo, std::abs(m) + 1);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const auto& lv = basis[j];
    if (lv.n == b.n_hi) top.push_back(static_cast<int>(j));
    if (lv.n - lv.l == b.max_nl) nl.push_back(static_cast<int>(j));
    if (lv.n == n_lo && n_lo > std::abs(m) + 1) bottom.push_back(static_cast<int>(j));
  }
  out.groups.emplace_back("n = " + std::to_string(b.n_hi), top);
  out.groups.emplace_back("n - l = " + std::to_string(b.max_nl), nl);
  if (!bottom.empty()) out.groups.emplace_back("n = " + std::to_string(n_lo), bottom);
  return out;
}

double level_pop(const RealState& y, int j) { return y[2 * j] * y[2 * j] + y[2 * j + 1] * y[2 * j + 1]; }

template <class System>
QuantumTrajectory run_sampled(System& sys, const ProblemSpec& spec, const std::vector<QuantumLevel>& basis,
                              const Boundary& boundary, const SolveOptions& opt, double max_dt) {
  const double t_end = opt.stop_tau.value_or(sweep_duration(spec));
  AmplitudeState start = opt.resume_from.value_or(initial_crs_state(basis, spec));
  if (start.basis != basis) throw InvalidParameter("resume snapshot basis does not match the solver basis");
  if (start.tau > t_end) throw InvalidParameter("resume snapshot lies past the end of the sweep");

  QuantumTrajectory tr;
  for (const auto& lv : basis) {
    if (std::find(tr.n_values.begin(), tr.n_values.end(), lv.n) == tr.n_values.end()) tr.n_values.push_back(lv.n);
  }
  std::sort(tr.n_values.begin(), tr.n_values.end());
  std::vector<int> column(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    column[j] = static_cast<int>(std::lower_bound(tr.n_values.begin(), tr.n_values.end(), basis[j].n) -
                                 tr.n_values.begin());
  }
  std::vector<double> energy(tr.n_values.size());
  const double e0 = std::fabs(dimensionless_energy(spec.n0, spec));
  for (std::size_t i = 0; i < energy.size(); ++i) energy[i] = dimensionless_energy(tr.n_values[i], spec) / e0;

  const double t_ref = reference_time(spec);
  const double norm0 = start.norm();
  auto record = [&](const RealState& y, double t) {
    std::vector<double> pn(tr.n_values.size(), 0.0);
    for (std::size_t j = 0; j < basis.size(); ++j) pn[column[j]] += level_pop(y, static_cast<int>(j));
    double e = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pn.size(); ++i) {
      e += energy[i] * pn[i];
      total += pn[i];
    }
    double bpop = 0.0;
    for (const auto& [label, idx] : boundary.groups) {
      double p = 0.0;
      for (int j : idx) p += level_pop(y, j);
      bpop += p;
      if (p > tr.max_boundary_pop) {
        tr.max_boundary_pop = p;
        tr.max_boundary = label;
      }
    }
    tr.tau.push_back(t - t_ref);
    tr.mean_energy_norm.push_back(e / total);
    tr.resonant_energy_norm.push_back(resonant_energy_curve(t, spec) / e0);
    tr.boundary_pop.push_back(bpop);
    tr.populations.push_back(std::move(pn));
    tr.max_norm_drift = std::max(tr.max_norm_drift, std::fabs(total - norm0));
  };

  const int samples = std::max(opt.samples, 2);
  const double t_begin = 0.0;
  RealState y = pack(start.amplitudes);
  double t = start.tau;
  Propagator prop(spec.tol, max_dt);
  for (int i = 0; i < samples; ++i) {
    const double ts = t_begin + (t_end - t_begin) * i / (samples - 1);
    if (ts < start.tau) continue;
    prop.advance(sys, y, t, ts);
    t = ts;
    for (double v : y) {
      if (!std::isfinite(v)) throw IntegrationFailure("non-finite amplitude at tau = " + std::to_string(t));
    }
    record(y, t);
  }
  tr.final_state.basis = basis;
  tr.final_state.amplitudes = unpack(y);
  tr.final_state.tau = t;
  if (opt.enforce_truncation && tr.max_boundary_pop > spec.tol.boundary_pop_max) {
    throw TruncationViolation(tr.max_boundary, tr.max_boundary_pop);
  }
  return tr;
}

std::vector<QuantumLevel> chain_basis(const ResonantChain& chain) { return chain.levels; }

double full_max_dt(const ProblemSpec& spec) { return 0.25 * 2.0 * M_PI / initial_frequency(spec); }

}  // namespace

double AmplitudeState::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  return s;
}

double AmplitudeState::population(int n) const {
  double s = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (basis[j].n == n) s += std::norm(amplitudes[j]);
  }
  return s;
}

namespace {
constexpr char kSnapshotMagic[8] = {'R', 'Y', 'D', 'S', 'N', 'A', 'P', '1'};
}

void AmplitudeState::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write snapshot " + path);
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  const std::uint64_t count = basis.size();
  out.write(reinterpret_cast<const char*>(&tau), sizeof tau);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const std::int32_t q[3] = {basis[j].n, basis[j].l, basis[j].m};
    const double a[2] = {amplitudes[j].real(), amplitudes[j].imag()};
    out.write(reinterpret_cast<const char*>(q), sizeof q);
    out.write(reinterpret_cast<const char*>(a), sizeof a);
  }
  if (!out) throw IoError("snapshot write failed: " + path);
}

AmplitudeState AmplitudeState::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read snapshot " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) throw IoError("not a snapshot file: " + path);
  AmplitudeState s;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&s.tau), sizeof s.tau);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || count > (1u << 24)) throw IoError("corrupt snapshot header: " + path);
  for (std::uint64_t j = 0; j < count; ++j) {
    std::int32_t q[3];
    double a[2];
    in.read(reinterpret_cast<char*>(q), sizeof q);
    in.read(reinterpret_cast<char*>(a), sizeof a);
    if (!in) throw IoError("truncated snapshot: " + path);
    s.basis.emplace_back(q[0], q[1], q[2]);
    s.amplitudes.emplace_back(a[0], a[1]);
  }
  return s;
}

AmplitudeState initial_crs_state(const std::vector<QuantumLevel>& basis, const ProblemSpec& spec) {
  AmplitudeState s;
  s.basis = basis;
  s.amplitudes.assign(basis.size(), 0.0);
  const QuantumLevel crs(spec.n0, spec.n0 - 1, spec.m);
  const auto it = std::find(basis.begin(), basis.end(), crs);
  if (it == basis.end()) throw InvalidParameter("basis does not contain the initial circular state");
  s.amplitudes[it - basis.begin()] = 1.0;
  return s;
}

BasisBounds BasisBounds::defaults(const ProblemSpec& spec) { return {spec.n_start - 5, spec.n_end + 10, 6}; }

std::vector<QuantumLevel> full_basis(const ProblemSpec& spec, const BasisBounds& b) {
  if (b.max_nl < 1 || b.n_hi < spec.n0 + spec.q) throw InvalidParameter("basis bounds do not enclose the chain");
  std::vector<QuantumLevel> out;
  const int am = std::abs(spec.m);
  for (int n = std::max(b.n_lo, am + 1); n <= b.n_hi; ++n) {
    for (int l = std::max(am, n - b.max_nl); l <= n - 1; ++l) out.emplace_back(n, l, spec.m);
  }
  return out;
}

std::vector<double> QuantumTrajectory::final_populations() const {
  std::vector<double> out;
  for (int n : n_values) out.push_back(final_state.population(n));
  return out;
}

std::string QuantumTrajectory::to_csv() const {
  std::ostringstream out;
  out << "tau,mean_energy_norm,resonant_energy_norm,boundary_pop";
  for (int n : n_values) out << ",P_" << n;
  out << '\n';
  for (std::size_t i = 0; i < tau.size(); ++i) {
    out << format_double(tau[i]) << ',' << format_double(mean_energy_norm[i]) << ','
        << format_double(resonant_energy_norm[i]) << ',' << format_double(boundary_pop[i]);
    for (double p : populations[i]) out << ',' << format_double(p);
    out << '\n';
  }
  return out.str();
}

void QuantumTrajectory::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_csv();
  if (!out) throw IoError("write failed: " + path);
}

QuantumTrajectory solve_full(const ProblemSpec& spec, const CouplingTable& table, const BasisBounds& bounds,
                             const SolveOptions& options) {
  spec.validate();
  const auto basis = full_basis(spec, bounds);
  FullSystem sys(spec, table, basis);
  return run_sampled(sys, spec, basis, full_boundary(basis, bounds, spec.m), options, full_max_dt(spec));
}

QuantumTrajectory solve_full(const ProblemSpec& spec, const BasisBounds& bounds, const SolveOptions& options,
                             const std::string& cache_dir) {
  const auto table = build_table(spec, bounds.n_hi, TableScope::basis(bounds.n_lo, bounds.max_nl), cache_dir);
  return solve_full(spec, table, bounds, options);
}

QuantumTrajectory solve_rwa_chain(const ProblemSpec& spec, const ResonantChain& chain, const SolveOptions& options) {
  spec.validate();
  RwaSystem sys(spec, chain);
  const auto basis = chain_basis(chain);
  Boundary boundary;
  boundary.groups.emplace_back("chain end", std::vector<int>{static_cast<int>(basis.size()) - 1});
  return run_sampled(sys, spec, basis, boundary, options, sweep_duration(spec));
}

QuantumTrajectory solve_rwa_chain(const ProblemSpec& spec, const CouplingTable& table, int chain_levels,
                                  const SolveOptions& options) {
  return solve_rwa_chain(spec, build_chain(spec, table, chain_levels), options);
}

AmplitudeState propagate_full(const ProblemSpec& spec, const CouplingTable& table, const AmplitudeState& state,
                              double tau_to) {
  FullSystem sys(spec, table, state.basis);
  RealState y = pack(state.amplitudes);
  advance(sys, y, state.tau, tau_to, spec.tol, full_max_dt(spec));
  return {state.basis, unpack(y), tau_to};
}

AmplitudeState propagate_rwa(const ProblemSpec& spec, const ResonantChain& chain, const AmplitudeState& state,
                             double tau_to) {
  if (state.basis != chain.levels) throw InvalidParameter("state basis does not match the chain");
  RwaSystem sys(spec, chain);
  RealState y = pack(state.amplitudes);
  advance(sys, y, state.tau, tau_to, spec.tol, sweep_duration(spec));
  return {state.basis, unpack(y), tau_to};
}

namespace {

// H = [[-tau/2, lambda], [lambda, tau/2]] on [-T, T], started and read out in the
// upper adiabatic state.
double two_level_transfer(double lambda, double half_width) {
  auto upper = [lambda](double tau) {
    // Eigenvector of the larger eigenvalue.
    const double e = std::hypot(tau / 2.0, lambda);
    Complex v1 = lambda;
    Complex v2 = e + tau / 2.0;
    const double nrm = std::sqrt(std::norm(v1) + std::norm(v2));
    if (nrm == 0.0) return std::pair<Complex, Complex>{tau < 0 ? 1.0 : 0.0, tau < 0 ? 0.0 : 1.0};
    return std::pair<Complex, Complex>{v1 / nrm, v2 / nrm};
  };
  // Interaction picture: c1 = b1 e^{i tau^2/4}, c2 = b2 e^{-i tau^2/4}.
  auto sys = [lambda](const RealState& y, RealState& dy, double tau) {
    const Complex ph(std::cos(tau * tau / 2.0), -std::sin(tau * tau / 2.0));
    const Complex b1(y[0], y[1]);
    const Complex b2(y[2], y[3]);
    const Complex d1 = Complex(0.0, -lambda) * ph * b2;
    const Complex d2 = Complex(0.0, -lambda) * std::conj(ph) * b1;
    dy[0] = d1.real();
    dy[1] = d1.imag();
    dy[2] = d2.real();
    dy[3] = d2.imag();
  };
  const double t0 = -half_width;
  const double t1 = half_width;
  const auto [u1, u2] = upper(t0);
  const Complex b1 = u1 * std::exp(Complex(0.0, -t0 * t0 / 4.0));
  const Complex b2 = u2 * std::exp(Complex(0.0, t0 * t0 / 4.0));
  RealState y{b1.real(), b1.imag(), b2.real(), b2.imag()};
  Tolerances tol;
  tol.rel_tol = 1e-11;
  tol.abs_tol = 1e-12;
  advance(sys, y, t0, t1, tol, 0.5);
  const Complex c1 = Complex(y[0], y[1]) * std::exp(Complex(0.0, t1 * t1 / 4.0));
  const Complex c2 = Complex(y[2], y[3]) * std::exp(Complex(0.0, -t1 * t1 / 4.0));
  const auto [w1, w2] = upper(t1);
  return std::norm(std::conj(w1) * c1 + std::conj(w2) * c2);
}

}  // namespace

double solve_two_level(double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("solve_two_level: lambda must be non-negative");
  if (lambda == 0.0) return 0.0;
  const double half_width = std::max(40.0, 10.0 * lambda * lambda);
  const double p = two_level_transfer(lambda, half_width);
  const double p2 = two_level_transfer(lambda, 2.0 * half_width);
  if (std::fabs(p - p2) > 1e-4) {
    throw ConvergenceError("two-level sweep not converged: " + std::to_string(p) + " vs " + std::to_string(p2));
  }
  return p2;
}

double excited_fraction(const AmplitudeState& state, int n_th) {
  double s = 0.0;
  for (std::size_t j = 0; j < state.basis.size(); ++j) {
    if (state.basis[j].n > n_th) s += std::norm(state.amplitudes[j]);
  }
  return std::clamp(s / state.norm(), 0.0, 1.0);
}

double excited_fraction(const QuantumTrajectory& traj, int n_th) { return excited_fraction(traj.final_state, n_th); }

double mean_energy(const AmplitudeState& state, const ProblemSpec& spec) {
  double e = 0.0;
  for (std::size_t j = 0; j < state.basis.size(); ++j) {
    e += dimensionless_energy(state.basis[j].n, spec) * std::norm(state.amplitudes[j]);
  }
  return e / state.norm() / std::fabs(dimensionless_energy(spec.n0, spec));
}

std::optional<double> transfer_midpoint(const QuantumTrajectory& traj, int n0, int q, int k) {
  const int n_min = n0 + (k + 1) * q;
  for (std::size_t i = 0; i < traj.tau.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < traj.n_values.size(); ++c) {
      if (traj.n_values[c] >= n_min) s += traj.populations[i][c];
    }
    if (s >= 0.5) {
      if (i == 0) return traj.tau[0];
      // Linear interpolation between the bracketing samples.
      double prev = 0.0;
      for (std::size_t c = 0; c < traj.n_values.size(); ++c) {
        if (traj.n_values[c] >= n_min) prev += traj.populations[i - 1][c];
      }
      const double f = (0.5 - prev) / (s - prev);
      return traj.tau[i - 1] + f * (traj.tau[i] - traj.tau[i - 1]);
    }
  }
  return std::nullopt;
}

}  // namespace rydchirp
