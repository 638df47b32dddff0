#include "rydchirp/classical.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/numeric/odeint.hpp>

#include "rydchirp/couplings.hpp"
#include "rydchirp/errors.hpp"

namespace rydchirp {

namespace odeint = boost::numeric::odeint;

namespace {

// Scaled Cartesian phase point: x = r / n0^2, p = p_phys * n0, time s = omega * tau
// with omega = 2K / n0^3, so the unperturbed motion is Kepler with mu = 1.
struct Phase {
  std::array<double, 3> x;
  std::array<double, 3> p;
};

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm3(const std::array<double, 3>& a) { return std::sqrt(dot(a, a)); }

Phase to_phase(const ClassicalState& s, double n0) {
  const double st = std::sin(s.theta), ct = std::cos(s.theta);
  const double sp = std::sin(s.phi), cp = std::cos(s.phi);
  const std::array<double, 3> er{st * cp, st * sp, ct};
  const std::array<double, 3> et{ct * cp, ct * sp, -st};
  const std::array<double, 3> ep{-sp, cp, 0.0};
  const double rho = s.r * st;
  // p_phi / rho is finite for every physical state; on the axis p_phi must vanish.
  const double pp = s.p_phi == 0.0 ? 0.0 : s.p_phi / rho;
  Phase ph;
  for (int i = 0; i < 3; ++i) {
    ph.x[i] = s.r * er[i] / (n0 * n0);
    ph.p[i] = (s.p_r * er[i] + s.p_theta / s.r * et[i] + pp * ep[i]) * n0;
  }
  return ph;
}

ClassicalState to_state(const Phase& ph, double n0, double tau) {
  std::array<double, 3> x, p;
  for (int i = 0; i < 3; ++i) {
    x[i] = ph.x[i] * n0 * n0;
    p[i] = ph.p[i] / n0;
  }
  ClassicalState s;
  s.r = norm3(x);
  const double rho = std::hypot(x[0], x[1]);
  s.theta = std::atan2(rho, x[2]);
  s.phi = std::atan2(x[1], x[0]);
  if (s.phi < 0) s.phi += 2.0 * M_PI;
  s.p_r = dot(x, p) / s.r;
  const double st = std::sin(s.theta), ct = std::cos(s.theta);
  const double sp = std::sin(s.phi), cp = std::cos(s.phi);
  s.p_theta = s.r * (ct * cp * p[0] + ct * sp * p[1] - st * p[2]);
  s.p_phi = x[0] * p[1] - x[1] * p[0];
  s.tau = tau;
  return s;
}

// Unperturbed energy of a scaled phase point.
double phase_energy(const Phase& ph, double k, double n0) {
  return k / (n0 * n0) * (dot(ph.p, ph.p) - 2.0 / norm3(ph.x));
}

double phase_p_phi(const Phase& ph, double n0) { return n0 * (ph.x[0] * ph.p[1] - ph.x[1] * ph.p[0]); }

// Stumpff functions c2, c3 of z.
void stumpff(double z, double& c2, double& c3) {
  if (std::fabs(z) < 0.5) {
    // Series: c_k(z) = sum_j (-z)^j / (k + 2j)!
    double t2 = 0.5, t3 = 1.0 / 6.0;
    c2 = t2;
    c3 = t3;
    for (int j = 1; j < 12; ++j) {
      t2 *= -z / ((2 * j + 1) * (2 * j + 2));
      t3 *= -z / ((2 * j + 2) * (2 * j + 3));
      c2 += t2;
      c3 += t3;
    }
  } else if (z > 0) {
    const double y = std::sqrt(z);
    const double h = std::sin(0.5 * y);
    c2 = 2.0 * h * h / z;
    c3 = (y - std::sin(y)) / (z * y);
  } else {
    const double y = std::sqrt(-z);
    const double h = std::sinh(0.5 * y);
    c2 = -2.0 * h * h / z;
    c3 = (std::sinh(y) - y) / (-z * y);
  }
}

// Exact Kepler flow (mu = 1) over scaled time ds, universal variables with
// Laguerre-Conway iteration.
void kepler_drift(Phase& ph, double ds) {
  const double r0 = norm3(ph.x);
  const double sigma0 = dot(ph.x, ph.p);
  const double alpha = 2.0 / r0 - dot(ph.p, ph.p);
  double X = ds / r0 - 0.5 * sigma0 * ds * ds / (r0 * r0 * r0);
  double G0 = 1, G1 = 0, G2 = 0, G3 = 0, r = r0;
  for (int it = 0; it < 60; ++it) {
    const double z = alpha * X * X;
    double c2, c3;
    stumpff(z, c2, c3);
    G2 = X * X * c2;
    G3 = X * X * X * c3;
    G1 = X - alpha * G3;
    G0 = 1.0 - alpha * G2;
    const double f = r0 * G1 + sigma0 * G2 + G3 - ds;
    r = r0 * G0 + sigma0 * G1 + G2;
    const double fpp = sigma0 * G0 + (1.0 - alpha * r0) * G1;
    const double disc = std::sqrt(std::fabs(16.0 * r * r - 20.0 * f * fpp));
    const double dX = 5.0 * f / (r + (r >= 0 ? disc : -disc));
    X -= dX;
    if (std::fabs(dX) <= 1e-15 * std::max(1.0, std::fabs(X))) {
      stumpff(alpha * X * X, c2, c3);
      G2 = X * X * c2;
      G3 = X * X * X * c3;
      G1 = X - alpha * G3;
      G0 = 1.0 - alpha * G2;
      r = r0 * G0 + sigma0 * G1 + G2;
      const double fk = 1.0 - G2 / r0;
      const double gk = ds - G3;
      const double fd = -G1 / (r * r0);
      const double gd = 1.0 - G2 / r;
      for (int i = 0; i < 3; ++i) {
        const double xi = ph.x[i], pi = ph.p[i];
        ph.x[i] = fk * xi + gk * pi;
        ph.p[i] = fd * xi + gd * pi;
      }
      return;
    }
  }
  throw IntegrationFailure("Kepler drift did not converge (r = " + std::to_string(r0) + ")");
}

// Yoshida triple-jump weights for a fourth-order symmetric composition.
const double kW1 = 1.0 / (2.0 - std::cbrt(2.0));
const double kW0 = 1.0 - 2.0 * kW1;

struct Splitter {
  double omega;  // 2K / n0^3
  double force;  // n0 * (2 P1 / C0)
  const ProblemSpec* spec;
  double phase0;

  // Second-order kick-drift-kick over physical time h starting at tau.
  void leapfrog(Phase& ph, double tau, double h) const {
    ph.p[2] -= 0.5 * h * force * std::cos(drive_phase(tau, *spec, phase0));
    kepler_drift(ph, omega * h);
    ph.p[2] -= 0.5 * h * force * std::cos(drive_phase(tau + h, *spec, phase0));
  }

  void step(Phase& ph, double tau, double h) const {
    leapfrog(ph, tau, kW1 * h);
    leapfrog(ph, tau + kW1 * h, kW0 * h);
    leapfrog(ph, tau + (kW1 + kW0) * h, kW1 * h);
  }
};

// Right-hand side for the reference Runge-Kutta path on the same scaled state.
using Flat = std::array<double, 6>;

struct FlatSystem {
  double omega;
  double force;
  const ProblemSpec* spec;
  double phase0;

  void operator()(const Flat& y, Flat& dy, double tau) const {
    const double r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    const double w = omega / (r2 * std::sqrt(r2));
    for (int i = 0; i < 3; ++i) {
      dy[i] = omega * y[3 + i];
      dy[3 + i] = -w * y[i];
    }
    dy[5] -= force * std::cos(drive_phase(tau, *spec, phase0));
  }
};

}  // namespace

ClassicalModel ClassicalModel::from_spec(const ProblemSpec& spec, double drive_phase0) {
  spec.validate();
  ClassicalModel m;
  m.spec = spec;
  // Matrix elements are computed in units of a0/2.
  m.c0_bohr = c0_exact(spec.n0, spec.q, spec.m) / 2.0;
  m.drive_phase0 = drive_phase0;
  return m;
}

double ClassicalModel::kinetic_scale() const {
  return spec.p2 * std::pow(static_cast<double>(spec.n0), 4) / (6.0 * spec.q * spec.q);
}

double ClassicalModel::unperturbed_energy(const ClassicalState& s) const {
  return phase_energy(to_phase(s, spec.n0), kinetic_scale(), spec.n0);
}

double ClassicalModel::action_i3(const ClassicalState& s) const {
  const double e = unperturbed_energy(s);
  return e < 0 ? std::sqrt(-kinetic_scale() / e) : std::numeric_limits<double>::infinity();
}

double ClassicalModel::escape_radius() const {
  return escape_factor * 2.0 * static_cast<double>(spec.n_end) * spec.n_end;
}

ClassicalState build_circular_orbit(const ClassicalModel& model, double i3, double i1, double orbit_phase) {
  if (!(i3 > 0)) throw InvalidParameter("circular orbit needs i3 > 0");
  if (std::fabs(i1) > i3) throw InvalidParameter("inclination: |i1| must not exceed i3");
  const double n0 = model.spec.n0;
  const double a = i3 * i3;
  const double cb = i1 / i3;
  const double sb = std::sqrt(std::max(0.0, 1.0 - cb * cb));
  const double cu = std::cos(orbit_phase);
  const double su = std::sin(orbit_phase);
  Phase ph;
  ph.x = {a * cu / (n0 * n0), a * cb * su / (n0 * n0), a * sb * su / (n0 * n0)};
  ph.p = {-su * n0 / i3, cb * cu * n0 / i3, sb * cu * n0 / i3};
  ClassicalState s = to_state(ph, n0, 0.0);
  s.p_phi = i1;  // exact by construction
  return s;
}

ClassicalTrajectory integrate_trajectory(const ClassicalModel& model, const ClassicalState& start, double tau_to,
                                         const IntegrationOptions& options) {
  const ProblemSpec& spec = model.spec;
  const double k = model.kinetic_scale();
  const double n0 = spec.n0;
  const double omega = 2.0 * k / (n0 * n0 * n0);
  const double force = n0 * model.drive_strength();
  Phase ph = to_phase(start, n0);
  const double p_phi0 = start.p_phi;
  const double e0 = std::fabs(dimensionless_energy(spec.n0, spec));
  const double t_ref = reference_time(spec);
  const double r_escape = model.escape_radius() / (n0 * n0);

  ClassicalTrajectory tr;
  auto record = [&](double t) {
    const double e = phase_energy(ph, k, n0);
    tr.samples.push_back({t - t_ref, e / e0, e < 0 ? std::sqrt(-k / e) : std::numeric_limits<double>::infinity(),
                          n0 * n0 * norm3(ph.x), phase_p_phi(ph, n0)});
    tr.max_p_phi_drift = std::max(tr.max_p_phi_drift, std::fabs(phase_p_phi(ph, n0) - p_phi0));
  };

  // Escape is checked at chunk boundaries; samples fall on every `ratio`-th boundary.
  const bool sampled = options.samples > 1;
  const int ratio = sampled ? std::max(1, (200 + options.samples - 2) / (options.samples - 1)) : 1;
  const int chunks = sampled ? (options.samples - 1) * ratio : 200;
  const double from = start.tau;
  double t = from;
  if (sampled) record(t);

  const Splitter split{omega, force, &spec, model.drive_phase0};
  const FlatSystem flat{omega, force, &spec, model.drive_phase0};
  auto rk = odeint::make_controlled(spec.tol.classical_abs_tol, spec.tol.classical_rel_tol,
                                    odeint::runge_kutta_fehlberg78<Flat>());
  double rk_dt = (tau_to >= from ? 1.0 : -1.0) * 1e-4;

  for (int i = 1; i <= chunks; ++i) {
    const double target = i == chunks ? tau_to : from + (tau_to - from) * i / chunks;
    const double span = target - t;
    if (model.integrator == ClassicalModel::Integrator::Splitting) {
      // Step count from the faster of the drive phase advance and the orbital phase advance.
      const double drive_adv =
          std::fabs(drive_phase(target, spec) - drive_phase(t, spec));
      const double e = phase_energy(ph, k, n0);
      const double orbit_rate = e < 0 ? 2.0 * std::pow(-e, 1.5) / std::sqrt(k) : 0.0;
      const double adv = std::max(drive_adv, orbit_rate * std::fabs(span));
      const int steps = std::max(1, static_cast<int>(std::ceil(adv / (2.0 * M_PI) * model.steps_per_period)));
      const double h = span / steps;
      for (int j = 0; j < steps; ++j) split.step(ph, t + j * h, h);
    } else {
      Flat y{ph.x[0], ph.x[1], ph.x[2], ph.p[0], ph.p[1], ph.p[2]};
      const double dir = span >= 0 ? 1.0 : -1.0;
      double tt = t;
      while ((target - tt) * dir > 0) {
        const bool last = std::fabs(rk_dt) >= std::fabs(target - tt);
        double step = last ? target - tt : rk_dt;
        int rejected = 0;
        while (rk.try_step(std::cref(flat), y, tt, step) != odeint::success) {
          if (++rejected > 500) throw IntegrationFailure("classical step size underflow at tau = " + std::to_string(tt));
        }
        if (!last || std::fabs(step) > std::fabs(rk_dt)) rk_dt = step;
        if (last) tt = target;
      }
      ph.x = {y[0], y[1], y[2]};
      ph.p = {y[3], y[4], y[5]};
    }
    t = target;
    for (int c = 0; c < 3; ++c) {
      if (!std::isfinite(ph.x[c]) || !std::isfinite(ph.p[c])) {
        throw IntegrationFailure("non-finite classical state at tau = " + std::to_string(t));
      }
    }
    tr.max_p_phi_drift = std::max(tr.max_p_phi_drift, std::fabs(phase_p_phi(ph, n0) - p_phi0));
    if (sampled && i % ratio == 0) record(t);
    if (options.stop_on_escape && phase_energy(ph, k, n0) > 0 && norm3(ph.x) > r_escape) {
      tr.escaped = true;
      break;
    }
  }
  tr.final_state = to_state(ph, n0, t);
  tr.final_energy = phase_energy(ph, k, n0);
  tr.final_i3 = tr.final_energy < 0 ? std::sqrt(-k / tr.final_energy) : std::numeric_limits<double>::infinity();
  return tr;
}

bool detect_ionization(const ClassicalTrajectory& traj) { return traj.escaped || traj.final_energy > 0.0; }

void EnsembleSpec::validate() const {
  if (count < 1) throw InvalidParameter("ensemble count must be at least 1");
  if (!(i3 > 0) || std::fabs(i1) > i3) throw InvalidParameter("ensemble actions need |i1| <= i3, i3 > 0");
  if (samples < 0 || threads < 1) throw InvalidParameter("ensemble samples >= 0 and threads >= 1 required");
}

double EnsembleSpec::scan_value(int index) const {
  const double span = scan == Scan::DrivePhase ? 2.0 * M_PI : M_PI;
  return span * index / count;
}

EnsembleResult ensemble_run(const ProblemSpec& spec, const EnsembleSpec& ens, double i3_threshold) {
  ens.validate();
  const ClassicalModel base = ClassicalModel::from_spec(spec);
  const double t_end = sweep_duration(spec);
  EnsembleResult res;
  res.rows.resize(ens.count);
  std::vector<std::vector<ClassicalSample>> samples(ens.count);
  std::vector<double> drift(ens.count, 0.0);

  auto run_one = [&](int i) {
    EnsembleRow& row = res.rows[i];
    row.scan_value = ens.scan_value(i);
    ClassicalModel model = base;
    double orbit_phase = ens.fixed_orbit_phase;
    if (ens.scan == EnsembleSpec::Scan::DrivePhase) {
      model.drive_phase0 = row.scan_value;
    } else {
      model.drive_phase0 = ens.fixed_drive_phase;
      orbit_phase = row.scan_value;
    }
    try {
      const ClassicalState start = build_circular_orbit(model, ens.i3, ens.i1, orbit_phase);
      const auto tr = integrate_trajectory(model, start, t_end, {ens.samples, true});
      row.final_energy = tr.final_energy;
      row.final_i3 = tr.final_i3;
      row.ionized = detect_ionization(tr);
      row.captured = !row.ionized && tr.final_i3 > i3_threshold;
      drift[i] = tr.max_p_phi_drift;
      samples[i] = tr.samples;
    } catch (const Error& e) {
      row.failed = true;
      row.failure = e.what();
    }
  };

  const int threads = std::min(ens.threads, ens.count);
  if (threads <= 1) {
    for (int i = 0; i < ens.count; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < ens.count; i = next++) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  int ok = 0;
  for (int i = 0; i < ens.count; ++i) {
    const auto& row = res.rows[i];
    if (row.failed) {
      ++res.failures;
      continue;
    }
    ++ok;
    res.captured_fraction += row.captured;
    res.ionized_fraction += row.ionized;
    res.max_p_phi_drift = std::max(res.max_p_phi_drift, drift[i]);
  }
  if (ok > 0) {
    res.captured_fraction /= ok;
    res.ionized_fraction /= ok;
    res.neither_fraction = 1.0 - res.captured_fraction - res.ionized_fraction;
  }
  if (ens.samples > 1) {
    for (int s = 0; s < ens.samples; ++s) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      double tau = 0.0;
      bool any = false;
      for (int i = 0; i < ens.count; ++i) {
        if (res.rows[i].failed || static_cast<int>(samples[i].size()) <= s) continue;
        lo = std::min(lo, samples[i][s].energy_norm);
        hi = std::max(hi, samples[i][s].energy_norm);
        tau = samples[i][s].tau;
        any = true;
      }
      if (!any) break;
      res.band_tau.push_back(tau);
      res.band_min.push_back(lo);
      res.band_max.push_back(hi);
    }
  }
  return res;
}

std::string EnsembleResult::rows_csv() const {
  std::ostringstream out;
  out << "phase,final_i3,final_energy,ionized,captured,failed\n";
  for (const auto& r : rows) {
    out << format_double(r.scan_value) << ',' << format_double(r.final_i3) << ',' << format_double(r.final_energy)
        << ',' << (r.ionized ? 1 : 0) << ',' << (r.captured ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string EnsembleResult::summary_text() const {
  KeyValueConfig kv;
  kv.set("captured_fraction", captured_fraction);
  kv.set("ionized_fraction", ionized_fraction);
  kv.set("neither_fraction", neither_fraction);
  kv.set("trajectories", static_cast<int>(rows.size()));
  kv.set("failures", failures);
  kv.set("max_p_phi_drift", max_p_phi_drift);
  return kv.to_text();
}

void EnsembleResult::write(const std::string& csv_path, const std::string& summary_path) const {
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path);
  csv << rows_csv();
  std::ofstream sum(summary_path);
  if (!sum) throw IoError("cannot write " + summary_path);
  sum << summary_text();
}

}  // namespace rydchirp
