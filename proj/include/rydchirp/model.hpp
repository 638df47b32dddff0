#pragma once

// Dimensionless model of a Rydberg atom driven by a down-chirped field.
//
// Time is measured in units of the sweep time alpha^{-1/2}; energies and
// frequencies in units of hbar*sqrt(alpha). The drive frequency is
// omega_d(tau) = omega0 - tau and its phase phi_d(tau) = phi0 + omega0*tau - tau^2/2.

#include <string>

#include "rydchirp/config.hpp"

namespace rydchirp {

struct QuantumLevel {
  int n = 1;
  int l = 0;
  int m = 0;

  QuantumLevel() = default;
  QuantumLevel(int n_, int l_, int m_);  // throws InvalidParameter

  static bool valid(int n, int l, int m) noexcept;
  bool circular() const noexcept { return l == n - 1; }

  friend bool operator==(const QuantumLevel&, const QuantumLevel&) = default;
  friend auto operator<=>(const QuantumLevel&, const QuantumLevel&) = default;
};

// Physical inputs. epsilon already carries the length normalization of z.
struct PhysicalParams {
  double epsilon = 0.0;
  double alpha = 1.0;
  double hbar = 1.0;
  double rydberg = 1.0;
  int n0 = 40;
  int q = 1;
  int m = 39;

  void validate() const;

  double sweep_time() const;                  // T_s = alpha^{-1/2}
  double rabi_time(double c0) const;          // T_R = 2 hbar / (C0 epsilon)
  double nonlinearity_time() const;           // T_nl = q^2 |E''(n0)| / (hbar alpha)
};

struct Tolerances {
  double rel_tol = 1e-11;          // quantum integrators
  double abs_tol = 1e-13;
  double classical_rel_tol = 1e-11;
  double classical_abs_tol = 1e-11;
  double boundary_pop_max = 1e-3;  // truncation guard
  double norm_drift_max = 1e-6;    // over one full sweep
};

struct ProblemSpec {
  double p1 = 1.0;
  double p2 = 30.0;
  int q = 1;
  int n0 = 40;
  int m = 39;
  int n_start = 30;
  int n_end = 60;
  int n_th = 50;
  Tolerances tol{};

  void validate() const;  // throws InvalidParameter

  // Sweep protocol used throughout: start/end frequencies resonant with n0-10 and n0+20,
  // excitation threshold n0+10.
  static ProblemSpec standard_window(double p1, double p2, int q, int n0, int m);

  KeyValueConfig to_config() const;
  // Reads the ProblemSpec keys; other keys are left for the caller.
  static ProblemSpec from_config(const KeyValueConfig& cfg, const ProblemSpec& defaults);
  static ProblemSpec from_config(const KeyValueConfig& cfg);
};

ProblemSpec to_dimensionless(const PhysicalParams& p, double c0, const ProblemSpec& window = {});
PhysicalParams from_dimensionless(const ProblemSpec& spec, double c0, double hbar, double rydberg);

// -P2 n0^4 / (6 q^2 n^2)
double dimensionless_energy(int n, const ProblemSpec& spec);
double dimensionless_energy_continuous(double n, const ProblemSpec& spec);

// q dE/dn = P2 n0^4 / (3 q n^3)
double resonant_frequency(double n, const ProblemSpec& spec);
// Continuous n at which resonant_frequency(n) == omega.
double resonant_level(double omega, const ProblemSpec& spec);

double initial_frequency(const ProblemSpec& spec);
double final_frequency(const ProblemSpec& spec);
double sweep_duration(const ProblemSpec& spec);
double drive_frequency(double tau, const ProblemSpec& spec);
double drive_phase(double tau, const ProblemSpec& spec, double phase0 = 0.0);

// Time at which omega_d equals the exact gap E_{n+order} - E_n.
double crossing_time(int n, int order, const ProblemSpec& spec);
// Time at which omega_d equals resonant_frequency(n0); the reporting origin.
double reference_time(const ProblemSpec& spec);

// Smallest n above which the order-q and order-(q+1) chains do not interleave.
int min_nonmixing_n(int q);

// Energy of the resonant (continuous) level at time tau.
double resonant_energy_curve(double tau, const ProblemSpec& spec);

}  // namespace rydchirp
