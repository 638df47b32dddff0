#pragma once

// Quantum amplitude solvers: full multilevel, RWA chain, and two-level LZ.
//
// Amplitudes are held in the interaction picture, b = a exp(i E_n tau), so the
// integrators only resolve coupling and chirp time scales. Populations are
// picture independent. Internal time runs from 0 at the sweep start; reported
// times are shifted so that 0 is the n0 resonance.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "rydchirp/coupling_table.hpp"
#include "rydchirp/model.hpp"
#include "rydchirp/predictors.hpp"

namespace rydchirp {

using Complex = std::complex<double>;

struct AmplitudeState {
  std::vector<QuantumLevel> basis;
  std::vector<Complex> amplitudes;
  double tau = 0.0;  // internal time

  double norm() const;
  // Sum of |b|^2 over levels with principal number n.
  double population(int n) const;

  void save(const std::string& path) const;  // binary snapshot
  static AmplitudeState load(const std::string& path);
};

// Single normalized population in the CRS (n0, n0-1, m).
AmplitudeState initial_crs_state(const std::vector<QuantumLevel>& basis, const ProblemSpec& spec);

struct BasisBounds {
  int n_lo = 25;
  int n_hi = 70;
  int max_nl = 6;

  // n in [n_start - 5, n_end + 10], n - l <= 6.
  static BasisBounds defaults(const ProblemSpec& spec);
};

std::vector<QuantumLevel> full_basis(const ProblemSpec& spec, const BasisBounds& bounds);

struct QuantumTrajectory {
  std::vector<double> tau;  // reported time (0 at the n0 resonance)
  std::vector<double> mean_energy_norm;
  std::vector<double> resonant_energy_norm;
  std::vector<double> boundary_pop;
  std::vector<int> n_values;                 // columns of populations
  std::vector<std::vector<double>> populations;  // [sample][n index]
  AmplitudeState final_state;
  double max_boundary_pop = 0.0;
  std::string max_boundary;  // boundary holding max_boundary_pop
  double max_norm_drift = 0.0;

  // P_n at the final state for every n in n_values.
  std::vector<double> final_populations() const;
  void write_csv(const std::string& path) const;
  std::string to_csv() const;
};

struct SolveOptions {
  int samples = 2000;
  bool enforce_truncation = true;
  // Continue from a snapshot instead of the initial CRS.
  std::optional<AmplitudeState> resume_from;
  // Stop at this internal time instead of the sweep end.
  std::optional<double> stop_tau;
};

QuantumTrajectory solve_full(const ProblemSpec& spec, const CouplingTable& table, const BasisBounds& bounds,
                             const SolveOptions& options = {});
// Table built (and optionally cached) for the given bounds.
QuantumTrajectory solve_full(const ProblemSpec& spec, const BasisBounds& bounds, const SolveOptions& options = {},
                             const std::string& cache_dir = "");

QuantumTrajectory solve_rwa_chain(const ProblemSpec& spec, const ResonantChain& chain,
                                  const SolveOptions& options = {});
QuantumTrajectory solve_rwa_chain(const ProblemSpec& spec, const CouplingTable& table, int chain_levels,
                                  const SolveOptions& options = {});

// Transfers the state between internal times without sampling; used for reversibility checks.
AmplitudeState propagate_full(const ProblemSpec& spec, const CouplingTable& table, const AmplitudeState& state,
                              double tau_to);
AmplitudeState propagate_rwa(const ProblemSpec& spec, const ResonantChain& chain, const AmplitudeState& state,
                             double tau_to);

// Two-level LZ sweep at unit rate; population transferred.
double solve_two_level(double lambda);

double excited_fraction(const QuantumTrajectory& traj, int n_th);
double excited_fraction(const AmplitudeState& state, int n_th);
// Normalized by |E_n0|.
double mean_energy(const AmplitudeState& state, const ProblemSpec& spec);

// Reported time of the k-th transfer (midpoint of the population moving onto the
// (k+1)-th chain level): first time the cumulative population of n >= n0 + (k+1) q reaches 1/2.
std::optional<double> transfer_midpoint(const QuantumTrajectory& traj, int n0, int q, int k);

}  // namespace rydchirp
