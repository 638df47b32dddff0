#pragma once

// Classical Kepler electron under the chirped z drive.
//
// Lengths are in Bohr radii, so the unperturbed Hamiltonian is
// K [p^2 - 2/r] with K = P2 n0^4 / (6 q^2) and the drive is (2 P1 / C0) cos(phi_d) z
// with C0 in Bohr radii. Internally the motion is integrated in Cartesian
// coordinates scaled by n0^2 (momenta by 1/n0), which removes the polar
// singularities of the spherical form.

#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "rydchirp/model.hpp"

namespace rydchirp {

struct ClassicalState {
  double r = 1.0;
  double theta = std::numbers::pi / 2;
  double phi = 0.0;
  double p_r = 0.0;
  double p_theta = 0.0;
  double p_phi = 0.0;
  double tau = 0.0;  // internal time
};

// Parameters of the classical problem derived from a ProblemSpec.
struct ClassicalModel {
  enum class Integrator {
    // Fourth-order symmetric composition of exact Kepler drifts and drive kicks.
    Splitting,
    // Adaptive Runge-Kutta-Fehlberg 7(8); reference method for cross-checks.
    RungeKutta
  };

  ProblemSpec spec;
  double c0_bohr = 1.0;     // C0 in Bohr radii
  double drive_phase0 = 0.0;
  double escape_factor = 10.0;
  Integrator integrator = Integrator::Splitting;
  int steps_per_period = 24;  // Splitting: steps per drive (or orbital) period, whichever is shorter

  // Uses the exact C0 of the spec's chain.
  static ClassicalModel from_spec(const ProblemSpec& spec, double drive_phase0 = 0.0);

  double kinetic_scale() const;  // K
  double drive_strength() const { return 2.0 * spec.p1 / c0_bohr; }
  double unperturbed_energy(const ClassicalState& s) const;
  // (-K/E)^{1/2}; +infinity for E >= 0.
  double action_i3(const ClassicalState& s) const;
  // Escape radius: escape_factor times the outer turning radius 2 n_f^2 of the final resonant level.
  double escape_radius() const;
};

// Circular orbit with principal action i3 and z projection i1. The node lies on the
// x axis and orbit_phase is the angle from the node within the orbital plane.
ClassicalState build_circular_orbit(const ClassicalModel& model, double i3, double i1, double orbit_phase);

struct ClassicalSample {
  double tau;  // reported time (0 at the n0 resonance)
  double energy_norm;  // E / |E_n0|
  double i3;
  double r;
  double p_phi;
};

struct ClassicalTrajectory {
  std::vector<ClassicalSample> samples;
  ClassicalState final_state;
  double final_energy = 0.0;  // unperturbed, dimensionless
  double final_i3 = 0.0;
  bool escaped = false;  // stopped early beyond the escape radius
  double max_p_phi_drift = 0.0;
};

struct IntegrationOptions {
  int samples = 0;          // evenly spaced over [tau_from, tau_to]; 0 records only the end
  bool stop_on_escape = true;
};

ClassicalTrajectory integrate_trajectory(const ClassicalModel& model, const ClassicalState& start, double tau_to,
                                         const IntegrationOptions& options = {});

bool detect_ionization(const ClassicalTrajectory& traj);

struct EnsembleSpec {
  enum class Scan { DrivePhase, OrbitPhase };
  int count = 64;
  Scan scan = Scan::DrivePhase;
  double i3 = 40.0;
  double i1 = 40.0;
  double fixed_drive_phase = 0.0;  // used when scanning the orbit phase
  double fixed_orbit_phase = 0.0;  // used when scanning the drive phase
  int samples = 0;                 // per-trajectory samples for band statistics
  int threads = 1;

  void validate() const;
  // Scan values: [0, 2 pi) for drive phase, [0, pi) for the orbit phase.
  double scan_value(int index) const;
};

struct EnsembleRow {
  double scan_value = 0.0;
  double final_i3 = 0.0;
  double final_energy = 0.0;
  bool ionized = false;
  bool captured = false;
  bool failed = false;
  std::string failure;
};

struct EnsembleResult {
  std::vector<EnsembleRow> rows;
  double captured_fraction = 0.0;
  double ionized_fraction = 0.0;
  double neither_fraction = 0.0;
  int failures = 0;
  double max_p_phi_drift = 0.0;
  // Per-sample extremes of E / |E_n0| over successful trajectories (samples > 0).
  std::vector<double> band_tau;
  std::vector<double> band_min;
  std::vector<double> band_max;

  std::string rows_csv() const;
  std::string summary_text() const;
  void write(const std::string& csv_path, const std::string& summary_path) const;
};

// Trajectories run from the sweep start (tau = 0) to the sweep end.
EnsembleResult ensemble_run(const ProblemSpec& spec, const EnsembleSpec& ens, double i3_threshold);

}  // namespace rydchirp
