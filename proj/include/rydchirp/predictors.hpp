#pragma once

// Closed-form regime predictors for the chirped ladder.

#include <string>
#include <vector>

#include "rydchirp/coupling_table.hpp"
#include "rydchirp/model.hpp"

namespace rydchirp {

// Chain of resonantly connected levels (n0 + kq, n0 - 1 + k), k = 0..K.
struct ResonantChain {
  ProblemSpec spec;
  std::vector<QuantumLevel> levels;
  std::vector<double> c;    // c[k] couples levels[k] and levels[k+1]
  std::vector<double> tau;  // tau[k]: crossing time of levels[k] -> levels[k+1]

  std::size_t size() const { return levels.size(); }
  // Index of the level with principal number n, or -1.
  int index_of(int n) const;
};

// K + 1 levels; needs a table reaching n0 + K q.
ResonantChain build_chain(const ProblemSpec& spec, const CouplingTable& table, int levels);
// Default length used by the RWA solver: the chain up to n_end + 10.
int default_chain_levels(const ProblemSpec& spec);

double lz_probability(double lambda);

// Product of LZ probabilities for every chain transition starting at n0..n_th (inclusive).
double lc_efficiency(double p1, const ResonantChain& chain, int n_th);
// p1 where lc_efficiency = 1/2; bisection on (0, 5] to 1e-4.
double lc_threshold(const ResonantChain& chain, int n_th);

double separation_line(double p1);
// Local LC condition p2 (n0/n)^4 > 1 + p1 c_n; returns lhs / rhs.
double separation_condition(int n, int n0, double p1, double p2, double c_n);

constexpr double kClassicalThreshold = 0.41;
double classical_threshold_p1(double p2);

// P1 above which the single-resonance approximation fails at level n.
double sra_breakdown_p1(double p2, int n0, int n, int m, double gamma = 1.0);

enum class Regime { LC, AR, Inefficient, SRABreakdown };
std::string to_string(Regime r);

struct RegimeLines {
  int n0 = 40;
  int m = 39;
  int n_f = 60;
  double gamma = 1.0;
  double p1_lc_threshold = 0.39;

  double separation(double p1) const { return separation_line(p1); }
  double classical(double p2) const { return classical_threshold_p1(p2); }
  double sra(double p2) const { return sra_breakdown_p1(p2, n0, n_f, m, gamma); }

  struct Sample {
    double p1;
    double p2;
    std::string line_id;
  };
  // Log-spaced samples of every line clipped to the window; stable order.
  std::vector<Sample> sample(double p1_lo, double p1_hi, double p2_lo, double p2_hi, int count,
                             bool include_sra) const;
};

RegimeLines regime_lines(const ProblemSpec& spec, const CouplingTable& table, double gamma = 1.0);
Regime classify_regime(double p1, double p2, const RegimeLines& lines);

}  // namespace rydchirp
