#include "rydchirp/predictors.hpp"

#include <cmath>

#include "rydchirp/errors.hpp"

namespace rydchirp {

int ResonantChain::index_of(int n) const {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k].n == n) return static_cast<int>(k);
  }
  return -1;
}

int default_chain_levels(const ProblemSpec& spec) { return (spec.n_end + 10 - spec.n0) / spec.q + 1; }

ResonantChain build_chain(const ProblemSpec& spec, const CouplingTable& table, int levels) {
  if (levels < 2) throw InvalidParameter("a chain needs at least two levels");
  ResonantChain chain;
  chain.spec = spec;
  for (int k = 0; k < levels; ++k) chain.levels.emplace_back(spec.n0 + k * spec.q, spec.n0 - 1 + k, spec.m);
  for (int k = 0; k + 1 < levels; ++k) {
    const auto& a = chain.levels[k];
    const auto& b = chain.levels[k + 1];
    chain.c.push_back(std::fabs(table.normalized({a.n, a.l, a.m, b.n, b.l})));
    chain.tau.push_back(crossing_time(a.n, spec.q, spec));
  }
  return chain;
}

double lz_probability(double lambda) {
  if (lambda < 0) throw DomainError("lz_probability: lambda must be non-negative");
  return -std::expm1(-2.0 * M_PI * lambda * lambda);
}

double lc_efficiency(double p1, const ResonantChain& chain, int n_th) {
  const std::size_t needed = static_cast<std::size_t>((n_th - chain.spec.n0) / chain.spec.q + 1);
  if (n_th < chain.spec.n0 || chain.c.size() < needed) {
    throw DomainError("lc_efficiency: chain does not reach n_th = " + std::to_string(n_th));
  }
  double eff = 1.0;
  for (std::size_t k = 0; k < needed; ++k) eff *= lz_probability(p1 * chain.c[k]);
  return eff;
}

double lc_threshold(const ResonantChain& chain, int n_th) {
  double lo = 0.0;
  double hi = 5.0;
  if (lc_efficiency(hi, chain, n_th) < 0.5) throw ConvergenceError("lc_threshold: no sign change on (0, 5]");
  while (hi - lo > 1e-5) {
    const double mid = 0.5 * (lo + hi);
    (lc_efficiency(mid, chain, n_th) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double separation_line(double p1) { return 1.0 + p1; }

double separation_condition(int n, int n0, double p1, double p2, double c_n) {
  const double r = static_cast<double>(n0) / n;
  return p2 * r * r * r * r / (1.0 + p1 * c_n);
}

double classical_threshold_p1(double p2) {
  if (!(p2 > 0)) throw DomainError("classical_threshold_p1: p2 must be positive");
  return kClassicalThreshold / std::sqrt(p2);
}

// Libration frequency of the phase mismatch, sqrt(sqrt(2) P1 P2 n0^{5/2} sin(beta)) / n,
// against the drive frequency P2 n0^4 / (3 n^3).
double sra_breakdown_p1(double p2, int n0, int n, int m, double gamma) {
  if (std::abs(m) >= n) throw DomainError("sra_breakdown_p1: need |m| < n");
  if (!(gamma > 0 && gamma <= 1)) throw DomainError("sra_breakdown_p1: gamma must lie in (0, 1]");
  const double ratio = static_cast<double>(m) / n;
  const double nn = static_cast<double>(n);
  return p2 * gamma * std::pow(static_cast<double>(n0), 5.5) /
         (9.0 * std::sqrt(2.0) * std::sqrt(1.0 - ratio * ratio) * nn * nn * nn * nn);
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::LC: return "LC";
    case Regime::AR: return "AR";
    case Regime::Inefficient: return "inefficient";
    case Regime::SRABreakdown: return "SRA-breakdown";
  }
  return "?";
}

RegimeLines regime_lines(const ProblemSpec& spec, const CouplingTable& table, double gamma) {
  RegimeLines lines;
  lines.n0 = spec.n0;
  lines.m = spec.m;
  lines.n_f = spec.n_end;
  lines.gamma = gamma;
  const int levels = (spec.n_th - spec.n0) / spec.q + 2;
  lines.p1_lc_threshold = lc_threshold(build_chain(spec, table, levels), spec.n_th);
  return lines;
}

Regime classify_regime(double p1, double p2, const RegimeLines& lines) {
  if (p1 > lines.sra(p2)) return Regime::SRABreakdown;
  if (p2 > separation_line(p1)) return p1 > lines.p1_lc_threshold ? Regime::LC : Regime::Inefficient;
  return std::sqrt(p2) * p1 > kClassicalThreshold ? Regime::AR : Regime::Inefficient;
}

std::vector<RegimeLines::Sample> RegimeLines::sample(double p1_lo, double p1_hi, double p2_lo, double p2_hi,
                                                     int count, bool include_sra) const {
  std::vector<Sample> out;
  auto logspace = [count](double lo, double hi, int i) {
    return count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  };
  auto inside = [&](double p1, double p2) { return p1 >= p1_lo && p1 <= p1_hi && p2 >= p2_lo && p2 <= p2_hi; };
  for (int i = 0; i < count; ++i) {
    const double p1 = logspace(p1_lo, p1_hi, i);
    if (inside(p1, separation(p1))) out.push_back({p1, separation(p1), "separation"});
  }
  for (int i = 0; i < count; ++i) {
    const double p2 = logspace(p2_lo, p2_hi, i);
    if (inside(classical(p2), p2)) out.push_back({classical(p2), p2, "classical_threshold"});
  }
  for (int i = 0; i < count; ++i) {
    const double p2 = logspace(p2_lo, p2_hi, i);
    if (inside(p1_lc_threshold, p2)) out.push_back({p1_lc_threshold, p2, "lc_threshold"});
  }
  if (include_sra) {
    for (int i = 0; i < count; ++i) {
      const double p2 = logspace(p2_lo, p2_hi, i);
      if (inside(sra(p2), p2)) out.push_back({sra(p2), p2, "sra_breakdown"});
    }
  }
  return out;
}

}  // namespace rydchirp
