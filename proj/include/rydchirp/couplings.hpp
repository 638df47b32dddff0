#pragma once

// Dipole matrix elements <n,l,m| z |n',l',m> of hydrogen.
//
// Radial lengths are measured in units of a0/2 (the radial functions below take
// the argument r/n with weight exp(-r/2n)); the classical module converts to a0.
// The Laguerre double sum is evaluated in exact rational arithmetic; only the
// final square root is taken in floating point.

#include <gmpxx.h>

#include <compare>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rydchirp/model.hpp"

namespace rydchirp {

constexpr unsigned kDefaultPrecisionBits = 256;

// Integral_0^inf x^3 R_{n,l}(x) R_{n',l'}(x) dx with
// R_{n,l}(x) = sqrt((n-l-1)! / (2 n^4 (n+l)!)) e^{-x/2n} (x/n)^l L^{2l+1}_{n-l-1}(x/n).
// Exactly zero when |l - l'| != 1.
mpf_class radial_integral(int n, int l, int n_prime, int l_prime,
                          unsigned precision_bits = kDefaultPrecisionBits);

// <l,m| cos(theta) |l+1,m> = sqrt((l-m+1)(l+m+1) / ((2l+1)(2l+3))).
double angular_factor(int l, int m);

struct CouplingKey {
  int n = 1;
  int l = 0;
  int m = 0;
  int n_prime = 1;
  int l_prime = 0;

  bool allowed() const noexcept;  // both levels valid and |l - l'| == 1
  CouplingKey swapped() const noexcept { return {n_prime, l_prime, m, n, l}; }
  // Lower-l side first; the key used for storage.
  CouplingKey canonical() const noexcept;

  friend bool operator==(const CouplingKey&, const CouplingKey&) = default;
  friend auto operator<=>(const CouplingKey&, const CouplingKey&) = default;
};

// <n,l,m| z |n',l',m> in units of a0/2, high precision.
mpf_class dipole_element(const CouplingKey& key, unsigned precision_bits = kDefaultPrecisionBits);

// Normalized coupling <n,l,m|z|n',l',m> / c0, rounded to double. Zero if forbidden.
double coupling(const CouplingKey& key, double c0);

// |<n0, n0-1, m| z |n0+q, n0, m>|, exact.
double c0_exact(int n0, int q, int m);
// Large-n0 limits: sqrt(2) n0^{3/2} for q = 1, sqrt(1-(m/n0)^2) n0^{3/2}/sqrt(2) for q = 2.
double c0_asymptotic(int n0, int q, int m);

}  // namespace rydchirp
