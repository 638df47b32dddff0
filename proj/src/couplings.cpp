#include "rydchirp/couplings.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "rydchirp/errors.hpp"

namespace rydchirp {

namespace {

mpz_class factorial(int k) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
  return f;
}

mpz_class int_pow(long base, int exponent) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), static_cast<unsigned long>(exponent));
  return r;
}

// f_i = (-1)^i / [ n^{i+l+2} (n-l-1-i)! (2l+1+i)! i! ], i = 0..n-l-1
std::vector<mpq_class> expansion_coefficients(int n, int l) {
  const int count = n - l;
  std::vector<mpq_class> f(count);
  for (int i = 0; i < count; ++i) {
    mpz_class den = int_pow(n, i + l + 2) * factorial(n - l - 1 - i) * factorial(2 * l + 1 + i) * factorial(i);
    f[i] = mpq_class(i % 2 == 0 ? 1 : -1, 1) / mpq_class(den);
    f[i].canonicalize();
  }
  return f;
}

// Exact rational S such that the radial integral equals sign(S) sqrt(A S^2 / 4),
// A = (n-l-1)! (n'-l-2)! (n+l)! (n'+l+1)!. Requires l' = l + 1.
mpq_class radial_square(int n, int l, int n2, mpq_class& signed_sum) {
  const auto f = expansion_coefficients(n, l);
  const auto g = expansion_coefficients(n2, l + 1);
  const int fi = static_cast<int>(f.size());
  const int gj = static_cast<int>(g.size());

  // Convolution over s = i + j, then one power/factorial factor per s:
  // D_s = (2 n n' / (n + n'))^{2l+5+s} (2l+4+s)!
  const mpq_class p(2L * n * n2, n + n2);
  mpq_class power = 1;
  for (int k = 0; k < 2 * l + 5; ++k) power *= p;
  mpz_class fact = factorial(2 * l + 4);

  mpq_class sum = 0;
  for (int s = 0; s <= fi + gj - 2; ++s) {
    mpq_class conv = 0;
    const int i_lo = std::max(0, s - (gj - 1));
    const int i_hi = std::min(fi - 1, s);
    for (int i = i_lo; i <= i_hi; ++i) conv += f[i] * g[s - i];
    sum += conv * power * mpq_class(fact);
    power *= p;
    fact *= (2 * l + 5 + s);
  }
  signed_sum = sum;
  const mpz_class a = factorial(n - l - 1) * factorial(n2 - l - 2) * factorial(n + l) * factorial(n2 + l + 1);
  mpq_class sq = sum * sum * mpq_class(a) / 4;
  sq.canonicalize();
  return sq;
}

}  // namespace

mpf_class radial_integral(int n, int l, int n_prime, int l_prime, unsigned precision_bits) {
  if (!QuantumLevel::valid(n, l, 0) || !QuantumLevel::valid(n_prime, l_prime, 0)) {
    throw DomainError("radial_integral: invalid (n, l) pair");
  }
  if (std::abs(l - l_prime) != 1) return mpf_class(0, precision_bits);
  if (l_prime == l - 1) return radial_integral(n_prime, l_prime, n, l, precision_bits);

  mpq_class signed_sum;
  const mpq_class sq = radial_square(n, l, n_prime, signed_sum);
  mpf_class value(sq, precision_bits);
  mpf_class root(0, precision_bits);
  mpf_sqrt(root.get_mpf_t(), value.get_mpf_t());
  if (sgn(signed_sum) < 0) root = -root;
  return root;
}

double angular_factor(int l, int m) {
  if (l < 0 || std::abs(m) > l) throw DomainError("angular_factor requires |m| <= l");
  const double num = static_cast<double>(l - m + 1) * (l + m + 1);
  const double den = static_cast<double>(2 * l + 1) * (2 * l + 3);
  return std::sqrt(num / den);
}

bool CouplingKey::allowed() const noexcept {
  return QuantumLevel::valid(n, l, m) && QuantumLevel::valid(n_prime, l_prime, m) && std::abs(l - l_prime) == 1;
}

CouplingKey CouplingKey::canonical() const noexcept { return l_prime > l ? *this : swapped(); }

mpf_class dipole_element(const CouplingKey& key, unsigned precision_bits) {
  if (!key.allowed()) return mpf_class(0, precision_bits);
  const CouplingKey k = key.canonical();
  mpf_class radial = radial_integral(k.n, k.l, k.n_prime, k.l_prime, precision_bits);
  // Angular factor in extended precision: sqrt of an exact rational.
  mpq_class ang_sq(static_cast<long>(k.l - k.m + 1) * (k.l + k.m + 1),
                   static_cast<long>(2 * k.l + 1) * (2 * k.l + 3));
  ang_sq.canonicalize();
  mpf_class ang(ang_sq, precision_bits);
  mpf_sqrt(ang.get_mpf_t(), ang.get_mpf_t());
  return mpf_class(radial * ang, precision_bits);
}

double coupling(const CouplingKey& key, double c0) {
  if (!(c0 > 0.0)) throw InvalidParameter("coupling normalization c0 must be positive");
  if (!key.allowed()) return 0.0;
  mpf_class v = dipole_element(key);
  v /= c0;
  return v.get_d();
}

double c0_exact(int n0, int q, int m) {
  const CouplingKey root{n0, n0 - 1, m, n0 + q, n0};
  if (!root.allowed()) throw InvalidParameter("chain root is not a valid transition");
  return std::fabs(dipole_element(root).get_d());
}

double c0_asymptotic(int n0, int q, int m) {
  const double scale = std::pow(static_cast<double>(n0), 1.5);
  switch (q) {
    case 1:
      return std::sqrt(2.0) * scale;
    case 2: {
      const double ratio = static_cast<double>(m) / n0;
      return std::sqrt(std::max(0.0, 1.0 - ratio * ratio)) * scale / std::sqrt(2.0);
    }
    default:
      throw InvalidParameter("c0_asymptotic supports q = 1 and q = 2 only");
  }
}

}  // namespace rydchirp
