#include <doctest.h>

#include <cmath>

#include "rydchirp/errors.hpp"
#include "rydchirp/model.hpp"

using namespace rydchirp;

TEST_CASE("levels validate their quantum numbers") {
  CHECK_NOTHROW(QuantumLevel(40, 39, 39));
  CHECK(QuantumLevel(40, 39, -39).circular());
  CHECK_THROWS_AS(QuantumLevel(40, 40, 0), InvalidParameter);
  CHECK_THROWS_AS(QuantumLevel(5, 2, 3), InvalidParameter);
  CHECK_THROWS_AS(QuantumLevel(0, 0, 0), InvalidParameter);
}

TEST_CASE("problem specs reject inconsistent windows") {
  ProblemSpec s;
  CHECK_NOTHROW(s.validate());
  s.n_th = 60;
  CHECK_THROWS_AS(s.validate(), InvalidParameter);
  s = ProblemSpec{};
  s.p2 = 0;
  CHECK_THROWS_AS(s.validate(), InvalidParameter);
  s = ProblemSpec{};
  s.m = 40;
  CHECK_THROWS_AS(s.validate(), InvalidParameter);
  const auto w = ProblemSpec::standard_window(1, 30, 2, 90, 0);
  CHECK(w.n_start == 80);
  CHECK(w.n_th == 100);
  CHECK(w.n_end == 110);
}

TEST_CASE("physical and dimensionless parameters convert both ways") {
  PhysicalParams p;
  p.alpha = 2.5e-3;
  p.epsilon = 1.7e-4;
  p.hbar = 1.0;
  p.rydberg = 0.5;
  const double c0 = 3000.0;
  const ProblemSpec s = to_dimensionless(p, c0);
  // P1 = C0 eps T_s / (2 hbar), P2 = T_s / T_nl... written out directly:
  CHECK(s.p1 == doctest::Approx(c0 * p.epsilon / (2 * std::sqrt(p.alpha))).epsilon(1e-14));
  CHECK(s.p2 == doctest::Approx(6 * 0.5 / (std::sqrt(p.alpha) * std::pow(40.0, 4))).epsilon(1e-14));
  CHECK(s.p1 == doctest::Approx(p.sweep_time() / p.rabi_time(c0)).epsilon(1e-14));
  CHECK(s.p2 == doctest::Approx(p.nonlinearity_time() / p.sweep_time()).epsilon(1e-14));
  const PhysicalParams back = from_dimensionless(s, c0, p.hbar, p.rydberg);
  CHECK(back.alpha == doctest::Approx(p.alpha).epsilon(1e-13));
  CHECK(back.epsilon == doctest::Approx(p.epsilon).epsilon(1e-13));
}

TEST_CASE("energies and frequencies follow the Kepler ladder") {
  const auto s = ProblemSpec::standard_window(1, 30, 1, 40, 39);
  const double scale = 30.0 * std::pow(40.0, 4) / 6.0;
  CHECK(dimensionless_energy(40, s) == doctest::Approx(-scale / 1600.0));
  CHECK(resonant_frequency(40, s) == doctest::Approx(2 * scale / 64000.0));
  CHECK(resonant_level(resonant_frequency(47.3, s), s) == doctest::Approx(47.3).epsilon(1e-13));
  // Derivative check against a finite difference of the continuous energy.
  const double h = 1e-4;
  const double fd = (dimensionless_energy_continuous(45 + h, s) - dimensionless_energy_continuous(45 - h, s)) / (2 * h);
  CHECK(resonant_frequency(45, s) == doctest::Approx(fd).epsilon(1e-8));
  CHECK(sweep_duration(s) == doctest::Approx(initial_frequency(s) - final_frequency(s)));
  CHECK(drive_frequency(reference_time(s), s) == doctest::Approx(resonant_frequency(40, s)));
  CHECK(drive_phase(0.0, s, 0.3) == 0.3);
  CHECK_THROWS_AS(dimensionless_energy(0, s), DomainError);
  CHECK_THROWS_AS(resonant_level(-1.0, s), DomainError);
}

TEST_CASE("crossing times sit between neighbouring resonances") {
  const auto s = ProblemSpec::standard_window(1, 30, 1, 40, 39);
  for (int n = 31; n < 59; ++n) {
    const double t = crossing_time(n, 1, s);
    const double gap = dimensionless_energy(n + 1, s) - dimensionless_energy(n, s);
    CHECK(drive_frequency(t, s) == doctest::Approx(gap).epsilon(1e-13));
    CHECK(t > crossing_time(n - 1, 1, s));
    CHECK(drive_frequency(t, s) < resonant_frequency(n, s));
    CHECK(drive_frequency(t, s) > resonant_frequency(n + 1, s));
  }
}

TEST_CASE("chain mixing thresholds") {
  CHECK(min_nonmixing_n(1) == 6);
  CHECK(min_nonmixing_n(2) == 17);
  CHECK(min_nonmixing_n(3) == 34);
  // Brute-force oracle: at every n >= threshold the order-(q+1) crossing out of n+q precedes the arrival n -> n+q.
  for (int q = 1; q <= 3; ++q) {
    const auto s = ProblemSpec::standard_window(1, 30, q, 40, 0);
    const int nmin = min_nonmixing_n(q);
    for (int n = nmin; n < nmin + 200; ++n) CHECK(crossing_time(n + q, q + 1, s) < crossing_time(n, q, s));
    CHECK(crossing_time(nmin - 1 + q, q + 1, s) >= crossing_time(nmin - 1, q, s));
  }
  CHECK_THROWS_AS(min_nonmixing_n(0), DomainError);
}
