#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rydchirp/coupling_table.hpp"
#include "rydchirp/couplings.hpp"
#include "rydchirp/errors.hpp"

using namespace rydchirp;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rydchirp_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("ground-state elements match the textbook values") {
  // In units of a0/2: the radial integral is 2 * 128 sqrt(6) / 243 and <1s| z |2p0> = 2 * 128 sqrt(2) / 243.
  const double radial = 2.0 * 128.0 * std::sqrt(6.0) / 243.0;
  const double z = 2.0 * 128.0 * std::sqrt(2.0) / 243.0;
  CHECK(radial_integral(1, 0, 2, 1).get_d() == doctest::Approx(radial).epsilon(1e-15));
  CHECK(static_cast<double>(oracle::radial_integral(1, 0, 2, 1)) == doctest::Approx(radial).epsilon(1e-12));
  CHECK(dipole_element({1, 0, 0, 2, 1}).get_d() == doctest::Approx(z).epsilon(1e-15));
  CHECK(z / 2.0 == doctest::Approx(0.74494).epsilon(1e-5));
}

TEST_CASE("radial integrals agree with the quadrature oracle") {
  const int cases[][4] = {{40, 39, 41, 40}, {40, 39, 42, 40}, {50, 10, 47, 11}, {100, 0, 3, 1}, {100, 98, 100, 99},
                          {7, 3, 7, 2},     {70, 35, 60, 34}};
  for (const auto& c : cases) {
    CAPTURE(c[0]);
    CAPTURE(c[1]);
    CAPTURE(c[2]);
    CAPTURE(c[3]);
    const double exact = radial_integral(c[0], c[1], c[2], c[3]).get_d();
    const double quad = static_cast<double>(oracle::radial_integral(c[0], c[1], c[2], c[3]));
    CHECK(exact == doctest::Approx(quad).epsilon(1e-9));
  }
}

TEST_CASE("radial integrals are symmetric and obey the selection rule") {
  CHECK(radial_integral(12, 4, 15, 5).get_d() == radial_integral(15, 5, 12, 4).get_d());
  CHECK(radial_integral(12, 4, 15, 6).get_d() == 0.0);
  CHECK(radial_integral(12, 4, 15, 4).get_d() == 0.0);
  CHECK_THROWS_AS(radial_integral(3, 3, 4, 2), DomainError);
}

TEST_CASE("angular factors agree with spherical-harmonic quadrature") {
  CHECK(angular_factor(0, 0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  for (int l : {1, 5, 20, 39, 89}) {
    CHECK(angular_factor(l, l) == doctest::Approx(1.0 / std::sqrt(2.0 * l + 3.0)).epsilon(1e-14));
    for (int m : {0, l / 2, l}) {
      CAPTURE(l);
      CAPTURE(m);
      CHECK(angular_factor(l, m) == doctest::Approx(oracle::angular(l, l + 1, m)).epsilon(1e-12));
      CHECK(angular_factor(l, -m) == angular_factor(l, m));
    }
  }
  CHECK_THROWS_AS(angular_factor(2, 3), DomainError);
}

TEST_CASE("dipole elements combine radial and angular parts") {
  for (auto k : {CouplingKey{40, 39, 39, 41, 40}, CouplingKey{30, 12, 5, 33, 11}, CouplingKey{9, 2, 0, 4, 3}}) {
    const int lo = std::min(k.l, k.l_prime);
    const double want = static_cast<double>(oracle::radial_integral(k.n, k.l, k.n_prime, k.l_prime)) *
                        oracle::angular(lo, lo + 1, std::abs(k.m));
    CHECK(dipole_element(k).get_d() == doctest::Approx(want).epsilon(1e-9));
    CHECK(dipole_element(k.swapped()).get_d() == dipole_element(k).get_d());
  }
  CHECK(coupling({40, 39, 39, 41, 40}, c0_exact(40, 1, 39)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(coupling({40, 39, 39, 41, 39}, 1.0) == 0.0);
  CHECK(coupling({40, 39, 39, 42, 41}, 1.0) == 0.0);
  CHECK(!CouplingKey{5, 4, 5, 6, 5}.allowed());
}

TEST_CASE("C0 approaches its large-n0 limits") {
  CHECK(c0_exact(40, 1, 39) == doctest::Approx(359.931358).epsilon(1e-8));
  CHECK(c0_exact(90, 2, 0) == doctest::Approx(602.050251).epsilon(1e-8));
  CHECK(c0_exact(90, 2, 89) == doctest::Approx(89.498704).epsilon(1e-7));
  CHECK(std::fabs(c0_exact(40, 1, 39) / (std::sqrt(2.0) * std::pow(40, 1.5)) - 1) < 0.05);
  CHECK(std::fabs(c0_exact(90, 2, 0) / (std::pow(90, 1.5) / std::sqrt(2.0)) - 1) < 0.05);
  CHECK(c0_asymptotic(90, 2, 90) == 0.0);
  CHECK(c0_asymptotic(40, 1, 39) == doctest::Approx(std::sqrt(2.0) * std::pow(40, 1.5)));
}

TEST_CASE("chain couplings grow like n^2 / n0^(3/2)") {
  const auto spec = ProblemSpec::standard_window(1, 30, 1, 40, 39);
  const auto t = compute_table(spec, 81);
  const auto c = t.chain_couplings();
  REQUIRE(c.size() == 41);
  CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-15));
  // The fixed-m chain still gains angular weight near n0, so the n^2 law is only reached
  // well above it: the log-log slope falls towards 2 with n.
  auto slope = [&](int a, int b) { return std::log(c[b - 40] / c[a - 40]) / std::log(double(b) / a); };
  CHECK(slope(60, 80) > slope(70, 80));
  const auto far = compute_table(spec, 161).chain_couplings();
  const double s_far = std::log(far[120] / far[80]) / std::log(160.0 / 120.0);
  CHECK(std::fabs(s_far - 2.0) < 0.1);
  CHECK(far[119] * std::pow(40.0, 1.5) / (159.0 * 159.0) == doctest::Approx(0.68).epsilon(0.05));
  const double c1 = t.normalized({41, 40, 39, 42, 41});
  CHECK(c1 == doctest::Approx(1.4583).epsilon(1e-4));
}

TEST_CASE("coupling tables serialize exactly and detect corruption") {
  const auto spec = ProblemSpec::standard_window(1, 30, 1, 40, 39);
  const auto t = compute_table(spec, 70);
  CHECK(t.size() == 30);
  CHECK(t.normalized({40, 39, 39, 41, 40}) == 1.0);
  const auto back = CouplingTable::deserialize(t.serialize());
  CHECK(back.entries() == t.entries());
  CHECK(back.c0() == t.c0());
  CHECK(back.content_hash() == t.content_hash());
  std::string text = t.serialize();
  const auto pos = text.find("41 40 39 42 41 ");
  REQUIRE(pos != std::string::npos);
  text[pos + 16] = text[pos + 16] == '1' ? '2' : '1';
  CHECK_THROWS_AS(CouplingTable::deserialize(text), IoError);
  CHECK_THROWS_AS(CouplingTable::deserialize("format 9\n"), IoError);
  CHECK_THROWS_AS(t.normalized({50, 45, 39, 51, 46}), DomainError);
  CHECK(t.normalized({50, 30, 39, 51, 31}) == 0.0);
  CHECK(t.to_csv().rfind("n,l,m,n_prime,l_prime,value\n", 0) == 0);
}

TEST_CASE("basis tables hold every dipole pair in the truncated basis") {
  const auto spec = ProblemSpec::standard_window(1, 30, 1, 40, 39);
  const auto t = compute_table(spec, 70, TableScope::basis(35, 6));
  CHECK(t.size() == 970);
  for (const auto& [k, v] : t.entries()) {
    CHECK(k.l_prime == k.l + 1);
    CHECK(k.n - k.l <= 6);
    CHECK(k.n_prime - k.l_prime <= 6);
  }
}

TEST_CASE("the coupling cache is reused and rebuilt when damaged") {
  const auto dir = scratch_dir("cache");
  const auto spec = ProblemSpec::standard_window(1, 30, 1, 40, 39);
  std::vector<std::string> warnings;
  auto sink = [&](const std::string& w) { warnings.push_back(w); };
  const auto first = build_table(spec, 60, TableScope::chain(), dir.string(), sink);
  const auto file = dir / cache_file_name(spec, 60, TableScope::chain());
  REQUIRE(std::filesystem::exists(file));
  const auto second = build_table(spec, 60, TableScope::chain(), dir.string(), sink);
  CHECK(second.entries() == first.entries());
  CHECK(warnings.empty());
  {
    std::ofstream f(file, std::ios::trunc);
    f << "format 1\ngarbage";
  }
  const auto third = build_table(spec, 60, TableScope::chain(), dir.string(), sink);
  CHECK(third.entries() == first.entries());
  CHECK(warnings.size() == 1);
  CHECK(CouplingTable::deserialize([&] {
          std::ifstream f(file);
          return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        }())
            .content_hash() == first.content_hash());
}
