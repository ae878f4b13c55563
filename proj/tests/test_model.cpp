#include "golden.hpp"
#include "wicksell/errors.hpp"
#include "wicksell/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace wicksell;

namespace {

const WicksellModel& sec5()
{
  static const WicksellModel m(SquaredRadiusCdf::preset("paper-sec5"));
  return m;
}

const WicksellModel& point_mass()
{
  static const WicksellModel m(SquaredRadiusCdf::preset("point-mass-4"));
  return m;
}

const WicksellModel& uniform01()
{
  static const WicksellModel m(SquaredRadiusCdf::preset("uniform-01"));
  return m;
}

} // namespace

TEST_CASE("cdf presets honour their invariants")
{
  const auto& F = sec5().cdf();
  CHECK(F.support() == doctest::Approx(golden::sec5_support).epsilon(1e-15));
  CHECK(F(0.0) == 0.0);
  CHECK(F(F.support()) == 1.0);
  CHECK(std::abs(F(3.0) - F(2.0)) < 1e-12);
  CHECK(F(1.5) == doctest::Approx(1 - std::exp(-1.5 * 1.5 / 20)).epsilon(1e-9));
  CHECK(F(5.0) == doctest::Approx(1 - std::exp(-16.0 / 20)).epsilon(1e-9));

  double prev = 0.0;
  for (double x = 0; x <= 23; x += 0.01) {
    const double v = F(x);
    CHECK(v >= prev);
    CHECK(v <= 1.0);
    prev = v;
  }

  const auto& P = point_mass().cdf();
  CHECK(P(3.999) == 0.0);
  CHECK(P(4.0) == 1.0);
}

TEST_CASE("section weighting keeps the flat interval")
{
  const auto F = SquaredRadiusCdf::preset("paper-sec5-as-simulated");
  CHECK(std::abs(F(3.0) - F(2.0)) < 1e-12);
  CHECK(F(1.0) < F(2.0));
  CHECK(F(F.support()) == 1.0);
}

TEST_CASE("cdf construction rejects malformed segment lists")
{
  Segment a{0.0, 1.0, SegmentKind::uniform, 1.0};
  Segment b{1.5, 2.0, SegmentKind::constant};
  CHECK_THROWS_AS(SquaredRadiusCdf({a, b}, 2.0), ConfigError);
  CHECK_THROWS_AS(SquaredRadiusCdf({a}, 2.0), ConfigError);
  // not flat on [0.2, 0.4]
  CHECK_THROWS_AS(SquaredRadiusCdf({a}, 1.0, Interval{0.2, 0.4}), ConfigError);
  CHECK_THROWS_AS(SquaredRadiusCdf({a}, 1.0, Interval{0.5, 0.5}), ConfigError);
}

TEST_CASE("cdf JSON documents load and survive a round trip")
{
  const auto doc = nlohmann::json::parse(R"({
    "segments": [
      {"lo": 0, "hi": 2, "kind": "exp_square", "params": {"shift": 0, "scale": 20}},
      {"lo": 2, "hi": 3, "kind": "constant"},
      {"lo": 3, "hi": 12, "kind": "exp_square", "params": {"shift": 1, "scale": 20}}
    ],
    "flat": [2, 3],
    "M": 12
  })");
  const auto F = SquaredRadiusCdf::from_json(doc);
  CHECK(F.support() == 12.0);
  REQUIRE(F.flat());
  CHECK(F.flat()->lo == 2.0);
  const auto G = SquaredRadiusCdf::from_json(F.to_json());
  for (double x : {0.3, 1.9, 2.5, 4.0, 11.0})
    CHECK(G(x) == F(x));

  CHECK_THROWS_AS(SquaredRadiusCdf::from_json(nlohmann::json::parse(R"({"segments":[{"lo":0,"hi":1,"kind":"cubic"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(SquaredRadiusCdf::from_json(nlohmann::json::parse(R"({"nothing":1})")),
                  ConfigError);
  CHECK_THROWS_AS(SquaredRadiusCdf::preset("no-such-model"), ConfigError);
}

TEST_CASE("compute_m0")
{
  CHECK(point_mass().m0() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(uniform01().m0() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(sec5().m0() - golden::sec5_m0) < 1e-10);
}

TEST_CASE("density_g")
{
  CHECK(density_g(sec5(), sec5().support()) == 0.0);
  CHECK(density_g(sec5(), 30.0) == 0.0);
  for (double z : {0.0, 1.0, 2.5, 3.9})
    CHECK(density_g(point_mass(), z) ==
          doctest::Approx(1.0 / (4.0 * std::sqrt(4.0 - z))).epsilon(1e-13));
  CHECK(std::abs(density_g(sec5(), 1.0) - golden::sec5_g_at_1) < 1e-10);
  CHECK_THROWS_AS(density_g(sec5(), -0.1), ConfigError);
}

TEST_CASE("function_V")
{
  const auto& m = sec5();
  CHECK(function_V(m, m.support()) == 0.0);
  CHECK(function_V(m, 0.0) == doctest::Approx(std::numbers::pi / (2 * m.m0())));
  for (double x : {2.0, 2.3, 2.5, 3.0})
    CHECK(std::abs(function_V(m, x) - golden::sec5_V_flat) < 1e-9);
}

TEST_CASE("function_U")
{
  CHECK(function_U(sec5(), 0.0) == 0.0);
  for (double x : {0.5, 2.0, 3.7})
    CHECK(function_U(point_mass(), x) ==
          doctest::Approx(std::numbers::pi / 4 * x).epsilon(1e-10));
  const auto& m = sec5();
  CHECK(m.U(3.0) - m.U(2.0) ==
        doctest::Approx(std::numbers::pi / (2 * m.m0()) * std::exp(-0.2)).epsilon(1e-9));
  CHECK(std::abs(m.U(m.support()) - golden::sec5_mean_two_sqrt_z) < 1e-8);
}

TEST_CASE("invert_g_to_cdf")
{
  const auto& m = sec5();
  const SplitFn g = split([&](double z) { return m.g(z); });
  const auto bps = m.cdf().breakpoints();
  CHECK(invert_g_to_cdf(g, 0.0, m.support(), m.quad()) == 0.0);
  CHECK(invert_g_to_cdf(g, -1.0, m.support(), m.quad()) == 0.0);
  CHECK(std::abs(invert_g_to_cdf(g, 1.5, m.support(), m.quad(), bps) -
                 (1 - std::exp(-1.5 * 1.5 / 20))) < 1e-4);

  const auto& p = point_mass();
  const SplitFn gp = [&](double r, double o) { return p.g_split(r, o); };
  CHECK(invert_g_to_cdf(gp, 4.0, 4.0, p.quad()) == doctest::Approx(1.0));
  CHECK(invert_g_to_cdf(gp, 2.0, 4.0, p.quad()) == doctest::Approx(0.0));

  CHECK_THROWS_AS(invert_g_to_cdf(split([](double) { return 0.0; }), 1.0, 4.0, p.quad()),
                  NumericalError);
}

TEST_CASE("Abel consistency: closed-form V matches direct integration of g")
{
  std::mt19937_64 rng(11);
  for (const auto* m : {&sec5(), &point_mass(), &uniform01()}) {
    std::uniform_real_distribution<double> pick(0.0, m->support());
    for (int i = 0; i < 50; ++i) {
      const double x = pick(rng);
      CHECK(std::abs(m->V(x) - m->abel_V(x)) <= 10 * m->quad().abs_tol);
    }
  }
}

TEST_CASE("round trip: inversion of g reproduces F away from breakpoints")
{
  const auto& m = sec5();
  const SplitFn g = split([&](double z) { return m.g(z); });
  const auto bps = m.cdf().breakpoints();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pick(0.0, 8.0);
  int checked = 0;
  while (checked < 10) {
    const double x = pick(rng);
    bool near = false;
    for (double b : bps)
      near = near || std::abs(x - b) < m.quad().singularity_margin;
    if (near)
      continue;
    CHECK(std::abs(invert_g_to_cdf(g, x, m.support(), m.quad(), bps) - m.cdf()(x)) < 1e-4);
    ++checked;
  }
}

TEST_CASE("U is concave and g integrates to one")
{
  const auto& m = sec5();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pick(0.0, 10.0);
  for (int i = 0; i < 30; ++i) {
    double a = pick(rng), b = pick(rng);
    if (a > b)
      std::swap(a, b);
    const double mid = 0.5 * (a + b);
    CHECK(0.5 * (m.U(a) + m.U(b)) <= m.U(mid) + 1e-9);
  }
  for (const auto* mm : {&sec5(), &point_mass(), &uniform01()})
    CHECK(std::abs(mm->g_cdf(mm->support()) - 1.0) < 1e-6);
}

TEST_CASE("expectation route agrees with the Fubini identity")
{
  const auto& m = sec5();
  const double two_sqrt = m.expectation([](double z) { return 2.0 * std::sqrt(z); });
  CHECK(std::abs(two_sqrt - golden::sec5_mean_two_sqrt_z) < 1e-8);
}
