#include "wicksell/errors.hpp"
#include "wicksell/estimators.hpp"
#include "wicksell/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wicksell;

namespace {

SampleBatch batch_of(std::vector<double> z)
{
  SampleBatch b;
  std::sort(z.begin(), z.end());
  b.z = std::move(z);
  return b;
}

const WicksellModel& sec5()
{
  static const WicksellModel m(SquaredRadiusCdf::preset("paper-sec5"));
  return m;
}

const LengthBiasedSampler& sec5_sampler()
{
  static const LengthBiasedSampler s(sec5().cdf());
  return s;
}

const Interval kFlat{2.0, 3.0};

/// Largest |a - b| over the knots of both step functions.
double sup_distance(const StepFn& a, const StepFn& b)
{
  double d = 0.0;
  for (const auto* f : {&a, &b})
    for (double k : f->knots())
      d = std::max(d, std::abs(a(k) - b(k)));
  return d;
}

} // namespace

TEST_CASE("naive estimator examples")
{
  const auto b = batch_of({1.0, 4.0});
  CHECK(naive_V(b, 0.0) == doctest::Approx(0.75));
  CHECK(naive_V(b, 5.0) == 0.0);
  CHECK(naive_V(b, 3.0) == doctest::Approx(0.5));
  CHECK(std::isfinite(naive_V(b, 1.0)));
  CHECK_THROWS_AS(naive_V(SampleBatch{}, 1.0), ConfigError);
}

TEST_CASE("U_n examples")
{
  const auto b = batch_of({1.0, 4.0});
  CHECK(u_n(b, 0.0) == 0.0);
  CHECK(u_n(b, 1.0) == doctest::Approx(3.0 - std::sqrt(3.0)).epsilon(1e-14));
  CHECK(u_n(b, 4.0) == doctest::Approx(3.0));
  CHECK(u_n(b, 17.0) == doctest::Approx(3.0));

  const UnGraph g(b, 5.0);
  CHECK(g.x() == std::vector<double>{0.0, 1.0, 4.0, 5.0});
  CHECK(g.u()[1] == doctest::Approx(3.0 - std::sqrt(3.0)).epsilon(1e-14));
  CHECK(g.u()[3] == doctest::Approx(3.0));
}

TEST_CASE("U_n tabulation matches direct evaluation with ties")
{
  const auto b = batch_of({0.3, 0.3, 1.2, 2.5, 2.5, 2.5, 7.0});
  const UnGraph g(b, 8.0);
  CHECK(g.x().size() == 6);
  for (std::size_t i = 0; i < g.x().size(); ++i)
    CHECK(g.u()[i] == doctest::Approx(u_n(b, g.x()[i])).epsilon(1e-14));
}

TEST_CASE("iie of a single observation is the chord slope")
{
  // U_n is convex on [0, z0], so its LCM there is the chord to (z0, 2 sqrt(z0))
  const double z0 = 2.25;
  const auto b = batch_of({z0});
  const auto grid = EvalGrid::make(b, 4.0, 100);
  const auto v = iie(b, grid);
  for (double x : grid.points) {
    if (x < z0)
      CHECK(v(x) == doctest::Approx(2.0 / std::sqrt(z0)));
    else
      CHECK(v(x) == 0.0);
  }
}

TEST_CASE("iie on {1, 4} integrates to U_n(max Z)")
{
  const auto b = batch_of({1.0, 4.0});
  const auto grid = EvalGrid::make(b, 5.0, 5000);
  const auto v = iie(b, grid);
  for (std::size_t i = 1; i < v.size(); ++i)
    CHECK(v.values()[i] <= v.values()[i - 1]);
  const double sup = v.values().front();
  CHECK(std::abs(v.integral(0.0, 4.0) - 3.0) <= 2 * grid.mesh() * sup);

  const auto vg = iie_on_grid(b, grid);
  CHECK(sup_distance(v, vg) < 1e-9);
}

TEST_CASE("exact iie agrees with the grid route on random sec5 batches")
{
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto b = sample_batch(sec5_sampler(), 40, {123, r});
    const auto grid = EvalGrid::make_default(b, sec5().support(), &kFlat);
    CHECK(sup_distance(iie(b, grid), iie_on_grid(b, grid)) < 1e-9);
  }
}

TEST_CASE("iie is close to V on the flat interval at n = 300")
{
  const double V = function_V(sec5(), 2.5);
  int close = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto b = sample_batch(sec5_sampler(), 300, {300, r});
    const UnGraph un(b, sec5().support());
    const auto v = iie(un);
    double d = std::max(std::abs(v(2.2) - V), std::abs(v(2.8) - V));
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v.knots()[i] >= 2.2 && v.knots()[i] <= 2.8)
        d = std::max(d, std::abs(v.values()[i] - V));
    close += d < 0.2;
  }
  CHECK(close >= 95);
}

TEST_CASE("projected iie examples")
{
  const auto b = batch_of({1.0, 4.0});
  const UnGraph un(b, 5.0);
  const auto base = iie(un);

  // one hull segment covers [2, 3], so the projection changes nothing
  const auto same = projected_iie(un, kFlat);
  for (double x = 0.0; x < 5.0; x += 0.01)
    CHECK(same(x) == doctest::Approx(base(x)).epsilon(1e-14));

  const Interval wide{1.0, 4.0};
  const auto H = un.majorant();
  const auto p = projected_iie(un, wide);
  CHECK(p(1.0) == doctest::Approx((H(4.0) - H(1.0)) / 3.0).epsilon(1e-14));
  CHECK(p(3.999) == p(1.0));
  CHECK(p(0.5) == base(0.5));
  CHECK(p(4.5) == base(4.5));
}

TEST_CASE("projected iie is a weighted average and stays monotone")
{
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto b = sample_batch(sec5_sampler(), 60, {61, r});
    const UnGraph un(b, sec5().support());
    const auto v = iie(un);
    const auto p = projected_iie(un, kFlat);
    const double c = p(kFlat.lo);
    CHECK(std::abs(v.integral(kFlat.lo, kFlat.hi) / kFlat.length() - c) < 1e-12);
    CHECK(p(std::nextafter(kFlat.lo, 0.0)) >= c);
    CHECK(c >= p(kFlat.hi));
    CHECK(validate_cone(p, Cone::V_flat, kFlat, Partition::around(kFlat, sec5().support())));
  }
}

TEST_CASE("empirical slope examples")
{
  const auto b = batch_of({1.0, 4.0});
  const Partition part({0.0, 1.0, 4.0, 5.0}, Interval{1.0, 4.0});
  const auto s = empirical_slope(b, part);
  CHECK(s(2.0) == doctest::Approx((3.0 - (3.0 - std::sqrt(3.0))) / 3.0).epsilon(1e-14));
  CHECK(s(2.0) == doctest::Approx(0.577350).epsilon(1e-6));
  CHECK(s(4.5) == doctest::Approx(0.0).epsilon(1e-15));

  const auto pm = batch_of({3.0, 3.5, 3.9});
  const Partition cells({0.0, 1.0, 2.0, 4.0, 5.0, 6.0}, Interval{4.0, 5.0});
  CHECK(empirical_slope(pm, cells)(5.5) == 0.0);
}

TEST_CASE("empirical slope minimizes each cell's quadratic")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const auto b = sample_batch(sec5_sampler(), 200, {8, 0});
  const UnGraph un(b, sec5().support());
  const auto part = Partition::around(kFlat, sec5().support());
  const auto s = empirical_slope(un, part);
  for (std::size_t i = 0; i < part.cells(); ++i) {
    const auto cell = part.cell(i);
    const double du = un(cell.hi) - un(cell.lo);
    const auto q = [&](double c) { return cell.length() * c * c - 2 * c * du; };
    for (int k = 0; k < 20; ++k)
      CHECK(q(s(cell.lo)) <= q(u(rng)) + 1e-12);
  }
}

TEST_CASE("empirical slope of the population U recovers V on the flat cell")
{
  const auto part = Partition::around(kFlat, sec5().support());
  const auto s = empirical_slope_of([](double x) { return function_U(sec5(), x); }, part);
  CHECK(s(2.5) == doctest::Approx(function_V(sec5(), 2.5)).epsilon(1e-9));
}

TEST_CASE("partition construction")
{
  const auto p = Partition::around(kFlat, sec5().support());
  CHECK(p.breakpoints.front() == 0.0);
  CHECK(p.breakpoints.back() == sec5().support());
  CHECK(p.cell(p.flat_index).lo == 2.0);
  CHECK(p.cell(p.flat_index).hi == 3.0);
  CHECK_THROWS_AS(Partition({0.0, 1.5, 3.0}, kFlat), ConfigError);
  CHECK_THROWS_AS(Partition::around(Interval{2.0, 2.0}, 5.0), ConfigError);
}

TEST_CASE("projected naive examples")
{
  const auto b = batch_of({1.0, 4.0});
  const UnGraph un(b, 6.0);

  // U_n is constant, hence linear, on [4.5, 5]
  const Interval beyond{4.5, 5.0};
  CHECK(sup_distance(projected_naive(un, beyond), iie(un)) < 1e-14);

  const auto pn = projected_naive(un, kFlat);
  const auto prof = profile_projection_detail(un, kFlat).estimate;
  CHECK(sup_distance(pn, prof) < 1e-6);

  std::vector<double> inside;
  for (double x = 2.0; x < 3.0; x += 1e-3)
    inside.push_back(pn(x));
  CHECK(std::all_of(inside.begin(), inside.end(), [&](double y) { return y == inside[0]; }));
}

TEST_CASE("q discrepancy examples")
{
  const QuadratureSpec quad;
  const StepFn ind({0.0, 1.0}, {1.0, 0.0});
  CHECK(q_discrepancy(ind, [&](double x) { return ind(x); }, {0.0, 2.0}, quad, {1.0}) ==
        doctest::Approx(-1.0));
  CHECK(q_discrepancy(StepFn({0.0}, {0.0}), [](double) { return 5.0; }, {0.0, 2.0}, quad) == 0.0);
  CHECK(q_discrepancy_step(ind, ind, 2.0) == doctest::Approx(-1.0));

  const auto b = batch_of({1.0, 2.5, 4.0});
  const UnGraph un(b, 5.0);
  const double c = 0.7;
  const StepFn h({0.0, 2.0, 3.0}, {0.0, c, 0.0});
  const double closed = c * c - 2 * c * (un(3.0) - un(2.0));
  CHECK(q_discrepancy_vn(h, un) == doctest::Approx(closed).epsilon(1e-14));
  QuadratureSpec loose;
  loose.abs_tol = 1e-9;
  loose.rel_tol = 1e-9;
  loose.max_subdivisions = 4000;
  CHECK(q_discrepancy(h, [&](double x) { return naive_V(b, x); }, {0.0, 5.0}, loose, b.z) ==
        doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("profile at the iie level reproduces the iie")
{
  const auto b = batch_of({1.0, 4.0});
  const UnGraph un(b, 5.0);
  const auto v = iie(un);
  const auto va = profile_fixed_a(un, kFlat, v(2.5));
  CHECK(sup_distance(v, va) < 1e-12);
}

TEST_CASE("profile projection equals the projected naive estimator")
{
  int unimodal = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto b = sample_batch(sec5_sampler(), 50, {50, r});
    const UnGraph un(b, sec5().support());
    const auto res = profile_projection_detail(un, kFlat);
    const auto pn = projected_naive(un, kFlat);
    // both routes are exact, so the grid-mesh allowance is not needed
    CHECK(sup_distance(res.estimate, pn) <= 1e-6);
    CHECK(res.objective <= q_discrepancy_vn(pn, un) + 1e-9);
    unimodal += res.probe_minima == 1;
  }
  CHECK(unimodal >= 99);
}

TEST_CASE("LCM contract for U_n")
{
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto b = sample_batch(sec5_sampler(), 100, {77, r});
    const auto grid = EvalGrid::make_default(b, sec5().support(), &kFlat);
    const UnGraph un(b, grid.support);
    const auto H = un.majorant();
    for (double x : grid.points)
      CHECK(H(x) >= u_n(b, x) - 1e-12);
    CHECK(H(0.0) == 0.0);
    CHECK(H(grid.support) == doctest::Approx(u_n(b, grid.support)).epsilon(1e-14));
  }
}

TEST_CASE("switch relation with the smallest maximizer")
{
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    const auto b = sample_batch(sec5_sampler(), 30, {200, static_cast<std::uint64_t>(rep)});
    const UnGraph un(b, sec5().support());
    const auto v = iie(un);
    const double x = std::uniform_real_distribution<double>(0.0, b.z.back())(rng);
    const double a = std::uniform_real_distribution<double>(0.0, 1.5 * v(0.0))(rng);
    // smallest maximizer of U_n(s) - a s over the nodes, where it is attained
    std::size_t best = 0;
    for (std::size_t i = 1; i < un.x().size(); ++i)
      if (un.u()[i] - a * un.x()[i] > un.u()[best] - a * un.x()[best])
        best = i;
    CHECK((v(x) <= a) == (un.x()[best] <= x));
  }
}

TEST_CASE("estimators are Q-projections onto their cones")
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double M = sec5().support();
  const auto part = Partition::around(kFlat, M);
  const auto b = sample_batch(sec5_sampler(), 150, {15, 0});
  const UnGraph un(b, M);
  const auto v_iie = iie(un);
  const auto v_piie = projected_iie(un, kFlat);
  const auto v_slope = empirical_slope(un, part);
  const auto v_pn = projected_naive(un, kFlat);

  CHECK(validate_cone(v_iie, Cone::V, kFlat, part));
  CHECK(validate_cone(v_piie, Cone::V_flat, kFlat, part));
  CHECK(validate_cone(v_slope, Cone::V_bar, kFlat, part));
  CHECK(validate_cone(v_pn, Cone::V_flat, kFlat, part));

  const double top = 2.0 * v_iie(0.0);
  const auto decreasing = [&](bool flat) {
    std::vector<double> k{0.0};
    for (int i = 0; i < 12; ++i) {
      const double x = u(rng) * M;
      if (!flat || x < kFlat.lo || x >= kFlat.hi)
        k.push_back(x);
    }
    if (flat) {
      k.push_back(kFlat.lo);
      k.push_back(kFlat.hi);
    }
    k.push_back(M);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    std::vector<double> val(k.size());
    for (auto& y : val)
      y = u(rng) * top;
    std::sort(val.begin(), val.end(), std::greater<>());
    val.back() = 0.0;
    return StepFn(k, val);
  };
  const auto cellwise = [&] {
    std::vector<double> k(part.breakpoints), val(k.size());
    for (auto& y : val)
      y = u(rng) * top;
    val.back() = 0.0;
    return StepFn(k, val);
  };

  const double q_iie = q_discrepancy_vn(v_iie, un);
  const double q_piie = q_discrepancy_step(v_piie, v_iie, M);
  const double q_slope = q_discrepancy_vn(v_slope, un);
  const double q_pn = q_discrepancy_vn(v_pn, un);
  for (int rep = 0; rep < 50; ++rep) {
    const auto any = decreasing(false);
    const auto flat = decreasing(true);
    const auto cells = cellwise();
    REQUIRE(validate_cone(any, Cone::V, kFlat, part));
    REQUIRE(validate_cone(flat, Cone::V_flat, kFlat, part));
    REQUIRE(validate_cone(cells, Cone::V_bar, kFlat, part));
    CHECK(q_iie <= q_discrepancy_vn(any, un) + 1e-9);
    CHECK(q_piie <= q_discrepancy_step(flat, v_iie, M) + 1e-9);
    CHECK(q_slope <= q_discrepancy_vn(cells, un) + 1e-9);
    CHECK(q_pn <= q_discrepancy_vn(flat, un) + 1e-9);
  }
}

TEST_CASE("cone validators")
{
  const auto part = Partition::around(kFlat, 5.0);
  const StepFn dec({0.0, 1.0, 4.0}, {2.0, 1.0, 0.0});
  CHECK(validate_cone(dec, Cone::V, kFlat, part));
  const StepFn bump({0.0, 1.0, 4.0}, {1.0, 2.0, 0.0});
  CHECK_FALSE(validate_cone(bump, Cone::V, kFlat, part));
  const StepFn cells({0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, {0.5, 1.0, 0.7, 0.9, 0.2, 0.0});
  CHECK(validate_cone(cells, Cone::V_bar, kFlat, part));
  CHECK_FALSE(validate_cone(cells, Cone::V, kFlat, part));
  const StepFn split_flat({0.0, 2.5, 4.0}, {2.0, 1.0, 0.0});
  CHECK(validate_cone(split_flat, Cone::V, kFlat, part));
  CHECK_FALSE(validate_cone(split_flat, Cone::V_flat, kFlat, part));
  CHECK_FALSE(validate_cone(StepFn({0.0}, {-1.0}), Cone::V, kFlat, part));
}

TEST_CASE("estimator dispatch and CSV")
{
  CHECK(parse_estimator("proj-naive") == EstimatorId::proj_naive);
  CHECK_THROWS_AS(parse_estimator("bogus"), ConfigError);
  const auto b = sample_batch(sec5_sampler(), 80, {4, 4});
  const auto grid = EvalGrid::make(b, sec5().support(), 0, &kFlat);
  for (auto id : {EstimatorId::iie, EstimatorId::proj_iie, EstimatorId::slope,
                  EstimatorId::proj_naive, EstimatorId::profile}) {
    const auto v = estimate(id, b, kFlat, grid);
    CHECK(v.size() >= 2);
    CHECK(to_string(id) == to_string(parse_estimator(to_string(id))));
  }
}
