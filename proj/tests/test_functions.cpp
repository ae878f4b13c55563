#include "wicksell/errors.hpp"
#include "wicksell/functions.hpp"

#include <doctest.h>

#include <random>

using namespace wicksell;

TEST_CASE("step functions are right-continuous")
{
  const StepFn s({0.0, 1.0, 2.0}, {3.0, 2.0, 0.5});
  CHECK(s(-1.0) == 3.0);
  CHECK(s(0.0) == 3.0);
  CHECK(s(0.999) == 3.0);
  CHECK(s(1.0) == 2.0);
  CHECK(s(5.0) == 0.5);
  CHECK(s.integral(0.5, 2.5) == doctest::Approx(1.5 + 2.0 + 0.25));
  CHECK(s.integral(2.0, 1.0) == 0.0);
  CHECK_THROWS_AS(StepFn({0.0, 0.0}, {1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(StepFn({0.0, 1.0}, {1.0}), ConfigError);
}

TEST_CASE("piecewise linear evaluation and slopes")
{
  const PiecewiseLinearFn f({0.0, 1.0, 3.0}, {0.0, 2.0, 3.0});
  CHECK(f(0.5) == doctest::Approx(1.0));
  CHECK(f(2.0) == doctest::Approx(2.5));
  CHECK(f(10.0) == 3.0);
  CHECK(f.right_derivative(0.0) == doctest::Approx(2.0));
  CHECK(f.right_derivative(1.0) == doctest::Approx(0.5));
  CHECK(f.right_derivative(7.0) == doctest::Approx(0.5));
  CHECK(f.is_concave());
  CHECK(f.derivative()(1.5) == doctest::Approx(0.5));
}

TEST_CASE("lcm of a zigzag")
{
  const auto h = lcm(PiecewiseLinearFn({0, 1, 2, 3}, {0, 2, 1, 3}));
  CHECK(h.knots() == std::vector<double>{0, 1, 3});
  CHECK(h(2.0) == doctest::Approx(2.5));
  CHECK(h.right_derivative(1.0) == doctest::Approx(0.5));
  CHECK(h.right_derivative(2.9) == doctest::Approx(0.5));
  CHECK(h.right_derivative(0.0) == doctest::Approx(2.0));
}

TEST_CASE("lcm of concave and linear input is the input")
{
  const PiecewiseLinearFn concave({0, 1, 2, 4}, {0, 3, 5, 6});
  const auto h = lcm(concave);
  CHECK(h.knots() == concave.knots());
  CHECK(h.values() == concave.values());
  CHECK(lcm(h).knots() == h.knots());

  const auto line = lcm(PiecewiseLinearFn({0, 5}, {0, 5}));
  CHECK(line.knots() == std::vector<double>{0, 5});
  for (double x : {0.0, 1.3, 4.99})
    CHECK(line.right_derivative(x) == doctest::Approx(1.0));

  CHECK_THROWS_AS(lcm(PiecewiseLinearFn({1.0}, {2.0})), ConfigError);
}

TEST_CASE("lcm majorizes, touches the endpoints and is concave")
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x{0.0}, y{u(rng)};
    for (int i = 1; i < 40; ++i) {
      x.push_back(x.back() + 0.01 + u(rng));
      y.push_back(u(rng) * 5);
    }
    const PiecewiseLinearFn f(x, y);
    const auto h = lcm(f);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(h(x[i]) >= y[i] - 1e-12);
    CHECK(h(x.front()) == y.front());
    CHECK(h(x.back()) == y.back());
    CHECK(h.is_concave());
  }
}
