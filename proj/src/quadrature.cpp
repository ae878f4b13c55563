#include "wicksell/quadrature.hpp"

#include "wicksell/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace wicksell {

void QuadratureSpec::validate() const
{
  require(abs_tol > 0 && rel_tol > 0, "quadrature.tolerance",
          "quadrature tolerances must be positive");
  require(max_subdivisions >= 16, "quadrature.subdivisions",
          "max_subdivisions must be at least 16");
  require(singularity_margin >= 0, "quadrature.margin",
          "singularity_margin must be nonnegative");
}

namespace {

struct Piece
{
  double a, b, value, error;
  bool operator<(const Piece& other) const { return error < other.error; }
};

Piece kronrod(const RealFn& f, double a, double b)
{
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  double err = 0.0;
  const double v = GK::integrate(f, a, b, 0, 0.0, &err);
  return {a, b, v, err};
}

} // namespace

QuadratureResult integrate_adaptive(const RealFn& f, double a, double b,
                                    const QuadratureSpec& spec)
{
  if (!(b > a))
    return {};

  std::priority_queue<Piece> pieces;
  Piece first = kronrod(f, a, b);
  double total = first.value;
  double total_err = first.error;
  pieces.push(first);
  int subdivisions = 0;

  auto converged = [&] {
    return total_err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
  };

  while (!converged()) {
    if (subdivisions >= spec.max_subdivisions) {
      std::ostringstream msg;
      msg << "adaptive quadrature on [" << a << ", " << b
          << "] did not converge: estimate " << total << ", error "
          << total_err << " after " << subdivisions << " subdivisions";
      throw NumericalError("quadrature.no_convergence", msg.str());
    }
    Piece worst = pieces.top();
    pieces.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // interval can no longer be split in floating point; accept it
      total_err -= worst.error;
      continue;
    }
    Piece left = kronrod(f, worst.a, mid);
    Piece right = kronrod(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    pieces.push(left);
    pieces.push(right);
    ++subdivisions;
  }

  // re-sum for a clean value, the running total accumulates cancellation
  double sum = 0.0;
  double err = 0.0;
  while (!pieces.empty()) {
    sum += pieces.top().value;
    err += pieces.top().error;
    pieces.pop();
  }
  return {sum, err, subdivisions};
}

double integrate(const RealFn& f, double a, double b,
                 const QuadratureSpec& spec,
                 std::span<const double> breakpoints)
{
  if (!(b > a))
    return 0.0;
  std::vector<double> cuts{a};
  for (double p : breakpoints)
    if (p > a && p < b)
      cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  QuadratureSpec piece_spec = spec;
  piece_spec.abs_tol = spec.abs_tol / static_cast<double>(cuts.size() - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i])
      sum += integrate_adaptive(f, cuts[i], cuts[i + 1], piece_spec).value;
  return sum;
}

double integrate_endpoint_singular(const SplitFn& f, double c, double d,
                                   const QuadratureSpec& spec)
{
  if (!(d > c))
    return 0.0;
  const double half_width = 0.5 * (d - c);
  QuadratureSpec half = spec;
  half.abs_tol = 0.5 * spec.abs_tol;
  const double lower = integrate_adaptive(
      [&](double u) { return 2.0 * u * f(c, u * u); }, 0.0,
      std::sqrt(half_width), half).value;
  const double upper = integrate_adaptive(
      [&](double t) { return 2.0 * t * f(d, -t * t); }, 0.0,
      std::sqrt(half_width), half).value;
  return lower + upper;
}

double integrate_abel(const SplitFn& h, double x, double b,
                      const QuadratureSpec& spec,
                      std::span<const double> breakpoints)
{
  if (!(b > x))
    return 0.0;
  std::vector<double> cuts{x};
  for (double p : breakpoints)
    if (p > x && p < b)
      cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  QuadratureSpec piece = spec;
  piece.abs_tol = spec.abs_tol / static_cast<double>(2 * (cuts.size() - 1));

  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c = cuts[i];
    const double d = cuts[i + 1];
    const double half_width = 0.5 * (d - c);
    if (i == 0) {
      // the kernel singularity at x cancels exactly under z = x + u^2
      sum += integrate_adaptive(
          [&](double u) { return 2.0 * h(x, u * u); }, 0.0,
          std::sqrt(half_width), piece).value;
    } else {
      sum += integrate_adaptive(
          [&](double u) {
            return 2.0 * u * h(c, u * u) / std::sqrt((c - x) + u * u);
          },
          0.0, std::sqrt(half_width), piece).value;
    }
    sum += integrate_adaptive(
        [&](double t) {
          return 2.0 * t * h(d, -t * t) / std::sqrt((d - x) - t * t);
        },
        0.0, std::sqrt(half_width), piece).value;
  }
  return sum;
}

} // namespace wicksell
