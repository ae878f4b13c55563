#pragma once

#include <cstddef>
#include <vector>

namespace wicksell {

/// Right-continuous step function: values[i] on [knots[i], knots[i+1]), the
/// last value beyond the last knot and the first value before the first knot.
class StepFn
{
public:
  StepFn() = default;
  /// Throws ConfigError unless knots are strictly increasing and the sizes match.
  StepFn(std::vector<double> knots, std::vector<double> values);

  double operator()(double x) const;
  /// Integral over [a, b].
  double integral(double a, double b) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return knots_.size(); }
  bool empty() const { return knots_.empty(); }

private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Continuous piecewise linear function through (knots[i], values[i]).
class PiecewiseLinearFn
{
public:
  PiecewiseLinearFn() = default;
  PiecewiseLinearFn(std::vector<double> knots, std::vector<double> values);

  /// Linear interpolation; clamps to the end values outside the knots.
  double operator()(double x) const;
  /// Slope of the piece [knots[i], knots[i+1]) containing x. Beyond the last
  /// knot the slope of the final piece is returned.
  double right_derivative(double x) const;
  /// Right derivative as a step function with one value per piece.
  StepFn derivative() const;
  /// Every second difference of slopes is <= tol.
  bool is_concave(double tol = 1e-12) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return knots_.size(); }

private:
  std::size_t piece(double x) const;

  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Least concave majorant over [first knot, last knot]: the upper convex
/// hull of the knot points. Throws ConfigError("lcm.degenerate_input") for
/// fewer than two knots.
PiecewiseLinearFn lcm(const PiecewiseLinearFn& f);

/// Upper hull of points sorted by strictly increasing x, by a monotone
/// chain. Returns the indices of the hull vertices.
std::vector<std::size_t> upper_hull(const std::vector<double>& x,
                                    const std::vector<double>& y);

} // namespace wicksell
