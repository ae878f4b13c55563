#pragma once

#include <functional>
#include <span>

namespace wicksell {

struct QuadratureSpec
{
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
  int max_subdivisions = 400;
  /// Half-width of the zone around a square-root endpoint singularity that is
  /// excluded from pointwise comparisons in the round-trip checks.
  double singularity_margin = 1e-3;

  void validate() const;
};

using RealFn = std::function<double(double)>;

/// f(ref, offset) evaluates a function at ref + offset. Integrands with
/// singularities at known points take this form so the distance to the
/// singular point is `offset` exactly instead of a rounded difference.
using SplitFn = std::function<double(double ref, double offset)>;

inline SplitFn split(RealFn f)
{
  return [f = std::move(f)](double ref, double off) { return f(ref + off); };
}

struct QuadratureResult
{
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

/// Globally adaptive 21-point Gauss-Kronrod integration of `f` over [a, b].
/// Throws NumericalError("quadrature.no_convergence") when the error estimate
/// does not reach max(abs_tol, rel_tol * |I|) within max_subdivisions.
QuadratureResult integrate_adaptive(const RealFn& f, double a, double b,
                                    const QuadratureSpec& spec);

/// Same as integrate_adaptive, split at the interior breakpoints (points
/// outside (a, b) are ignored). The tolerance is shared across the pieces.
double integrate(const RealFn& f, double a, double b,
                 const QuadratureSpec& spec,
                 std::span<const double> breakpoints = {});

/// Integral of f over [c, d] where f may carry square-root type
/// singularities (in value or derivative) at either end: the lower half uses
/// z = c + u^2, the upper half z = d - t^2.
double integrate_endpoint_singular(const SplitFn& f, double c, double d,
                                   const QuadratureSpec& spec);

/// Integral of h(z) / sqrt(z - x) over [x, b]. h may carry square-root type
/// singularities at b and at the given breakpoints; each piece between
/// breakpoints is handled as in integrate_endpoint_singular, and the Abel
/// kernel at x is absorbed exactly by z = x + u^2.
double integrate_abel(const SplitFn& h, double x, double b,
                      const QuadratureSpec& spec,
                      std::span<const double> breakpoints = {});

} // namespace wicksell
