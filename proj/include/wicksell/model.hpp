#pragma once

#include "wicksell/cdf.hpp"
#include "wicksell/quadrature.hpp"

#include <span>

namespace wicksell {

/// Expected sphere radius m0 = integral of sqrt(s) dF(s).
/// Throws NumericalError("model.non_finite_moment") if the integral fails.
double compute_m0(const SquaredRadiusCdf& cdf, const QuadratureSpec& quad);

/// The forward Wicksell model: sphere cdf F together with the density g of
/// squared section radii, V(x) = int_x g(z) / sqrt(z - x) dz and U = int V.
///
/// Every Abel integral is evaluated with the substitution s = z + u^2, which
/// turns the 1/sqrt(s - z) kernel into a smooth integrand; atoms of F are
/// handled analytically.
class WicksellModel
{
public:
  explicit WicksellModel(SquaredRadiusCdf cdf, QuadratureSpec quad = {});

  const SquaredRadiusCdf& cdf() const { return cdf_; }
  const QuadratureSpec& quad() const { return quad_; }
  double m0() const { return m0_; }
  double support() const { return cdf_.support(); }

  /// g(z) = (1 / 2 m0) int_{s > z} dF(s) / sqrt(s - z); 0 for z >= M.
  double g(double z) const { return g_split(z, 0.0); }
  /// g(ref + offset), with distances to atoms and segment ends taken relative
  /// to `ref` so that an atom at `ref` is resolved for tiny negative offsets.
  double g_split(double ref, double offset) const;
  /// V(x) = (pi / 2 m0) (1 - F(x)).
  double V(double x) const;
  /// U(x) = int_0^x V(y) dy.
  double U(double x) const;
  /// V(x) by direct Abel integration of g; used to cross-check V.
  double abel_V(double x) const;
  /// G(z) = int_0^z g.
  double g_cdf(double z) const;

  /// E_g[h(Z)] computed through F:
  ///   (1 / 2 m0) int dF(s) int_0^s h(z) / sqrt(s - z) dz,
  /// which never evaluates g. `kinks` lists points where h is not smooth.
  double expectation(const RealFn& h, std::span<const double> kinks = {}) const;

private:
  SquaredRadiusCdf cdf_;
  QuadratureSpec quad_;
  double m0_;
};

double density_g(const WicksellModel& model, double z);
double function_V(const WicksellModel& model, double x);
double function_U(const WicksellModel& model, double x);

/// Wicksell's inversion F(x) = 1 - V(x) / V(0) applied to an arbitrary density
/// `g_eval` supported on [0, support] (wrap plain callables with split()). Returns 0 for x <= 0 and 1 for
/// x >= support. `breakpoints` are optional hints where g_eval is not smooth.
/// Throws NumericalError("model.division_by_zero") when V(0) <= 0.
double invert_g_to_cdf(const SplitFn& g_eval, double x, double support,
                       const QuadratureSpec& quad,
                       std::span<const double> breakpoints = {});

} // namespace wicksell
