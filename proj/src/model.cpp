#include "wicksell/model.hpp"

#include "wicksell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace wicksell {

double compute_m0(const SquaredRadiusCdf& cdf, const QuadratureSpec& quad)
{
  quad.validate();
  double m0 = 0.0;
  try {
    m0 = cdf.integrate([](double s) { return std::sqrt(s); }, -1.0,
                       cdf.support(), quad);
  } catch (const NumericalError& e) {
    throw NumericalError("model.non_finite_moment",
                         std::string("m0 integral failed: ") + e.what());
  }
  if (!(m0 > 0) || !std::isfinite(m0))
    throw NumericalError("model.non_finite_moment",
                         "expected sphere radius m0 is not positive and finite");
  return m0;
}

WicksellModel::WicksellModel(SquaredRadiusCdf cdf, QuadratureSpec quad)
  : cdf_(std::move(cdf)), quad_(quad), m0_(compute_m0(cdf_, quad_))
{}

double WicksellModel::g_split(double ref, double off) const
{
  const double z = ref + off;
  require(z >= 0, "model.domain", "g is defined for z >= 0");
  const double M = support();
  if ((M - ref) - off <= 0)
    return 0.0;
  double sum = 0.0;
  for (const auto& atom : cdf_.atoms()) {
    const double d = (atom.at - ref) - off;
    if (d > 0)
      sum += atom.weight / std::sqrt(d);
  }
  for (const auto& seg : cdf_.segments()) {
    if (seg.kind == SegmentKind::atom || seg.kind == SegmentKind::constant)
      continue;
    const double top = (seg.hi - ref) - off;
    if (top <= 0)
      continue;
    const double bottom = std::max((seg.lo - ref) - off, 0.0);
    sum += integrate_adaptive(
               [&](double u) {
                 const double s = z + u * u;
                 return 2.0 * seg.raw_density(s) * cdf_.weight(s);
               },
               std::sqrt(bottom), std::sqrt(top), quad_)
               .value /
           cdf_.normalizer();
  }
  return sum / (2.0 * m0_);
}

double WicksellModel::V(double x) const
{
  if (x < 0)
    x = 0;
  return std::numbers::pi / (2.0 * m0_) * (1.0 - cdf_(x));
}

double WicksellModel::U(double x) const
{
  if (x <= 0)
    return 0.0;
  const auto bps = cdf_.breakpoints();
  const double upper = std::min(x, support());
  double integral = integrate([&](double y) { return 1.0 - cdf_(y); }, 0.0,
                              upper, quad_, bps);
  return std::numbers::pi / (2.0 * m0_) * integral;
}

double WicksellModel::abel_V(double x) const
{
  const auto bps = cdf_.breakpoints();
  return integrate_abel([&](double r, double o) { return g_split(r, o); },
                        std::max(x, 0.0), support(), quad_, bps);
}

double WicksellModel::g_cdf(double z) const
{
  if (z <= 0)
    return 0.0;
  z = std::min(z, support());
  std::vector<double> cuts{0.0};
  for (double b : cdf_.breakpoints())
    if (b > 0 && b < z)
      cuts.push_back(b);
  cuts.push_back(z);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    sum += integrate_endpoint_singular(
        [&](double r, double o) { return g_split(r, o); }, cuts[i], cuts[i + 1],
        quad_);
  return sum;
}

double WicksellModel::expectation(const RealFn& h,
                                  std::span<const double> kinks) const
{
  // inner integral in w = s - z: an Abel integral at w = 0 whose far end
  // (z = 0) may carry a square-root singularity of h
  auto inner = [&](double s) {
    if (s <= 0)
      return 0.0;
    std::vector<double> cuts;
    for (double k : kinks)
      if (k > 0 && k < s)
        cuts.push_back(s - k);
    return integrate_abel(
        [&](double r, double o) { return h(s - (r + o)); }, 0.0, s, quad_, cuts);
  };
  return cdf_.integrate(inner, -1.0, support(), quad_, kinks) / (2.0 * m0_);
}

double density_g(const WicksellModel& model, double z) { return model.g(z); }
double function_V(const WicksellModel& model, double x) { return model.V(x); }
double function_U(const WicksellModel& model, double x) { return model.U(x); }

double invert_g_to_cdf(const SplitFn& g_eval, double x, double support,
                       const QuadratureSpec& quad,
                       std::span<const double> breakpoints)
{
  if (x <= 0)
    return 0.0;
  if (x >= support)
    return 1.0;
  const double v0 = integrate_abel(g_eval, 0.0, support, quad, breakpoints);
  if (!(v0 > 0))
    throw NumericalError("model.division_by_zero",
                         "V(0) of the supplied density is not positive");
  const double vx = integrate_abel(g_eval, x, support, quad, breakpoints);
  return std::clamp(1.0 - vx / v0, 0.0, 1.0);
}

} // namespace wicksell
