#pragma once

#include "wicksell/quadrature.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace wicksell {

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  /// Throws ConfigError unless lo < hi.
  void validate() const;
};

enum class SegmentKind
{
  constant,   ///< no mass on the segment
  uniform,    ///< `mass` spread uniformly over [lo, hi]
  exp_square, ///< F(s) = 1 - exp(-(s - shift)^2 / scale) restricted to [lo, hi]
  atom        ///< point mass `mass` at lo (== hi)
};

struct Segment
{
  double lo = 0.0;
  double hi = 0.0;
  SegmentKind kind = SegmentKind::constant;
  double mass = 0.0;  // uniform, atom
  double shift = 0.0; // exp_square
  double scale = 1.0; // exp_square

  /// Unnormalized mass carried by the segment.
  double raw_mass() const;
  /// Unnormalized mass in [lo, x] (x clamped to the segment).
  double raw_mass_upto(double x) const;
  /// Unnormalized Lebesgue density on (lo, hi); 0 for constant and atom.
  double raw_density(double s) const;
};

/// How the segment law relates to the sphere law.
enum class Weighting
{
  /// segments describe the cdf F of squared sphere radii directly
  sphere,
  /// segments describe the squared radii of the spheres hit by the section
  /// plane; the sphere law is dF(s) proportional to s^{-1/2} times that law
  section
};

/// Piecewise closed-form cdf F of squared sphere radii, supported on [0, M]
/// and renormalized so that F(M) = 1.
class SquaredRadiusCdf
{
public:
  SquaredRadiusCdf(std::vector<Segment> segments, double support,
                   std::optional<Interval> flat = std::nullopt,
                   Weighting weighting = Weighting::sphere);

  static SquaredRadiusCdf from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  /// Named presets: "paper-sec5", "paper-sec5-as-simulated", "point-mass-4",
  /// "uniform-01".
  static SquaredRadiusCdf preset(const std::string& name);
  static std::vector<std::string> preset_names();

  /// Right-continuous F(x) = P(S <= x).
  double operator()(double x) const;

  /// Integral of h over (a, b] against dF; atoms at 0 are included when a < 0.
  /// `kinks` are points where h is not smooth; they become breakpoints.
  double integrate(const RealFn& h, double a, double b,
                   const QuadratureSpec& quad,
                   std::span<const double> kinks = {}) const;

  /// Continuous part of dF/ds (normalized).
  double density(double s) const;

  struct Atom
  {
    double at;
    double weight;
  };
  /// Point masses of F (normalized weights).
  std::vector<Atom> atoms() const;

  /// Ends of every segment, sorted and deduplicated.
  std::vector<double> breakpoints() const;

  const std::vector<Segment>& segments() const { return segments_; }
  double support() const { return support_; }
  const std::optional<Interval>& flat() const { return flat_; }
  Weighting weighting() const { return weighting_; }
  /// Sphere-law weight w(s) relative to the raw segment law, before
  /// normalization: 1 for sphere weighting, s^{-1/2} for section weighting.
  double weight(double s) const;
  /// Normalizing constant: integral of w against the raw segment law.
  double normalizer() const { return normalizer_; }

private:
  double raw_weighted_upto(std::size_t seg, double x) const;

  std::vector<Segment> segments_;
  double support_;
  std::optional<Interval> flat_;
  Weighting weighting_;
  double normalizer_ = 1.0;
  std::vector<double> cumulative_; // weighted raw mass before each segment
  QuadratureSpec quad_{};
};

/// Support bound of the paper-sec5 preset: smallest M with 1 - F(M) = 1e-10.
double sec5_support();

} // namespace wicksell
