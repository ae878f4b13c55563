#pragma once

#include "wicksell/cdf.hpp"
#include "wicksell/functions.hpp"
#include "wicksell/quadrature.hpp"
#include "wicksell/sampling.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace wicksell {

/// Sorted, deduplicated evaluation points on [0, M] containing 0, M, the
/// flat interval ends (if given), every observation and N uniform points.
struct EvalGrid
{
  std::vector<double> points;
  double support = 0.0;

  static EvalGrid make(const SampleBatch& batch, double support, std::size_t n_uniform,
                       const Interval* flat = nullptr);
  /// Default resolution: 10 n uniform points plus the required ones.
  static EvalGrid make_default(const SampleBatch& batch, double support,
                               const Interval* flat = nullptr);
  double mesh() const;
};

/// Cells [x_i, x_{i+1}) of [0, M]; the flat interval is exactly one cell.
struct Partition
{
  std::vector<double> breakpoints;
  std::size_t flat_index = 0;

  /// Validates strict increase, breakpoints[0] == 0 and that the flat
  /// interval is a cell.
  Partition(std::vector<double> breakpoints, const Interval& flat);
  /// The flat cell plus cells of the flat interval's width on either side;
  /// the outermost cells absorb the remainders.
  static Partition around(const Interval& flat, double support);

  Interval cell(std::size_t i) const { return {breakpoints[i], breakpoints[i + 1]}; }
  std::size_t cells() const { return breakpoints.size() - 1; }
};

/// (1/n) sum over Z_i > x of (Z_i - x)^{-1/2}; strict inequality keeps it finite.
double naive_V(const SampleBatch& batch, double x);

/// (2/n) sum of sqrt(Z_i) - sqrt((Z_i - x)_+), evaluated as
/// x / (sqrt(Z_i) + sqrt(Z_i - x)) for Z_i > x to avoid cancellation.
double u_n(const SampleBatch& batch, double x);

/// U_n tabulated at 0, each distinct observation and M. U_n is convex
/// between consecutive observations, so the upper hull of these points is
/// the least concave majorant of U_n on [0, M].
class UnGraph
{
public:
  UnGraph(const SampleBatch& batch, double support);

  double operator()(double x) const { return u_n(*batch_, x); }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& u() const { return u_; }
  double support() const { return support_; }
  const SampleBatch& batch() const { return *batch_; }

  /// U*_n, the least concave majorant of U_n on [0, M].
  PiecewiseLinearFn majorant() const;
  /// LCM of U_n with the chord replacing it on the flat interval.
  PiecewiseLinearFn chord_majorant(const Interval& flat) const;

private:
  const SampleBatch* batch_;
  double support_;
  std::vector<double> x_, u_;
};

/// Right derivative of a concave majorant on [0, M] as a step function,
/// extended by 0 from M on.
StepFn slope_of(const PiecewiseLinearFn& majorant);

/// Isotonic inverse estimator: right derivative of U*_n.
StepFn iie(const SampleBatch& batch, const EvalGrid& grid);
StepFn iie(const UnGraph& un);

/// Same estimator from the LCM of U_n sampled on the whole grid. Agrees with
/// iie() because the grid contains every observation.
StepFn iie_on_grid(const SampleBatch& batch, const EvalGrid& grid);

/// IIE off the flat interval, (U*_n(hi) - U*_n(lo)) / (hi - lo) on [lo, hi).
StepFn projected_iie(const SampleBatch& batch, const Interval& flat, const EvalGrid& grid);
StepFn projected_iie(const UnGraph& un, const Interval& flat);

/// (U_n(x_{i+1}) - U_n(x_i)) / (x_{i+1} - x_i) on each cell, 0 from M on.
StepFn empirical_slope(const SampleBatch& batch, const Partition& partition);
StepFn empirical_slope(const UnGraph& un, const Partition& partition);
/// Cell slopes of any primitive U, e.g. the population U of a model.
StepFn empirical_slope_of(const std::function<double(double)>& U, const Partition& partition);

/// Right derivative of the LCM of U_n with U_n replaced by its chord on the
/// flat interval.
StepFn projected_naive(const SampleBatch& batch, const Interval& flat, const EvalGrid& grid);
StepFn projected_naive(const UnGraph& un, const Interval& flat);

/// Q^f(h) = int h (h - 2 f) over `domain` by quadrature, piece by piece.
double q_discrepancy(const StepFn& h, const std::function<double(double)>& f_eval,
                     const Interval& domain, const QuadratureSpec& quad,
                     const std::vector<double>& f_breakpoints = {});

/// Q^f(h) over [0, M] for step functions h and f, exactly.
double q_discrepancy_step(const StepFn& h, const StepFn& f, double support);

/// Q^{V_n}(h) over [0, M] in closed form: each piece [a, b) with value c
/// contributes c^2 (b - a) - 2 c (U_n(b) - U_n(a)).
double q_discrepancy_vn(const StepFn& h, const UnGraph& un);

/// Outcome of the profile minimization over the flat level a.
struct ProfileResult
{
  StepFn estimate;
  double a_star = 0.0;
  double objective = 0.0;
  /// Local minima of the objective on the 50-point probe grid.
  int probe_minima = 0;
  bool used_grid_fallback = false;
};

/// V^a_n: the minimizer of Q^{V_n} over decreasing functions equal to a on
/// the flat interval. Left of it the slope of the LCM of U_n restricted to
/// [0, lo], clamped below by a; right of it the slope of the LCM of U_n
/// restricted to [hi, M], clamped above by a.
StepFn profile_fixed_a(const UnGraph& un, const Interval& flat, double a);
double profile_objective(const UnGraph& un, const Interval& flat, double a);

/// Minimizes a -> Q^{V_n}(V^a_n) by golden section on [0, iie(0)], after a
/// 50-point probe; falls back to a 1000-point grid if the probe finds more
/// than one local minimum. Throws NumericalError("profile.no_bracket").
ProfileResult profile_projection_detail(const UnGraph& un, const Interval& flat,
                                        double a_tol = 1e-10);
StepFn profile_projection(const SampleBatch& batch, const Interval& flat, const EvalGrid& grid);

enum class Cone
{
  V,      ///< nonnegative, nonincreasing
  V_bar,  ///< nonnegative, constant on each partition cell
  V_flat  ///< member of V and constant on the flat interval
};

/// Checks the defining constraints of the cone on the knots of v. Flat
/// pieces are half-open, [lo, hi), as for any right-continuous function.
bool validate_cone(const StepFn& v, Cone cone, const Interval& flat,
                   const Partition& partition);

enum class EstimatorId
{
  iie,
  proj_iie,
  slope,
  proj_naive,
  profile
};

std::string to_string(EstimatorId id);
/// Accepts the CLI spellings iie, proj-iie, slope, proj-naive, profile.
EstimatorId parse_estimator(const std::string& name);

/// Any estimator by id. The partition for `slope` is Partition::around(flat).
StepFn estimate(EstimatorId id, const SampleBatch& batch, const Interval& flat,
                const EvalGrid& grid);

/// CSV with columns knot, value, estimator_id.
void write_estimate_csv(const std::filesystem::path& path, const StepFn& v,
                        const std::string& estimator_id);

} // namespace wicksell
