#pragma once

#include "wicksell/cdf.hpp"
#include "wicksell/model.hpp"
#include "wicksell/parallel.hpp"
#include "wicksell/rng.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace wicksell {

/// k(z) = 2 (sqrt((z - lo)_+) - sqrt((z - hi)_+)) / (hi - lo), the influence
/// function of the empirical slope on the flat interval.
struct InfluenceFn
{
  Interval flat;

  explicit InfluenceFn(Interval flat);
  double operator()(double z) const;
};

/// Var_g k(Z) = E k^2 - (E k)^2, both expectations by quadrature through F.
double sigma_sq(const WicksellModel& model, const Interval& flat);

/// int_0^M k g - V(lo), with the left side integrated against g directly,
/// independently of the route used by sigma_sq.
double influence_mean_identity(const WicksellModel& model, const Interval& flat);

/// Discretized centred Gaussian process: covariance on `points`, and a
/// Cholesky factor over the rows with nonzero variance. Rows of zero
/// variance (features that vanish identically) are exactly 0 in every path.
struct GPGrid
{
  std::vector<double> points;
  double x = 0.0;              ///< the point where slopes are read off
  Eigen::MatrixXd covariance;
  std::vector<std::size_t> active;
  Eigen::MatrixXd factor;      ///< lower triangular, size active x active
  double jitter = 0.0;

  /// Factorizes `covariance`, escalating the diagonal jitter from 1e-12 to
  /// 1e-8. Throws NumericalError("asymptotics.factorization") on failure.
  void factorize();
  /// One path: factor * xi on the active rows, 0 elsewhere.
  std::vector<double> path(Engine& e) const;
};

/// m uniform cells on the flat interval plus x.
std::vector<double> limit_grid(const Interval& flat, double x, std::size_t m);

/// Covariance of b_s(Z) = 2 sqrt((Z - s)_+) over n_mc draws Z ~ g. Every
/// feature used below is a linear combination of these.
Eigen::MatrixXd base_covariance(const WicksellModel& model, const std::vector<double>& points,
                                std::size_t n_mc, StreamKey key);

/// Features f_{x,s}(Z) = 2 (sqrt((Z - x)_+) - sqrt((Z - s)_+)) on the grid.
GPGrid gp_covariance(const WicksellModel& model, double x, const std::vector<double>& points,
                     std::size_t n_mc, StreamKey key);

/// Bridge features h_t = ((hi - t) f_{lo,t} + (t - lo) f_{hi,t}) / (hi - lo),
/// which vanish at both ends of the flat interval.
GPGrid bridge_covariance(const WicksellModel& model, const Interval& flat, double x,
                         const std::vector<double>& points, std::size_t n_mc, StreamKey key);

/// Both grids from one set of draws.
struct LimitGrids
{
  GPGrid lx;
  GPGrid w;
};
LimitGrids limit_grids(const WicksellModel& model, const Interval& flat, double x,
                       std::size_t grid_m, std::size_t n_mc, StreamKey key);

/// Right derivative at x of the least concave majorant of the path.
double lcm_slope_at(const std::vector<double>& s, const std::vector<double>& path, double x);

enum class LawId
{
  Lx,
  W,
  Normal
};
std::string to_string(LawId id);
LawId parse_law(const std::string& name);

struct LimitSample
{
  std::vector<double> draws;
  LawId law = LawId::Lx;
  std::size_t npaths = 0;
  std::size_t grid_m = 0;
  double mean = 0.0;
  double sd = 0.0;
  double mc_se = 0.0; ///< Monte Carlo standard error of sd
};

/// Slopes at grid.x of the LCM of npaths paths; path p uses the stream
/// (key.master_seed, p) with the given purpose.
LimitSample sample_slopes(const GPGrid& grid, std::size_t npaths, StreamKey key,
                          StreamPurpose purpose, LawId law, std::size_t grid_m,
                          Execution ex = Execution::parallel);

inline constexpr std::size_t kDefaultGridM = 400;
inline constexpr std::size_t kDefaultCovarianceDraws = 200'000;

LimitSample sample_Lx(const WicksellModel& model, const Interval& flat, double x,
                      std::size_t npaths, std::size_t grid_m, StreamKey key,
                      std::size_t n_mc = kDefaultCovarianceDraws,
                      Execution ex = Execution::parallel);
LimitSample sample_W(const WicksellModel& model, const Interval& flat, double x,
                     std::size_t npaths, std::size_t grid_m, StreamKey key,
                     std::size_t n_mc = kDefaultCovarianceDraws,
                     Execution ex = Execution::parallel);
/// npaths draws of N(0, sigma^2).
LimitSample sample_normal(double sigma, std::size_t npaths, StreamKey key);

/// Fills mean, sd and mc_se from draws.
void summarize_into(LimitSample& s);

/// CSV with one column "draw", and the summary JSON
/// {law_id, sd, mc_se, npaths, grid_m}.
void write_limit_csv(const std::filesystem::path& path, const LimitSample& s);
void write_limit_summary(const std::filesystem::path& path, const LimitSample& s);

} // namespace wicksell
