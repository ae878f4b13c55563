#pragma once

#include "wicksell/cdf.hpp"
#include "wicksell/model.hpp"
#include "wicksell/rng.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace wicksell {

/// Sorted i.i.d. squared section radii with their provenance.
struct SampleBatch
{
  std::vector<double> z;
  StreamKey key{};
  std::string model_id;

  std::size_t n() const { return z.size(); }
  bool empty() const { return z.empty(); }
};

/// Draws squared sphere radii from the length-biased law
/// dF~(s) = sqrt(s) dF(s) / m0 by inversion: closed form for atoms, uniform
/// pieces and exp_square pieces with shift 0 (incomplete gamma), tabulated
/// cdf plus safeguarded Newton to 1e-12 elsewhere.
class LengthBiasedSampler
{
public:
  explicit LengthBiasedSampler(const SquaredRadiusCdf& cdf);
  LengthBiasedSampler(const LengthBiasedSampler&);
  LengthBiasedSampler(LengthBiasedSampler&&) noexcept;
  LengthBiasedSampler& operator=(const LengthBiasedSampler&);
  LengthBiasedSampler& operator=(LengthBiasedSampler&&) noexcept;
  ~LengthBiasedSampler();

  /// Inverse cdf of the length-biased law at u in (0, 1).
  double quantile(double u) const;
  double draw(Engine& e) const { return quantile(uniform01(e)); }

private:
  struct Piece;
  std::vector<Piece> pieces_;
  std::vector<double> cumulative_; // normalized, upper end of each piece
};

/// One length-biased sphere draw from the stream `key`.
double sample_sphere_length_biased(const SquaredRadiusCdf& cdf, StreamKey key);

/// Squared radius of the circle cut from a sphere of squared radius s by a
/// plane at distance u * sqrt(s) from its centre.
inline double section_squared_radius(double s, double u)
{
  return s * (1.0 - u) * (1.0 + u);
}

/// n draws of Z = S (1 - U^2) with S length-biased and U uniform(0, 1): the
/// squared radius of the section of a sphere hit by a uniformly placed plane.
/// The result is sorted ascending.
SampleBatch sample_batch(const WicksellModel& model, std::size_t n,
                         StreamKey key, const std::string& model_id = "");

/// Same draws from a prebuilt sampler (avoids rebuilding tables per batch).
SampleBatch sample_batch(const LengthBiasedSampler& sampler, std::size_t n,
                         StreamKey key, const std::string& model_id = "");

/// Kolmogorov-Smirnov distance between the empirical cdf of `batch` and
/// `cdf_eval`, taking both one-sided gaps at every sample point.
/// Throws ConfigError("sampling.empty_batch") for an empty batch.
double ks_distance(const SampleBatch& batch,
                   const std::function<double(double)>& cdf_eval);

/// 1% critical value of the one-sample KS statistic, 1.63 / sqrt(n).
inline double ks_critical_1pct(std::size_t n)
{
  return 1.63 / std::sqrt(static_cast<double>(n));
}

/// cdf G of g tabulated by quadrature over a fine grid, linearly
/// interpolated; the independent reference for goodness-of-fit checks.
class GCdfTable
{
public:
  explicit GCdfTable(const WicksellModel& model, std::size_t cells = 4000);
  double operator()(double z) const;

private:
  std::vector<double> nodes_;
  std::vector<double> values_;
};

/// CSV with a single column "z" and a header row.
void write_batch_csv(const std::filesystem::path& path, const SampleBatch& batch);
SampleBatch read_batch_csv(const std::filesystem::path& path);

} // namespace wicksell
