#pragma once

#include "wicksell/asymptotics.hpp"
#include "wicksell/cdf.hpp"
#include "wicksell/model.hpp"
#include "wicksell/parallel.hpp"
#include "wicksell/sampling.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wicksell {

struct ExperimentConfig
{
  std::string model = "paper-sec5";
  /// JSON cdf document; when set it replaces the preset.
  std::filesystem::path model_file;
  Interval flat{2.0, 3.0};
  double x = 2.5;
  std::vector<std::size_t> sizes{100, 200, 400, 1000, 2000};
  std::size_t replications = 2000;
  std::size_t npaths = 20000;
  std::size_t grid_m = kDefaultGridM;
  std::size_t covariance_draws = kDefaultCovarianceDraws;
  std::uint64_t seed = 20240917;
  std::filesystem::path out_dir = "wicksell-out";
  std::size_t overlay_n = 300;
  std::size_t figure_n = 1000;
  std::size_t figure_reps = 300;
  Execution execution = Execution::parallel;

  /// Throws ConfigError unless x lies inside the flat interval, R >= 1 and
  /// all sizes are positive.
  void validate() const;
  nlohmann::json to_json() const;
  /// Keys missing from `doc` keep the values of `base`.
  static ExperimentConfig from_json(const nlohmann::json& doc, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path, ExperimentConfig base);
  /// R = 100 and 2000 limit paths.
  ExperimentConfig quick() const;
};

/// The preset or the JSON cdf named by the config.
SquaredRadiusCdf load_cdf(const std::string& preset, const std::filesystem::path& model_file);
std::string model_label(const ExperimentConfig& cfg);

/// Estimator values at x for one replicate.
struct ReplicateValues
{
  double slope = 0.0;
  double iie = 0.0;
  double proj_iie = 0.0;
  double proj_naive = 0.0;
};

/// R replicates of size n; replicate r draws from the stream
/// (seed, (n << 32) | r), so the output does not depend on `ex`.
std::vector<ReplicateValues> run_replicates(const WicksellModel& model,
                                            const LengthBiasedSampler& sampler,
                                            const Interval& flat, double x, std::size_t n,
                                            std::size_t replications, std::uint64_t seed,
                                            Execution ex = Execution::parallel);

struct Cell
{
  double value = 0.0; ///< NaN prints as NA
  double se = 0.0;    ///< Monte Carlo standard error; 0 for quadrature values
};

/// Rows keyed by sample size or "limit", one column per statistic.
struct ResultTable
{
  std::vector<std::string> statistics;
  struct Row
  {
    std::string key;
    std::size_t count = 0; ///< replications, or paths for the limit row
    std::vector<Cell> cells;
  };
  std::vector<Row> rows;
  std::uint64_t seed = 0;
  std::size_t replications = 0;

  /// Throws std::out_of_range for an unknown key or statistic.
  const Cell& at(const std::string& key, const std::string& statistic) const;
  bool has_na() const;
  /// Columns key, count, then <stat>_sd and <stat>_se for each statistic.
  void write_csv(const std::filesystem::path& path) const;
};

/// sd and its standard error for sqrt(n) (value - centre) over replicates.
Cell scaled_sd(const std::vector<double>& values, double centre, std::size_t n);

/// Limit laws at x shared by the tables and figures.
struct LimitLaws
{
  double sigma = 0.0;
  LimitSample lx;
  LimitSample w;
  LimitSample normal;
};
LimitLaws simulate_limits(const WicksellModel& model, const ExperimentConfig& cfg);

/// Replicates for every configured size, computed once and shared.
struct ReplicateSet
{
  std::vector<std::size_t> sizes;
  std::vector<std::vector<ReplicateValues>> values;
  double v_at_x = 0.0;
};
ReplicateSet run_all_replicates(const WicksellModel& model, const ExperimentConfig& cfg);

/// Statistics slope, iie, proj_naive, proj_iie: sd of sqrt(n)(est - V)(x),
/// and a limit row (sigma for the informed ones, sd of L_x for iie).
ResultTable table1_from(const ReplicateSet& reps, const LimitLaws& limits,
                        const ExperimentConfig& cfg);
/// Statistics proj_naive_gap, proj_iie_gap, iie_gap: sd of
/// sqrt(n)(est - slope)(x); the limit row holds 0, 0 and sd of W.
ResultTable equivalence_from(const ReplicateSet& reps, const LimitLaws& limits,
                             const ExperimentConfig& cfg);

ResultTable run_table1(const ExperimentConfig& cfg);
ResultTable run_equivalence(const ExperimentConfig& cfg);

/// Meta-seed probe of the o_p(1) gap: for each meta-seed, the sd of
/// sqrt(n)(proj_naive - slope)(x) at n_small and n_large from R replicates.
struct TrendResult
{
  std::vector<double> sd_small, sd_large;
  std::size_t decreasing = 0;
};
TrendResult equivalence_trend(const WicksellModel& model, const Interval& flat, double x,
                              std::size_t n_small, std::size_t n_large, std::size_t replications,
                              std::size_t meta_seeds, std::uint64_t seed,
                              Execution ex = Execution::parallel);

/// Gaussian kernel density with Scott's bandwidth h = 3.5 sd n^{-1/3}.
/// Throws ConfigError("experiments.too_few_draws") for fewer than two draws
/// and NumericalError("experiments.degenerate_sample") when sd = 0.
std::vector<double> kde_scott(const std::vector<double>& draws, const std::vector<double>& at);
double scott_bandwidth(const std::vector<double>& draws);

/// Writes the figure data below `dir` and returns the files written:
///   figure1_sample.csv   one sample of size figure_n
///   overlay.csv          V and every estimator on [lo - 1, hi + 1], n = overlay_n
///   scatter.csv          iie and slope at x per replicate with Tukey coordinates
///   histograms.csv       sqrt(n)-scaled iie, slope and their difference
///   limit_{Lx,normal,W}.csv  matching limit draws
///   kde.csv              Scott-rule densities of all six series
std::vector<std::filesystem::path> run_figures(const WicksellModel& model,
                                               const ExperimentConfig& cfg,
                                               const LimitLaws& limits,
                                               const std::filesystem::path& dir);

/// Git blob hash: sha1("blob <size>\0" + content), lower-case hex.
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

struct ReproduceResult
{
  ResultTable table1;
  ResultTable equivalence;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Runs everything and writes table1.csv, equivalence.csv, figures/*.csv and
/// manifest.json into cfg.out_dir (created if missing). On failure a manifest
/// with status "failed", the error id and the files written so far is left
/// behind and the error is rethrown.
ReproduceResult reproduce(const ExperimentConfig& cfg);

} // namespace wicksell
