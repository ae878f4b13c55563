#pragma once

#include <span>

namespace wicksell {

struct Summary
{
  double mean = 0.0;
  double sd = 0.0;       ///< sample standard deviation (n - 1)
  double sd_se = 0.0;    ///< Monte Carlo standard error of sd
  double mean_se = 0.0;  ///< standard error of the mean
  double var_se = 0.0;   ///< Monte Carlo standard error of the variance
  std::size_t n = 0;
};

/// Moments by fixed-order pairwise sums. The standard error of the sd uses
/// the fourth central moment: se(s^2) = sqrt((m4 - s^4) / n), se(s) = se(s^2) / 2s.
/// Fewer than two values give NaN for every spread quantity.
Summary summarize(std::span<const double> x);

double sample_sd(std::span<const double> x);

/// Pearson correlation; NaN when either side has zero spread.
double correlation(std::span<const double> a, std::span<const double> b);

} // namespace wicksell
