#include "wicksell/stats.hpp"

#include "wicksell/parallel.hpp"

#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wicksell {

void set_threads(int n)
{
#ifdef _OPENMP
  if (n > 0)
    omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double pairwise_sum(std::span<const double> x)
{
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x)
      s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

Summary summarize(std::span<const double> x)
{
  Summary s;
  s.n = x.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.empty()) {
    s.mean = s.sd = s.sd_se = s.mean_se = s.var_se = nan;
    return s;
  }
  const double n = static_cast<double>(x.size());
  s.mean = pairwise_sum(x) / n;
  if (x.size() < 2) {
    s.sd = s.sd_se = s.mean_se = s.var_se = nan;
    return s;
  }
  std::vector<double> d2(x.size()), d4(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - s.mean;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double var = pairwise_sum(d2) / (n - 1);
  const double m4 = pairwise_sum(d4) / n;
  s.sd = std::sqrt(var);
  s.mean_se = std::sqrt(var / n);
  s.var_se = std::sqrt(std::max(0.0, m4 - var * var) / n);
  s.sd_se = s.sd > 0 ? s.var_se / (2 * s.sd) : 0.0;
  return s;
}

double sample_sd(std::span<const double> x)
{
  return summarize(x).sd;
}

double correlation(std::span<const double> a, std::span<const double> b)
{
  const auto sa = summarize(a);
  const auto sb = summarize(b);
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    prod[i] = (a[i] - sa.mean) * (b[i] - sb.mean);
  const double cov = pairwise_sum(prod) / (static_cast<double>(a.size()) - 1);
  if (!(sa.sd > 0) || !(sb.sd > 0))
    return std::numeric_limits<double>::quiet_NaN();
  return cov / (sa.sd * sb.sd);
}

} // namespace wicksell
