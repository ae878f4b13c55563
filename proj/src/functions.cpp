#include "wicksell/functions.hpp"

#include "wicksell/errors.hpp"

#include <algorithm>
#include <string>

namespace wicksell {

namespace {

void check_knots(const std::vector<double>& knots, std::size_t values,
                 const char* what)
{
  require(knots.size() == values, "function.size_mismatch",
          std::string(what) + ": knots and values differ in length");
  for (std::size_t i = 1; i < knots.size(); ++i)
    require(knots[i] > knots[i - 1], "function.knots_not_increasing",
            std::string(what) + ": knots must be strictly increasing");
}

} // namespace

StepFn::StepFn(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values))
{
  check_knots(knots_, values_.size(), "StepFn");
}

double StepFn::operator()(double x) const
{
  if (knots_.empty())
    return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin())
    return values_.front();
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFn::integral(double a, double b) const
{
  if (knots_.empty() || !(b > a))
    return 0.0;
  double total = 0.0;
  double left = a;
  // pieces: (-inf, k0), [k0, k1), ..., [k_last, inf)
  auto it = std::upper_bound(knots_.begin(), knots_.end(), a);
  while (left < b) {
    const double right = it == knots_.end() ? b : std::min(b, *it);
    const double v = it == knots_.begin() ? values_.front()
                                          : values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
    total += v * (right - left);
    left = right;
    if (it != knots_.end())
      ++it;
  }
  return total;
}

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> knots,
                                     std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values))
{
  check_knots(knots_, values_.size(), "PiecewiseLinearFn");
}

std::size_t PiecewiseLinearFn::piece(double x) const
{
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  std::size_t j = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::min(j, knots_.size() - 2);
}

double PiecewiseLinearFn::operator()(double x) const
{
  if (knots_.empty())
    return 0.0;
  if (x <= knots_.front())
    return values_.front();
  if (x >= knots_.back())
    return values_.back();
  const std::size_t j = piece(x);
  const double t = (x - knots_[j]) / (knots_[j + 1] - knots_[j]);
  return values_[j] + t * (values_[j + 1] - values_[j]);
}

double PiecewiseLinearFn::right_derivative(double x) const
{
  if (knots_.size() < 2)
    return 0.0;
  const std::size_t j = piece(x);
  return (values_[j + 1] - values_[j]) / (knots_[j + 1] - knots_[j]);
}

StepFn PiecewiseLinearFn::derivative() const
{
  if (knots_.size() < 2)
    return {};
  std::vector<double> k(knots_.begin(), knots_.end() - 1);
  std::vector<double> v(k.size());
  for (std::size_t j = 0; j < k.size(); ++j)
    v[j] = (values_[j + 1] - values_[j]) / (knots_[j + 1] - knots_[j]);
  return StepFn(std::move(k), std::move(v));
}

bool PiecewiseLinearFn::is_concave(double tol) const
{
  for (std::size_t j = 1; j + 1 < knots_.size(); ++j) {
    const double s0 = (values_[j] - values_[j - 1]) / (knots_[j] - knots_[j - 1]);
    const double s1 = (values_[j + 1] - values_[j]) / (knots_[j + 1] - knots_[j]);
    if (s1 - s0 > tol)
      return false;
  }
  return true;
}

std::vector<std::size_t> upper_hull(const std::vector<double>& x,
                                    const std::vector<double>& y)
{
  std::vector<std::size_t> h;
  h.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    while (h.size() >= 2) {
      const std::size_t a = h[h.size() - 2];
      const std::size_t b = h.back();
      // drop b unless it lies strictly above the chord from a to i
      const double cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
      if (cross >= 0)
        h.pop_back();
      else
        break;
    }
    h.push_back(i);
  }
  return h;
}

PiecewiseLinearFn lcm(const PiecewiseLinearFn& f)
{
  if (f.size() < 2)
    throw ConfigError("lcm.degenerate_input", "LCM needs at least two knots");
  const auto idx = upper_hull(f.knots(), f.values());
  std::vector<double> k, v;
  k.reserve(idx.size());
  v.reserve(idx.size());
  for (std::size_t i : idx) {
    k.push_back(f.knots()[i]);
    v.push_back(f.values()[i]);
  }
  return PiecewiseLinearFn(std::move(k), std::move(v));
}

} // namespace wicksell
