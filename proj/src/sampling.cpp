#include "wicksell/sampling.hpp"

#include "wicksell/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wicksell {

namespace {

double gauss10(const std::function<double(double)>& f, double a, double b)
{
  if (!(b > a))
    return 0.0;
  return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

constexpr double kGammaShape = 1.25;

} // namespace

struct LengthBiasedSampler::Piece
{
  enum class Type
  {
    atom,
    uniform_sphere,  // density ~ sqrt(s) on [lo, hi]
    uniform_section, // density constant on [lo, hi]
    gamma,           // exp_square, shift 0, sphere weighting
    exp_section,     // exp_square, section weighting: raw law itself
    tabulated
  };

  Type type = Type::atom;
  double lo = 0.0;
  double hi = 0.0;
  double weight = 0.0; // unnormalized length-biased mass
  double shift = 0.0;
  double scale = 1.0;
  double p_lo = 0.0, p_hi = 0.0; // gamma
  std::function<double(double)> density; // tabulated
  std::vector<double> nodes, cum;        // tabulated

  double quantile(double f) const
  {
    f = std::clamp(f, 0.0, 1.0);
    switch (type) {
    case Type::atom:
      return lo;
    case Type::uniform_sphere: {
      const double a = std::pow(lo, 1.5);
      const double b = std::pow(hi, 1.5);
      return std::pow(a + f * (b - a), 2.0 / 3.0);
    }
    case Type::uniform_section:
      return lo + f * (hi - lo);
    case Type::gamma: {
      const double p = p_lo + f * (p_hi - p_lo);
      const double u = boost::math::gamma_p_inv(kGammaShape, std::min(p, p_hi));
      return std::clamp(std::sqrt(scale * u), lo, hi);
    }
    case Type::exp_section: {
      const double a = lo - shift;
      const double t = f * weight;
      const double tail = std::exp(-a * a / scale) - t;
      if (tail <= 0)
        return hi;
      return std::clamp(shift + std::sqrt(-scale * std::log(tail)), lo, hi);
    }
    case Type::tabulated:
      return tabulated_quantile(f * weight);
    }
    return lo;
  }

  double tabulated_quantile(double target) const
  {
    auto it = std::upper_bound(cum.begin(), cum.end(), target);
    std::size_t j = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    j = std::min(j, nodes.size() - 2);
    double a = nodes[j], b = nodes[j + 1];
    const double base = cum[j];
    const double span = cum[j + 1] - cum[j];
    double x = span > 0 ? a + (target - base) / span * (b - a) : a;
    for (int iter = 0; iter < 60; ++iter) {
      const double fx = base + gauss10(density, nodes[j], x) - target;
      if (fx > 0)
        b = x;
      else
        a = x;
      const double d = density(x);
      double next = d > 0 ? x - fx / d : 0.5 * (a + b);
      if (!(next > a && next < b))
        next = 0.5 * (a + b);
      if (std::abs(next - x) <= 1e-12 * std::max(1.0, std::abs(x)))
        return next;
      x = next;
    }
    return x;
  }
};

LengthBiasedSampler::LengthBiasedSampler(const SquaredRadiusCdf& cdf)
{
  const bool sphere = cdf.weighting() == Weighting::sphere;
  for (const auto& seg : cdf.segments()) {
    Piece p;
    p.lo = seg.lo;
    p.hi = seg.hi;
    switch (seg.kind) {
    case SegmentKind::constant:
      continue;
    case SegmentKind::atom:
      p.type = Piece::Type::atom;
      p.weight = sphere ? seg.mass * std::sqrt(seg.lo) : seg.mass;
      break;
    case SegmentKind::uniform:
      if (sphere) {
        p.type = Piece::Type::uniform_sphere;
        p.weight = seg.mass / (seg.hi - seg.lo) * (2.0 / 3.0) *
                   (std::pow(seg.hi, 1.5) - std::pow(seg.lo, 1.5));
      } else {
        p.type = Piece::Type::uniform_section;
        p.weight = seg.mass;
      }
      break;
    case SegmentKind::exp_square:
      p.shift = seg.shift;
      p.scale = seg.scale;
      if (!sphere) {
        p.type = Piece::Type::exp_section;
        p.weight = seg.raw_mass();
      } else if (seg.shift == 0.0) {
        // int sqrt(s) (2 s / c) e^{-s^2/c} ds = c^{1/4} Gamma(5/4) P(5/4, s^2/c)
        p.type = Piece::Type::gamma;
        p.p_lo = boost::math::gamma_p(kGammaShape, seg.lo * seg.lo / seg.scale);
        p.p_hi = boost::math::gamma_p(kGammaShape, seg.hi * seg.hi / seg.scale);
        p.weight = std::pow(seg.scale, 0.25) * boost::math::tgamma(kGammaShape) *
                   (p.p_hi - p.p_lo);
      } else {
        p.type = Piece::Type::tabulated;
        p.density = [seg](double s) { return std::sqrt(s) * seg.raw_density(s); };
        constexpr std::size_t cells = 1024;
        p.nodes.resize(cells + 1);
        p.cum.resize(cells + 1);
        for (std::size_t i = 0; i <= cells; ++i)
          p.nodes[i] = seg.lo + (seg.hi - seg.lo) * static_cast<double>(i) / cells;
        p.nodes.back() = seg.hi;
        p.cum[0] = 0.0;
        for (std::size_t i = 0; i < cells; ++i)
          p.cum[i + 1] = p.cum[i] + gauss10(p.density, p.nodes[i], p.nodes[i + 1]);
        p.weight = p.cum.back();
      }
      break;
    }
    if (p.weight > 0)
      pieces_.push_back(std::move(p));
  }
  require(!pieces_.empty(), "sampling.no_mass",
          "length-biased law carries no mass");
  double total = 0.0;
  for (const auto& p : pieces_)
    total += p.weight;
  double acc = 0.0;
  for (const auto& p : pieces_) {
    acc += p.weight / total;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

LengthBiasedSampler::LengthBiasedSampler(const LengthBiasedSampler&) = default;
LengthBiasedSampler::LengthBiasedSampler(LengthBiasedSampler&&) noexcept = default;
LengthBiasedSampler& LengthBiasedSampler::operator=(const LengthBiasedSampler&) = default;
LengthBiasedSampler& LengthBiasedSampler::operator=(LengthBiasedSampler&&) noexcept = default;
LengthBiasedSampler::~LengthBiasedSampler() = default;

double LengthBiasedSampler::quantile(double u) const
{
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end())
    it = std::prev(it);
  const auto k = static_cast<std::size_t>(it - cumulative_.begin());
  const double prev = k == 0 ? 0.0 : cumulative_[k - 1];
  const double width = cumulative_[k] - prev;
  const double f = width > 0 ? (u - prev) / width : 0.0;
  return pieces_[k].quantile(f);
}

double sample_sphere_length_biased(const SquaredRadiusCdf& cdf, StreamKey key)
{
  LengthBiasedSampler sampler(cdf);
  Engine e = make_engine(key, StreamPurpose::sample);
  return sampler.draw(e);
}

SampleBatch sample_batch(const LengthBiasedSampler& sampler, std::size_t n,
                         StreamKey key, const std::string& model_id)
{
  SampleBatch batch;
  batch.key = key;
  batch.model_id = model_id;
  batch.z.resize(n);
  Engine e = make_engine(key, StreamPurpose::sample);
  for (auto& z : batch.z) {
    const double s = sampler.draw(e);
    z = section_squared_radius(s, uniform01(e));
  }
  std::sort(batch.z.begin(), batch.z.end());
  return batch;
}

SampleBatch sample_batch(const WicksellModel& model, std::size_t n,
                         StreamKey key, const std::string& model_id)
{
  return sample_batch(LengthBiasedSampler(model.cdf()), n, key, model_id);
}

double ks_distance(const SampleBatch& batch,
                   const std::function<double(double)>& cdf_eval)
{
  if (batch.empty())
    throw ConfigError("sampling.empty_batch", "KS distance of an empty batch");
  const double n = static_cast<double>(batch.n());
  double d = 0.0;
  for (std::size_t i = 0; i < batch.n(); ++i) {
    const double F = cdf_eval(batch.z[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - F);
    d = std::max(d, F - static_cast<double>(i) / n);
  }
  return d;
}

GCdfTable::GCdfTable(const WicksellModel& model, std::size_t cells)
{
  const double M = model.support();
  for (std::size_t i = 0; i <= cells; ++i)
    nodes_.push_back(M * static_cast<double>(i) / static_cast<double>(cells));
  for (double b : model.cdf().breakpoints())
    nodes_.push_back(b);
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());

  QuadratureSpec q = model.quad();
  q.abs_tol = 1e-12;
  values_.assign(nodes_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    values_[i + 1] = values_[i] + integrate_endpoint_singular(
                                      [&](double r, double o) { return model.g_split(r, o); },
                                      nodes_[i], nodes_[i + 1], q);
}

double GCdfTable::operator()(double z) const
{
  if (z <= nodes_.front())
    return 0.0;
  if (z >= nodes_.back())
    return std::min(1.0, values_.back());
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), z);
  const auto j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double t = (z - nodes_[j]) / (nodes_[j + 1] - nodes_[j]);
  return values_[j] + t * (values_[j + 1] - values_[j]);
}

void write_batch_csv(const std::filesystem::path& path, const SampleBatch& batch)
{
  std::ofstream out(path);
  if (!out)
    throw ConfigError("io.write", "cannot write " + path.string());
  out << "z\n";
  out.precision(17);
  for (double z : batch.z)
    out << z << '\n';
  if (!out)
    throw NumericalError("io.write", "failed writing " + path.string());
}

SampleBatch read_batch_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("io.read", "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("z", 0) != 0)
    throw ConfigError("io.format", path.string() + ": expected header 'z'");
  SampleBatch batch;
  batch.model_id = path.filename().string();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r")
      continue;
    std::istringstream ss(line);
    double z = 0.0;
    if (!(ss >> z) || !std::isfinite(z) || z < 0) {
      std::ostringstream msg;
      msg << path.string() << ":" << row << ": not a nonnegative number";
      throw ConfigError("io.format", msg.str());
    }
    batch.z.push_back(z);
  }
  std::sort(batch.z.begin(), batch.z.end());
  return batch;
}

} // namespace wicksell
