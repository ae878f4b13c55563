#include "wicksell/cdf.hpp"

#include "wicksell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wicksell {

void Interval::validate() const
{
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "interval.order",
          "interval requires lo < hi");
}

double Segment::raw_mass() const { return raw_mass_upto(hi); }

double Segment::raw_mass_upto(double x) const
{
  if (x < lo)
    return 0.0;
  x = std::min(x, hi);
  switch (kind) {
  case SegmentKind::constant:
    return 0.0;
  case SegmentKind::atom:
    return mass;
  case SegmentKind::uniform:
    return hi > lo ? mass * (x - lo) / (hi - lo) : 0.0;
  case SegmentKind::exp_square: {
    const double a = lo - shift;
    const double b = x - shift;
    return std::exp(-a * a / scale) - std::exp(-b * b / scale);
  }
  }
  return 0.0;
}

double Segment::raw_density(double s) const
{
  if (s < lo || s > hi)
    return 0.0;
  switch (kind) {
  case SegmentKind::uniform:
    return hi > lo ? mass / (hi - lo) : 0.0;
  case SegmentKind::exp_square: {
    const double d = s - shift;
    return 2.0 * d / scale * std::exp(-d * d / scale);
  }
  default:
    return 0.0;
  }
}

SquaredRadiusCdf::SquaredRadiusCdf(std::vector<Segment> segments,
                                   double support,
                                   std::optional<Interval> flat,
                                   Weighting weighting)
  : segments_(std::move(segments)),
    support_(support),
    flat_(flat),
    weighting_(weighting)
{
  require(std::isfinite(support_) && support_ > 0, "cdf.support",
          "support bound M must be positive and finite");
  require(!segments_.empty(), "cdf.segments", "cdf needs at least one segment");
  require(segments_.front().lo == 0.0, "cdf.tiling",
          "segments must start at 0");
  double edge = 0.0;
  for (const auto& seg : segments_) {
    std::ostringstream where;
    where << "segment [" << seg.lo << ", " << seg.hi << "]";
    require(seg.lo == edge, "cdf.tiling",
            where.str() + " leaves a gap or overlaps its predecessor");
    require(seg.hi >= seg.lo, "cdf.tiling", where.str() + " has hi < lo");
    switch (seg.kind) {
    case SegmentKind::atom:
      require(seg.hi == seg.lo && seg.mass > 0, "cdf.atom",
              where.str() + ": atoms need lo == hi and positive mass");
      require(weighting_ == Weighting::sphere || seg.lo > 0, "cdf.atom",
              "section weighting cannot carry an atom at 0");
      break;
    case SegmentKind::uniform:
      require(seg.hi > seg.lo && seg.mass >= 0, "cdf.uniform",
              where.str() + ": uniform needs positive length and mass >= 0");
      break;
    case SegmentKind::exp_square:
      require(seg.hi > seg.lo && seg.scale > 0 && seg.lo >= seg.shift,
              "cdf.exp_square",
              where.str() + ": exp_square needs scale > 0 and lo >= shift");
      break;
    case SegmentKind::constant:
      require(seg.hi > seg.lo, "cdf.constant",
              where.str() + ": constant segment needs positive length");
      break;
    }
    edge = seg.hi;
  }
  require(edge == support_, "cdf.tiling", "segments must end at M");

  cumulative_.resize(segments_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    cumulative_[k] = acc;
    acc += raw_weighted_upto(k, segments_[k].hi);
  }
  normalizer_ = acc;
  require(normalizer_ > 0 && std::isfinite(normalizer_), "cdf.mass",
          "cdf carries no mass on [0, M]");

  if (flat_) {
    flat_->validate();
    require(flat_->lo >= 0 && flat_->hi <= support_, "cdf.flat",
            "flat interval must lie in [0, M]");
    // right-continuous: constant on [lo, hi] means F(hi) == F(lo)
    require(std::abs((*this)(flat_->hi) - (*this)(flat_->lo)) <= 1e-12,
            "cdf.flat", "cdf is not constant on the declared flat interval");
  }
}

double SquaredRadiusCdf::weight(double s) const
{
  return weighting_ == Weighting::sphere ? 1.0 : 1.0 / std::sqrt(s);
}

double SquaredRadiusCdf::raw_weighted_upto(std::size_t k, double x) const
{
  const Segment& seg = segments_[k];
  if (x < seg.lo)
    return 0.0;
  if (weighting_ == Weighting::sphere)
    return seg.raw_mass_upto(x);
  x = std::min(x, seg.hi);
  switch (seg.kind) {
  case SegmentKind::constant:
    return 0.0;
  case SegmentKind::atom:
    return seg.mass / std::sqrt(seg.lo);
  case SegmentKind::uniform:
    return seg.mass / (seg.hi - seg.lo) * 2.0 *
           (std::sqrt(x) - std::sqrt(seg.lo));
  case SegmentKind::exp_square:
    // s = u^2 keeps the integrand smooth when lo == 0
    return integrate_adaptive(
               [&](double u) { return 2.0 * seg.raw_density(u * u); },
               std::sqrt(seg.lo), std::sqrt(x), quad_)
        .value;
  }
  return 0.0;
}

double SquaredRadiusCdf::operator()(double x) const
{
  if (x < 0)
    return 0.0;
  if (x >= support_)
    return 1.0;
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), x,
      [](double v, const Segment& s) { return v < s.lo; });
  const auto k = static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
  const double value = (cumulative_[k] + raw_weighted_upto(k, x)) / normalizer_;
  return std::clamp(value, 0.0, 1.0);
}

double SquaredRadiusCdf::density(double s) const
{
  if (s <= 0 && weighting_ == Weighting::section)
    return 0.0;
  double d = 0.0;
  for (const auto& seg : segments_)
    if (seg.kind != SegmentKind::atom && s >= seg.lo && s < seg.hi) {
      d = seg.raw_density(s);
      break;
    }
  return d * weight(s) / normalizer_;
}

std::vector<SquaredRadiusCdf::Atom> SquaredRadiusCdf::atoms() const
{
  std::vector<Atom> out;
  for (const auto& seg : segments_)
    if (seg.kind == SegmentKind::atom)
      out.push_back({seg.lo, seg.mass * weight(seg.lo) / normalizer_});
  return out;
}

std::vector<double> SquaredRadiusCdf::breakpoints() const
{
  std::vector<double> pts;
  for (const auto& seg : segments_) {
    pts.push_back(seg.lo);
    pts.push_back(seg.hi);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double SquaredRadiusCdf::integrate(const RealFn& h, double a, double b,
                                   const QuadratureSpec& quad,
                                   std::span<const double> kinks) const
{
  double sum = 0.0;
  for (const auto& atom : atoms())
    if (atom.at > a && atom.at <= b)
      sum += atom.weight * h(atom.at);
  for (const auto& seg : segments_) {
    if (seg.kind == SegmentKind::atom || seg.kind == SegmentKind::constant)
      continue;
    const double lo = std::max(a, seg.lo);
    const double hi = std::min(b, seg.hi);
    if (hi <= lo)
      continue;
    const double norm = normalizer_;
    if (weighting_ == Weighting::section && lo == 0.0) {
      std::vector<double> roots;
      for (double k : kinks)
        if (k > 0)
          roots.push_back(std::sqrt(k));
      sum += wicksell::integrate(
          [&](double u) {
            return 2.0 * h(u * u) * seg.raw_density(u * u) / norm;
          },
          0.0, std::sqrt(hi), quad, roots);
    } else {
      sum += wicksell::integrate(
          [&](double s) { return h(s) * seg.raw_density(s) * weight(s) / norm; },
          lo, hi, quad, kinks);
    }
  }
  return sum;
}

namespace {

const char* kind_name(SegmentKind k)
{
  switch (k) {
  case SegmentKind::constant: return "constant";
  case SegmentKind::uniform: return "uniform";
  case SegmentKind::exp_square: return "exp_square";
  case SegmentKind::atom: return "atom";
  }
  return "?";
}

SegmentKind parse_kind(const std::string& s)
{
  if (s == "constant") return SegmentKind::constant;
  if (s == "uniform") return SegmentKind::uniform;
  if (s == "exp_square") return SegmentKind::exp_square;
  if (s == "atom") return SegmentKind::atom;
  throw ConfigError("cdf.kind", "unknown segment kind '" + s + "'");
}

} // namespace

SquaredRadiusCdf SquaredRadiusCdf::from_json(const nlohmann::json& doc)
{
  try {
    std::vector<Segment> segs;
    for (const auto& js : doc.at("segments")) {
      Segment s;
      s.lo = js.at("lo").get<double>();
      s.hi = js.at("hi").get<double>();
      s.kind = parse_kind(js.at("kind").get<std::string>());
      const auto params = js.value("params", nlohmann::json::object());
      s.mass = params.value("mass", s.kind == SegmentKind::constant ? 0.0 : 1.0);
      s.shift = params.value("shift", 0.0);
      s.scale = params.value("scale", 1.0);
      segs.push_back(s);
    }
    require(!segs.empty(), "cdf.segments", "cdf needs at least one segment");
    const double support = doc.value("M", segs.back().hi);
    std::optional<Interval> flat;
    if (doc.contains("flat") && !doc["flat"].is_null()) {
      const auto& f = doc["flat"];
      require(f.is_array() && f.size() == 2, "cdf.flat",
              "flat must be a two-element array");
      flat = Interval{f[0].get<double>(), f[1].get<double>()};
    }
    Weighting w = Weighting::sphere;
    const std::string ws = doc.value("weighting", std::string("sphere"));
    if (ws == "section")
      w = Weighting::section;
    else
      require(ws == "sphere", "cdf.weighting",
              "weighting must be 'sphere' or 'section'");
    return SquaredRadiusCdf(std::move(segs), support, flat, w);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cdf.json", std::string("malformed cdf document: ") + e.what());
  }
}

nlohmann::json SquaredRadiusCdf::to_json() const
{
  nlohmann::json doc;
  doc["segments"] = nlohmann::json::array();
  for (const auto& s : segments_) {
    nlohmann::json js{{"lo", s.lo}, {"hi", s.hi}, {"kind", kind_name(s.kind)}};
    nlohmann::json params = nlohmann::json::object();
    if (s.kind == SegmentKind::uniform || s.kind == SegmentKind::atom)
      params["mass"] = s.mass;
    if (s.kind == SegmentKind::exp_square) {
      params["shift"] = s.shift;
      params["scale"] = s.scale;
    }
    js["params"] = params;
    doc["segments"].push_back(js);
  }
  if (flat_)
    doc["flat"] = {flat_->lo, flat_->hi};
  doc["M"] = support_;
  doc["weighting"] = weighting_ == Weighting::sphere ? "sphere" : "section";
  return doc;
}

double sec5_support() { return 1.0 + std::sqrt(20.0 * std::log(1e10)); }

namespace {

std::vector<Segment> sec5_segments(double M)
{
  Segment left{0.0, 2.0, SegmentKind::exp_square};
  left.scale = 20.0;
  Segment mid{2.0, 3.0, SegmentKind::constant};
  Segment right{3.0, M, SegmentKind::exp_square};
  right.shift = 1.0;
  right.scale = 20.0;
  return {left, mid, right};
}

} // namespace

SquaredRadiusCdf SquaredRadiusCdf::preset(const std::string& name)
{
  if (name == "paper-sec5" || name == "paper-sec5-as-simulated") {
    const double M = sec5_support();
    return SquaredRadiusCdf(sec5_segments(M), M, Interval{2.0, 3.0},
                            name == "paper-sec5" ? Weighting::sphere
                                                 : Weighting::section);
  }
  if (name == "point-mass-4") {
    Segment below{0.0, 4.0, SegmentKind::constant};
    Segment atom{4.0, 4.0, SegmentKind::atom};
    atom.mass = 1.0;
    return SquaredRadiusCdf({below, atom}, 4.0);
  }
  if (name == "uniform-01") {
    Segment u{0.0, 1.0, SegmentKind::uniform};
    u.mass = 1.0;
    return SquaredRadiusCdf({u}, 1.0);
  }
  throw ConfigError("cdf.preset", "unknown model preset '" + name + "'");
}

std::vector<std::string> SquaredRadiusCdf::preset_names()
{
  return {"paper-sec5", "paper-sec5-as-simulated", "point-mass-4", "uniform-01"};
}

} // namespace wicksell
