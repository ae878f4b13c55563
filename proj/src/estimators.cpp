#include "wicksell/estimators.hpp"

#include "wicksell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace wicksell {

namespace {

void require_batch(const SampleBatch& batch)
{
  if (batch.empty())
    throw ConfigError("estimators.empty_batch", "estimator needs a nonempty batch");
}

void require_flat(const Interval& flat, double support)
{
  require(flat.lo >= 0 && flat.lo < flat.hi && flat.hi <= support, "estimators.flat",
          "flat interval must satisfy 0 <= lo < hi <= M");
}

/// Builds a step function from (knot, value) pairs, keeping the last value
/// given for any repeated knot.
StepFn make_step(std::vector<std::pair<double, double>> pieces)
{
  std::vector<double> k, v;
  for (const auto& [x, y] : pieces) {
    if (!k.empty() && x <= k.back()) {
      v.back() = y;
      continue;
    }
    k.push_back(x);
    v.push_back(y);
  }
  return StepFn(std::move(k), std::move(v));
}

PiecewiseLinearFn hull_of(const std::vector<double>& x, const std::vector<double>& y)
{
  const auto idx = upper_hull(x, y);
  std::vector<double> hx, hy;
  for (std::size_t i : idx) {
    hx.push_back(x[i]);
    hy.push_back(y[i]);
  }
  return PiecewiseLinearFn(std::move(hx), std::move(hy));
}

/// Cell [a, b) of a step function with U_n known at both ends.
struct Cell
{
  double a, b, ua, ub;
  double slope() const { return (ub - ua) / (b - a); }
  double q(double c) const { return c * (c * (b - a) - 2.0 * (ub - ua)); }
};

std::vector<Cell> cells_of(const PiecewiseLinearFn& f)
{
  std::vector<Cell> cells;
  for (std::size_t i = 0; i + 1 < f.size(); ++i)
    cells.push_back({f.knots()[i], f.knots()[i + 1], f.values()[i], f.values()[i + 1]});
  return cells;
}

/// Restricted majorants for the profile route: LCM of U_n on [0, lo] and on
/// [hi, M], and the flat cell itself.
struct ProfileParts
{
  std::vector<Cell> left, right;
  Cell flat;
  double support;
};

ProfileParts profile_parts(const UnGraph& un, const Interval& flat)
{
  require_flat(flat, un.support());
  const double ulo = un(flat.lo);
  const double uhi = un(flat.hi);
  std::vector<double> lx, ly, rx, ry;
  for (std::size_t i = 0; i < un.x().size(); ++i) {
    const double x = un.x()[i];
    if (x < flat.lo) {
      lx.push_back(x);
      ly.push_back(un.u()[i]);
    } else if (x > flat.hi) {
      rx.push_back(x);
      ry.push_back(un.u()[i]);
    }
  }
  lx.push_back(flat.lo);
  ly.push_back(ulo);
  rx.insert(rx.begin(), flat.hi);
  ry.insert(ry.begin(), uhi);
  ProfileParts p{{}, {}, Cell{flat.lo, flat.hi, ulo, uhi}, un.support()};
  if (lx.size() >= 2)
    p.left = cells_of(hull_of(lx, ly));
  if (rx.size() >= 2)
    p.right = cells_of(hull_of(rx, ry));
  return p;
}

double profile_q(const ProfileParts& p, double a)
{
  double q = p.flat.q(a);
  for (const auto& c : p.left)
    q += c.q(std::max(a, c.slope()));
  for (const auto& c : p.right)
    q += c.q(std::min(a, c.slope()));
  return q;
}

StepFn profile_step(const ProfileParts& p, double a)
{
  std::vector<std::pair<double, double>> pieces;
  for (const auto& c : p.left)
    pieces.emplace_back(c.a, std::max(a, c.slope()));
  pieces.emplace_back(p.flat.a, a);
  for (const auto& c : p.right)
    pieces.emplace_back(c.a, std::min(a, c.slope()));
  pieces.emplace_back(p.support, 0.0);
  return make_step(std::move(pieces));
}

double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol)
{
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - r * (hi - lo);
  double d = lo + r * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - r * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + r * (hi - lo);
      fd = f(d);
    }
  }
  // the endpoints are candidates too: the minimum may sit on the bracket edge
  double best = 0.5 * (lo + hi);
  double fbest = f(best);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx < fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

} // namespace

// ---------------------------------------------------------------- grids

EvalGrid EvalGrid::make(const SampleBatch& batch, double support, std::size_t n_uniform,
                        const Interval* flat)
{
  require(support > 0, "estimators.support", "support bound must be positive");
  EvalGrid g;
  g.support = support;
  g.points = batch.z;
  g.points.push_back(0.0);
  g.points.push_back(support);
  if (flat) {
    g.points.push_back(flat->lo);
    g.points.push_back(flat->hi);
  }
  for (std::size_t i = 1; i < n_uniform; ++i)
    g.points.push_back(support * static_cast<double>(i) / static_cast<double>(n_uniform));
  std::sort(g.points.begin(), g.points.end());
  g.points.erase(std::unique(g.points.begin(), g.points.end()), g.points.end());
  require(g.points.back() <= support, "estimators.sample_beyond_support",
          "observation beyond the support bound M");
  return g;
}

EvalGrid EvalGrid::make_default(const SampleBatch& batch, double support, const Interval* flat)
{
  return make(batch, support, 10 * std::max<std::size_t>(batch.n(), 1), flat);
}

double EvalGrid::mesh() const
{
  double m = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    m = std::max(m, points[i] - points[i - 1]);
  return m;
}

Partition::Partition(std::vector<double> bp, const Interval& flat) : breakpoints(std::move(bp))
{
  require(breakpoints.size() >= 2 && breakpoints.front() == 0.0, "partition.invalid",
          "partition must start at 0 and have at least one cell");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    require(breakpoints[i] > breakpoints[i - 1], "partition.invalid",
            "partition breakpoints must be strictly increasing");
  auto it = std::find(breakpoints.begin(), breakpoints.end(), flat.lo);
  require(it != breakpoints.end() && std::next(it) != breakpoints.end() &&
              *std::next(it) == flat.hi,
          "partition.flat_not_a_cell", "the flat interval must be one partition cell");
  flat_index = static_cast<std::size_t>(it - breakpoints.begin());
}

Partition Partition::around(const Interval& flat, double support)
{
  require(flat.lo >= 0 && flat.lo < flat.hi && flat.hi <= support, "estimators.flat",
          "flat interval must satisfy 0 <= lo < hi <= M");
  const double w = flat.length();
  std::vector<double> bp;
  // left cells: lo - k w while positive; the first cell absorbs the rest
  for (double x = flat.lo; x > 0; x -= w)
    bp.push_back(x);
  bp.push_back(0.0);
  std::reverse(bp.begin(), bp.end());
  if (bp.size() > 2 && bp[1] < 0.5 * w * 1e-9)
    bp.erase(bp.begin() + 1);
  std::vector<double> right;
  for (double x = flat.hi; x < support; x += w)
    right.push_back(x);
  right.push_back(support);
  if (right.size() > 2 && support - right[right.size() - 2] < 0.5 * w * 1e-9)
    right.erase(right.end() - 2);
  bp.insert(bp.end(), right.begin(), right.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return Partition(std::move(bp), flat);
}

// ---------------------------------------------------------------- U_n, V_n

double naive_V(const SampleBatch& batch, double x)
{
  require_batch(batch);
  auto it = std::upper_bound(batch.z.begin(), batch.z.end(), x);
  double s = 0.0;
  for (; it != batch.z.end(); ++it)
    s += 1.0 / std::sqrt(*it - x);
  return s / static_cast<double>(batch.n());
}

double u_n(const SampleBatch& batch, double x)
{
  require_batch(batch);
  if (x <= 0)
    return 0.0;
  const auto& z = batch.z;
  const auto split = static_cast<std::size_t>(
      std::upper_bound(z.begin(), z.end(), x) - z.begin());
  double below = 0.0;
  for (std::size_t i = 0; i < split; ++i)
    below += std::sqrt(z[i]);
  double above = 0.0;
  const double* zp = z.data();
#pragma omp simd reduction(+ : above)
  for (std::size_t i = split; i < z.size(); ++i)
    above += x / (std::sqrt(zp[i]) + std::sqrt(zp[i] - x));
  return 2.0 * (below + above) / static_cast<double>(batch.n());
}

UnGraph::UnGraph(const SampleBatch& batch, double support)
    : batch_(&batch), support_(support)
{
  require_batch(batch);
  const auto& z = batch.z;
  const std::size_t n = z.size();
  require(z.front() >= 0 && z.back() <= support, "estimators.sample_beyond_support",
          "observations must lie in [0, M]");
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i)
    sq[i] = std::sqrt(z[i]);
  const double scale = 2.0 / static_cast<double>(n);

  x_.reserve(n + 2);
  u_.reserve(n + 2);
  x_.push_back(0.0);
  u_.push_back(0.0);
  double prefix = 0.0;
  const double* zp = z.data();
  const double* sp = sq.data();
  for (std::size_t j = 0; j < n; ++j) {
    prefix += sq[j];
    if (j + 1 < n && z[j + 1] == z[j])
      continue; // evaluate once per distinct value, after its last copy
    const double x = z[j];
    if (x == 0.0)
      continue;
    double above = 0.0;
#pragma omp simd reduction(+ : above)
    for (std::size_t i = j + 1; i < n; ++i)
      above += x / (sp[i] + std::sqrt(zp[i] - x));
    x_.push_back(x);
    u_.push_back(scale * (prefix + above));
  }
  if (x_.back() < support) {
    x_.push_back(support);
    u_.push_back(scale * prefix);
  }
}

PiecewiseLinearFn UnGraph::majorant() const
{
  return hull_of(x_, u_);
}

PiecewiseLinearFn UnGraph::chord_majorant(const Interval& flat) const
{
  require_flat(flat, support_);
  std::vector<std::pair<double, double>> pts{{flat.lo, (*this)(flat.lo)},
                                             {flat.hi, (*this)(flat.hi)}};
  for (std::size_t i = 0; i < x_.size(); ++i)
    if (x_[i] < flat.lo || x_[i] > flat.hi)
      pts.emplace_back(x_[i], u_[i]);
  std::sort(pts.begin(), pts.end());
  std::vector<double> x, y;
  for (const auto& [px, py] : pts) {
    x.push_back(px);
    y.push_back(py);
  }
  return hull_of(x, y);
}

// ---------------------------------------------------------------- estimators

StepFn slope_of(const PiecewiseLinearFn& majorant)
{
  std::vector<std::pair<double, double>> pieces;
  const auto& k = majorant.knots();
  const auto& v = majorant.values();
  for (std::size_t i = 0; i + 1 < k.size(); ++i)
    pieces.emplace_back(k[i], (v[i + 1] - v[i]) / (k[i + 1] - k[i]));
  pieces.emplace_back(k.back(), 0.0);
  return make_step(std::move(pieces));
}

StepFn iie(const UnGraph& un)
{
  return slope_of(un.majorant());
}

StepFn iie(const SampleBatch& batch, const EvalGrid& grid)
{
  return iie(UnGraph(batch, grid.support));
}

StepFn iie_on_grid(const SampleBatch& batch, const EvalGrid& grid)
{
  require_batch(batch);
  std::vector<double> u(grid.points.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = u_n(batch, grid.points[i]);
  return slope_of(lcm(PiecewiseLinearFn(grid.points, u)));
}

StepFn projected_iie(const UnGraph& un, const Interval& flat)
{
  require_flat(flat, un.support());
  const auto H = un.majorant();
  const StepFn base = slope_of(H);
  // a weighted average of the neighbouring slopes; clamping only removes
  // rounding that could break monotonicity by an ulp
  const double c = std::clamp((H(flat.hi) - H(flat.lo)) / flat.length(), base(flat.hi),
                              base(std::nextafter(flat.lo, -1.0)));
  std::vector<std::pair<double, double>> pieces;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base.knots()[i] < flat.lo)
      pieces.emplace_back(base.knots()[i], base.values()[i]);
  pieces.emplace_back(flat.lo, c);
  pieces.emplace_back(flat.hi, base(flat.hi));
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base.knots()[i] > flat.hi)
      pieces.emplace_back(base.knots()[i], base.values()[i]);
  return make_step(std::move(pieces));
}

StepFn projected_iie(const SampleBatch& batch, const Interval& flat, const EvalGrid& grid)
{
  return projected_iie(UnGraph(batch, grid.support), flat);
}

StepFn empirical_slope_of(const std::function<double(double)>& U, const Partition& partition)
{
  std::vector<std::pair<double, double>> pieces;
  double u_prev = U(partition.breakpoints.front());
  for (std::size_t i = 0; i < partition.cells(); ++i) {
    const auto c = partition.cell(i);
    const double u_next = U(c.hi);
    pieces.emplace_back(c.lo, (u_next - u_prev) / c.length());
    u_prev = u_next;
  }
  pieces.emplace_back(partition.breakpoints.back(), 0.0);
  return make_step(std::move(pieces));
}

StepFn empirical_slope(const UnGraph& un, const Partition& partition)
{
  require(partition.breakpoints.back() <= un.support() + 1e-12, "partition.invalid",
          "partition extends beyond the support bound");
  return empirical_slope_of([&](double x) { return un(x); }, partition);
}

StepFn empirical_slope(const SampleBatch& batch, const Partition& partition)
{
  return empirical_slope(UnGraph(batch, partition.breakpoints.back()), partition);
}

StepFn projected_naive(const UnGraph& un, const Interval& flat)
{
  return slope_of(un.chord_majorant(flat));
}

StepFn projected_naive(const SampleBatch& batch, const Interval& flat, const EvalGrid& grid)
{
  return projected_naive(UnGraph(batch, grid.support), flat);
}

// ---------------------------------------------------------------- discrepancy

double q_discrepancy(const StepFn& h, const std::function<double(double)>& f_eval,
                     const Interval& domain, const QuadratureSpec& quad,
                     const std::vector<double>& f_breakpoints)
{
  std::vector<double> cuts{domain.lo};
  for (double k : h.knots())
    if (k > domain.lo && k < domain.hi)
      cuts.push_back(k);
  cuts.push_back(domain.hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c = h(cuts[i]);
    if (c == 0.0)
      continue;
    // f may have integrable endpoint singularities at its breakpoints
    std::vector<double> ends{cuts[i]};
    for (double b : f_breakpoints)
      if (b > cuts[i] && b < cuts[i + 1])
        ends.push_back(b);
    ends.push_back(cuts[i + 1]);
    std::sort(ends.begin(), ends.end());
    double fint = 0.0;
    for (std::size_t j = 0; j + 1 < ends.size(); ++j)
      fint += integrate_endpoint_singular(split(f_eval), ends[j], ends[j + 1], quad);
    total += c * (c * (cuts[i + 1] - cuts[i]) - 2.0 * fint);
  }
  return total;
}

double q_discrepancy_step(const StepFn& h, const StepFn& f, double support)
{
  std::vector<double> cuts{0.0, support};
  for (const auto* g : {&h, &f})
    for (double k : g->knots())
      if (k > 0.0 && k < support)
        cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double c = h(cuts[i]);
    total += c * (c - 2.0 * f(cuts[i])) * (cuts[i + 1] - cuts[i]);
  }
  return total;
}

double q_discrepancy_vn(const StepFn& h, const UnGraph& un)
{
  const double M = un.support();
  std::vector<double> cuts{0.0};
  for (double k : h.knots())
    if (k > 0.0 && k < M)
      cuts.push_back(k);
  cuts.push_back(M);
  double total = 0.0;
  double u_prev = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double u_next = un(cuts[i + 1]);
    const Cell cell{cuts[i], cuts[i + 1], u_prev, u_next};
    total += cell.q(h(cuts[i]));
    u_prev = u_next;
  }
  return total;
}

// ---------------------------------------------------------------- profile

StepFn profile_fixed_a(const UnGraph& un, const Interval& flat, double a)
{
  return profile_step(profile_parts(un, flat), a);
}

double profile_objective(const UnGraph& un, const Interval& flat, double a)
{
  return profile_q(profile_parts(un, flat), a);
}

ProfileResult profile_projection_detail(const UnGraph& un, const Interval& flat, double a_tol)
{
  const ProfileParts parts = profile_parts(un, flat);
  const auto H = un.majorant();
  const double hi = H.right_derivative(0.0);
  if (!(std::isfinite(hi) && hi >= 0))
    throw NumericalError("profile.no_bracket", "no finite bracket [0, iie(0)] for the flat level");
  const auto phi = [&](double a) { return profile_q(parts, a); };

  ProfileResult r;
  constexpr int probe = 50;
  std::vector<double> q(probe);
  for (int i = 0; i < probe; ++i)
    q[i] = phi(hi * i / (probe - 1));
  for (int i = 0; i < probe; ++i) {
    const bool left_ok = i == 0 || q[i] < q[i - 1];
    const bool right_ok = i == probe - 1 || q[i] <= q[i + 1];
    r.probe_minima += left_ok && right_ok;
  }

  double lo = 0.0, up = hi;
  if (r.probe_minima > 1) {
    r.used_grid_fallback = true;
    constexpr int fine = 1000;
    int best = 0;
    double fbest = phi(0.0);
    for (int i = 1; i < fine; ++i) {
      const double f = phi(hi * i / (fine - 1));
      if (f < fbest) {
        fbest = f;
        best = i;
      }
    }
    lo = hi * std::max(0, best - 1) / (fine - 1);
    up = hi * std::min(fine - 1, best + 1) / (fine - 1);
  }
  r.a_star = hi > 0 ? golden_section(phi, lo, up, a_tol * std::max(1.0, hi)) : 0.0;
  r.objective = phi(r.a_star);
  r.estimate = profile_step(parts, r.a_star);
  return r;
}

StepFn profile_projection(const SampleBatch& batch, const Interval& flat, const EvalGrid& grid)
{
  return profile_projection_detail(UnGraph(batch, grid.support), flat).estimate;
}

// ---------------------------------------------------------------- cones

bool validate_cone(const StepFn& v, Cone cone, const Interval& flat, const Partition& partition)
{
  const auto& k = v.knots();
  const auto& val = v.values();
  for (double y : val)
    if (!(y >= 0))
      return false;
  const auto nonincreasing = [&] {
    for (std::size_t i = 1; i < val.size(); ++i)
      if (val[i] > val[i - 1])
        return false;
    return true;
  };
  // constant on [lo, hi): every knot inside carries the value at lo
  const auto constant_on = [&](const Interval& c) {
    const double ref = v(c.lo);
    for (std::size_t i = 0; i < k.size(); ++i)
      if (k[i] > c.lo && k[i] < c.hi && val[i] != ref)
        return false;
    return true;
  };
  switch (cone) {
  case Cone::V:
    return nonincreasing();
  case Cone::V_flat:
    return nonincreasing() && constant_on(flat);
  case Cone::V_bar:
    for (std::size_t i = 0; i < partition.cells(); ++i)
      if (!constant_on(partition.cell(i)))
        return false;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------- dispatch, IO

std::string to_string(EstimatorId id)
{
  switch (id) {
  case EstimatorId::iie:
    return "iie";
  case EstimatorId::proj_iie:
    return "proj-iie";
  case EstimatorId::slope:
    return "slope";
  case EstimatorId::proj_naive:
    return "proj-naive";
  case EstimatorId::profile:
    return "profile";
  }
  return "unknown";
}

EstimatorId parse_estimator(const std::string& name)
{
  for (auto id : {EstimatorId::iie, EstimatorId::proj_iie, EstimatorId::slope,
                  EstimatorId::proj_naive, EstimatorId::profile})
    if (to_string(id) == name)
      return id;
  throw ConfigError("cli.estimator", "unknown estimator '" + name +
                                         "' (iie, proj-iie, slope, proj-naive, profile)");
}

StepFn estimate(EstimatorId id, const SampleBatch& batch, const Interval& flat,
                const EvalGrid& grid)
{
  const UnGraph un(batch, grid.support);
  switch (id) {
  case EstimatorId::iie:
    return iie(un);
  case EstimatorId::proj_iie:
    return projected_iie(un, flat);
  case EstimatorId::slope:
    return empirical_slope(un, Partition::around(flat, grid.support));
  case EstimatorId::proj_naive:
    return projected_naive(un, flat);
  case EstimatorId::profile:
    return profile_projection_detail(un, flat).estimate;
  }
  return {};
}

void write_estimate_csv(const std::filesystem::path& path, const StepFn& v,
                        const std::string& estimator_id)
{
  std::ofstream out(path);
  if (!out)
    throw ConfigError("io.write", "cannot write " + path.string());
  out.precision(17);
  out << "knot,value,estimator_id\n";
  for (std::size_t i = 0; i < v.size(); ++i)
    out << v.knots()[i] << ',' << v.values()[i] << ',' << estimator_id << '\n';
  if (!out)
    throw NumericalError("io.write", "failed writing " + path.string());
}

} // namespace wicksell
