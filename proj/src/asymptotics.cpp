#include "wicksell/asymptotics.hpp"

#include "wicksell/errors.hpp"
#include "wicksell/functions.hpp"
#include "wicksell/sampling.hpp"
#include "wicksell/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace wicksell {

namespace {

void require_flat(const Interval& flat)
{
  require(flat.lo >= 0 && flat.lo < flat.hi, "asymptotics.degenerate_flat",
          "flat interval needs 0 <= lo < hi");
}

std::size_t index_of(const std::vector<double>& points, double v)
{
  auto it = std::lower_bound(points.begin(), points.end(), v);
  require(it != points.end() && *it == v, "asymptotics.grid",
          "grid must contain the flat interval ends and the target point");
  return static_cast<std::size_t>(it - points.begin());
}

void check_grid(const std::vector<double>& points)
{
  require(points.size() >= 2, "asymptotics.grid", "grid needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i)
    require(points[i] > points[i - 1], "asymptotics.grid",
            "grid points must be strictly increasing");
}

/// A C A^T for a coefficient matrix A mapping base features to features.
GPGrid transform(const Eigen::MatrixXd& base, const Eigen::MatrixXd& A,
                 const std::vector<double>& points, double x)
{
  GPGrid g;
  g.points = points;
  g.x = x;
  g.covariance = A * base * A.transpose();
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  g.factorize();
  return g;
}

Eigen::MatrixXd lx_coefficients(const std::vector<double>& points, double x)
{
  const auto m = static_cast<Eigen::Index>(points.size());
  const auto ix = static_cast<Eigen::Index>(index_of(points, x));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    A(i, ix) += 1.0;
    A(i, i) -= 1.0;
  }
  return A;
}

Eigen::MatrixXd bridge_coefficients(const std::vector<double>& points, const Interval& flat)
{
  const auto m = static_cast<Eigen::Index>(points.size());
  const auto ilo = static_cast<Eigen::Index>(index_of(points, flat.lo));
  const auto ihi = static_cast<Eigen::Index>(index_of(points, flat.hi));
  const double d = flat.length();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = points[static_cast<std::size_t>(i)];
    const double wl = (flat.hi - t) / d;
    const double wh = (t - flat.lo) / d;
    A(i, ilo) += wl;
    A(i, i) -= wl;
    A(i, ihi) += wh;
    A(i, i) -= wh;
  }
  return A;
}

} // namespace

// ---------------------------------------------------------------- sigma

InfluenceFn::InfluenceFn(Interval f) : flat(f)
{
  require_flat(flat);
}

double InfluenceFn::operator()(double z) const
{
  if (z <= flat.lo)
    return 0.0;
  if (z <= flat.hi)
    return 2.0 * std::sqrt(z - flat.lo) / flat.length();
  // difference of square roots without cancellation
  return 2.0 / (std::sqrt(z - flat.lo) + std::sqrt(z - flat.hi));
}

double sigma_sq(const WicksellModel& model, const Interval& flat)
{
  const InfluenceFn k(flat);
  const double kinks[] = {flat.lo, flat.hi};
  const double m1 = model.expectation(k, kinks);
  const double m2 = model.expectation([&](double z) { return k(z) * k(z); }, kinks);
  return m2 - m1 * m1;
}

double influence_mean_identity(const WicksellModel& model, const Interval& flat)
{
  const InfluenceFn k(flat);
  const double M = model.support();
  const double target = model.V(flat.lo);
  if (flat.lo >= M)
    return 0.0 - target;
  std::vector<double> cuts{flat.lo, M};
  if (flat.hi < M)
    cuts.push_back(flat.hi);
  for (double b : model.cdf().breakpoints())
    if (b > flat.lo && b < M)
      cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  const SplitFn kg = [&](double ref, double off) {
    return k(ref + off) * model.g_split(ref, off);
  };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate_endpoint_singular(kg, cuts[i], cuts[i + 1], model.quad());
  return total - target;
}

// ---------------------------------------------------------------- covariance

void GPGrid::factorize()
{
  active.clear();
  for (Eigen::Index i = 0; i < covariance.rows(); ++i)
    if (covariance(i, i) > 0.0)
      active.push_back(static_cast<std::size_t>(i));
  const auto k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      sub(i, j) = covariance(static_cast<Eigen::Index>(active[static_cast<std::size_t>(i)]),
                             static_cast<Eigen::Index>(active[static_cast<std::size_t>(j)]));
  if (k == 0) {
    factor.resize(0, 0);
    jitter = 0.0;
    return;
  }
  for (double j = 1e-12; j <= 1e-8 * 1.0001; j *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(sub + j * Eigen::MatrixXd::Identity(k, k));
    if (llt.info() == Eigen::Success) {
      factor = llt.matrixL();
      jitter = j;
      return;
    }
  }
  throw NumericalError("asymptotics.factorization",
                       "covariance not positive definite even with jitter 1e-8");
}

std::vector<double> GPGrid::path(Engine& e) const
{
  std::vector<double> out(points.size(), 0.0);
  const auto k = factor.rows();
  if (k == 0)
    return out;
  Eigen::VectorXd xi(k);
  for (Eigen::Index i = 0; i < k; ++i)
    xi(i) = standard_normal(e);
  const Eigen::VectorXd y = factor.triangularView<Eigen::Lower>() * xi;
  for (Eigen::Index i = 0; i < k; ++i)
    out[active[static_cast<std::size_t>(i)]] = y(i);
  return out;
}

std::vector<double> limit_grid(const Interval& flat, double x, std::size_t m)
{
  require_flat(flat);
  require(m >= 2, "asymptotics.grid", "grid needs m >= 2 cells");
  require(x > flat.lo && x < flat.hi, "asymptotics.target",
          "target x must lie inside the flat interval");
  std::vector<double> pts;
  for (std::size_t i = 0; i <= m; ++i)
    pts.push_back(flat.lo + flat.length() * static_cast<double>(i) / static_cast<double>(m));
  pts.back() = flat.hi;
  pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

Eigen::MatrixXd base_covariance(const WicksellModel& model, const std::vector<double>& points,
                                std::size_t n_mc, StreamKey key)
{
  check_grid(points);
  require(n_mc >= 2, "asymptotics.n_mc", "covariance needs at least two draws");
  const LengthBiasedSampler sampler(model.cdf());
  Engine e = make_engine(key, StreamPurpose::covariance);
  const auto m = static_cast<Eigen::Index>(points.size());
  constexpr Eigen::Index chunk = 2048;

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd B(m, chunk);
  std::size_t done = 0;
  bool first = true;
  while (done < n_mc) {
    const auto rows = static_cast<Eigen::Index>(std::min<std::size_t>(chunk, n_mc - done));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double s = sampler.draw(e);
      const double z = section_squared_radius(s, uniform01(e));
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = z - points[static_cast<std::size_t>(i)];
        B(i, r) = d > 0 ? 2.0 * std::sqrt(d) : 0.0;
      }
    }
    auto block = B.leftCols(rows);
    if (first) {
      // centre on the first chunk's mean to keep the accumulation well conditioned
      shift = block.rowwise().mean();
      first = false;
    }
    block.colwise() -= shift;
    sum += block.rowwise().sum();
    S.selfadjointView<Eigen::Lower>().rankUpdate(block);
    done += static_cast<std::size_t>(rows);
  }
  const double n = static_cast<double>(n_mc);
  Eigen::MatrixXd C = S.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd mean = sum / n;
  C -= n * mean * mean.transpose();
  C /= (n - 1.0);
  return C;
}

GPGrid gp_covariance(const WicksellModel& model, double x, const std::vector<double>& points,
                     std::size_t n_mc, StreamKey key)
{
  const auto base = base_covariance(model, points, n_mc, key);
  return transform(base, lx_coefficients(points, x), points, x);
}

GPGrid bridge_covariance(const WicksellModel& model, const Interval& flat, double x,
                         const std::vector<double>& points, std::size_t n_mc, StreamKey key)
{
  require_flat(flat);
  const auto base = base_covariance(model, points, n_mc, key);
  return transform(base, bridge_coefficients(points, flat), points, x);
}

LimitGrids limit_grids(const WicksellModel& model, const Interval& flat, double x,
                       std::size_t grid_m, std::size_t n_mc, StreamKey key)
{
  const auto points = limit_grid(flat, x, grid_m);
  const auto base = base_covariance(model, points, n_mc, key);
  return {transform(base, lx_coefficients(points, x), points, x),
          transform(base, bridge_coefficients(points, flat), points, x)};
}

// ---------------------------------------------------------------- paths

double lcm_slope_at(const std::vector<double>& s, const std::vector<double>& path, double x)
{
  const auto idx = upper_hull(s, path);
  if (idx.size() < 2)
    return 0.0;
  std::size_t k = 0;
  while (k + 2 < idx.size() && s[idx[k + 1]] <= x)
    ++k;
  const std::size_t a = idx[k], b = idx[k + 1];
  return (path[b] - path[a]) / (s[b] - s[a]);
}

std::string to_string(LawId id)
{
  switch (id) {
  case LawId::Lx:
    return "L_x";
  case LawId::W:
    return "W";
  case LawId::Normal:
    return "Normal";
  }
  return "unknown";
}

LawId parse_law(const std::string& name)
{
  if (name == "L_x" || name == "Lx" || name == "lx")
    return LawId::Lx;
  if (name == "W" || name == "w")
    return LawId::W;
  if (name == "Normal" || name == "normal")
    return LawId::Normal;
  throw ConfigError("cli.law", "unknown law '" + name + "' (Lx, W, normal)");
}

void summarize_into(LimitSample& s)
{
  const auto sum = summarize(s.draws);
  s.npaths = s.draws.size();
  s.mean = sum.mean;
  s.sd = sum.sd;
  s.mc_se = sum.sd_se;
}

LimitSample sample_slopes(const GPGrid& grid, std::size_t npaths, StreamKey key,
                          StreamPurpose purpose, LawId law, std::size_t grid_m, Execution ex)
{
  LimitSample out;
  out.law = law;
  out.grid_m = grid_m;
  out.draws = map_indexed<double>(
      npaths,
      [&](std::size_t p) {
        Engine e = make_engine({key.master_seed, (key.replicate_index << 32) + p}, purpose);
        return lcm_slope_at(grid.points, grid.path(e), grid.x);
      },
      ex);
  summarize_into(out);
  return out;
}

LimitSample sample_Lx(const WicksellModel& model, const Interval& flat, double x,
                      std::size_t npaths, std::size_t grid_m, StreamKey key, std::size_t n_mc,
                      Execution ex)
{
  const auto points = limit_grid(flat, x, grid_m);
  const auto grid = gp_covariance(model, x, points, n_mc, key);
  return sample_slopes(grid, npaths, key, StreamPurpose::paths, LawId::Lx, grid_m, ex);
}

LimitSample sample_W(const WicksellModel& model, const Interval& flat, double x,
                     std::size_t npaths, std::size_t grid_m, StreamKey key, std::size_t n_mc,
                     Execution ex)
{
  const auto points = limit_grid(flat, x, grid_m);
  const auto grid = bridge_covariance(model, flat, x, points, n_mc, key);
  return sample_slopes(grid, npaths, key, StreamPurpose::paths_w, LawId::W, grid_m, ex);
}

LimitSample sample_normal(double sigma, std::size_t npaths, StreamKey key)
{
  require(sigma >= 0 && std::isfinite(sigma), "asymptotics.sigma", "sigma must be finite");
  LimitSample out;
  out.law = LawId::Normal;
  Engine e = make_engine(key, StreamPurpose::normal);
  out.draws.resize(npaths);
  for (auto& d : out.draws)
    d = sigma * standard_normal(e);
  summarize_into(out);
  return out;
}

void write_limit_csv(const std::filesystem::path& path, const LimitSample& s)
{
  std::ofstream out(path);
  if (!out)
    throw ConfigError("io.write", "cannot write " + path.string());
  out.precision(17);
  out << "draw\n";
  for (double d : s.draws)
    out << d << '\n';
  if (!out)
    throw NumericalError("io.write", "failed writing " + path.string());
}

void write_limit_summary(const std::filesystem::path& path, const LimitSample& s)
{
  const nlohmann::json j{{"law_id", to_string(s.law)}, {"sd", s.sd},     {"mc_se", s.mc_se},
                         {"npaths", s.npaths},         {"grid_m", s.grid_m}};
  std::ofstream out(path);
  if (!out)
    throw ConfigError("io.write", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

} // namespace wicksell
