#include "wicksell/experiments.hpp"

#include "wicksell/errors.hpp"
#include "wicksell/estimators.hpp"
#include "wicksell/stats.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace wicksell {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const fs::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw ConfigError("io.write", "cannot write " + path.string());
  out.precision(17);
  return out;
}

void close_out(std::ofstream& out, const fs::path& path)
{
  out.close();
  if (!out)
    throw NumericalError("io.write", "failed writing " + path.string());
}

void write_value(std::ostream& out, double v)
{
  if (std::isnan(v))
    out << "NA";
  else
    out << v;
}

std::vector<double> column(const std::vector<ReplicateValues>& reps,
                           double ReplicateValues::*field)
{
  std::vector<double> out(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i)
    out[i] = reps[i].*field;
  return out;
}

std::vector<double> difference(const std::vector<ReplicateValues>& reps,
                               double ReplicateValues::*a, double ReplicateValues::*b)
{
  std::vector<double> out(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i)
    out[i] = reps[i].*a - reps[i].*b;
  return out;
}

StreamKey replicate_key(std::uint64_t seed, std::size_t n, std::size_t r)
{
  return {seed, (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint64_t>(r)};
}

} // namespace

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const
{
  flat.validate();
  require(x > flat.lo && x < flat.hi, "experiments.x",
          "x must lie inside the flat interval (" + std::to_string(flat.lo) + ", " +
              std::to_string(flat.hi) + ")");
  require(replications >= 1, "experiments.replications", "replications must be >= 1");
  require(!sizes.empty(), "experiments.sizes", "at least one sample size is needed");
  for (auto n : sizes)
    require(n > 0, "experiments.sizes", "sample sizes must be positive");
  require(npaths >= 1, "experiments.npaths", "npaths must be >= 1");
  require(grid_m >= 2, "experiments.grid_m", "grid_m must be >= 2");
  require(covariance_draws >= 2, "experiments.covariance_draws", "covariance_draws must be >= 2");
  require(overlay_n > 0 && figure_n > 0 && figure_reps >= 1, "experiments.figures",
          "figure sizes must be positive");
}

nlohmann::json ExperimentConfig::to_json() const
{
  return {{"model", model},
          {"model_file", model_file.string()},
          {"flat", {flat.lo, flat.hi}},
          {"x", x},
          {"sizes", sizes},
          {"replications", replications},
          {"npaths", npaths},
          {"grid_m", grid_m},
          {"covariance_draws", covariance_draws},
          {"seed", seed},
          {"out_dir", out_dir.string()},
          {"overlay_n", overlay_n},
          {"figure_n", figure_n},
          {"figure_reps", figure_reps}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc, ExperimentConfig c)
{
  require(doc.is_object(), "config.format", "config must be a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "model")
        c.model = v.get<std::string>();
      else if (key == "model_file")
        c.model_file = v.get<std::string>();
      else if (key == "flat") {
        const auto f = v.get<std::vector<double>>();
        require(f.size() == 2, "config.flat", "flat must have two entries");
        c.flat = {f[0], f[1]};
      } else if (key == "x")
        c.x = v.get<double>();
      else if (key == "sizes")
        c.sizes = v.get<std::vector<std::size_t>>();
      else if (key == "replications")
        c.replications = v.get<std::size_t>();
      else if (key == "npaths")
        c.npaths = v.get<std::size_t>();
      else if (key == "grid_m")
        c.grid_m = v.get<std::size_t>();
      else if (key == "covariance_draws")
        c.covariance_draws = v.get<std::size_t>();
      else if (key == "seed")
        c.seed = v.get<std::uint64_t>();
      else if (key == "out_dir")
        c.out_dir = v.get<std::string>();
      else if (key == "overlay_n")
        c.overlay_n = v.get<std::size_t>();
      else if (key == "figure_n")
        c.figure_n = v.get<std::size_t>();
      else if (key == "figure_reps")
        c.figure_reps = v.get<std::size_t>();
      else
        throw ConfigError("config.unknown_key", "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config.format", e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc)
{
  return from_json(doc, ExperimentConfig{});
}

ExperimentConfig ExperimentConfig::load(const fs::path& path, ExperimentConfig base)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("io.read", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config.format", path.string() + ": " + e.what());
  }
  return from_json(doc, std::move(base));
}

ExperimentConfig ExperimentConfig::quick() const
{
  ExperimentConfig c = *this;
  c.replications = 100;
  c.npaths = 2000;
  c.figure_reps = std::min<std::size_t>(c.figure_reps, 100);
  return c;
}

SquaredRadiusCdf load_cdf(const std::string& preset, const fs::path& model_file)
{
  if (model_file.empty())
    return SquaredRadiusCdf::preset(preset);
  std::ifstream in(model_file);
  if (!in)
    throw ConfigError("io.read", "cannot open " + model_file.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model.format", model_file.string() + ": " + e.what());
  }
  return SquaredRadiusCdf::from_json(doc);
}

std::string model_label(const ExperimentConfig& cfg)
{
  return cfg.model_file.empty() ? cfg.model : cfg.model_file.filename().string();
}

// ---------------------------------------------------------------- replicates

std::vector<ReplicateValues> run_replicates(const WicksellModel& model,
                                            const LengthBiasedSampler& sampler,
                                            const Interval& flat, double x, std::size_t n,
                                            std::size_t replications, std::uint64_t seed,
                                            Execution ex)
{
  const double M = model.support();
  return map_indexed<ReplicateValues>(
      replications,
      [&](std::size_t r) {
        const auto batch = sample_batch(sampler, n, replicate_key(seed, n, r));
        const UnGraph un(batch, M);
        ReplicateValues v;
        v.slope = (un(flat.hi) - un(flat.lo)) / flat.length();
        v.iie = iie(un)(x);
        v.proj_iie = projected_iie(un, flat)(x);
        v.proj_naive = projected_naive(un, flat)(x);
        return v;
      },
      ex);
}

// ---------------------------------------------------------------- tables

const Cell& ResultTable::at(const std::string& key, const std::string& statistic) const
{
  const auto s = std::find(statistics.begin(), statistics.end(), statistic);
  if (s == statistics.end())
    throw std::out_of_range("no statistic " + statistic);
  for (const auto& row : rows)
    if (row.key == key)
      return row.cells[static_cast<std::size_t>(s - statistics.begin())];
  throw std::out_of_range("no row " + key);
}

bool ResultTable::has_na() const
{
  for (const auto& row : rows)
    for (const auto& c : row.cells)
      if (std::isnan(c.value) || std::isnan(c.se))
        return true;
  return false;
}

void ResultTable::write_csv(const fs::path& path) const
{
  auto out = open_out(path);
  out << "key,count";
  for (const auto& s : statistics)
    out << ',' << s << "_sd," << s << "_se";
  out << '\n';
  for (const auto& row : rows) {
    out << row.key << ',' << row.count;
    for (const auto& c : row.cells) {
      out << ',';
      write_value(out, c.value);
      out << ',';
      write_value(out, c.se);
    }
    out << '\n';
  }
  close_out(out, path);
}

Cell scaled_sd(const std::vector<double>& values, double centre, std::size_t n)
{
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> scaled(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    scaled[i] = root_n * (values[i] - centre);
  const auto s = summarize(scaled);
  return {s.sd, s.sd_se};
}

LimitLaws simulate_limits(const WicksellModel& model, const ExperimentConfig& cfg)
{
  LimitLaws out;
  out.sigma = std::sqrt(sigma_sq(model, cfg.flat));
  const StreamKey key{cfg.seed, 0};
  const auto grids = limit_grids(model, cfg.flat, cfg.x, cfg.grid_m, cfg.covariance_draws, key);
  out.lx = sample_slopes(grids.lx, cfg.npaths, key, StreamPurpose::paths, LawId::Lx, cfg.grid_m,
                         cfg.execution);
  out.w = sample_slopes(grids.w, cfg.npaths, key, StreamPurpose::paths_w, LawId::W, cfg.grid_m,
                        cfg.execution);
  out.normal = sample_normal(out.sigma, cfg.npaths, key);
  return out;
}

ReplicateSet run_all_replicates(const WicksellModel& model, const ExperimentConfig& cfg)
{
  cfg.validate();
  const LengthBiasedSampler sampler(model.cdf());
  ReplicateSet out;
  out.sizes = cfg.sizes;
  out.v_at_x = model.V(cfg.x);
  for (auto n : cfg.sizes)
    out.values.push_back(run_replicates(model, sampler, cfg.flat, cfg.x, n, cfg.replications,
                                        cfg.seed, cfg.execution));
  return out;
}

ResultTable table1_from(const ReplicateSet& reps, const LimitLaws& limits,
                        const ExperimentConfig& cfg)
{
  ResultTable t;
  t.statistics = {"slope", "iie", "proj_naive", "proj_iie"};
  t.seed = cfg.seed;
  t.replications = cfg.replications;
  for (std::size_t k = 0; k < reps.sizes.size(); ++k) {
    const auto& v = reps.values[k];
    const auto n = reps.sizes[k];
    const double c = reps.v_at_x;
    t.rows.push_back({std::to_string(n), v.size(),
                      {scaled_sd(column(v, &ReplicateValues::slope), c, n),
                       scaled_sd(column(v, &ReplicateValues::iie), c, n),
                       scaled_sd(column(v, &ReplicateValues::proj_naive), c, n),
                       scaled_sd(column(v, &ReplicateValues::proj_iie), c, n)}});
  }
  const Cell sigma{limits.sigma, 0.0};
  t.rows.push_back({"limit", limits.lx.npaths, {sigma, {limits.lx.sd, limits.lx.mc_se}, sigma, sigma}});
  return t;
}

ResultTable equivalence_from(const ReplicateSet& reps, const LimitLaws& limits,
                             const ExperimentConfig& cfg)
{
  ResultTable t;
  t.statistics = {"proj_naive_gap", "proj_iie_gap", "iie_gap"};
  t.seed = cfg.seed;
  t.replications = cfg.replications;
  for (std::size_t k = 0; k < reps.sizes.size(); ++k) {
    const auto& v = reps.values[k];
    const auto n = reps.sizes[k];
    using R = ReplicateValues;
    t.rows.push_back({std::to_string(n), v.size(),
                      {scaled_sd(difference(v, &R::proj_naive, &R::slope), 0.0, n),
                       scaled_sd(difference(v, &R::proj_iie, &R::slope), 0.0, n),
                       scaled_sd(difference(v, &R::iie, &R::slope), 0.0, n)}});
  }
  t.rows.push_back({"limit", limits.w.npaths, {{0.0, 0.0}, {0.0, 0.0}, {limits.w.sd, limits.w.mc_se}}});
  return t;
}

ResultTable run_table1(const ExperimentConfig& cfg)
{
  cfg.validate();
  const WicksellModel model(load_cdf(cfg.model, cfg.model_file));
  return table1_from(run_all_replicates(model, cfg), simulate_limits(model, cfg), cfg);
}

ResultTable run_equivalence(const ExperimentConfig& cfg)
{
  cfg.validate();
  const WicksellModel model(load_cdf(cfg.model, cfg.model_file));
  return equivalence_from(run_all_replicates(model, cfg), simulate_limits(model, cfg), cfg);
}

TrendResult equivalence_trend(const WicksellModel& model, const Interval& flat, double x,
                              std::size_t n_small, std::size_t n_large, std::size_t replications,
                              std::size_t meta_seeds, std::uint64_t seed, Execution ex)
{
  const LengthBiasedSampler sampler(model.cdf());
  TrendResult out;
  auto gap_sd = [&](std::size_t n, std::uint64_t s) {
    const auto v = run_replicates(model, sampler, flat, x, n, replications, s, ex);
    return scaled_sd(difference(v, &ReplicateValues::proj_naive, &ReplicateValues::slope), 0.0, n)
        .value;
  };
  for (std::size_t m = 0; m < meta_seeds; ++m) {
    Engine e = make_engine({seed, m}, StreamPurpose::meta);
    const std::uint64_t s = e();
    out.sd_small.push_back(gap_sd(n_small, s));
    out.sd_large.push_back(gap_sd(n_large, s));
    if (out.sd_large.back() < out.sd_small.back())
      ++out.decreasing;
  }
  return out;
}

// ---------------------------------------------------------------- KDE

double scott_bandwidth(const std::vector<double>& draws)
{
  require(draws.size() >= 2, "experiments.too_few_draws", "KDE needs at least two draws");
  const double sd = sample_sd(draws);
  if (!(sd > 0.0))
    throw NumericalError("experiments.degenerate_sample", "KDE of draws with zero spread");
  return 3.5 * sd * std::pow(static_cast<double>(draws.size()), -1.0 / 3.0);
}

std::vector<double> kde_scott(const std::vector<double>& draws, const std::vector<double>& at)
{
  const double h = scott_bandwidth(draws);
  const double norm = 1.0 / (static_cast<double>(draws.size()) * h * std::sqrt(2 * std::numbers::pi));
  std::vector<double> out(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    double s = 0.0;
    for (double d : draws) {
      const double u = (at[i] - d) / h;
      s += std::exp(-0.5 * u * u);
    }
    out[i] = s * norm;
  }
  return out;
}

// ---------------------------------------------------------------- figures

std::vector<fs::path> run_figures(const WicksellModel& model, const ExperimentConfig& cfg,
                                  const LimitLaws& limits, const fs::path& dir)
{
  cfg.validate();
  fs::create_directories(dir);
  std::vector<fs::path> files;
  const double M = model.support();
  const LengthBiasedSampler sampler(model.cdf());
  const std::string label = model_label(cfg);

  {
    const auto batch = sample_batch(sampler, cfg.figure_n, {cfg.seed, 1}, label);
    const auto path = dir / "figure1_sample.csv";
    write_batch_csv(path, batch);
    files.push_back(path);
  }

  {
    const auto batch = sample_batch(sampler, cfg.overlay_n, {cfg.seed, 2}, label);
    const UnGraph un(batch, M);
    const auto v_iie = iie(un);
    const auto v_piie = projected_iie(un, cfg.flat);
    const auto v_slope = empirical_slope(un, Partition::around(cfg.flat, M));
    const auto v_pn = projected_naive(un, cfg.flat);
    const auto path = dir / "overlay.csv";
    auto out = open_out(path);
    out << "x,V,naive,iie,proj_iie,slope,proj_naive\n";
    const double a = std::max(0.0, cfg.flat.lo - 1.0), b = std::min(M, cfg.flat.hi + 1.0);
    constexpr int steps = 400;
    for (int i = 0; i <= steps; ++i) {
      const double t = a + (b - a) * i / steps;
      out << t << ',' << model.V(t) << ',' << naive_V(batch, t) << ',' << v_iie(t) << ','
          << v_piie(t) << ',' << v_slope(t) << ',' << v_pn(t) << '\n';
    }
    close_out(out, path);
    files.push_back(path);
  }

  const auto reps = run_replicates(model, sampler, cfg.flat, cfg.x, cfg.figure_n, cfg.figure_reps,
                                   cfg.seed ^ 0x9e3779b97f4a7c15ULL, cfg.execution);
  const double root_n = std::sqrt(static_cast<double>(cfg.figure_n));
  const double v = model.V(cfg.x);
  {
    const auto path = dir / "scatter.csv";
    auto out = open_out(path);
    out << "replicate,iie,slope,tukey_mean,tukey_diff\n";
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const auto& p = reps[r];
      out << r << ',' << p.iie << ',' << p.slope << ',' << 0.5 * (p.iie + p.slope) << ','
          << p.iie - p.slope << '\n';
    }
    close_out(out, path);
    files.push_back(path);
  }

  std::vector<double> h_iie, h_slope, h_diff;
  for (const auto& p : reps) {
    h_iie.push_back(root_n * (p.iie - v));
    h_slope.push_back(root_n * (p.slope - v));
    h_diff.push_back(root_n * (p.iie - p.slope));
  }
  {
    const auto path = dir / "histograms.csv";
    auto out = open_out(path);
    out << "replicate,iie,slope,iie_minus_slope\n";
    for (std::size_t r = 0; r < reps.size(); ++r)
      out << r << ',' << h_iie[r] << ',' << h_slope[r] << ',' << h_diff[r] << '\n';
    close_out(out, path);
    files.push_back(path);
  }
  for (const auto* law : {&limits.lx, &limits.normal, &limits.w}) {
    const std::string name = law->law == LawId::Lx ? "Lx" : law->law == LawId::W ? "W" : "normal";
    const auto path = dir / ("limit_" + name + ".csv");
    write_limit_csv(path, *law);
    files.push_back(path);
  }

  if (reps.size() >= 2) {
    std::vector<double> t(241);
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = -3.0 + 6.0 * static_cast<double>(i) / 240.0;
    const std::vector<std::pair<std::string, const std::vector<double>*>> series{
        {"iie", &h_iie},         {"slope", &h_slope},        {"iie_minus_slope", &h_diff},
        {"Lx", &limits.lx.draws}, {"normal", &limits.normal.draws}, {"W", &limits.w.draws}};
    std::vector<std::vector<double>> dens;
    for (const auto& [name, d] : series) {
      // a degenerate series (e.g. identical replicates) gets an NA column
      try {
        dens.push_back(kde_scott(*d, t));
      } catch (const Error&) {
        dens.push_back(std::vector<double>(t.size(), kNaN));
      }
    }
    const auto path = dir / "kde.csv";
    auto out = open_out(path);
    out << 't';
    for (const auto& s : series)
      out << ',' << s.first;
    out << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      out << t[i];
      for (const auto& d : dens) {
        out << ',';
        write_value(out, d[i]);
      }
      out << '\n';
    }
    close_out(out, path);
    files.push_back(path);
  }
  return files;
}

// ---------------------------------------------------------------- manifest

std::string git_blob_sha1(const std::string& content)
{
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok)
    throw NumericalError("manifest.hash", "SHA-1 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string git_blob_sha1_file(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("io.read", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return git_blob_sha1(buf.str());
}

namespace {

void write_manifest(const ExperimentConfig& cfg, const std::string& model_doc,
                    const std::vector<fs::path>& files, const std::string& status,
                    const std::string& error_id, const std::string& error_message,
                    const std::vector<std::string>& warnings, double seconds)
{
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& f : files) {
    if (!fs::exists(f))
      continue;
    outputs.push_back({{"path", fs::relative(f, cfg.out_dir).generic_string()},
                       {"sha1", git_blob_sha1_file(f)}});
  }
  const std::string config_doc = cfg.to_json().dump();
  nlohmann::json m{{"status", status},
                   {"config", cfg.to_json()},
                   {"inputs",
                    {{"config_sha1", git_blob_sha1(config_doc)},
                     {"model_sha1", model_doc.empty() ? "" : git_blob_sha1(model_doc)}}},
                   {"outputs", outputs},
                   {"warnings", warnings},
                   {"threads", max_threads()},
                   {"seconds", seconds}};
  if (!error_id.empty())
    m["error"] = {{"id", error_id}, {"message", error_message}};
  std::ofstream out(cfg.out_dir / "manifest.json");
  if (out)
    out << m.dump(2) << '\n';
}

} // namespace

ReproduceResult reproduce(const ExperimentConfig& cfg)
{
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  fs::create_directories(cfg.out_dir);
  ReproduceResult res;
  std::string model_doc;
  try {
    const WicksellModel model(load_cdf(cfg.model, cfg.model_file));
    model_doc = model.cdf().to_json().dump();
    const auto limits = simulate_limits(model, cfg);
    const auto reps = run_all_replicates(model, cfg);

    res.table1 = table1_from(reps, limits, cfg);
    res.files.push_back(cfg.out_dir / "table1.csv");
    res.table1.write_csv(res.files.back());

    res.equivalence = equivalence_from(reps, limits, cfg);
    res.files.push_back(cfg.out_dir / "equivalence.csv");
    res.equivalence.write_csv(res.files.back());

    if (res.table1.has_na())
      res.warnings.push_back("experiments.degenerate_replications: fewer than two replications, "
                             "standard deviations reported as NA");

    for (auto& f : run_figures(model, cfg, limits, cfg.out_dir / "figures"))
      res.files.push_back(std::move(f));
  } catch (const Error& e) {
    write_manifest(cfg, model_doc, res.files, "failed", e.id(), e.what(), res.warnings, elapsed());
    throw;
  } catch (const std::exception& e) {
    write_manifest(cfg, model_doc, res.files, "failed", "runtime", e.what(), res.warnings,
                   elapsed());
    throw;
  }
  write_manifest(cfg, model_doc, res.files, "complete", "", "", res.warnings, elapsed());
  return res;
}

} // namespace wicksell
