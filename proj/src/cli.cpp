#include "wicksell/cli.hpp"

#include "wicksell/asymptotics.hpp"
#include "wicksell/errors.hpp"
#include "wicksell/estimators.hpp"
#include "wicksell/experiments.hpp"
#include "wicksell/parallel.hpp"
#include "wicksell/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace wicksell {

namespace fs = std::filesystem;

namespace {

struct ModelArgs
{
  std::string preset = "paper-sec5";
  std::string file;
};

void add_model_options(CLI::App* sub, ModelArgs& m)
{
  auto* preset = sub->add_option("--model", m.preset, "model preset")->capture_default_str();
  auto* file = sub->add_option("--model-file", m.file, "JSON cdf document");
  preset->excludes(file);
  file->excludes(preset);
}

WicksellModel load_model(const ModelArgs& m)
{
  return WicksellModel(load_cdf(m.preset, m.file));
}

std::string model_name(const ModelArgs& m)
{
  return m.file.empty() ? m.preset : fs::path(m.file).filename().string();
}

/// --seed unless WICKSELL_SEED is set.
std::uint64_t resolve_seed(std::uint64_t flag)
{
  const char* env = std::getenv("WICKSELL_SEED");
  if (!env || !*env)
    return flag;
  const std::string s(env);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == s.size() && s.find('-') == std::string::npos, "cli.seed_env",
          "WICKSELL_SEED must be a non-negative integer, got '" + s + "'");
  return v;
}

bool seed_from_env()
{
  const char* env = std::getenv("WICKSELL_SEED");
  return env && *env;
}

Interval parse_flat(const std::string& text)
{
  const auto comma = text.find(',');
  require(comma != std::string::npos, "cli.flat", "--flat expects lo,hi, got '" + text + "'");
  Interval f;
  try {
    std::size_t a = 0, b = 0;
    const std::string lo = text.substr(0, comma), hi = text.substr(comma + 1);
    f.lo = std::stod(lo, &a);
    f.hi = std::stod(hi, &b);
    require(a == lo.size() && b == hi.size(), "cli.flat", "--flat expects lo,hi");
  } catch (const std::logic_error&) {
    throw ConfigError("cli.flat", "--flat expects two numbers lo,hi, got '" + text + "'");
  }
  f.validate();
  return f;
}

void ensure_parent(const fs::path& p)
{
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
}

fs::path summary_path(const fs::path& p)
{
  auto s = p;
  s.replace_extension(".json");
  return s;
}

void write_json(const fs::path& p, const nlohmann::json& j)
{
  std::ofstream out(p);
  if (!out)
    throw ConfigError("io.write", "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

void print_table(std::ostream& out, const std::string& title, const ResultTable& t)
{
  out << title << '\n' << std::setw(8) << "n";
  for (const auto& s : t.statistics)
    out << std::setw(22) << s;
  out << '\n';
  for (const auto& row : t.rows) {
    out << std::setw(8) << row.key;
    for (const auto& c : row.cells) {
      std::ostringstream cell;
      if (std::isnan(c.value))
        cell << "NA";
      else
        cell << std::fixed << std::setprecision(4) << c.value << " (" << std::setprecision(4)
             << c.se << ")";
      out << std::setw(22) << cell.str();
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------- commands

struct SampleArgs
{
  ModelArgs model;
  long long n = 0;
  std::uint64_t seed = 1;
  std::string out = "z.csv";
};

int cmd_sample(const SampleArgs& a, std::ostream& out)
{
  require(a.n > 0, "cli.n", "--n must be a positive integer, got " + std::to_string(a.n));
  const auto model = load_model(a.model);
  const auto seed = resolve_seed(a.seed);
  const auto batch = sample_batch(model, static_cast<std::size_t>(a.n), {seed, 0},
                                  model_name(a.model));
  ensure_parent(a.out);
  write_batch_csv(a.out, batch);
  const GCdfTable G(model);
  const double d = ks_distance(batch, [&](double z) { return G(z); });
  const double crit = ks_critical_1pct(batch.n());
  out << "wrote " << batch.n() << " draws to " << a.out << " (seed " << seed << ")\n"
      << "ks_distance " << d << ", 1% critical value " << crit << ", "
      << (d < crit ? "consistent with g" : "REJECTED at 1%") << '\n';
  return exit_ok;
}

struct EstimateArgs
{
  ModelArgs model;
  std::string input;
  std::string estimator;
  std::string flat = "2,3";
  long long grid_n = 0;
  double x = 2.5;
  std::string out = "estimate.csv";
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out)
{
  const auto id = parse_estimator(a.estimator);
  const auto flat = parse_flat(a.flat);
  require(a.grid_n >= 0, "cli.grid_n", "--grid-n must be non-negative");
  const auto model = load_model(a.model);
  const double M = model.support();
  require(flat.hi <= M, "cli.flat", "flat interval must lie inside [0, M]");
  require(a.x >= 0 && a.x <= M, "cli.x", "--x must lie in [0, M]");
  const auto batch = read_batch_csv(a.input);
  require(!batch.empty(), "cli.input", a.input + " holds no observations");
  const auto grid = a.grid_n > 0
                        ? EvalGrid::make(batch, M, static_cast<std::size_t>(a.grid_n), &flat)
                        : EvalGrid::make_default(batch, M, &flat);
  const auto v = estimate(id, batch, flat, grid);
  ensure_parent(a.out);
  write_estimate_csv(a.out, v, to_string(id));
  const nlohmann::json summary{{"estimator_id", to_string(id)},
                               {"input", a.input},
                               {"n", batch.n()},
                               {"flat", {flat.lo, flat.hi}},
                               {"support", M},
                               {"grid_mesh", grid.mesh()},
                               {"x", a.x},
                               {"value_at_x", v(a.x)}};
  write_json(summary_path(a.out), summary);
  out << summary.dump(2) << '\n';
  return exit_ok;
}

struct LimitsArgs
{
  ModelArgs model;
  std::string law = "Lx";
  long long npaths = 20000;
  long long grid_m = static_cast<long long>(kDefaultGridM);
  long long n_mc = static_cast<long long>(kDefaultCovarianceDraws);
  std::string flat = "2,3";
  double x = 2.5;
  std::uint64_t seed = 1;
  std::string out = "limit.csv";
};

int cmd_limits(const LimitsArgs& a, std::ostream& out)
{
  const auto law = parse_law(a.law);
  const auto flat = parse_flat(a.flat);
  require(a.npaths >= 2, "cli.npaths", "--npaths must be at least 2");
  require(a.grid_m >= 2, "cli.grid_m", "--grid-m must be at least 2");
  require(a.n_mc >= 2, "cli.n_mc", "--n-mc must be at least 2");
  require(a.x > flat.lo && a.x < flat.hi, "cli.x", "--x must lie inside the flat interval");
  const auto model = load_model(a.model);
  const StreamKey key{resolve_seed(a.seed), 0};
  const auto npaths = static_cast<std::size_t>(a.npaths);
  const auto m = static_cast<std::size_t>(a.grid_m);
  const auto n_mc = static_cast<std::size_t>(a.n_mc);
  LimitSample s;
  switch (law) {
  case LawId::Lx:
    s = sample_Lx(model, flat, a.x, npaths, m, key, n_mc);
    break;
  case LawId::W:
    s = sample_W(model, flat, a.x, npaths, m, key, n_mc);
    break;
  case LawId::Normal:
    s = sample_normal(std::sqrt(sigma_sq(model, flat)), npaths, key);
    break;
  }
  ensure_parent(a.out);
  write_limit_csv(a.out, s);
  write_limit_summary(summary_path(a.out), s);
  out << "law " << to_string(s.law) << ": sd " << s.sd << " (MC SE " << s.mc_se << "), mean "
      << s.mean << ", " << s.npaths << " paths\n";
  return exit_ok;
}

struct ReproduceArgs
{
  std::string config;
  std::string out;
  bool quick = false;
  ModelArgs model;
  std::uint64_t seed = 0;
  long long replications = 0;
  long long npaths = 0;
  long long grid_m = 0;
  std::string flat;
  double x = 0.0;
  std::vector<long long> sizes;
};

int cmd_reproduce(const ReproduceArgs& a, const CLI::App& sub, std::ostream& out,
                  std::ostream& err)
{
  ExperimentConfig cfg;
  if (!a.config.empty())
    cfg = ExperimentConfig::load(a.config, cfg);
  if (a.quick)
    cfg = cfg.quick();
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--out"))
    cfg.out_dir = a.out;
  if (given("--model")) {
    cfg.model = a.model.preset;
    cfg.model_file.clear();
  }
  if (given("--model-file"))
    cfg.model_file = a.model.file;
  if (given("--seed") || seed_from_env())
    cfg.seed = resolve_seed(a.seed);
  if (given("--replications")) {
    require(a.replications >= 1, "cli.replications", "--replications must be >= 1");
    cfg.replications = static_cast<std::size_t>(a.replications);
  }
  if (given("--npaths")) {
    require(a.npaths >= 1, "cli.npaths", "--npaths must be >= 1");
    cfg.npaths = static_cast<std::size_t>(a.npaths);
  }
  if (given("--grid-m")) {
    require(a.grid_m >= 2, "cli.grid_m", "--grid-m must be >= 2");
    cfg.grid_m = static_cast<std::size_t>(a.grid_m);
  }
  if (given("--flat"))
    cfg.flat = parse_flat(a.flat);
  if (given("--x"))
    cfg.x = a.x;
  if (given("--sizes")) {
    cfg.sizes.clear();
    for (auto n : a.sizes) {
      require(n > 0, "cli.sizes", "--sizes must be positive");
      cfg.sizes.push_back(static_cast<std::size_t>(n));
    }
  }
  cfg.validate();

  const auto res = reproduce(cfg);
  for (const auto& w : res.warnings) {
    const auto colon = w.find(": ");
    err << "warning[" << w.substr(0, colon) << "]: "
        << (colon == std::string::npos ? w : w.substr(colon + 2)) << '\n';
  }
  print_table(out, "sd of sqrt(n)(estimate - V)(x), MC SE in parentheses", res.table1);
  print_table(out, "sd of sqrt(n)(estimate - slope)(x)", res.equivalence);
  out << "artifacts in " << cfg.out_dir.string() << '\n';
  return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Wicksell problem estimators, limit laws and simulation study", "wicksell"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all available)");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "draw squared section radii from g");
  add_model_options(sample, sa.model);
  sample->add_option("--n", sa.n, "sample size")->required();
  sample->add_option("--seed", sa.seed, "master seed")->capture_default_str();
  sample->add_option("-o,--out", sa.out, "output CSV")->capture_default_str();

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "estimate V from a sample");
  add_model_options(est, ea.model);
  est->add_option("--input", ea.input, "CSV with a 'z' column")->required();
  est->add_option("--estimator", ea.estimator, "iie | proj-iie | slope | proj-naive | profile")
      ->required();
  est->add_option("--flat", ea.flat, "flat interval lo,hi")->capture_default_str();
  est->add_option("--grid-n", ea.grid_n, "uniform grid points (default 10 n)");
  est->add_option("--x", ea.x, "report the estimate here")->capture_default_str();
  est->add_option("-o,--out", ea.out, "output CSV; the summary goes next to it as .json")
      ->capture_default_str();

  LimitsArgs la;
  auto* lim = app.add_subcommand("limits", "simulate the limit laws L_x, W or N(0, sigma^2)");
  add_model_options(lim, la.model);
  lim->add_option("--law", la.law, "Lx | W | normal")->capture_default_str();
  lim->add_option("--npaths", la.npaths, "number of draws")->capture_default_str();
  lim->add_option("--grid-m", la.grid_m, "cells on the flat interval")->capture_default_str();
  lim->add_option("--n-mc", la.n_mc, "draws for the covariance")->capture_default_str();
  lim->add_option("--flat", la.flat, "flat interval lo,hi")->capture_default_str();
  lim->add_option("--x", la.x, "target point")->capture_default_str();
  lim->add_option("--seed", la.seed, "master seed")->capture_default_str();
  lim->add_option("-o,--out", la.out, "draws CSV; the summary goes next to it as .json")
      ->capture_default_str();

  ReproduceArgs ra;
  auto* rep = app.add_subcommand("reproduce", "run the full simulation study");
  rep->add_option("--config", ra.config, "JSON experiment config");
  rep->add_option("-o,--out", ra.out, "output directory");
  rep->add_flag("--quick", ra.quick, "100 replications and 2000 limit paths");
  add_model_options(rep, ra.model);
  rep->add_option("--seed", ra.seed, "master seed");
  rep->add_option("--replications", ra.replications, "replications per sample size");
  rep->add_option("--npaths", ra.npaths, "limit-law paths");
  rep->add_option("--grid-m", ra.grid_m, "cells on the flat interval");
  rep->add_option("--flat", ra.flat, "flat interval lo,hi");
  rep->add_option("--x", ra.x, "target point");
  rep->add_option("--sizes", ra.sizes, "sample sizes")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    require(threads >= 0, "cli.threads", "--threads must be non-negative");
    set_threads(threads);
    if (*sample)
      return cmd_sample(sa, out);
    if (*est)
      return cmd_estimate(ea, out);
    if (*lim)
      return cmd_limits(la, out);
    return cmd_reproduce(ra, *rep, out, err);
  } catch (const ConfigError& e) {
    err << "error[" << e.id() << "]: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    err << "error[" << e.id() << "]: " << e.what() << '\n';
    return exit_runtime;
  } catch (const fs::filesystem_error& e) {
    err << "error[io.filesystem]: " << e.what() << '\n';
    return exit_runtime;
  } catch (const std::exception& e) {
    err << "error[runtime]: " << e.what() << '\n';
    return exit_runtime;
  }
}

} // namespace wicksell
