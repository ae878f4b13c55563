#include "wicksell/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace wicksell;
namespace fs = std::filesystem;

namespace {

struct Run
{
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "wicksell");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name)
{
  const auto dir = fs::temp_directory_path() / ("wicksell_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count_lines(const std::string& s)
{
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_CASE("sample writes a deterministic CSV")
{
  ::unsetenv("WICKSELL_SEED");
  const auto dir = scratch("sample");
  const auto a = (dir / "a.csv").string(), b = (dir / "sub" / "b.csv").string();
  auto r = cli({"sample", "--model", "paper-sec5", "--n", "1000", "--seed", "7", "-o", a});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("ks_distance") != std::string::npos);
  CHECK(cli({"sample", "--model", "paper-sec5", "--n", "1000", "--seed", "7", "-o", b}).code == 0);
  const auto text = slurp(a);
  CHECK(text == slurp(b));
  CHECK(text.rfind("z\n", 0) == 0);
  CHECK(count_lines(text) == 1001);
  fs::remove_all(dir);
}

TEST_CASE("sample rejects bad arguments with exit code 2")
{
  ::unsetenv("WICKSELL_SEED");
  auto r = cli({"sample", "--n", "-5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("error[cli.n]") != std::string::npos);
  CHECK(cli({"sample", "--n", "10", "--model", "no-such"}).code == 2);
  CHECK(cli({"sample", "--n", "10", "--model", "paper-sec5", "--model-file", "x.json"}).code == 2);
  CHECK(cli({"sample"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("WICKSELL_SEED overrides --seed")
{
  const auto dir = scratch("seed");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  ::unsetenv("WICKSELL_SEED");
  REQUIRE(cli({"sample", "--n", "50", "--seed", "7", "-o", a}).code == 0);
  ::setenv("WICKSELL_SEED", "7", 1);
  REQUIRE(cli({"sample", "--n", "50", "--seed", "8", "-o", b}).code == 0);
  CHECK(slurp(a) == slurp(b));
  ::setenv("WICKSELL_SEED", "seven", 1);
  auto r = cli({"sample", "--n", "50", "-o", b});
  CHECK(r.code == 2);
  CHECK(r.err.find("error[cli.seed_env]") != std::string::npos);
  ::unsetenv("WICKSELL_SEED");
  fs::remove_all(dir);
}

TEST_CASE("estimate: profile and projected naive agree, errors map to exit 2")
{
  ::unsetenv("WICKSELL_SEED");
  const auto dir = scratch("estimate");
  const auto z = (dir / "z.csv").string();
  REQUIRE(cli({"sample", "--n", "400", "--seed", "3", "-o", z}).code == 0);

  const auto p = dir / "profile.csv", n = dir / "naive.csv";
  REQUIRE(cli({"estimate", "--input", z, "--estimator", "profile", "-o", p.string()}).code == 0);
  REQUIRE(cli({"estimate", "--input", z, "--estimator", "proj-naive", "-o", n.string()}).code == 0);
  const auto jp = nlohmann::json::parse(slurp(dir / "profile.json"));
  const auto jn = nlohmann::json::parse(slurp(dir / "naive.json"));
  CHECK(jp["estimator_id"] == "profile");
  CHECK(std::abs(jp["value_at_x"].get<double>() - jn["value_at_x"].get<double>()) < 1e-6);
  CHECK(slurp(p).rfind("knot,value,estimator_id\n", 0) == 0);

  auto r = cli({"estimate", "--input", z, "--estimator", "bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.find("error[cli.estimator]") != std::string::npos);
  CHECK(cli({"estimate", "--input", z, "--estimator", "iie", "--flat", "3,2"}).code == 2);
  CHECK(cli({"estimate", "--input", z, "--estimator", "iie", "--flat", "2;3"}).code == 2);
  CHECK(cli({"estimate", "--input", (dir / "none.csv").string(), "--estimator", "iie"}).code == 2);
  CHECK(cli({"estimate", "--input", z, "--estimator", "iie", "--grid-n", "-1"}).code == 2);

  const auto g = dir / "grid.csv";
  CHECK(cli({"estimate", "--input", z, "--estimator", "iie", "--grid-n", "50", "-o", g.string()})
            .code == 0);
  fs::remove_all(dir);
}

TEST_CASE("limits writes draws and a summary")
{
  ::unsetenv("WICKSELL_SEED");
  const auto dir = scratch("limits");
  const auto o = dir / "n.csv";
  REQUIRE(cli({"limits", "--law", "normal", "--npaths", "4000", "-o", o.string()}).code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "n.json"));
  CHECK(j["law_id"] == "Normal");
  CHECK(std::abs(j["sd"].get<double>() - 0.5241) < 4 * j["mc_se"].get<double>());
  CHECK(count_lines(slurp(o)) == 4001);

  const auto w = dir / "w.csv";
  CHECK(cli({"limits", "--law", "W", "--npaths", "200", "--grid-m", "50", "--n-mc", "5000", "-o",
             w.string()})
            .code == 0);
  CHECK(cli({"limits", "--law", "Z"}).code == 2);
  CHECK(cli({"limits", "--x", "3.5"}).code == 2);
  CHECK(cli({"limits", "--npaths", "0"}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("reproduce: config file, flag overrides, missing directories, failures")
{
  ::unsetenv("WICKSELL_SEED");
  const auto dir = scratch("reproduce");
  const auto config = dir / "config.json";
  {
    std::ofstream c(config);
    c << R"({"sizes": [50, 100], "replications": 10, "npaths": 200, "grid_m": 50,
             "covariance_draws": 5000, "overlay_n": 60, "figure_n": 60, "figure_reps": 10})";
  }
  const auto out = dir / "not" / "yet" / "there";
  auto r = cli({"reproduce", "--config", config.string(), "--out", out.string(), "--seed", "5"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "table1.csv"));
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["status"] == "complete");
  CHECK(m["config"]["seed"] == 5);
  CHECK(m["config"]["replications"] == 10);
  const auto table = slurp(out / "table1.csv");
  CHECK(table.find("\nlimit,200,") != std::string::npos);

  // thread count does not change results
  const auto out1 = dir / "one_thread";
  REQUIRE(cli({"--threads", "1", "reproduce", "--config", config.string(), "--out", out1.string(),
               "--seed", "5"})
              .code == 0);
  CHECK(slurp(out1 / "table1.csv") == table);
  CHECK(slurp(out1 / "figures" / "kde.csv") == slurp(out / "figures" / "kde.csv"));

  CHECK(cli({"reproduce", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(cli({"reproduce", "--config", config.string(), "--x", "4"}).code == 2);

  // R = 1 is a warning, not an error
  const auto na = dir / "na";
  r = cli({"reproduce", "--config", config.string(), "--out", na.string(), "--replications", "1"});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning[experiments.degenerate_replications]") != std::string::npos);
  CHECK(slurp(na / "table1.csv").find("NA") != std::string::npos);

  // a file in the way of figures/ fails mid-run: exit 3 and a partial manifest
  const auto broken = dir / "broken";
  fs::create_directories(broken);
  std::ofstream(broken / "figures") << "in the way\n";
  r = cli({"reproduce", "--config", config.string(), "--out", broken.string()});
  CHECK(r.code == 3);
  const auto bm = nlohmann::json::parse(slurp(broken / "manifest.json"));
  CHECK(bm["status"] == "failed");
  CHECK(bm["outputs"].size() == 2);
  fs::remove_all(dir);
}
