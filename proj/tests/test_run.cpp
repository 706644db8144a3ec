#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "linfsc/error.hpp"
#include "linfsc/io.hpp"
#include "linfsc/run.hpp"
#include "oracles.hpp"

using namespace linfsc;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("linfsc_test_run_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// treated = 0.5 * c1 + 0.25 * c3 + 1 in every period, plus `noise` before t0
void write_panel(const std::string& path, double noise, unsigned seed) {
  std::mt19937_64 rng(seed);
  Matrix raw = oracle::gaussian(24, 5, rng);
  raw.col(0) = 0.5 * raw.col(1) + 0.25 * raw.col(3);
  raw.col(0).array() += 1.0;
  raw.col(0).head(16) += noise * oracle::gaussian(16, 1, rng).col(0);
  std::vector<std::string> times;
  for (int t = 0; t < 24; ++t) times.push_back(std::to_string(2000 + t));
  PanelData p = validate_panel(raw, 16, {"tr", "c1", "c2", "c3", "c4"}, times);
  std::ofstream out(path);
  write_panel_csv(out, p);
}

RunConfig data_config(const std::string& input, const std::string& out, Command command) {
  RunConfig c;
  c.command = command;
  c.input_path = input;
  c.treated_column = "tr";
  c.t0 = "2015";
  c.output_dir = out;
  return c;
}

}  // namespace

TEST_CASE("config json round-trip") {
  RunConfig c;
  c.command = Command::Effects;
  c.input_path = "panel.csv";
  c.treated_column = "CA";
  c.t0 = "1988";
  c.penalty = "l1linf";
  c.lambda = 0.25;
  c.alpha = 0.1;
  c.cv_mode = CvMode::UnitFolds;
  c.seed = 123456789012345ULL;
  c.emit = {"json"};
  const std::string text = config_to_json(c);
  const RunConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(*back.lambda == 0.25);
  CHECK(back.seed == c.seed);

  RunConfig s;
  s.command = Command::Simulate;
  s.dgp = 3;
  s.error = ErrorKind::ARMA11;
  s.horizons = {1, 2};
  s.methods = {"oracle", "linf"};
  s.reading = HorizonReading::SinglePeriod;
  CHECK(config_to_json(config_from_json(config_to_json(s))) == config_to_json(s));

  // neither the output directory nor the thread count is part of the record
  RunConfig moved = c;
  moved.output_dir = "/elsewhere";
  moved.threads = 7;
  CHECK(config_to_json(moved) == text);
}

TEST_CASE("config json rejects bad input") {
  auto code = [](const std::string& text) {
    try {
      config_from_json(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(R"({"command":"fit","colour":"red"})") == ErrorCode::ConfigError);
  CHECK(code(R"({"command":"fit","cv_k":"ten"})") == ErrorCode::ConfigError);
  CHECK(code(R"({"penalty":"linf"})") == ErrorCode::ConfigError);
  CHECK(code("[1,2]") == ErrorCode::ConfigError);
  CHECK(code("{not json") == ErrorCode::ConfigError);
  CHECK(code(R"({"command":"jump"})") == ErrorCode::ConfigError);
  CHECK(config_from_json(R"({"command":"fit","t0":12})").t0 == "12");
}

TEST_CASE("validation and exit codes") {
  TempDir dir("codes");
  write_panel(dir / "panel.csv", 0.1, 1);
  std::ostringstream err;

  RunConfig fixed = data_config(dir / "panel.csv", dir / "a", Command::Fit);
  fixed.penalty = "linf";
  CHECK(run(fixed, err) == 1);  // no lambda
  json e = json::parse(err.str());
  CHECK(e["error"]["code"] == "ConfigError");
  CHECK(e["error"]["category"] == "config");

  RunConfig missing = data_config(dir / "nothing.csv", dir / "a", Command::Fit);
  err.str("");
  CHECK(run(missing, err) == 2);
  CHECK(json::parse(err.str())["error"]["category"] == "data");

  RunConfig wrong_unit = data_config(dir / "panel.csv", dir / "a", Command::Fit);
  wrong_unit.treated_column = "zz";
  err.str("");
  CHECK(run(wrong_unit, err) == 2);
  CHECK(json::parse(err.str())["error"]["code"] == "MissingTreatedColumn");

  RunConfig tune = data_config(dir / "panel.csv", dir / "a", Command::Tune);
  tune.penalty = "linf";
  CHECK_THROWS_AS(tune.validate(), Error);

  RunConfig sim;
  sim.command = Command::Simulate;
  sim.dgp = 4;
  sim.sim_j = 5;
  CHECK_THROWS_AS(sim.validate(), Error);
  sim.sim_j = 6;
  sim.horizons = {11};
  CHECK_THROWS_AS(sim.validate(), Error);
  sim.horizons = {1};
  CHECK_NOTHROW(sim.validate());
}

TEST_CASE("fit and effects outputs") {
  TempDir dir("outputs");
  write_panel(dir / "panel.csv", 0.0, 2);
  std::ostringstream err;

  // exact linear panel: least squares recovers the weights and the effect is zero
  RunConfig c = data_config(dir / "panel.csv", dir / "ls", Command::Effects);
  c.penalty = "none";
  REQUIRE(run(c, err) == 0);
  json w = json::parse(slurp(dir / "ls/weights.json"));
  CHECK(w["treated"] == "tr");
  CHECK(w["t0"] == 16);
  CHECK(w["lambda"].is_null());
  CHECK(std::abs(w["weights"]["c1"].get<double>() - 0.5) < 1e-10);
  CHECK(std::abs(w["weights"]["c2"].get<double>()) < 1e-10);
  CHECK(std::abs(w["mu_hat"].get<double>() - 1.0) < 1e-10);
  json ate = json::parse(slurp(dir / "ls/ate.json"));
  CHECK(std::abs(ate["ate"].get<double>()) < 1e-10);
  CHECK(ate["first_post_period"] == "2016");
  CHECK(ate["horizon_ates"].size() == 8);

  // every row of effects.csv satisfies gap = actual - counterfactual
  c.penalty = "linf";
  c.lambda = 0.3;
  c.output_dir = dir / "linf";
  REQUIRE(run(c, err) == 0);
  std::istringstream csv(slurp(dir / "linf/effects.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "time,actual,counterfactual,gap");
  int rows = 0;
  while (std::getline(csv, line)) {
    double actual = 0, cf = 0, gap = 0;
    std::string label;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream(line) >> label >> actual >> cf >> gap;
    CHECK(std::abs(actual - cf - gap) < 1e-12);
    ++rows;
  }
  CHECK(rows == 24);
  json lw = json::parse(slurp(dir / "linf/weights.json"));
  CHECK(lw["lambda"] == 0.3);
  CHECK(lw["solver"]["status"] == "Optimal");
  CHECK(lw["linf_norm"].get<double>() < 0.5);

  // json only
  c.emit = {"json"};
  c.output_dir = dir / "jsononly";
  REQUIRE(run(c, err) == 0);
  CHECK_FALSE(fs::exists(dir / "jsononly/effects.csv"));
  CHECK(fs::exists(dir / "jsononly/ate.json"));
}

TEST_CASE("manifest reruns reproduce every byte") {
  TempDir dir("rerun");
  write_panel(dir / "panel.csv", 0.2, 3);
  std::ostringstream err;

  RunConfig c = data_config(dir / "panel.csv", dir / "first", Command::Effects);
  c.penalty = "auto:l1linf";
  c.grid_lambdas = 6;
  c.grid_alphas = 3;
  c.cv_k = 4;
  c.seed = 99;
  REQUIRE(run(c, err) == 0);
  RunConfig again = load_manifest(dir / "first/manifest.json");
  again.output_dir = dir / "second";
  again.threads = 2;
  REQUIRE(run(again, err) == 0);
  for (const char* name : {"weights.json", "effects.csv", "ate.json", "manifest.json"}) {
    CHECK(slurp(dir / (std::string("first/") + name)) == slurp(dir / (std::string("second/") + name)));
  }
  json w = json::parse(slurp(dir / "first/weights.json"));
  CHECK(w["tuned"] == true);
  json m = json::parse(slurp(dir / "first/manifest.json"));
  CHECK(m["cv"]["fold_assignments"].size() == 16);

  RunConfig tune = c;
  tune.command = Command::Tune;
  tune.output_dir = dir / "tune";
  REQUIRE(run(tune, err) == 0);
  std::istringstream surface(slurp(dir / "tune/cv_surface.csv"));
  std::string line;
  int n = -1;
  while (std::getline(surface, line)) ++n;
  CHECK(n == 18);
  json best = json::parse(slurp(dir / "tune/cv_best.json"));
  CHECK(best["best_lambda"] == m["cv"]["best_lambda"]);

  RunConfig sim;
  sim.command = Command::Simulate;
  sim.b = 2;
  sim.sim_j = 6;
  sim.sim_t0 = 20;
  sim.sim_t1 = 3;
  sim.horizons = {1, 3};
  sim.methods = {"oracle", "sc", "linf"};
  sim.grid_lambdas = 4;
  sim.grid_alphas = 2;
  sim.cv_k = 3;
  sim.seed = 5;
  sim.output_dir = dir / "sim1";
  REQUIRE(run(sim, err) == 0);
  RunConfig sim2 = load_manifest(dir / "sim1/manifest.json");
  sim2.output_dir = dir / "sim2";
  REQUIRE(run(sim2, err) == 0);
  for (const char* name : {"rmse_table.csv", "rmse_table.json", "manifest.json"}) {
    CHECK(slurp(dir / (std::string("sim1/") + name)) == slurp(dir / (std::string("sim2/") + name)));
  }
  json sm = json::parse(slurp(dir / "sim1/manifest.json"));
  CHECK(sm["replicate_seeds"].size() == 2);
  CHECK(sm["dgp_spec"]["j"] == 6);
}

#ifdef LINFSC_CLI_PATH
TEST_CASE("command-line tool") {
  TempDir dir("cli");
  write_panel(dir / "panel.csv", 0.1, 4);
  const std::string cli = LINFSC_CLI_PATH;
  auto sh = [](const std::string& cmd) {
    const int status = std::system((cmd + " 2>/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  CHECK(sh(cli + " fit --input " + (dir / "panel.csv") + " --treated tr --t0 2015 --penalty linf"
           " --lambda 0.2 --out " + (dir / "a")) == 0);
  CHECK(sh(cli + " run --manifest " + (dir / "a/manifest.json") + " --out " + (dir / "b")) == 0);
  CHECK(slurp(dir / "a/weights.json") == slurp(dir / "b/weights.json"));
  CHECK(slurp(dir / "a/manifest.json") == slurp(dir / "b/manifest.json"));

  CHECK(sh(cli + " fit --input " + (dir / "panel.csv") + " --treated tr --t0 2015 --penalty linf"
           " --out " + (dir / "c")) == 1);
  CHECK(sh(cli + " fit --input " + (dir / "none.csv") + " --treated tr --t0 2015 --out " +
           (dir / "c")) == 2);
  CHECK(sh(cli + " fit --treated tr") == 1);
  CHECK(sh(cli + " simulate --dgp 9") == 1);
  CHECK(sh(cli + " run --manifest " + (dir / "missing.json")) == 1);

  CHECK(sh(cli + " simulate --dgp 2 --b 1 --j 4 --sim-t0 15 --t1 2 --horizons 1,2"
           " --methods oracle,lasso --grid-lambdas 3 --out " + (dir / "s")) == 0);
  json m = json::parse(slurp(dir / "s/manifest.json"));
  CHECK(m["config"]["grid_lambdas"] == 3);
  CHECK(m["config"]["grid_alphas"] == 5);
  CHECK(m["config"]["cv_k"] == 5);
  CHECK(m["config"]["methods"].size() == 2);
}
#endif
