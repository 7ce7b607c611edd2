#include "ghmm/cli.hpp"
#include "ghmm/error.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace ghmm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ghmm_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

int run(const json& cfg, const fs::path& out, std::string* err = nullptr, fs::path base = ".") {
  std::ostringstream e;
  RunOptions o;
  o.out = out;
  o.base_dir = std::move(base);
  const int rc = cmd_dispatch(cfg, o, e);
  if (err) *err = e.str();
  return rc;
}

}  // namespace

TEST_CASE("loglik on a two-observation file") {
  const fs::path dir = scratch("loglik");
  std::ofstream(dir / "y.csv") << "y1\n1\n2\n";
  const json cfg = {{"command", "loglik"},
                    {"model", {{"family", "three-state"}, {"delta", 0.0}}},
                    {"input", {{"observations", "y.csv"}}}};
  REQUIRE(run(cfg, dir / "out", nullptr, dir) == 0);
  const json doc = json::parse(slurp(dir / "out" / "loglik.json"));
  CHECK(doc["result"]["loglik"].get<double>() == doctest::Approx(-1.386294).epsilon(1e-6));
  CHECK(lines(slurp(dir / "out" / "loglik.csv"))[0] == "n,loglik");
  CHECK(fs::exists(dir / "out" / "run_meta.json"));
  CHECK(doc["config"]["seed"] == 0);
}

TEST_CASE("invalid garch parameters exit with the validation status and a field path") {
  const fs::path dir = scratch("garch");
  const json cfg = {{"command", "simulate"},
                    {"model", {{"family", "garch11"}, {"delta", 0.1}, {"alpha", 0.3}, {"beta", 0.7}}},
                    {"estimator", {{"n", 10}}}};
  std::string err;
  CHECK(run(cfg, dir, &err) == kExitValidation);
  CHECK(err.find("model.beta") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "simulate.csv"));
}

TEST_CASE("schema violations name the offending field") {
  const fs::path dir = scratch("schema");
  std::string err;
  json cfg = {{"command", "simulate"}, {"model", {{"family", "three-state"}}}};
  CHECK(run(cfg, dir, &err) == kExitValidation);
  CHECK(err.find("estimator.n") != std::string::npos);

  cfg = {{"command", "simulate"}, {"model", {{"family", "three-state"}, {"delta", "x"}}}, {"estimator", {{"n", 5}}}};
  CHECK(run(cfg, dir, &err) == kExitValidation);
  CHECK(err.find("model.delta") != std::string::npos);

  cfg = {{"command", "transmogrify"}, {"model", {{"family", "three-state"}}}};
  CHECK(run(cfg, dir, &err) == kExitValidation);
  CHECK(err.find("command") != std::string::npos);

  cfg = {{"command", "simulate"}, {"model", {{"family", "hmm"}, {"transition", {{0.5, 0.6}, {0.5, 0.5}}},
                                             {"emission", {{1.0}, {1.0}}}}}, {"estimator", {{"n", 5}}}};
  CHECK(run(cfg, dir, &err) == kExitValidation);
}

TEST_CASE("numerical failures exit with status 3") {
  const fs::path dir = scratch("numerical");
  std::ofstream(dir / "y.csv") << "y1\n1\n2\n";
  const json cfg = {{"command", "loglik"},
                    {"model", {{"family", "hmm"}, {"transition", {{0.5, 0.5}, {0.5, 0.5}}},
                               {"emission", {{1.0, 0.0}, {1.0, 0.0}}}}},
                    {"input", {{"observations", "y.csv"}}}};
  std::string err;
  CHECK(run(cfg, dir / "out", &err, dir) == kExitNumerical);
  CHECK(err.find("AllZeroWeights") != std::string::npos);
}

TEST_CASE("kl-sweep on the three-state example") {
  const fs::path dir = scratch("sweep");
  const json cfg = {{"command", "kl-sweep"},
                    {"seed", 1},
                    {"model", {{"family", "three-state"}, {"delta", 0.0}}},
                    {"estimator", {{"n", 50000}, {"x0", 0}, {"grid", {{"from", 0.1}, {"to", 0.2}, {"step", 0.025}}}}}};
  REQUIRE(run(cfg, dir) == 0);
  const auto rows = lines(slurp(dir / "kl-sweep.csv"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "value,kl,se,replicates");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string cell = rows[i].substr(rows[i].find(',') + 1);
    CHECK(std::stod(cell.substr(0, cell.find(','))) > 0.0);
  }
}

TEST_CASE("simulated data round-trips through loglik") {
  const std::vector<json> models = {
      {{"family", "three-state"}, {"delta", 0.1}},
      {{"family", "garch11"}, {"delta", 0.1}, {"alpha", 0.2}, {"beta", 0.7}},
      {{"family", "varma"}, {"sigma", {{1.0, 0.2}, {0.2, 0.5}}}, {"ar", {{{0.5, 0.1}, {0.0, 0.3}}}}},
      {{"family", "softmax-hmm"}, {"states", 2}, {"alphabet", 3}},
      {{"family", "trbm"}, {"W", {{0.5}, {-0.3}}}, {"Wp", {{0.8}}}, {"bY", {0.1, 0.2}}, {"bH", {-0.1}}},
      {{"family", "product"},
       {"a", {{"family", "three-state"}, {"delta", 0.2}}},
       {"b", {{"family", "garch11"}, {"delta", 0.1}, {"alpha", 0.2}, {"beta", 0.7}}}},
  };
  int i = 0;
  for (const auto& m : models) {
    CAPTURE(m.dump());
    const fs::path dir = scratch("roundtrip" + std::to_string(i++));
    REQUIRE(run({{"command", "simulate"}, {"seed", 4}, {"model", m}, {"estimator", {{"n", 300}}}}, dir) == 0);
    REQUIRE(run({{"command", "loglik"}, {"model", m}, {"input", {{"observations", (dir / "simulate.csv").string()}}}},
                dir) == 0);
    const json doc = json::parse(slurp(dir / "loglik.json"));
    CHECK(std::isfinite(doc["result"]["loglik"].get<double>()));
    CHECK(doc["result"]["n"] == 300);
  }
}

TEST_CASE("re-runs produce identical artifacts") {
  const json cfg = {{"command", "quad-check"},
                    {"seed", 9},
                    {"model", {{"family", "three-state"}, {"delta", 0.1}}},
                    {"estimator", {{"n", 4000}, {"eps_grid", {0.2, 0.1}}}}};
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run(cfg, a) == 0);
  RunOptions o;
  o.out = b;
  o.threads = 2;
  std::ostringstream err;
  REQUIRE(cmd_dispatch(cfg, o, err) == 0);
  CHECK(slurp(a / "quad-check.csv") == slurp(b / "quad-check.csv"));
  CHECK_FALSE(slurp(a / "quad-check.csv").empty());
}

TEST_CASE("seed override replaces the config seed") {
  const json cfg = {{"command", "simulate"}, {"seed", 1}, {"model", {{"family", "three-state"}}}, {"estimator", {{"n", 50}}}};
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  RunOptions o;
  o.out = a;
  o.seed = 2;
  std::ostringstream err;
  REQUIRE(cmd_dispatch(cfg, o, err) == 0);
  json c2 = cfg;
  c2["seed"] = 2;
  REQUIRE(run(c2, b) == 0);
  CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));
  CHECK(json::parse(slurp(a / "simulate.json"))["seed"] == 2);
}

TEST_CASE("observation files need y1..yd headers") {
  const fs::path dir = scratch("csv");
  std::ofstream(dir / "a.csv") << "t,y2\n0,1\n";
  CHECK_THROWS_AS(read_observations_csv(dir / "a.csv"), Error);
  std::ofstream(dir / "b.csv") << "t,y1,y2,x\n0,1.5,-2,0\n1,2,3e-1,1\n";
  const Series y = read_observations_csv(dir / "b.csv");
  CHECK(y.dim() == 2);
  CHECK(y.size() == 2);
  CHECK(y.at(1, 1) == 0.3);
  std::ofstream(dir / "c.csv") << "y1\n1\nabc\n";
  CHECK_THROWS_AS(read_observations_csv(dir / "c.csv"), Error);
}
