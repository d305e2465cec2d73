#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

using nlohmann::json;

std::string out_file(const std::string& tag) {
  return std::string("cli_") + tag + ".json";
}

int run(const std::string& cmdline) {
  const int rc = std::system(cmdline.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

int run_cli(const std::string& args, const std::string& tag = "") {
  std::string cmd = std::string(QSC_CLI_PATH) + " " + args;
  if (!tag.empty()) cmd += " --out " + out_file(tag);
  cmd += " > /dev/null 2>&1";
  return run(cmd);
}

std::string model(const char* name) {
  return std::string(" --model ") + QSC_EXAMPLE_DIR + "/" + name;
}

json load(const std::string& tag) {
  std::ifstream in(out_file(tag));
  REQUIRE(in.good());
  return json::parse(in);
}

std::string slurp(const std::string& tag) {
  std::ifstream in(out_file(tag));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli solve writes a solution document") {
  REQUIRE(run_cli("solve" + model("ma.json"), "solve_a") == 0);
  const json doc = load("solve_a");
  REQUIRE(doc.contains("roots"));
  REQUIRE(doc.contains("u"));
  REQUIRE(doc.contains("config_hash"));
  REQUIRE(doc.contains("manifest"));
  REQUIRE(doc["roots"].size() == 1);
  REQUIRE(std::abs(double(doc["roots"][0][0]) - 1.0) < 1e-9);
  REQUIRE(double(doc["residual"]) < 1e-10);
}

TEST_CASE("cli solve is deterministic") {
  REQUIRE(run_cli("solve" + model("mb.json"), "solve_b1") == 0);
  REQUIRE(run_cli("solve" + model("mb.json"), "solve_b2") == 0);
  REQUIRE(slurp("solve_b1") == slurp("solve_b2"));
}

TEST_CASE("cli verify passes on the bundled models") {
  for (const char* name : {"ma.json", "mb.json"}) {
    REQUIRE(run_cli("verify" + model(name), "verify_ok") == 0);
    const json doc = load("verify_ok");
    REQUIRE(doc["all_pass"].get<bool>());
    REQUIRE(doc["checks"].size() == 8);
    for (auto& c : doc["checks"]) REQUIRE(c["pass"].get<bool>());
  }
}

TEST_CASE("cli verify fails on perturbed roots") {
  REQUIRE(run_cli("verify --perturb 1e-2" + model("ma.json"), "verify_bad") == 3);
  const json doc = load("verify_bad");
  REQUIRE_FALSE(doc["all_pass"].get<bool>());
}

TEST_CASE("cli verify check subset") {
  REQUIRE(run_cli("verify --checks ode,companion" + model("ma.json"), "verify_sub") == 0);
  const json doc = load("verify_sub");
  REQUIRE(doc["checks"].size() == 2);
  REQUIRE(doc["checks"][0]["name"] == "ode");
  REQUIRE(doc["checks"][1]["name"] == "companion");
}

TEST_CASE("cli rejects bad input") {
  REQUIRE(run_cli("verify --checks bogus" + model("ma.json")) == 1);
  REQUIRE(run_cli("solve --model no_such_file.json") == 1);
  REQUIRE(run_cli("correlators --n 0" + model("ma.json")) == 1);
}

TEST_CASE("cli correlators with evaluation points") {
  REQUIRE(run_cli("correlators --n 1 --g 0 --eval 3:0" + model("ma.json"), "corr") == 0);
  const json doc = load("corr");
  REQUIRE(doc["n"] == 1);
  REQUIRE(doc["eval"].size() == 1);
  // resolvent of the quadratic pair at x = 3: 1/(3-1)
  REQUIRE(std::abs(double(doc["eval"][0]["value"][0]) - 0.5) < 1e-9);
}

TEST_CASE("cli curve and free-energy run") {
  REQUIRE(run_cli("curve" + model("mb.json"), "curve") == 0);
  const json curve = load("curve");
  REQUIRE(curve.contains("E"));
  REQUIRE(curve["decoupled_roots"].size() == 3);

  REQUIRE(run_cli("free-energy" + model("ma.json"), "fe") == 0);
  const json fe = load("fe");
  // hand value for the quadratic pair at one root: f0 = 1/6
  REQUIRE(std::abs(double(fe["f0"][0]) - 1.0 / 6.0) < 1e-9);
  REQUIRE(double(fe["grad_norm"]) < 1e-8);
}
