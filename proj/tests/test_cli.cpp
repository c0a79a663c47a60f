#include "cli.hpp"
#include "oracle_values.hpp"
#include "schema_check.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using schema_check::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = brakeorbit::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

void expect_valid(const fs::path& doc, const std::string& schema) {
  ASSERT_TRUE(fs::exists(doc)) << doc;
  const schema_check::Validator v(load(fs::path(BRAKEORBIT_SCHEMA_DIR) / (schema + ".schema.json")));
  const auto errors = v.validate(load(doc));
  for (const auto& e : errors) ADD_FAILURE() << doc << " " << e;
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("brakeorbit_cli_" + std::string(info->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string sub(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_F(Cli, BrakeOrbitExample) {
  const auto r = run({"brake-orbit", "--potential", "harmonic", "--dim", "1", "--energy", "0.5", "--start", "1.0",
                      "--out", sub("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("T=3.14159", 0), 0u) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  const std::string csv = slurp(dir / "o" / "brake_orbit.csv");
  EXPECT_EQ(csv.rfind("t,q1,v1,energy_residual\n", 0), 0u);
  expect_valid(dir / "o" / "brake_orbit.json", "brake_orbit");
  EXPECT_NEAR(load(dir / "o" / "brake_orbit.json")["half_period"].get<double>(), oracle::kHarmonicHalfPeriod, 1e-6);
}

TEST_F(Cli, MorseExample) {
  const auto r = run({"morse", "--potential", "harmonic", "--dim", "2", "--energy", "0.5", "--start", "1,0", "--arc",
                      "0.7", "--samples", "64", "--out", sub("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  expect_valid(dir / "o" / "morse.json", "morse");
  const json j = load(dir / "o" / "morse.json");
  ASSERT_EQ(j["conjugate_points"].size(), 1u);
  EXPECT_NEAR(j["conjugate_points"][0]["s"].get<double>(), oracle::kIsoConjugateArc, 1e-3);
  EXPECT_EQ(j["index"], 1);
  EXPECT_EQ(j["mit_consistent"], "consistent");
  EXPECT_EQ(j["broken_jacobi"]["agrees"], true);
  EXPECT_EQ(slurp(dir / "o" / "staircase.csv").rfind("s,index,nullity\n", 0), 0u);
}

TEST_F(Cli, GeodesicBothFormats) {
  auto r = run({"geodesic", "--dim", "2", "--arc", "0.3", "--out", sub("csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  expect_valid(dir / "csv" / "geodesic.json", "geodesic");
  EXPECT_EQ(slurp(dir / "csv" / "geodesic.csv").rfind("s,x1,x2,xdot1,xdot2,gap,conservation_residual\n", 0), 0u);

  r = run({"geodesic", "--dim", "2", "--arc", "0.3", "--format", "json", "--out", sub("json")});
  ASSERT_EQ(r.code, 0) << r.err;
  expect_valid(dir / "json" / "geodesic.json", "geodesic");
  EXPECT_FALSE(fs::exists(dir / "json" / "geodesic.csv"));
  EXPECT_TRUE(load(dir / "json" / "geodesic.json").contains("samples"));
}

TEST_F(Cli, DistanceWithGradient) {
  const auto r = run({"distance", "--dim", "2", "--query", "0.5,0", "--out", sub("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  expect_valid(dir / "o" / "distance.json", "distance");
  const json j = load(dir / "o" / "distance.json");
  EXPECT_NEAR(j["value"].get<double>(), oracle::kIsoDistanceHalf, 1e-6);
  EXPECT_TRUE(j["unique"].get<bool>());
  EXPECT_NEAR(j["gradient"][0].get<double>(), -0.5 * std::sqrt(0.75), 1e-6);

  const auto s = run({"distance", "--dim", "2", "--query", "0.5,0", "--backend", "shooting", "--format", "json",
                      "--out", sub("s")});
  ASSERT_EQ(s.code, 0) << s.err;
  expect_valid(dir / "s" / "distance.json", "distance");
}

TEST_F(Cli, DistanceFieldIsDeterministic) {
  const std::vector<std::string> base = {"distance-field", "--dim", "2", "--grid", "5x5", "--lo", "-0.9,-0.9",
                                         "--hi", "0.9,0.9", "--seed", "3", "--threads", "2"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", sub("a")});
  b.insert(b.end(), {"--out", sub("b")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  expect_valid(dir / "a" / "distance_field.json", "distance_field");
  EXPECT_EQ(slurp(dir / "a" / "distance_field.csv"), slurp(dir / "b" / "distance_field.csv"));
  EXPECT_EQ(slurp(dir / "a" / "distance_field.json"), slurp(dir / "b" / "distance_field.json"));

  auto j = base;
  j.insert(j.end(), {"--format", "json", "--backend", "shooting", "--out", sub("j")});
  ASSERT_EQ(run(j).code, 0);
  expect_valid(dir / "j" / "distance_field.json", "distance_field");
  EXPECT_EQ(load(dir / "j" / "distance_field.json")["cell_values"].size(), 21u);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"orbit"}).code, 1);
  EXPECT_EQ(run({"distance", "--potential", "cubic", "--query", "0"}).code, 1);
  EXPECT_EQ(run({"distance", "--dim", "2", "--query", "1.5,0"}).code, 1);
  EXPECT_EQ(run({"distance", "--dim", "2", "--query", "0.1"}).code, 1);
  EXPECT_EQ(run({"distance-field", "--dim", "2", "--grid", "5by5", "--out", sub("g")}).code, 1);
  EXPECT_EQ(run({"morse", "--dim", "2"}).code, 1);
  EXPECT_EQ(run({"geodesic", "--dim", "2", "--arc", "0.3", "--start", "0.2,0"}).code, 1);
  EXPECT_EQ(run({"brake-orbit", "--format", "xml"}).code, 1);
  const auto r = run({"distance", "--potential", "cubic", "--query", "0"});
  EXPECT_NE(r.err.find("cubic"), std::string::npos);
}

TEST_F(Cli, MalformedSpecIsUsageError) {
  std::ofstream(dir / "broken.json") << "{\"dim\": 1, \"kind\": \"polynomial\"";
  EXPECT_EQ(run({"brake-orbit", "--potential", sub("broken.json"), "--out", sub("o")}).code, 1);
  std::ofstream(dir / "nobox.json") << R"({"dim": 1, "kind": "polynomial", "energy": 0.5,
                                          "coefficients": [[0.5, 2]]})";
  EXPECT_EQ(run({"brake-orbit", "--potential", sub("nobox.json"), "--out", sub("o")}).code, 1);
}

TEST_F(Cli, PolynomialSpecFile) {
  const json spec = {{"name", "quadratic"},
                     {"dim", 1},
                     {"kind", "polynomial"},
                     {"energy", 0.5},
                     {"coefficients", json::array({{{"coef", 0.5}, {"powers", {2}}}})},
                     {"box", json::array({json::array({-2.0, 2.0})})}};
  const schema_check::Validator v(load(fs::path(BRAKEORBIT_SCHEMA_DIR) / "potential_spec.schema.json"));
  EXPECT_TRUE(v.validate(spec).empty());
  std::ofstream(dir / "quad.json") << spec.dump();
  const auto r = run({"brake-orbit", "--potential", sub("quad.json"), "--start", "1", "--out", sub("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(load(dir / "o" / "brake_orbit.json")["half_period"].get<double>(), oracle::kHarmonicHalfPeriod, 1e-6);
  EXPECT_EQ(load(dir / "o" / "brake_orbit.json")["potential"]["name"], "quadratic");
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  std::ofstream(dir / "cfg.json") << R"({"dim": 2, "query": [0.5, 0.0], "backend": "shooting", "seed": 5})";
  auto r = run({"distance", "--config", sub("cfg.json"), "--out", sub("a")});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = load(dir / "a" / "distance.json");
  EXPECT_EQ(j["backend"], "shooting");
  EXPECT_EQ(j["seed"], 5);
  EXPECT_NEAR(j["value"].get<double>(), oracle::kIsoDistanceHalf, 1e-6);

  r = run({"distance", "--config", sub("cfg.json"), "--backend", "variational", "--seed", "9", "--out", sub("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  j = load(dir / "b" / "distance.json");
  EXPECT_EQ(j["backend"], "variational");
  EXPECT_EQ(j["seed"], 9);

  std::ofstream(dir / "bad.json") << R"({"dim": 2, "frobnicate": 1})";
  EXPECT_EQ(run({"distance", "--config", sub("bad.json"), "--query", "0,0"}).code, 1);
}

TEST_F(Cli, SeedFromEnvironment) {
  ::setenv("BRAKEORBIT_SEED", "42", 1);
  auto r = run({"distance", "--dim", "2", "--query", "0.3,0.1", "--out", sub("env")});
  ::unsetenv("BRAKEORBIT_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load(dir / "env" / "distance.json")["seed"], 42);

  ::setenv("BRAKEORBIT_SEED", "42", 1);
  r = run({"distance", "--dim", "2", "--query", "0.3,0.1", "--seed", "7", "--out", sub("flag")});
  ::unsetenv("BRAKEORBIT_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load(dir / "flag" / "distance.json")["seed"], 7);
}

TEST_F(Cli, HelpExitsCleanly) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("distance-field"), std::string::npos);
}
