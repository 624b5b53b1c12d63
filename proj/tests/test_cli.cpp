#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("etc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Scalar leader and follower, discrete time.
json toy(double a, double b, const fs::path& out) {
  return json::parse(R"({
    "Tk": 0.01,
    "agents": [{"A": [[)" + std::to_string(a) + R"(]], "B": [[)" + std::to_string(b) +
                     R"(]], "continuous": false},
               {"A": [[)" + std::to_string(a) + R"(]], "B": [[)" + std::to_string(b) +
                     R"(]], "continuous": false}],
    "graph": [[0, 0], [1, 0]],
    "ets": {"sigma0": 0.02, "sigma": [[1, 0, 0.05]], "theta": 5, "lambda": 0.2},
    "data": {"rho": 10, "wbar": 0.001, "seed": 3},
    "sim": {"horizon": 30, "x0": [[0.5], [-1.0]]},
    "out": ")" + out.string() + R"("
  })");
}

std::string write_config(const fs::path& dir, const json& j) {
  auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::ostream& log) {
  args.insert(args.begin(), "etc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return etc::cli::run(static_cast<int>(argv.size()), argv.data(), log);
}

}  // namespace

TEST(Cli, CollectDeterministicAndSidecar) {
  auto dir = scratch("collect");
  std::ostringstream log;
  etc::cli::Options o;
  o.config = write_config(dir, toy(1.05, 1.0, dir));
  ASSERT_EQ(etc::cli::cmd_collect(o, log), 0) << log.str();
  auto first = slurp(dir / "data.csv");
  ASSERT_EQ(etc::cli::cmd_collect(o, log), 0);
  EXPECT_EQ(first, slurp(dir / "data.csv"));
  auto side = json::parse(slurp(dir / "data.json"));
  EXPECT_EQ(side["seed"], 3);
  EXPECT_EQ(side["rho"], 10);
  EXPECT_DOUBLE_EQ(side["wbar"].get<double>(), 0.001);
  o.seed = 4;
  ASSERT_EQ(etc::cli::cmd_collect(o, log), 0);
  EXPECT_NE(first, slurp(dir / "data.csv"));
}

TEST(Cli, ExampleCollectRowCount) {
  auto dir = scratch("example_collect");
  std::ostringstream log;
  ASSERT_EQ(cli({"collect", "--out", dir.string()}, log), 0) << log.str();
  std::ifstream f(dir / "data.csv");
  std::string line;
  int rows = -1;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 41 * 4);
}

TEST(Cli, ConfigErrors) {
  auto dir = scratch("config");
  std::ostringstream log;
  auto j = toy(1.05, 1.0, dir);
  j["data"]["rho"] = 0;
  etc::cli::Options o;
  o.config = write_config(dir, j);
  EXPECT_EQ(etc::cli::cmd_collect(o, log), 2);
  o.config = (dir / "missing.json").string();
  EXPECT_EQ(etc::cli::cmd_collect(o, log), 2);
  std::ofstream(dir / "bad.json") << "{ not json";
  o.config = (dir / "bad.json").string();
  EXPECT_EQ(etc::cli::cmd_design(o, log), 2);
  EXPECT_EQ(cli({"design", "--method", "nope"}, log), 2);
  j = toy(1.05, 1.0, dir);
  j["ets"]["lambda"] = 0.9;
  o.config = write_config(dir, j);
  EXPECT_EQ(etc::cli::cmd_collect(o, log), 2);
}

TEST(Cli, DesignSimulateReport) {
  auto dir = scratch("pipeline");
  std::ostringstream log;
  etc::cli::Options o;
  o.config = write_config(dir, toy(1.05, 1.0, dir));
  o.method = "model";
  ASSERT_EQ(etc::cli::cmd_design(o, log), 0) << log.str();
  auto d = json::parse(slurp(dir / "design.json"));
  EXPECT_TRUE(d["feasible"].get<bool>());
  EXPECT_TRUE(d.contains("certificate"));

  // thin shell: same numbers as the library call
  auto lib = etc::design_model(etc::load_config(o.config));
  ASSERT_TRUE(lib.design);
  EXPECT_EQ(etc::json_matrix(d["K0"]), lib.design->gain.K0);

  ASSERT_EQ(etc::cli::cmd_simulate(o, log), 0) << log.str();
  auto s = json::parse(slurp(dir / "summary.json"));
  EXPECT_LT(s["consensus_ratio"].get<double>(), 1.0);
  for (int c : s["broadcasts"]) EXPECT_LT(c, 30);
  auto trace = slurp(dir / "trace.csv");
  ASSERT_EQ(etc::cli::cmd_simulate(o, log), 0);
  EXPECT_EQ(trace, slurp(dir / "trace.csv"));

  o.trace = (dir / "trace.csv").string();
  ASSERT_EQ(etc::cli::cmd_report(o, log), 0) << log.str();
  for (auto f : {"states.svg", "eta.svg", "broadcasts.svg", "consensus.svg"}) {
    auto svg = slurp(dir / f);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u) << f;
    EXPECT_NE(svg.find("</svg>"), std::string::npos) << f;
  }
  EXPECT_NE(slurp(dir / "report.md").find("| agent |"), std::string::npos);

  // zero initial state gives a zero-error summary
  auto j = toy(1.05, 1.0, dir);
  j["sim"]["x0"] = json::parse("[[0], [0]]");
  o.config = write_config(dir, j);
  ASSERT_EQ(etc::cli::cmd_simulate(o, log), 0);
  s = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(s["consensus_error_final"].get<double>(), 0.0);
  EXPECT_EQ(s["consensus_error_initial"].get<double>(), 0.0);
}

TEST(Cli, UncontrollableIsInfeasible) {
  auto dir = scratch("uncontrollable");
  std::ostringstream log;
  etc::cli::Options o;
  o.config = write_config(dir, toy(2.0, 0.0, dir));
  o.method = "model";
  EXPECT_EQ(etc::cli::cmd_design(o, log), 4) << log.str();
  auto d = json::parse(slurp(dir / "design.json"));
  EXPECT_FALSE(d["feasible"].get<bool>());
}

TEST(Cli, DataDesignNeedsData) {
  auto dir = scratch("nodata");
  std::ostringstream log;
  etc::cli::Options o;
  o.config = write_config(dir, toy(1.05, 1.0, dir));
  o.method = "data";
  EXPECT_EQ(etc::cli::cmd_design(o, log), 3);
}

TEST(Cli, DivergenceIsRuntimeError) {
  auto dir = scratch("diverge");
  std::ostringstream log;
  auto j = toy(1.05, 1.0, dir);
  j["sim"]["horizon"] = 2000;
  etc::cli::Options o;
  o.config = write_config(dir, j);
  json d = {{"method", "model"}, {"status", "feasible"}, {"feasible", false},
            {"K0", {{1.0}}}, {"K_pair", {{{"i", 1}, {"j", 0}, {"K", {{1.0}}}}}},
            {"K", {{1.0, 0.0}, {0.0, 1.0}}}, {"Omega", {{{1.0}}, {{1.0}}}},
            {"Omega_a", {{1.0}}}, {"Omega_b", {{1.0}}}, {"G", {{1.0}}},
            {"certificate", {{"P", {{1.0, 0.0}, {0.0, 1.0}}}, {"R1", {{1.0}}}, {"R2", {{1.0}}},
                             {"S", {{1.0}}}, {"M1", {{1.0}}}, {"M2", {{1.0}}}, {"F", {{1.0}}}}}};
  std::ofstream(dir / "design.json") << d.dump();
  EXPECT_EQ(etc::cli::cmd_simulate(o, log), 3) << log.str();
}

TEST(Cli, ReportEdgeCases) {
  auto dir = scratch("report");
  std::ostringstream log;
  etc::cli::Options o;
  o.trace = (dir / "empty.csv").string();
  std::ofstream(o.trace).close();
  EXPECT_EQ(etc::cli::cmd_report(o, log), 2);
  o.trace = (dir / "garbage.csv").string();
  std::ofstream(o.trace) << "hello,world\n1,2\n";
  EXPECT_EQ(etc::cli::cmd_report(o, log), 2);
  o.trace = (dir / "absent.csv").string();
  EXPECT_EQ(etc::cli::cmd_report(o, log), 2);

  o.trace = (dir / "one.csv").string();
  std::ofstream(o.trace) << "t,agent,x0,u0,eta,broadcast\n"
                            "0,0,1,0.5,0,1\n0,1,2,-0.5,0,1\n"
                            "1,0,1.5,,0.1,0\n1,1,1.5,,0.2,0\n";
  ASSERT_EQ(etc::cli::cmd_report(o, log), 0) << log.str();
  EXPECT_NE(slurp(dir / "broadcasts.svg").find("<circle"), std::string::npos);
  EXPECT_NE(slurp(dir / "states.svg").find("<polyline"), std::string::npos);
}
