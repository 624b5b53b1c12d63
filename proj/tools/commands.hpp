#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "etc/error.hpp"
#include "etc/pipeline.hpp"

namespace etc::cli {

enum Exit { kOk = 0, kConfig = 2, kRuntime = 3, kInfeasible = 4, kSolver = 5 };

int exit_code(Errc c);

struct Options {
  std::string config;  // empty: embedded Example-1 config
  std::string out;     // empty: the config's out
  std::optional<std::uint64_t> seed;
  std::string method = "data";
  std::optional<double> gamma;
  std::string design, trace;
  int jobs = 1;
};

RunConfig resolve(const Options& o);

// Each returns an exit code; diagnostics go to `log`.
int cmd_collect(const Options& o, std::ostream& log);
int cmd_design(const Options& o, std::ostream& log);
int cmd_simulate(const Options& o, std::ostream& log);
int cmd_report(const Options& o, std::ostream& log);
int cmd_repro_example1(const Options& o, std::ostream& log);

int run(int argc, char** argv, std::ostream& log);

}  // namespace etc::cli
