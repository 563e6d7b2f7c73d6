#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdde/problem_io.hpp"

namespace qdde {

enum class Command { check, solve_formal, borel, spiral, evaluate, asymptotics, majorant, all };

std::optional<Command> parse_command(const std::string& name);
std::string command_name(Command c);

struct RunConfig {
  std::string problem_path;
  Command command = Command::all;
  std::string out_dir = ".";
  std::string format = "json";  // summary printed to stdout; files are always written
  std::vector<std::string> overrides;
  std::optional<double> tol;
  std::optional<cplx> t;
  std::optional<cplx> z;
};

// Parses "RE,IM" or "RE".
cplx parse_complex(const std::string& s);

struct RunResult {
  int exit_code = 0;  // 0 success, 2 assumption failure, 1 internal error
  json report;
  std::string error;
};

// Runs the pipeline and writes its artifacts into out_dir. Never throws.
RunResult run(const RunConfig& cfg);

}  // namespace qdde
