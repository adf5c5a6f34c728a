#pragma once

#include "kdpc/cli/config.hpp"

#include <iosfwd>
#include <string>

namespace kdpc::cli {

enum ExitCode : int {
  kOk = 0,
  kArgError = 1,
  kSolverError = 2,
  kPeFailure = 3,
  kIoError = 4,
};

/// Paths resolved from flags, falling back to the config io section.
struct RunPaths {
  std::string data;
  std::string query;
  std::string out;
};

int cmd_gen_data(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out);
int cmd_predict(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out);
int cmd_control(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out);
int cmd_check_pe(const ExperimentConfig& config, const RunPaths& paths, std::ostream& out);

/// Full command-line entry: parses argv, runs the command, maps exceptions
/// to exit codes and prints errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kdpc::cli
