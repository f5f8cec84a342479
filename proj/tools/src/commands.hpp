#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracac::cli {

enum ExitCode { Ok = 0, ConfigFailure = 1, NotConverged = 2, VerifyFailure = 3 };

struct RunOptions {
  std::string config;
  std::string out = ".";
  unsigned threads = 0;
  std::string only;     // verify: comma separated groups
  std::string subtask;  // geometry: perimeter, curvature, variation, cone-check
};

int cmd_solve(const RunOptions& o, std::ostream& log);
int cmd_sweep(const RunOptions& o, std::ostream& log);
int cmd_geometry(const RunOptions& o, std::ostream& log);
int cmd_verify(const RunOptions& o, std::ostream& log);

// Dispatches by name, maps configuration errors to exit code 1 with a message on `log`.
int run(const std::string& command, const RunOptions& o, std::ostream& log);

const std::vector<std::string>& verify_groups();

}  // namespace fracac::cli
