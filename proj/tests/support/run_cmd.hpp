#pragma once

#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

namespace testing_support {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

// Runs `cmd` through the shell, capturing combined output and the exit code.
inline CmdResult run_cmd(const std::string& cmd) {
  CmdResult result;
  std::string full = cmd + " 2>&1";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("popen failed for: " + cmd);
  }
  std::array<char, 4096> buf{};
  size_t n = 0;
  while ((n = ::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), n);
  }
  int status = ::pclose(pipe);
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else {
    result.exit_code = -1;
  }
  return result;
}

}  // namespace testing_support
