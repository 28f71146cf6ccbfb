#pragma once

#include <stdexcept>
#include <string>

namespace visret {

// Bad input data: unparseable files, dangling references, contract
// violations in loaded records. Maps to exit code 3 in the CLI.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: divergence, non-finite intermediates. Exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace visret
