#pragma once

#include <stdexcept>

namespace srd {

// Invalid user-supplied configuration; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace srd
