#pragma once

#include <stdexcept>
#include <string>

namespace sgas {

// Runtime failure in the engine (bad shapes, invalid data, failed run).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration; maps to CLI exit code 1.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sgas
