#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safelearn {

/// Malformed formula text. `position` is the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Temporal interval with a > b (or otherwise malformed bounds).
class IntervalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trace too short to evaluate a formula at the requested time index.
class TraceLengthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Formula horizon does not fit into the environment's episode.
class HorizonTooLongError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace safelearn
