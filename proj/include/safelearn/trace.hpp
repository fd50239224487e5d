#pragma once

#include <span>
#include <vector>

#include "json.hpp"

namespace safelearn {

struct Sample {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Sample&) const = default;
};

/// Coordinates at unit time steps t = 0..length()-1. Never empty.
class Trace {
 public:
  /// Throws std::invalid_argument on an empty sequence or non-finite values.
  explicit Trace(std::vector<Sample> samples);

  int length() const noexcept { return static_cast<int>(samples_.size()); }
  const Sample& at(int t) const { return samples_.at(static_cast<std::size_t>(t)); }
  const Sample& operator[](int t) const noexcept { return samples_[static_cast<std::size_t>(t)]; }
  std::span<const Sample> samples() const noexcept { return samples_; }

  bool operator==(const Trace&) const = default;

 private:
  std::vector<Sample> samples_;
};

/// {"length": L, "samples": [[x0, y0], ...]}
nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

}  // namespace safelearn
