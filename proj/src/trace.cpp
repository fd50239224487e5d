#include "safelearn/trace.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace safelearn {

Trace::Trace(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw std::invalid_argument("trace must contain at least one sample");
  for (const auto& s : samples_) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw std::invalid_argument("trace coordinates must be finite");
    }
  }
}

nlohmann::json trace_to_json(const Trace& trace) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : trace.samples()) samples.push_back({s.x, s.y});
  return {{"length", trace.length()}, {"samples", std::move(samples)}};
}

Trace trace_from_json(const nlohmann::json& j) {
  std::vector<Sample> samples;
  for (const auto& s : j.at("samples")) {
    if (!s.is_array() || s.size() != 2) throw std::invalid_argument("trace sample must be [x, y]");
    samples.push_back({s[0].get<double>(), s[1].get<double>()});
  }
  if (j.contains("length") && j.at("length").get<int>() != static_cast<int>(samples.size())) {
    throw std::invalid_argument("trace length field does not match sample count");
  }
  return Trace(std::move(samples));
}

}  // namespace safelearn
