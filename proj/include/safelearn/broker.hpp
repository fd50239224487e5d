#pragma once

#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "safelearn/labeling.hpp"

namespace safelearn {

/// Where the loop sends a batch of traces to be labeled.
class Labeler {
 public:
  virtual ~Labeler() = default;
  /// Returns a complete session for `traces`.
  virtual labeling::LabelingSession label(std::vector<Trace> traces, int iteration) = 0;
};

class OracleLabeler : public Labeler {
 public:
  explicit OracleLabeler(stl::Formula phi_true) : phi_true_(std::move(phi_true)) {}
  labeling::LabelingSession label(std::vector<Trace> traces, int iteration) override;

 private:
  stl::Formula phi_true_;
};

/// Thrown to the loop thread when the broker shuts down mid-session.
class BrokerClosed : public std::runtime_error {
 public:
  BrokerClosed() : std::runtime_error("labeling broker closed") {}
};

/// Hands batches from the loop thread to human labelers (HTTP handlers).
/// One active session at a time; submissions are serialized.
class SessionBroker : public Labeler {
 public:
  struct SubmitResult {
    std::size_t accepted = 0;
    std::size_t remaining = 0;
  };

  /// Publishes the batch and blocks until every trace is labeled.
  labeling::LabelingSession label(std::vector<Trace> traces, int iteration) override;

  /// Throws labeling::SessionError, or std::logic_error when no session is open.
  SubmitResult submit(const std::vector<std::pair<std::size_t, labeling::Verdict>>& labels);

  /// Snapshot of the pending batch for readers:
  /// {pending: [{id, trace}], labeled_count, total, iteration} or an empty
  /// pending list when nothing is open.
  nlohmann::json snapshot() const;

  bool has_session() const;
  void close();

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<labeling::LabelingSession> session_;
  bool closed_ = false;
};

}  // namespace safelearn
