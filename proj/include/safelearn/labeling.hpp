#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "safelearn/formula.hpp"
#include "safelearn/mining.hpp"
#include "safelearn/trace.hpp"

namespace safelearn::labeling {

enum class Verdict : std::uint8_t { Safe, Unsafe };
enum class Source : std::uint8_t { Oracle, Human };
enum class Mode : std::uint8_t { Oracle, Interactive };

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(Mode m) noexcept;
/// "safe" / "unsafe"; throws std::invalid_argument otherwise.
Verdict verdict_from_string(std::string_view s);
/// "oracle" / "interactive"; throws std::invalid_argument otherwise.
Mode mode_from_string(std::string_view s);

struct Label {
  Verdict verdict = Verdict::Unsafe;
  Source source = Source::Oracle;

  bool operator==(const Label&) const = default;
};

/// Safe iff robustness against the hidden constraint is >= 0.
Label oracle_label(const stl::Formula& phi_true, const Trace& trace);

class SessionError : public std::runtime_error {
 public:
  enum class Code { EmptyBatch, UnknownId, DuplicateId, AlreadyLabeled, Incomplete };

  SessionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }
  /// Short machine-readable tag, e.g. "unknown-id".
  std::string_view tag() const noexcept;

 private:
  Code code_;
};

/// One batch of traces awaiting labels. Ids are positions in the batch.
class LabelingSession {
 public:
  const std::vector<Trace>& traces() const noexcept { return traces_; }
  const std::vector<std::optional<Label>>& labels() const noexcept { return labels_; }
  Mode mode() const noexcept { return mode_; }
  int iteration() const noexcept { return iteration_; }

  std::size_t labeled_count() const noexcept;
  std::size_t remaining() const noexcept { return traces_.size() - labeled_count(); }
  bool complete() const noexcept { return remaining() == 0; }
  std::vector<std::size_t> pending_ids() const;

 private:
  friend LabelingSession open_session(std::vector<Trace>, Mode, const stl::Formula*, int);
  friend void submit_labels(LabelingSession&, const std::vector<std::pair<std::size_t, Verdict>>&);

  std::vector<Trace> traces_;
  std::vector<std::optional<Label>> labels_;
  Mode mode_ = Mode::Oracle;
  int iteration_ = 0;
};

/// In oracle mode `phi_true` must be non-null and every trace is labeled
/// immediately. Throws SessionError(EmptyBatch) on an empty batch.
LabelingSession open_session(std::vector<Trace> traces, Mode mode,
                             const stl::Formula* phi_true = nullptr, int iteration = 0);

/// Records human labels. The whole submission is validated first; on any
/// unknown, duplicate or already-labeled id nothing is applied.
void submit_labels(LabelingSession& session,
                   const std::vector<std::pair<std::size_t, Verdict>>& labels);

/// Appends Safe traces to positives and Unsafe to negatives. Throws
/// SessionError(Incomplete) and leaves `data` untouched when labels are missing.
void merge_into_dataset(mining::LabeledDataset& data, const LabelingSession& session);

}  // namespace safelearn::labeling
