#include "safelearn/labeling.hpp"

#include <algorithm>
#include <unordered_set>

#include "safelearn/robustness.hpp"

namespace safelearn::labeling {

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Safe ? "safe" : "unsafe"; }

std::string_view to_string(Mode m) noexcept { return m == Mode::Oracle ? "oracle" : "interactive"; }

Verdict verdict_from_string(std::string_view s) {
  if (s == "safe") return Verdict::Safe;
  if (s == "unsafe") return Verdict::Unsafe;
  throw std::invalid_argument("label must be \"safe\" or \"unsafe\", got \"" + std::string(s) + "\"");
}

Mode mode_from_string(std::string_view s) {
  if (s == "oracle") return Mode::Oracle;
  if (s == "interactive") return Mode::Interactive;
  throw std::invalid_argument("mode must be \"oracle\" or \"interactive\", got \"" + std::string(s) + "\"");
}

Label oracle_label(const stl::Formula& phi_true, const Trace& trace) {
  return {stl::satisfies(phi_true, trace) ? Verdict::Safe : Verdict::Unsafe, Source::Oracle};
}

std::string_view SessionError::tag() const noexcept {
  switch (code_) {
    case Code::EmptyBatch: return "empty-batch";
    case Code::UnknownId: return "unknown-id";
    case Code::DuplicateId: return "duplicate-id";
    case Code::AlreadyLabeled: return "already-labeled";
    case Code::Incomplete: return "incomplete-session";
  }
  return "session-error";
}

std::size_t LabelingSession::labeled_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(labels_.begin(), labels_.end(), [](const auto& l) { return l.has_value(); }));
}

std::vector<std::size_t> LabelingSession::pending_ids() const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!labels_[i]) ids.push_back(i);
  }
  return ids;
}

LabelingSession open_session(std::vector<Trace> traces, Mode mode, const stl::Formula* phi_true,
                             int iteration) {
  if (traces.empty()) throw SessionError(SessionError::Code::EmptyBatch, "cannot open a session without traces");
  if (mode == Mode::Oracle && phi_true == nullptr) {
    throw std::invalid_argument("oracle labeling requires the ground-truth formula");
  }
  LabelingSession s;
  s.mode_ = mode;
  s.iteration_ = iteration;
  s.labels_.assign(traces.size(), std::nullopt);
  if (mode == Mode::Oracle) {
    for (std::size_t i = 0; i < traces.size(); ++i) s.labels_[i] = oracle_label(*phi_true, traces[i]);
  }
  s.traces_ = std::move(traces);
  return s;
}

void submit_labels(LabelingSession& session,
                   const std::vector<std::pair<std::size_t, Verdict>>& labels) {
  std::unordered_set<std::size_t> seen;
  for (const auto& [id, verdict] : labels) {
    if (id >= session.labels_.size()) {
      throw SessionError(SessionError::Code::UnknownId, "unknown trace id " + std::to_string(id));
    }
    if (!seen.insert(id).second) {
      throw SessionError(SessionError::Code::DuplicateId, "trace id " + std::to_string(id) + " submitted twice");
    }
    if (session.labels_[id]) {
      throw SessionError(SessionError::Code::AlreadyLabeled, "trace id " + std::to_string(id) + " is already labeled");
    }
  }
  for (const auto& [id, verdict] : labels) session.labels_[id] = Label{verdict, Source::Human};
}

void merge_into_dataset(mining::LabeledDataset& data, const LabelingSession& session) {
  if (!session.complete()) {
    throw SessionError(SessionError::Code::Incomplete,
                       std::to_string(session.remaining()) + " traces are still unlabeled");
  }
  for (std::size_t i = 0; i < session.traces().size(); ++i) {
    auto& dst = session.labels()[i]->verdict == Verdict::Safe ? data.positives : data.negatives;
    dst.push_back(session.traces()[i]);
  }
}

}  // namespace safelearn::labeling
