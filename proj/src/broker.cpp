#include "safelearn/broker.hpp"

#include <stdexcept>

namespace safelearn {

labeling::LabelingSession OracleLabeler::label(std::vector<Trace> traces, int iteration) {
  return labeling::open_session(std::move(traces), labeling::Mode::Oracle, &phi_true_, iteration);
}

labeling::LabelingSession SessionBroker::label(std::vector<Trace> traces, int iteration) {
  std::unique_lock lock(mutex_);
  if (closed_) throw BrokerClosed();
  session_ = labeling::open_session(std::move(traces), labeling::Mode::Interactive, nullptr, iteration);
  cv_.wait(lock, [&] { return closed_ || session_->complete(); });
  if (!session_->complete()) throw BrokerClosed();
  labeling::LabelingSession done = std::move(*session_);
  session_.reset();
  return done;
}

SessionBroker::SubmitResult SessionBroker::submit(
    const std::vector<std::pair<std::size_t, labeling::Verdict>>& labels) {
  std::lock_guard lock(mutex_);
  if (!session_) throw std::logic_error("no labeling session is open");
  labeling::submit_labels(*session_, labels);
  SubmitResult result{labels.size(), session_->remaining()};
  if (session_->complete()) cv_.notify_all();
  return result;
}

nlohmann::json SessionBroker::snapshot() const {
  std::lock_guard lock(mutex_);
  nlohmann::json pending = nlohmann::json::array();
  if (!session_) {
    return {{"pending", pending}, {"labeled_count", 0}, {"total", 0}, {"iteration", nullptr}};
  }
  for (std::size_t id : session_->pending_ids()) {
    pending.push_back({{"id", id}, {"trace", trace_to_json(session_->traces()[id])}});
  }
  return {{"pending", std::move(pending)},
          {"labeled_count", session_->labeled_count()},
          {"total", session_->traces().size()},
          {"iteration", session_->iteration()}};
}

bool SessionBroker::has_session() const {
  std::lock_guard lock(mutex_);
  return session_.has_value();
}

void SessionBroker::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  cv_.notify_all();
}

}  // namespace safelearn
