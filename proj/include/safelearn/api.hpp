#pragma once

// JSON-over-HTTP surface for the labeling console: loop status, the pending
// labeling batch, label submission and the current report.

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "safelearn/broker.hpp"
#include "safelearn/gridworld.hpp"
#include "safelearn/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace safelearn {

/// Thread-safe mirror of loop progress, fed by the loop thread and read by
/// HTTP handlers.
class RunMonitor : public LoopObserver {
 public:
  void on_phase(std::string_view phase, int iteration) override;
  void on_record(const IterationRecord& record, const RunReport& partial) override;

  void finish(const RunReport& report);
  void fail(std::string message);

  /// {iteration, phase, safe_fraction_history, status}
  nlohmann::json status() const;
  nlohmann::json report() const;

 private:
  mutable std::mutex mutex_;
  std::string phase_ = "idle";
  int iteration_ = 0;
  RunReport report_;
  std::optional<std::string> error_;
};

class ApiServer {
 public:
  ApiServer(SessionBroker& broker, RunMonitor& monitor, grid::GridEnv env,
            std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  SessionBroker& broker_;
  RunMonitor& monitor_;
  grid::GridEnv env_;
  std::unique_ptr<httplib::Server> server_;
};

/// Parses a label submission body: [{id, label: "safe"|"unsafe"}].
/// Throws std::invalid_argument with a readable message.
std::vector<std::pair<std::size_t, labeling::Verdict>> parse_label_submission(
    const std::string& body);

}  // namespace safelearn
