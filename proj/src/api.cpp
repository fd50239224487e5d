#include "safelearn/api.hpp"

#include <stdexcept>

#include "httplib.h"

namespace safelearn {

using nlohmann::json;

void RunMonitor::on_phase(std::string_view phase, int iteration) {
  std::lock_guard lock(mutex_);
  phase_ = std::string(phase);
  iteration_ = iteration;
}

void RunMonitor::on_record(const IterationRecord& record, const RunReport& partial) {
  std::lock_guard lock(mutex_);
  iteration_ = record.iteration;
  report_ = partial;
}

void RunMonitor::finish(const RunReport& report) {
  std::lock_guard lock(mutex_);
  report_ = report;
  phase_ = "done";
  iteration_ = static_cast<int>(report.records.size());
}

void RunMonitor::fail(std::string message) {
  std::lock_guard lock(mutex_);
  phase_ = "failed";
  error_ = std::move(message);
}

json RunMonitor::status() const {
  std::lock_guard lock(mutex_);
  json history = json::array();
  for (const auto& r : report_.records) history.push_back(1.0 - r.unsafe_fraction);
  json out = {{"iteration", iteration_},
              {"phase", phase_},
              {"safe_fraction_history", std::move(history)},
              {"status", to_string(report_.status)}};
  if (error_) out["error"] = *error_;
  return out;
}

json RunMonitor::report() const {
  std::lock_guard lock(mutex_);
  return report_to_json(report_);
}

std::vector<std::pair<std::size_t, labeling::Verdict>> parse_label_submission(
    const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("request body is not valid JSON");
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of {id, label}");
  std::vector<std::pair<std::size_t, labeling::Verdict>> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") || !item.contains("label")) {
      throw std::invalid_argument("each entry needs \"id\" and \"label\"");
    }
    const auto& id = item["id"];
    if (!id.is_number_unsigned()) {
      throw std::invalid_argument("\"id\" must be a non-negative integer");
    }
    const auto& label = item["label"];
    if (!label.is_string()) throw std::invalid_argument("\"label\" must be a string");
    out.emplace_back(id.get<std::size_t>(), labeling::verdict_from_string(label.get<std::string>()));
  }
  return out;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, std::string_view error, std::string_view detail) {
  send_json(res, {{"error", error}, {"detail", detail}}, 400);
}

}  // namespace

ApiServer::ApiServer(SessionBroker& broker, RunMonitor& monitor, grid::GridEnv env,
                     std::optional<std::filesystem::path> static_dir)
    : broker_(broker), monitor_(monitor), env_(env), server_(std::make_unique<httplib::Server>()) {
  install_routes();
  if (static_dir && !server_->set_mount_point("/", static_dir->string())) {
    throw std::invalid_argument("static directory does not exist: " + static_dir->string());
  }
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::install_routes() {
  server_->Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, monitor_.status());
  });

  server_->Get("/api/session", [this](const httplib::Request&, httplib::Response& res) {
    json snap = broker_.snapshot();
    json grid = {{"width", env_.width}, {"height", env_.height}, {"goal_hint", nullptr}};
    for (auto& item : snap["pending"]) item["grid"] = grid;
    send_json(res, snap);
  });

  server_->Post("/api/session/labels", [this](const httplib::Request& req, httplib::Response& res) {
    std::vector<std::pair<std::size_t, labeling::Verdict>> labels;
    try {
      labels = parse_label_submission(req.body);
    } catch (const std::exception& e) {
      send_error(res, "bad-request", e.what());
      return;
    }
    try {
      auto result = broker_.submit(labels);
      send_json(res, {{"accepted", result.accepted}, {"remaining", result.remaining}});
    } catch (const labeling::SessionError& e) {
      send_error(res, e.tag(), e.what());
    } catch (const std::logic_error& e) {
      send_error(res, "no-session", e.what());
    }
  });

  server_->Get("/api/report", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, monitor_.report());
  });

  server_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          send_json(res, {{"error", "internal"}, {"detail", e.what()}}, 500);
        } catch (...) {
          send_json(res, {{"error", "internal"}, {"detail", "unknown error"}}, 500);
        }
      });
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool ApiServer::serve() { return server_->listen_after_bind(); }

void ApiServer::stop() {
  if (server_) server_->stop();
}

void ApiServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace safelearn
