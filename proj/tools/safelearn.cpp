// safelearn: command-line front end for the mining/learning loop.
//
//   safelearn run --config cfg.json [--mode oracle|interactive] [--seed N] [--out DIR]
//   safelearn mine --dataset data.json --config cfg.json [--stats gens.csv]
//   safelearn train --formula "F[0,10]((x >= 4.5) & (y >= 4.5))" --config cfg.json
//   safelearn evaluate --report runs/latest/report.json
//   safelearn serve --config cfg.json --port 8080 [--static DIR] [--exit-when-done]
//
// Exit status of run/serve: 0 converged, 3 iteration cap reached, 1 error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "safelearn/api.hpp"
#include "safelearn/config.hpp"
#include "safelearn/error.hpp"
#include "safelearn/formula.hpp"
#include "safelearn/mining.hpp"
#include "safelearn/orchestrator.hpp"
#include "safelearn/qlearning.hpp"
#include "safelearn/robustness.hpp"

namespace sl = safelearn;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitCapped = 3;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int exit_code(sl::RunStatus status) {
  return status == sl::RunStatus::Converged ? kExitConverged : kExitCapped;
}

/// Prints one line per phase/iteration to stderr.
class ConsoleObserver : public sl::LoopObserver {
 public:
  explicit ConsoleObserver(bool quiet) : quiet_(quiet) {}

  void on_phase(std::string_view phase, int iteration) override {
    if (!quiet_ && (phase == "bootstrap" || phase == "reference")) {
      std::cerr << "[" << phase << "]\n";
    }
    (void)iteration;
  }

  void on_record(const sl::IterationRecord& r, const sl::RunReport&) override {
    if (quiet_) return;
    std::cerr << std::fixed << std::setprecision(3) << "iter " << r.iteration
              << "  unsafe " << r.unsafe_fraction << "  mcr " << r.mcr;
    if (r.policy_gap) std::cerr << "  gap " << *r.policy_gap;
    std::cerr << "  " << r.formula << "\n";
    std::cerr.unsetf(std::ios::floatfield);
  }

 private:
  bool quiet_;
};

std::string render_trace(const sl::Trace& trace, const sl::grid::GridEnv& env) {
  std::vector<std::string> rows(static_cast<std::size_t>(env.height),
                                std::string(static_cast<std::size_t>(env.width), '.'));
  for (int t = 0; t < trace.length(); ++t) {
    auto x = static_cast<std::size_t>(trace[t].x);
    auto y = static_cast<std::size_t>(trace[t].y);
    if (y < rows.size() && x < rows[y].size()) rows[y][x] = t == 0 ? 'S' : '*';
  }
  const auto& last = trace[trace.length() - 1];
  auto lx = static_cast<std::size_t>(last.x);
  auto ly = static_cast<std::size_t>(last.y);
  if (ly < rows.size() && lx < rows[ly].size()) rows[ly][lx] = 'E';

  std::ostringstream out;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) out << "  " << *it << "\n";
  out << "  path:";
  for (const auto& s : trace.samples()) out << " (" << s.x << "," << s.y << ")";
  out << "\n";
  return out.str();
}

/// Asks for a verdict on every trace at the terminal.
class TerminalLabeler : public sl::Labeler {
 public:
  explicit TerminalLabeler(sl::grid::GridEnv env) : env_(env) {}

  sl::labeling::LabelingSession label(std::vector<sl::Trace> traces, int iteration) override {
    auto session = sl::labeling::open_session(std::move(traces), sl::labeling::Mode::Interactive,
                                              nullptr, iteration);
    const auto total = session.traces().size();
    std::vector<std::pair<std::size_t, sl::labeling::Verdict>> labels;
    for (std::size_t id = 0; id < total; ++id) {
      std::cout << "\ntrace " << id + 1 << "/" << total << " (iteration " << iteration << ")\n"
                << render_trace(session.traces()[id], env_);
      for (;;) {
        std::cout << "safe or unsafe? [s/u] " << std::flush;
        std::string answer;
        if (!std::getline(std::cin, answer)) throw std::runtime_error("labeling aborted: end of input");
        if (answer == "s" || answer == "safe") {
          labels.emplace_back(id, sl::labeling::Verdict::Safe);
          break;
        }
        if (answer == "u" || answer == "unsafe") {
          labels.emplace_back(id, sl::labeling::Verdict::Unsafe);
          break;
        }
      }
    }
    sl::labeling::submit_labels(session, labels);
    return session;
  }

 private:
  sl::grid::GridEnv env_;
};

sl::RunConfig load_config(const std::string& path, const std::optional<std::string>& mode,
                          const std::optional<std::uint64_t>& seed,
                          const std::optional<std::string>& out) {
  sl::RunConfig cfg = sl::load_run_config(path);
  if (mode) cfg.loop.mode = sl::labeling::mode_from_string(*mode);
  if (seed) cfg.seed = *seed;
  if (out) cfg.output_dir = *out;
  cfg.validate();
  return cfg;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void print_report_location(const sl::RunConfig& cfg, const sl::RunReport& report) {
  if (cfg.output_dir.empty()) {
    std::cout << "status " << sl::to_string(report.status) << "\n";
  } else {
    auto path = cfg.output_dir / "report.json";
    std::cout << sl::format_summary(sl::load_report_summary(path)) << "report: " << path.string()
              << "\n";
  }
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& mode,
            const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out,
            bool quiet) {
  auto cfg = load_config(config_path, mode, seed, out);
  ConsoleObserver observer(quiet);
  sl::RunReport report;
  if (cfg.loop.mode == sl::labeling::Mode::Oracle) {
    auto oracle = sl::make_oracle(cfg);
    report = sl::run_joint_loop(cfg, oracle, &observer);
  } else {
    TerminalLabeler labeler(cfg.environment.env);
    report = sl::run_joint_loop(cfg, labeler, &observer);
  }
  print_report_location(cfg, report);
  return exit_code(report.status);
}

int cmd_mine(const std::string& dataset_path, const std::string& config_path,
             const std::optional<std::uint64_t>& seed, const std::optional<std::string>& stats) {
  auto cfg = load_config(config_path, std::nullopt, seed, std::nullopt);
  auto data = sl::mining::dataset_from_json(read_json(dataset_path));
  auto result = sl::mining::evolve(data, cfg.miner, sl::derive_seed(cfg.seed, "miner"));
  std::string csv = sl::mining::history_to_csv(result.history);
  if (stats) {
    std::ofstream(*stats) << csv;
  } else {
    std::cout << csv;
  }
  std::cout << "formula: " << sl::stl::format_formula(result.best) << "\n"
            << "fitness: " << result.best_fitness << "\n"
            << "mcr: " << sl::mining::mcr(result.best, data) << "\n"
            << "generations: " << result.history.size() << "\n";
  return 0;
}

int cmd_train(const std::string& formula_text, const std::string& config_path,
              const std::optional<std::uint64_t>& seed, const std::optional<std::string>& qtable_out,
              int rollouts) {
  auto cfg = load_config(config_path, std::nullopt, seed, std::nullopt);
  auto phi = sl::stl::parse_formula(formula_text);
  const auto& env = cfg.environment.env;
  auto q = sl::rl::train(env, phi, cfg.learner, sl::derive_seed(cfg.seed, "learner"));
  auto policy = sl::rl::greedy_policy(q);
  if (qtable_out) std::ofstream(*qtable_out) << sl::rl::qtable_to_json(q).dump() << "\n";

  int sat = 0;
  int safe = 0;
  for (int i = 0; i < rollouts; ++i) {
    auto trace = sl::grid::rollout_policy(env, policy, env.episode_length,
                                          cfg.loop.rollout_exploration,
                                          sl::derive_seed(cfg.seed, "train-rollout", i));
    sat += sl::stl::satisfies(phi, trace) ? 1 : 0;
    safe += sl::stl::satisfies(cfg.environment.ground_truth, trace) ? 1 : 0;
  }
  std::cout << "formula: " << sl::stl::format_formula(phi) << "\n"
            << "episodes: " << cfg.learner.episodes << "\n"
            << "rollouts: " << rollouts << " (exploration " << cfg.loop.rollout_exploration
            << ")\n"
            << "satisfy formula: " << sat << "\n"
            << "satisfy ground truth: " << safe << "\n";
  return 0;
}

int cmd_evaluate(const std::string& report_path) {
  std::cout << sl::format_summary(sl::load_report_summary(report_path));
  return 0;
}

int cmd_serve(const std::string& config_path, int port, const std::optional<std::uint64_t>& seed,
              const std::optional<std::string>& out, const std::optional<std::string>& static_dir,
              bool exit_when_done, bool quiet) {
  auto cfg = load_config(config_path, std::string("interactive"), seed, out);

  sl::SessionBroker broker;
  sl::RunMonitor monitor;
  std::optional<std::filesystem::path> assets;
  if (static_dir) assets = *static_dir;
  sl::ApiServer server(broker, monitor, cfg.environment.env, assets);
  int bound = server.bind("0.0.0.0", port);
  if (bound < 0) throw std::runtime_error("cannot bind port " + std::to_string(port));
  std::cerr << "listening on http://localhost:" << bound << "\n";

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  struct Tee : sl::LoopObserver {
    sl::LoopObserver* a;
    sl::LoopObserver* b;
    Tee(sl::LoopObserver* x, sl::LoopObserver* y) : a(x), b(y) {}
    void on_phase(std::string_view p, int i) override {
      a->on_phase(p, i);
      b->on_phase(p, i);
    }
    void on_record(const sl::IterationRecord& r, const sl::RunReport& rep) override {
      a->on_record(r, rep);
      b->on_record(r, rep);
    }
  };
  ConsoleObserver console(quiet);
  Tee tee(&monitor, &console);

  std::atomic<bool> loop_done{false};
  std::optional<sl::RunStatus> final_status;
  std::jthread loop([&] {
    try {
      auto report = sl::run_joint_loop(cfg, broker, &tee);
      monitor.finish(report);
      final_status = report.status;
      print_report_location(cfg, report);
    } catch (const sl::BrokerClosed&) {
      monitor.fail("interrupted");
    } catch (const std::exception& e) {
      monitor.fail(e.what());
      std::cerr << "error: " << e.what() << "\n";
    }
    loop_done = true;
  });

  std::jthread watcher([&](std::stop_token st) {
    while (!st.stop_requested()) {
      if (g_interrupted || (exit_when_done && loop_done)) {
        broker.close();
        server.stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });

  server.serve();
  broker.close();
  loop.join();
  watcher.request_stop();
  if (!final_status) return kExitError;
  return exit_code(*final_status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mine temporal-logic safety constraints and learn policies that respect them"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run the joint mining/learning loop");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "Labeling mode")->check(CLI::IsMember({"oracle", "interactive"}));
  run->add_option("--seed", seed, "Override the run seed");
  run->add_option("--out", out, "Override the output directory");
  run->add_flag("--quiet,-q", quiet, "No per-iteration progress");

  std::string dataset_path;
  std::optional<std::string> stats;
  auto* mine = app.add_subcommand("mine", "Mine a formula from a labeled dataset");
  mine->add_option("--dataset", dataset_path, "Labeled dataset (JSON)")->required()->check(CLI::ExistingFile);
  mine->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  mine->add_option("--seed", seed, "Override the run seed");
  mine->add_option("--stats", stats, "Write per-generation stats CSV here instead of stdout");

  std::string formula;
  std::optional<std::string> qtable_out;
  int rollouts = 100;
  auto* train = app.add_subcommand("train", "Train a policy against a formula");
  train->add_option("--formula", formula, "STL formula")->required();
  train->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override the run seed");
  train->add_option("--qtable", qtable_out, "Write the Q-table (JSON) here");
  train->add_option("--rollouts", rollouts, "Evaluation rollouts")->check(CLI::PositiveNumber);

  std::string report_path;
  auto* evaluate = app.add_subcommand("evaluate", "Summarize a run report");
  evaluate->add_option("--report", report_path, "report.json")->required();

  int port = 8080;
  std::optional<std::string> static_dir;
  bool exit_when_done = false;
  auto* serve = app.add_subcommand("serve", "Run interactively behind the HTTP labeling API");
  serve->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "Port (0 picks a free one)")->required()->check(CLI::Range(0, 65535));
  serve->add_option("--seed", seed, "Override the run seed");
  serve->add_option("--out", out, "Override the output directory");
  serve->add_option("--static", static_dir, "Serve a console bundle from this directory")->check(CLI::ExistingDirectory);
  serve->add_flag("--exit-when-done", exit_when_done, "Stop serving once the loop finishes");
  serve->add_flag("--quiet,-q", quiet, "No per-iteration progress");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, mode, seed, out, quiet);
    if (*mine) return cmd_mine(dataset_path, config_path, seed, stats);
    if (*train) return cmd_train(formula, config_path, seed, qtable_out, rollouts);
    if (*evaluate) return cmd_evaluate(report_path);
    if (*serve) return cmd_serve(config_path, port, seed, out, static_dir, exit_when_done, quiet);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
