#pragma once

// The joint loop: mine a constraint from the labeled data, train a policy
// against it, roll the policy out, have the rollouts labeled, merge, repeat
// until a rollout batch is safe often enough.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "safelearn/broker.hpp"
#include "safelearn/config.hpp"
#include "safelearn/mining.hpp"
#include "safelearn/qlearning.hpp"

namespace safelearn {

struct IterationRecord {
  int iteration = 0;
  std::string formula;
  double fitness = 0.0;
  double unsafe_fraction = 0.0;
  double mcr = 0.0;
  /// Disabled (nullopt) in interactive mode.
  std::optional<double> policy_gap;
  std::size_t dataset_size = 0;
  double duration_seconds = 0.0;
};

enum class RunStatus { Running, Converged, IterationCapped };
std::string_view to_string(RunStatus s) noexcept;

struct RunReport {
  RunStatus status = RunStatus::Running;
  std::vector<IterationRecord> records;
  std::string final_formula;
  /// Path of the final Q-table relative to the run directory.
  std::string final_policy;
  double final_mcr = 0.0;
  std::vector<double> mcr_folds;
  double mcr_mean = 0.0;
  double mcr_stderr = 0.0;
};

/// Wall-clock durations are left out so identical runs give identical bytes.
nlohmann::json report_to_json(const RunReport& report);

/// Sample mean and standard error (sample std / sqrt(k)); stderr is 0 for k < 2.
std::pair<double, double> mean_and_stderr(std::span<const double> values);

/// MCR on each of k stratified folds of `heldout`, fold assignment seeded.
std::vector<double> mcr_folds(const stl::Formula& phi, const mining::LabeledDataset& heldout,
                              int k, std::uint64_t seed);

/// Phase and record notifications for status readers. Called from the loop
/// thread.
class LoopObserver {
 public:
  virtual ~LoopObserver() = default;
  virtual void on_phase(std::string_view /*phase*/, int /*iteration*/) {}
  virtual void on_record(const IterationRecord& /*record*/, const RunReport& /*partial*/) {}
};

struct LoopState {
  mining::LabeledDataset train;
  mining::LabeledDataset heldout;
  std::optional<rl::Policy> reference;
  std::vector<IterationRecord> records;
  std::optional<stl::Formula> formula;
  std::optional<rl::QTable> qtable;
  /// (iteration, stats) for every miner generation so far.
  std::vector<std::pair<int, mining::GenerationStats>> generation_stats;
};

struct BootstrapData {
  mining::LabeledDataset train;
  mining::LabeledDataset heldout;
};

/// Random walks from uniform starts, labeled, then split per label with
/// round(heldout_fraction * n) traces held out in total.
BootstrapData bootstrap(const RunConfig& cfg, Labeler& labeler);

/// Mine, train, roll out, label, merge, measure. Appends the record to
/// `state.records` and returns it. Writes iter_NN/ artifacts when `run_dir`
/// is non-empty.
IterationRecord run_iteration(LoopState& state, const RunConfig& cfg, Labeler& labeler,
                              LoopObserver* observer = nullptr,
                              const std::filesystem::path& run_dir = {});

/// Validates the config, bootstraps, iterates to convergence or the cap and
/// persists every artifact under cfg.output_dir (skipped when empty).
RunReport run_joint_loop(const RunConfig& cfg, Labeler& labeler, LoopObserver* observer = nullptr);

/// Labeler matching cfg.loop.mode for oracle runs.
OracleLabeler make_oracle(const RunConfig& cfg);

struct ReportSummary {
  std::size_t iterations = 0;
  std::string status;
  double first_unsafe = 0.0;
  double last_unsafe = 0.0;
  double mcr_mean = 0.0;
  double mcr_stderr = 0.0;
  std::size_t mcr_resplits = 0;
  std::vector<std::optional<double>> policy_gaps;
  std::string final_formula;
};

/// Throws std::runtime_error on a missing or corrupt report.
ReportSummary summarize_report(const nlohmann::json& report);
ReportSummary load_report_summary(const std::filesystem::path& path);
std::string format_summary(const ReportSummary& s);

}  // namespace safelearn
