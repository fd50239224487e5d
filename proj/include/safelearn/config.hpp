#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "safelearn/gridworld.hpp"
#include "safelearn/labeling.hpp"
#include "safelearn/mining.hpp"
#include "safelearn/qlearning.hpp"

namespace safelearn {

struct LoopConfig {
  int bootstrap_traces = 1000;
  int rollouts_per_iteration = 250;
  double rollout_exploration = 0.05;
  /// Converged once the safe fraction of a rollout batch reaches this.
  double safe_fraction_threshold = 0.95;
  int max_outer_iterations = 15;
  labeling::Mode mode = labeling::Mode::Oracle;
  double heldout_fraction = 0.2;
  /// Folds of the held-out split used for the MCR standard error.
  int mcr_resplits = 5;
  int gap_samples = 200;
  /// Reference policy budget as a multiple of learner episodes.
  int reference_episode_multiplier = 4;
};

struct RunConfig {
  grid::EnvConfig environment;
  mining::MinerConfig miner;
  rl::LearnHyperparams learner;
  LoopConfig loop;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs/latest";

  /// Throws ConfigError.
  void validate() const;
};

/// Every block is optional; missing fields take the defaults above.
///
///   {"environment": {...}, "miner": {...}, "learner": {...},
///    "loop": {...}, "seed": N, "output_dir": "..."}
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace safelearn
