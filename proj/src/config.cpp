#include "safelearn/config.hpp"

#include <fstream>

#include "safelearn/error.hpp"

namespace safelearn {

void RunConfig::validate() const {
  environment.env.validate();
  miner.validate();
  learner.validate();
  const auto& l = loop;
  if (l.bootstrap_traces < 1 || l.rollouts_per_iteration < 1 || l.max_outer_iterations < 1 ||
      l.mcr_resplits < 1 || l.gap_samples < 1 || l.reference_episode_multiplier < 1) {
    throw ConfigError("loop counts must be at least 1");
  }
  if (!(l.safe_fraction_threshold > 0.0 && l.safe_fraction_threshold <= 1.0)) {
    throw ConfigError("safe_fraction_threshold must lie in (0, 1]");
  }
  if (!(l.rollout_exploration >= 0.0 && l.rollout_exploration <= 1.0)) {
    throw ConfigError("rollout_exploration must lie in [0, 1]");
  }
  if (!(l.heldout_fraction >= 0.0 && l.heldout_fraction < 1.0)) {
    throw ConfigError("heldout_fraction must lie in [0, 1)");
  }
  if (miner.max_time != environment.env.episode_length - 1) {
    throw ConfigError("miner interval range must match the episode length");
  }
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  const auto block = [&](const char* name) { return j.contains(name) ? j.at(name) : nlohmann::json::object(); };

  cfg.environment = grid::env_config_from_json(block("environment"));
  cfg.miner = mining::miner_config_from_json(block("miner"), cfg.environment.env);

  const auto loop = block("loop");
  LoopConfig& l = cfg.loop;
  l.bootstrap_traces = loop.value("bootstrap_traces", l.bootstrap_traces);
  l.rollouts_per_iteration = loop.value("rollouts_per_iteration", l.rollouts_per_iteration);
  l.rollout_exploration = loop.value("rollout_exploration", l.rollout_exploration);
  l.safe_fraction_threshold = loop.value("safe_fraction_threshold", l.safe_fraction_threshold);
  l.max_outer_iterations = loop.value("max_outer_iterations", l.max_outer_iterations);
  if (loop.contains("mode")) l.mode = labeling::mode_from_string(loop.at("mode").get<std::string>());
  l.heldout_fraction = loop.value("heldout_fraction", l.heldout_fraction);
  l.mcr_resplits = loop.value("mcr_resplits", l.mcr_resplits);
  l.gap_samples = loop.value("gap_samples", l.gap_samples);
  l.reference_episode_multiplier = loop.value("reference_episode_multiplier", l.reference_episode_multiplier);

  auto learner = block("learner");
  // the learner trains under the same perturbation its rollouts will see
  if (!learner.contains("execution_noise")) learner["execution_noise"] = l.rollout_exploration;
  cfg.learner = rl::hyperparams_from_json(learner);

  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  cfg.validate();
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  const auto& l = cfg.loop;
  return {{"environment", grid::env_config_to_json(cfg.environment)},
          {"miner", mining::miner_config_to_json(cfg.miner)},
          {"learner", rl::hyperparams_to_json(cfg.learner)},
          {"loop",
           {{"bootstrap_traces", l.bootstrap_traces},
            {"rollouts_per_iteration", l.rollouts_per_iteration},
            {"rollout_exploration", l.rollout_exploration},
            {"safe_fraction_threshold", l.safe_fraction_threshold},
            {"max_outer_iterations", l.max_outer_iterations},
            {"mode", std::string(labeling::to_string(l.mode))},
            {"heldout_fraction", l.heldout_fraction},
            {"mcr_resplits", l.mcr_resplits},
            {"gap_samples", l.gap_samples},
            {"reference_episode_multiplier", l.reference_episode_multiplier}}},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir.string()}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path.string() + ": " + e.what());
  }
}

}  // namespace safelearn
