#include "safelearn/gridworld.hpp"

#include <string>
#include <vector>

#include "safelearn/error.hpp"
#include "safelearn/rng.hpp"

namespace safelearn::grid {

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::Stay: return "stay";
  }
  return "?";
}

void GridEnv::validate() const {
  if (width < 1 || height < 1) throw ConfigError("grid dimensions must be positive");
  if (!contains(start)) throw ConfigError("start cell lies outside the grid");
  if (episode_length < 1) throw ConfigError("episode_length must be positive");
  if (transition_noise < 0.0 || transition_noise > 1.0) {
    throw ConfigError("transition_noise must lie in [0, 1]");
  }
}

stl::Formula default_ground_truth(int size) {
  using namespace stl;
  const double goal = size - 1.5;
  return eventually({0, 2 * (size - 1)}, conjunction(predicate(Dim::X, Cmp::Ge, goal),
                                                     predicate(Dim::Y, Cmp::Ge, goal)));
}

Preset make_preset(int size, int slack) {
  if (size < 2) throw ConfigError("grid preset size must be at least 2");
  Preset p;
  p.ground_truth = default_ground_truth(size);
  p.env.width = size;
  p.env.height = size;
  p.env.start = {1, 1};
  p.env.episode_length = stl::horizon(p.ground_truth) + 1 + slack;
  return p;
}

Cell step(const GridEnv& env, Cell cell, Action action) {
  Cell next = cell;
  switch (action) {
    case Action::Up: ++next.y; break;
    case Action::Down: --next.y; break;
    case Action::Left: --next.x; break;
    case Action::Right: ++next.x; break;
    case Action::Stay: break;
  }
  return env.contains(next) ? next : cell;
}

namespace {

Action random_action(Rng& rng) { return kActions[static_cast<std::size_t>(uniform_int(rng, 0, kNumActions - 1))]; }

Sample to_sample(Cell c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }

Action apply_noise(const GridEnv& env, Action a, Rng& rng) {
  if (env.transition_noise > 0.0 && bernoulli(rng, env.transition_noise)) return random_action(rng);
  return a;
}

}  // namespace

Trace random_trace(const GridEnv& env, int length, std::uint64_t seed) {
  Rng rng(seed);
  Cell c{uniform_int(rng, 0, env.width - 1), uniform_int(rng, 0, env.height - 1)};
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(length));
  samples.push_back(to_sample(c));
  for (int t = 1; t < length; ++t) {
    c = step(env, c, apply_noise(env, random_action(rng), rng));
    samples.push_back(to_sample(c));
  }
  return Trace(std::move(samples));
}

Trace rollout_policy_from(const GridEnv& env, Cell start, const PolicyFn& policy, int length,
                          double exploration, std::uint64_t seed) {
  Rng rng(seed);
  Cell c = start;
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(length));
  samples.push_back(to_sample(c));
  for (int t = 0; t + 1 < length; ++t) {
    Action a = (exploration > 0.0 && bernoulli(rng, exploration)) ? random_action(rng) : policy(c, t);
    c = step(env, c, apply_noise(env, a, rng));
    samples.push_back(to_sample(c));
  }
  return Trace(std::move(samples));
}

Trace rollout_policy(const GridEnv& env, const PolicyFn& policy, int length, double exploration,
                     std::uint64_t seed) {
  return rollout_policy_from(env, env.start, policy, length, exploration, seed);
}

EnvConfig env_config_from_json(const nlohmann::json& j) {
  EnvConfig cfg;
  int size = j.value("size", 0);
  if (size > 0) {
    Preset p = make_preset(size, j.value("slack", 2));
    cfg.env = p.env;
    cfg.ground_truth = p.ground_truth;
  } else {
    cfg.ground_truth = default_ground_truth(6);
  }
  cfg.env.width = j.value("width", cfg.env.width);
  cfg.env.height = j.value("height", cfg.env.height);
  if (j.contains("start")) {
    const auto& s = j.at("start");
    cfg.env.start = {s.at(0).get<int>(), s.at(1).get<int>()};
  }
  if (j.contains("ground_truth_formula")) {
    cfg.ground_truth = stl::parse_formula(j.at("ground_truth_formula").get<std::string>());
  }
  cfg.env.episode_length =
      j.value("episode_length", stl::horizon(cfg.ground_truth) + 1 + j.value("slack", 2));
  cfg.env.transition_noise = j.value("transition_noise", 0.0);
  cfg.env.validate();
  if (stl::horizon(cfg.ground_truth) + 1 > cfg.env.episode_length) {
    throw ConfigError("ground truth horizon does not fit into episode_length");
  }
  return cfg;
}

nlohmann::json env_config_to_json(const EnvConfig& cfg) {
  return {{"width", cfg.env.width},
          {"height", cfg.env.height},
          {"start", {cfg.env.start.x, cfg.env.start.y}},
          {"episode_length", cfg.env.episode_length},
          {"ground_truth_formula", stl::format_formula(cfg.ground_truth)},
          {"transition_noise", cfg.env.transition_noise}};
}

}  // namespace safelearn::grid
