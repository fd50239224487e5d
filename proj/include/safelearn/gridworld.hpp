#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "safelearn/formula.hpp"
#include "safelearn/trace.hpp"

namespace safelearn::grid {

/// Fixed order; also the greedy tie-break order.
enum class Action : std::uint8_t { Up, Down, Left, Right, Stay };
inline constexpr int kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kActions{Action::Up, Action::Down, Action::Left,
                                                          Action::Right, Action::Stay};

std::string_view to_string(Action a) noexcept;

struct Cell {
  int x = 0;
  int y = 0;

  bool operator==(const Cell&) const = default;
};

/// Deterministic grid navigation. y grows upward; moves into a wall stay put.
struct GridEnv {
  int width = 6;
  int height = 6;
  Cell start{1, 1};
  int episode_length = 13;
  /// Probability that an executed action is replaced by a uniformly random one.
  double transition_noise = 0.0;

  bool contains(Cell c) const noexcept {
    return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
  }
  int num_cells() const noexcept { return width * height; }

  /// Throws ConfigError when dimensions, start or noise are out of range.
  void validate() const;
};

/// Default hidden constraint for an n x n grid: reach the far corner cell by
/// t = 2(n-1).
stl::Formula default_ground_truth(int size);

/// Square grid preset with the default ground truth and episode length
/// horizon + slack.
struct Preset {
  GridEnv env;
  stl::Formula ground_truth;
};
Preset make_preset(int size, int slack = 2);

Cell step(const GridEnv& env, Cell cell, Action action);

/// Random walk from a uniformly random start with uniform random actions.
Trace random_trace(const GridEnv& env, int length, std::uint64_t seed);

/// Maps (cell, t) to an action; must be total for t < length - 1.
using PolicyFn = std::function<Action(Cell, int)>;

/// Rolls out `policy` from env.start. With probability `exploration` each
/// step uses a uniformly random action instead.
Trace rollout_policy(const GridEnv& env, const PolicyFn& policy, int length, double exploration,
                     std::uint64_t seed);
Trace rollout_policy_from(const GridEnv& env, Cell start, const PolicyFn& policy, int length,
                          double exploration, std::uint64_t seed);

/// {width, height, start: [x, y], episode_length, ground_truth_formula, transition_noise}
struct EnvConfig {
  GridEnv env;
  stl::Formula ground_truth;
};
EnvConfig env_config_from_json(const nlohmann::json& j);
nlohmann::json env_config_to_json(const EnvConfig& cfg);

}  // namespace safelearn::grid
