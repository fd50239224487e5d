#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "safelearn/formula.hpp"
#include "safelearn/gridworld.hpp"
#include "safelearn/trace.hpp"

namespace safelearn::rl {

using grid::Action;
using grid::Cell;
using grid::GridEnv;

/// Sparse terminal reward: rho below zero, rho + 100 at or above zero.
double episode_reward(const stl::Formula& phi, const Trace& trace);

inline constexpr double kSatisfactionBonus = 100.0;

/// Tabular values over (cell, t) x action, t in [0, episode_length).
class QTable {
 public:
  QTable(int width, int height, int episode_length);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int episode_length() const noexcept { return length_; }
  std::size_t num_states() const noexcept { return values_.size() / grid::kNumActions; }

  std::size_t state_index(Cell c, int t) const noexcept {
    return (static_cast<std::size_t>(t) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(c.y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }

  double& value(Cell c, int t, Action a) { return values_[slot(c, t, a)]; }
  double value(Cell c, int t, Action a) const { return values_[slot(c, t, a)]; }
  std::uint64_t& visits(Cell c, int t, Action a) { return visits_[slot(c, t, a)]; }
  std::uint64_t visits(Cell c, int t, Action a) const { return visits_[slot(c, t, a)]; }

  double max_value(Cell c, int t) const;
  /// First maximizer in action order Up < Down < Left < Right < Stay.
  Action best_action(Cell c, int t) const;

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::uint64_t>& visit_counts() const noexcept { return visits_; }

  bool operator==(const QTable&) const = default;

 private:
  int width_;
  int height_;
  int length_;
  std::vector<double> values_;
  std::vector<std::uint64_t> visits_;

  std::size_t slot(Cell c, int t, Action a) const noexcept {
    return state_index(c, t) * grid::kNumActions + static_cast<std::size_t>(a);
  }
};

/// {states: [[x, y, t], ...], actions: [...], values: [[q_up, ...], ...]}
nlohmann::json qtable_to_json(const QTable& q);

struct LearnHyperparams {
  int episodes = 50000;
  double discount = 0.99;
  double epsilon_initial = 1.0;
  double epsilon_final = 0.05;
  /// Fraction of episodes over which epsilon decays linearly.
  double epsilon_decay_fraction = 0.6;
  double alpha0 = 1.0;
  /// alpha = alpha0 / (1 + N(s,a))^omega; omega in (0.5, 1].
  double omega = 0.55;
  /// Probability that an episode starts from a uniformly random cell instead
  /// of env.start.
  double exploring_start_prob = 0.5;
  /// Probability that the executed action is uniformly random, modelling the
  /// exploration the policy will be rolled out with. Treated as part of the
  /// transition dynamics; updates are credited to the chosen action.
  double execution_noise = 0.05;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  double epsilon_at(int episode) const noexcept;
  double learning_rate(std::uint64_t prior_visits) const noexcept;
};

LearnHyperparams hyperparams_from_json(const nlohmann::json& j);
nlohmann::json hyperparams_to_json(const LearnHyperparams& hp);

/// One-step Q-learning with zero intermediate reward and episode_reward on the
/// terminal transition. Updates of an episode are applied once its trace is
/// complete, latest transition first. Throws HorizonTooLongError when the formula cannot be
/// evaluated on an episode.
QTable train(const GridEnv& env, const stl::Formula& phi, const LearnHyperparams& hp,
             std::uint64_t seed);

class Policy {
 public:
  Policy(int width, int height, int episode_length, std::vector<Action> actions);

  Action operator()(Cell c, int t) const;
  int episode_length() const noexcept { return length_; }
  bool operator==(const Policy&) const = default;

 private:
  int width_;
  int height_;
  int length_;
  std::vector<Action> actions_;
};

Policy greedy_policy(const QTable& q);

/// Builds a policy table from an arbitrary rule (used for fixtures and
/// reference constructions).
Policy tabulate_policy(const GridEnv& env, const grid::PolicyFn& rule);

/// Per-sample differences R(reference rollout) - R(learned rollout) against
/// phi_true. Sample i starts from a uniformly random cell drawn from
/// derive_seed(seed, "gap", i); rollouts are greedy.
std::vector<double> policy_gap_samples(const Policy& reference, const Policy& learned,
                                       const GridEnv& env, const stl::Formula& phi_true,
                                       int n_samples, std::uint64_t seed);

/// Mean of policy_gap_samples.
double policy_gap(const Policy& reference, const Policy& learned, const GridEnv& env,
                  const stl::Formula& phi_true, int n_samples, std::uint64_t seed);

}  // namespace safelearn::rl
