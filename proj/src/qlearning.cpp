#include "safelearn/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "safelearn/error.hpp"
#include "safelearn/rng.hpp"
#include "safelearn/robustness.hpp"

namespace safelearn::rl {

double episode_reward(const stl::Formula& phi, const Trace& trace) {
  const double rho = stl::robustness(phi, trace, 0);
  return rho < 0.0 ? rho : rho + kSatisfactionBonus;
}

QTable::QTable(int width, int height, int episode_length)
    : width_(width), height_(height), length_(episode_length) {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                 static_cast<std::size_t>(episode_length) * grid::kNumActions;
  values_.assign(n, 0.0);
  visits_.assign(n, 0);
}

double QTable::max_value(Cell c, int t) const {
  const std::size_t base = state_index(c, t) * grid::kNumActions;
  return *std::max_element(values_.begin() + static_cast<std::ptrdiff_t>(base),
                           values_.begin() + static_cast<std::ptrdiff_t>(base + grid::kNumActions));
}

Action QTable::best_action(Cell c, int t) const {
  const std::size_t base = state_index(c, t) * grid::kNumActions;
  std::size_t best = 0;
  for (std::size_t a = 1; a < grid::kNumActions; ++a) {
    if (values_[base + a] > values_[base + best]) best = a;
  }
  return grid::kActions[best];
}

nlohmann::json qtable_to_json(const QTable& q) {
  nlohmann::json states = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (int t = 0; t < q.episode_length(); ++t) {
    for (int y = 0; y < q.height(); ++y) {
      for (int x = 0; x < q.width(); ++x) {
        states.push_back({x, y, t});
        nlohmann::json row = nlohmann::json::array();
        for (Action a : grid::kActions) row.push_back(q.value({x, y}, t, a));
        values.push_back(std::move(row));
      }
    }
  }
  nlohmann::json actions = nlohmann::json::array();
  for (Action a : grid::kActions) actions.push_back(std::string(grid::to_string(a)));
  return {{"states", std::move(states)}, {"actions", std::move(actions)}, {"values", std::move(values)}};
}

void LearnHyperparams::validate() const {
  if (episodes < 0) throw ConfigError("episodes must be non-negative");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in (0, 1]");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(epsilon_initial) || !prob(epsilon_final)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!prob(epsilon_decay_fraction)) throw ConfigError("epsilon_decay_fraction must lie in [0, 1]");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw ConfigError("alpha0 must lie in (0, 1]");
  // Robbins-Monro: sum alpha diverges and sum alpha^2 converges only for omega in (0.5, 1].
  if (!(omega > 0.5 && omega <= 1.0)) throw ConfigError("omega must lie in (0.5, 1]");
  if (!prob(exploring_start_prob)) throw ConfigError("exploring_start_prob must lie in [0, 1]");
  if (!prob(execution_noise)) throw ConfigError("execution_noise must lie in [0, 1]");
}

double LearnHyperparams::epsilon_at(int episode) const noexcept {
  const double span = epsilon_decay_fraction * episodes;
  if (span <= 0.0 || episode >= span) return epsilon_final;
  const double frac = episode / span;
  return epsilon_initial + (epsilon_final - epsilon_initial) * frac;
}

double LearnHyperparams::learning_rate(std::uint64_t prior_visits) const noexcept {
  return alpha0 / std::pow(1.0 + static_cast<double>(prior_visits), omega);
}

LearnHyperparams hyperparams_from_json(const nlohmann::json& j) {
  LearnHyperparams hp;
  hp.episodes = j.value("episodes", hp.episodes);
  hp.discount = j.value("discount", hp.discount);
  hp.epsilon_initial = j.value("epsilon_initial", hp.epsilon_initial);
  hp.epsilon_final = j.value("epsilon_final", hp.epsilon_final);
  hp.epsilon_decay_fraction = j.value("epsilon_decay_fraction", hp.epsilon_decay_fraction);
  hp.alpha0 = j.value("alpha0", hp.alpha0);
  hp.omega = j.value("omega", hp.omega);
  hp.exploring_start_prob = j.value("exploring_start_prob", hp.exploring_start_prob);
  hp.execution_noise = j.value("execution_noise", hp.execution_noise);
  hp.validate();
  return hp;
}

nlohmann::json hyperparams_to_json(const LearnHyperparams& hp) {
  return {{"episodes", hp.episodes},
          {"discount", hp.discount},
          {"epsilon_initial", hp.epsilon_initial},
          {"epsilon_final", hp.epsilon_final},
          {"epsilon_decay_fraction", hp.epsilon_decay_fraction},
          {"alpha0", hp.alpha0},
          {"omega", hp.omega},
          {"exploring_start_prob", hp.exploring_start_prob},
          {"execution_noise", hp.execution_noise}};
}

namespace {

Action random_action(Rng& rng) {
  return grid::kActions[static_cast<std::size_t>(uniform_int(rng, 0, grid::kNumActions - 1))];
}

}  // namespace

QTable train(const GridEnv& env, const stl::Formula& phi, const LearnHyperparams& hp,
             std::uint64_t seed) {
  hp.validate();
  const int length = env.episode_length;
  if (stl::horizon(phi) + 1 > length) {
    throw HorizonTooLongError("formula horizon " + std::to_string(stl::horizon(phi)) +
                              " exceeds episode length " + std::to_string(length) + " - 1");
  }
  QTable q(env.width, env.height, length);
  Rng rng(seed);
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(length));

  struct Transition {
    Cell cell;
    Action action;
    Cell next;
  };
  std::vector<Transition> episode_steps;
  episode_steps.reserve(static_cast<std::size_t>(length));

  auto update = [&](const Transition& tr, int t, double target) {
    auto& n = q.visits(tr.cell, t, tr.action);
    const double alpha = hp.learning_rate(n);
    ++n;
    double& v = q.value(tr.cell, t, tr.action);
    v += alpha * (target - v);
  };

  for (int episode = 0; episode < hp.episodes; ++episode) {
    const double epsilon = hp.epsilon_at(episode);
    Cell c = env.start;
    if (hp.exploring_start_prob > 0.0 && bernoulli(rng, hp.exploring_start_prob)) {
      c = {uniform_int(rng, 0, env.width - 1), uniform_int(rng, 0, env.height - 1)};
    }
    samples.clear();
    episode_steps.clear();
    samples.push_back({static_cast<double>(c.x), static_cast<double>(c.y)});

    for (int t = 0; t + 1 < length; ++t) {
      Action a = q.best_action(c, t);
      if (bernoulli(rng, epsilon)) a = random_action(rng);
      Action executed = a;
      if (hp.execution_noise > 0.0 && bernoulli(rng, hp.execution_noise)) executed = random_action(rng);
      if (env.transition_noise > 0.0 && bernoulli(rng, env.transition_noise)) executed = random_action(rng);
      const Cell next = grid::step(env, c, executed);
      samples.push_back({static_cast<double>(next.x), static_cast<double>(next.y)});
      episode_steps.push_back({c, a, next});
      c = next;
    }
    if (episode_steps.empty()) continue;

    // The reward only exists once the full trace is known, so the one-step
    // updates are applied after the episode, last transition first.
    const double reward = episode_reward(phi, Trace(samples));
    for (int t = static_cast<int>(episode_steps.size()) - 1; t >= 0; --t) {
      const Transition& tr = episode_steps[static_cast<std::size_t>(t)];
      const double target = t + 2 == length ? reward : hp.discount * q.max_value(tr.next, t + 1);
      update(tr, t, target);
    }
  }
  return q;
}

Policy::Policy(int width, int height, int episode_length, std::vector<Action> actions)
    : width_(width), height_(height), length_(episode_length), actions_(std::move(actions)) {}

Action Policy::operator()(Cell c, int t) const {
  const auto idx = (static_cast<std::size_t>(t) * static_cast<std::size_t>(height_) +
                    static_cast<std::size_t>(c.y)) *
                       static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(c.x);
  return actions_.at(idx);
}

Policy greedy_policy(const QTable& q) {
  std::vector<Action> actions;
  actions.reserve(q.num_states());
  for (int t = 0; t < q.episode_length(); ++t) {
    for (int y = 0; y < q.height(); ++y) {
      for (int x = 0; x < q.width(); ++x) actions.push_back(q.best_action({x, y}, t));
    }
  }
  return Policy(q.width(), q.height(), q.episode_length(), std::move(actions));
}

Policy tabulate_policy(const GridEnv& env, const grid::PolicyFn& rule) {
  std::vector<Action> actions;
  for (int t = 0; t < env.episode_length; ++t) {
    for (int y = 0; y < env.height; ++y) {
      for (int x = 0; x < env.width; ++x) actions.push_back(rule({x, y}, t));
    }
  }
  return Policy(env.width, env.height, env.episode_length, std::move(actions));
}

std::vector<double> policy_gap_samples(const Policy& reference, const Policy& learned,
                                       const GridEnv& env, const stl::Formula& phi_true,
                                       int n_samples, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(n_samples, 0)));
  auto ref_fn = [&](Cell c, int t) { return reference(c, t); };
  auto learned_fn = [&](Cell c, int t) { return learned(c, t); };
  for (int i = 0; i < n_samples; ++i) {
    const std::uint64_t s = derive_seed(seed, "gap", static_cast<std::uint64_t>(i));
    Rng rng(s);
    const Cell start{uniform_int(rng, 0, env.width - 1), uniform_int(rng, 0, env.height - 1)};
    const Trace a = grid::rollout_policy_from(env, start, ref_fn, env.episode_length, 0.0, s);
    const Trace b = grid::rollout_policy_from(env, start, learned_fn, env.episode_length, 0.0, s);
    out.push_back(episode_reward(phi_true, a) - episode_reward(phi_true, b));
  }
  return out;
}

double policy_gap(const Policy& reference, const Policy& learned, const GridEnv& env,
                  const stl::Formula& phi_true, int n_samples, std::uint64_t seed) {
  const auto samples = policy_gap_samples(reference, learned, env, phi_true, n_samples, seed);
  if (samples.empty()) return 0.0;
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

}  // namespace safelearn::rl
