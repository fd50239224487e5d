#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"
#include "safelearn/error.hpp"
#include "safelearn/gridworld.hpp"
#include "safelearn/qlearning.hpp"
#include "safelearn/robustness.hpp"
#include "support/oracles.hpp"

using namespace safelearn;
using namespace safelearn::grid;
using namespace safelearn::rl;

namespace {

double reward_at(double x) {
  // (x > 2) on a one-sample trace has robustness x - 2.
  return episode_reward(stl::parse_formula("(x > 2)"), oracle::trace_xy({x}, {0.0}));
}

double reward_for_rho(double rho) { return reward_at(2.0 + rho); }

LearnHyperparams quick(int episodes) {
  LearnHyperparams hp;
  hp.episodes = episodes;
  return hp;
}

/// Deterministic rollout of a stationary rule, independent of the library.
Trace walk(const GridEnv& env, Cell start, Action (*rule)(Cell), int length) {
  std::vector<Sample> s;
  Cell c = start;
  for (int t = 0; t < length; ++t) {
    s.push_back({double(c.x), double(c.y)});
    Action a = rule(c);
    int dx = a == Action::Right ? 1 : a == Action::Left ? -1 : 0;
    int dy = a == Action::Up ? 1 : a == Action::Down ? -1 : 0;
    c = {std::clamp(c.x + dx, 0, env.width - 1), std::clamp(c.y + dy, 0, env.height - 1)};
  }
  return Trace(std::move(s));
}

Action toward_goal(Cell c) { return c.x < 5 ? Action::Right : Action::Up; }
Action toward_origin(Cell c) { return c.x > 0 ? Action::Left : Action::Down; }

}  // namespace

TEST_SUITE("qlearning") {

TEST_CASE("episode reward") {
  CHECK(reward_for_rho(-2.0) == -2.0);
  CHECK(reward_for_rho(0.0) == 100.0);
  CHECK(reward_for_rho(3.5) == 103.5);

  // Largest trace value strictly below the threshold: x - 2 is exact here.
  double x = std::nextafter(2.0, 0.0);
  CHECK(reward_at(x) == x - 2.0);
  CHECK(reward_at(x) < 0.0);
  CHECK(reward_for_rho(0.0) - 0.0 == kSatisfactionBonus);
  CHECK(kSatisfactionBonus == 100.0);

  CHECK_THROWS_AS(episode_reward(stl::parse_formula("F[0,3](x > 1)"), oracle::trace_xy({0, 0}, {0, 0})),
                  TraceLengthError);
}

TEST_CASE("learning-rate and exploration schedules") {
  LearnHyperparams hp;
  hp.alpha0 = 0.7;
  hp.omega = 0.8;
  for (std::uint64_t n : {0ull, 1ull, 5ull, 100ull, 123456ull}) {
    CHECK(hp.learning_rate(n) == doctest::Approx(0.7 / std::pow(1.0 + double(n), 0.8)).epsilon(1e-12));
  }
  // Sum of alpha diverges (p-series with exponent <= 1) while the sum of
  // squares converges (exponent 2*omega > 1) exactly when omega in (0.5, 1].
  hp.omega = 0.5;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp.omega = 1.01;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp.omega = 1.0;
  CHECK_NOTHROW(hp.validate());
  hp.omega = 0.51;
  CHECK_NOTHROW(hp.validate());
  hp.alpha0 = 0.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);

  LearnHyperparams eps;
  eps.episodes = 1000;
  CHECK(eps.epsilon_at(0) == doctest::Approx(1.0));
  CHECK(eps.epsilon_at(300) == doctest::Approx(1.0 - 0.95 * 0.5));
  CHECK(eps.epsilon_at(600) == doctest::Approx(0.05));
  CHECK(eps.epsilon_at(999) == doctest::Approx(0.05));
}

TEST_CASE("hyperparameter JSON round trip") {
  LearnHyperparams hp;
  hp.episodes = 1234;
  hp.omega = 0.9;
  hp.exploring_start_prob = 0.25;
  auto back = hyperparams_from_json(hyperparams_to_json(hp));
  CHECK(back.episodes == 1234);
  CHECK(back.omega == 0.9);
  CHECK(back.exploring_start_prob == 0.25);
  CHECK(hyperparams_from_json(nlohmann::json::object()).episodes == LearnHyperparams{}.episodes);
}

TEST_CASE("zero episodes leave the table at zero") {
  auto preset = make_preset(6);
  auto q = train(preset.env, preset.ground_truth, quick(0), 1);
  for (double v : q.values()) CHECK(v == 0.0);
  for (auto n : q.visit_counts()) CHECK(n == 0u);
  CHECK(q.num_states() == 36u * 13u);
}

TEST_CASE("training is deterministic under a seed") {
  auto preset = make_preset(6);
  auto a = train(preset.env, preset.ground_truth, quick(2000), 5);
  auto b = train(preset.env, preset.ground_truth, quick(2000), 5);
  auto c = train(preset.env, preset.ground_truth, quick(2000), 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("formulas longer than the episode are refused") {
  auto preset = make_preset(6);
  CHECK_THROWS_AS(train(preset.env, stl::parse_formula("G[0,13](x > 1)"), quick(10), 1), HorizonTooLongError);
  CHECK_NOTHROW(train(preset.env, stl::parse_formula("G[0,12](x > 1)"), quick(10), 1));
}

TEST_CASE("Q values stay within the discounted reward bounds") {
  auto preset = make_preset(6);
  const auto& phi = preset.ground_truth;
  // |rho| of the fixture is at most the grid diagonal extent.
  const double rho_max = 5.0;
  const double lo = std::min(0.0, -rho_max);
  const double hi = std::max(0.0, rho_max + kSatisfactionBonus);
  auto hp = quick(3000);
  hp.discount = 0.9;
  auto q = train(preset.env, phi, hp, 3);
  for (double v : q.values()) {
    CHECK(std::isfinite(v));
    CHECK(v >= lo / (1 - hp.discount));
    CHECK(v <= hi / (1 - hp.discount));
  }
}

TEST_CASE("visit counts grow with training for every reachable state-action") {
  auto preset = make_preset(6);
  const auto& env = preset.env;
  auto min_visits = [&](int episodes) {
    auto q = train(env, preset.ground_truth, quick(episodes), 11);
    std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
    // Actions are taken at t = 0..L-2; exploring starts make every cell
    // reachable at every such t.
    for (int t = 0; t < env.episode_length - 1; ++t) {
      for (int x = 0; x < env.width; ++x) {
        for (int y = 0; y < env.height; ++y) {
          for (Action a : kActions) m = std::min(m, q.visits({x, y}, t, a));
        }
      }
    }
    return m;
  };
  auto small = min_visits(10000);
  auto large = min_visits(40000);
  CHECK(small >= 1u);
  CHECK(large > 2 * small);
}

TEST_CASE("greedy policy tie-breaking") {
  QTable q(6, 6, 13);
  auto pi = greedy_policy(q);
  for (int t = 0; t < 13; ++t) CHECK(pi({3, 2}, t) == Action::Up);

  q.value({2, 2}, 4, Action::Stay) = 1.0;
  CHECK(greedy_policy(q)({2, 2}, 4) == Action::Stay);
  CHECK(greedy_policy(q)({2, 2}, 5) == Action::Up);

  q.value({2, 2}, 4, Action::Left) = 1.0;
  CHECK(greedy_policy(q)({2, 2}, 4) == Action::Left);

  QTable r(6, 6, 13);
  r.value({1, 1}, 0, Action::Down) = 0.3;
  r.value({1, 1}, 0, Action::Right) = 0.7;
  auto before = greedy_policy(r)({1, 1}, 0);
  for (Action a : kActions) r.value({1, 1}, 0, a) += 42.0;
  CHECK(greedy_policy(r)({1, 1}, 0) == before);
  CHECK(before == Action::Right);
}

TEST_CASE("Q-table JSON export") {
  QTable q(2, 2, 3);
  q.value({1, 0}, 2, Action::Left) = -1.5;
  auto j = qtable_to_json(q);
  CHECK(j["actions"] == nlohmann::json({"up", "down", "left", "right", "stay"}));
  REQUIRE(j["states"].size() == 12u);
  REQUIRE(j["values"].size() == 12u);
  bool found = false;
  for (std::size_t i = 0; i < 12; ++i) {
    if (j["states"][i] == nlohmann::json({1, 0, 2})) {
      CHECK(j["values"][i][2] == -1.5);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("learner reaches the 6x6 goal") {
  auto preset = make_preset(6);
  auto q = train(preset.env, preset.ground_truth, quick(20000), 1);
  auto pi = greedy_policy(q);
  auto w = rollout_policy(preset.env, pi, preset.env.episode_length, 0.0, 0);
  CHECK(stl::satisfies(preset.ground_truth, w));
}

TEST_CASE("policy gap of a policy with itself is exactly zero") {
  auto preset = make_preset(6);
  auto q = train(preset.env, preset.ground_truth, quick(2000), 2);
  auto pi = greedy_policy(q);
  for (double s : policy_gap_samples(pi, pi, preset.env, preset.ground_truth, 100, 7)) CHECK(s == 0.0);
  CHECK(policy_gap(pi, pi, preset.env, preset.ground_truth, 100, 7) == 0.0);
}

TEST_CASE("policy gap agrees with an exhaustive per-start oracle") {
  auto preset = make_preset(6);
  const auto& env = preset.env;
  const auto& phi = preset.ground_truth;
  auto ref = tabulate_policy(env, [](Cell c, int) { return toward_goal(c); });
  auto bad = tabulate_policy(env, [](Cell c, int) { return toward_origin(c); });

  std::set<double> per_start;
  double exhaustive = 0.0;
  for (int x = 0; x < env.width; ++x) {
    for (int y = 0; y < env.height; ++y) {
      auto a = walk(env, {x, y}, toward_goal, env.episode_length);
      auto b = walk(env, {x, y}, toward_origin, env.episode_length);
      double d = episode_reward(phi, a) - episode_reward(phi, b);
      per_start.insert(d);
      exhaustive += d / env.num_cells();
      bool b_in_goal_at_start = x == 5 && y == 5;
      if (!b_in_goal_at_start) {
        // Reference satisfies, the other never does: 100 plus a robustness gap.
        CHECK(d >= 100.0);
        CHECK(d <= 100.0 + 2 * 5.0);
      }
    }
  }

  auto samples = policy_gap_samples(ref, bad, env, phi, 4000, 99);
  for (double s : samples) CHECK(per_start.count(s) == 1);
  double mean = policy_gap(ref, bad, env, phi, 4000, 99);
  // Starts are uniform: per-start values lie in [~0, 110], so sd <= ~30.
  CHECK(std::abs(mean - exhaustive) < 4 * 30.0 / std::sqrt(4000.0));
}

TEST_CASE("policy gap samples follow a prefix-stable seed stream") {
  auto preset = make_preset(6);
  auto ref = tabulate_policy(preset.env, [](Cell c, int) { return toward_goal(c); });
  auto bad = tabulate_policy(preset.env, [](Cell c, int) { return toward_origin(c); });
  auto half = policy_gap_samples(ref, bad, preset.env, preset.ground_truth, 50, 4);
  auto full = policy_gap_samples(ref, bad, preset.env, preset.ground_truth, 100, 4);
  REQUIRE(full.size() == 100u);
  for (std::size_t i = 0; i < 50; ++i) CHECK(half[i] == full[i]);
}

}  // TEST_SUITE
