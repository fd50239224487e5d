#pragma once

// Evolutionary synthesis of formulas that separate safe from unsafe traces.
//
// Fitness of a candidate phi on (D_p, D_n):
//
//   N+  = |{w in D_p : rho(phi, w) >= 0}|
//   N-  = |{w in D_n : rho(phi, w) <  0}|
//   fit = N+ + N- + |mean_p rho - mean_n rho|
//
// The margin term is dropped when either partition is empty. Formulas whose
// horizon does not fit the traces get -infinity.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "safelearn/formula.hpp"
#include "safelearn/gridworld.hpp"
#include "safelearn/rng.hpp"
#include "safelearn/trace.hpp"

namespace safelearn::mining {

inline constexpr double kUnevaluable = -std::numeric_limits<double>::infinity();

struct LabeledDataset {
  std::vector<Trace> positives;
  std::vector<Trace> negatives;

  std::size_t size() const noexcept { return positives.size() + negatives.size(); }
  bool empty() const noexcept { return size() == 0; }
};

/// {"positives": [trace...], "negatives": [trace...]}
nlohmann::json dataset_to_json(const LabeledDataset& data);
LabeledDataset dataset_from_json(const nlohmann::json& j);

struct Individual {
  stl::Formula formula;
  std::optional<double> fitness;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct MinerConfig {
  int population_size = 128;
  int max_generations = 60;
  int max_depth = 4;
  double mutation_prob = 0.3;
  double crossover_prob = 0.9;
  Range x_range{0.0, 5.0};
  Range y_range{0.0, 5.0};
  /// Interval bounds are sampled from [0, max_time]; normally episode length - 1.
  int max_time = 12;
  int plateau_patience = 15;

  /// Throws ConfigError.
  void validate() const;
  const Range& range(stl::Dim d) const noexcept { return d == stl::Dim::X ? x_range : y_range; }
};

/// Defaults sized to the environment: threshold ranges span the grid and
/// intervals span the episode.
MinerConfig miner_config_for(const grid::GridEnv& env);
MinerConfig miner_config_from_json(const nlohmann::json& j, const grid::GridEnv& env);
nlohmann::json miner_config_to_json(const MinerConfig& cfg);

struct Population {
  std::vector<Individual> individuals;
  int generation = 0;
};

struct FitnessTerms {
  int true_positives = 0;
  int true_negatives = 0;
  double margin = 0.0;
  double total() const noexcept { return true_positives + true_negatives + margin; }
};

/// Count and margin terms separately; nullopt when the formula is not
/// evaluable on every trace.
std::optional<FitnessTerms> fitness_terms(const stl::Formula& phi, const LabeledDataset& data);

double fitness(const stl::Formula& phi, const LabeledDataset& data);

/// Misclassification rate under the rho >= 0 decision rule. Throws
/// EmptyDatasetError on an empty dataset.
double mcr(const stl::Formula& phi, const LabeledDataset& data);

/// Depth-limited random tree. `depth_budget` of 1 forces a predicate.
stl::Formula random_formula(const MinerConfig& cfg, int depth_budget, Rng& rng);
stl::Formula random_predicate(const MinerConfig& cfg, Rng& rng);

Population init_population(const MinerConfig& cfg, std::uint64_t seed);

Individual mutate(const Individual& ind, const MinerConfig& cfg, std::uint64_t seed);

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            const MinerConfig& cfg, std::uint64_t seed);

/// Preorder node addressing used by the genetic operators.
const stl::Formula& node_at(const stl::Formula& root, int index);
stl::Formula& node_at(stl::Formula& root, int index);

struct GenerationStats {
  int generation = 0;
  double best_fitness = kUnevaluable;
  double mean_fitness = kUnevaluable;
  std::string best_formula;
};

struct EvolveResult {
  stl::Formula best;
  double best_fitness = kUnevaluable;
  std::vector<GenerationStats> history;
};

/// Rank, cull the bottom half, refill by crossover and mutation; stops after
/// max_generations or when the best fitness has not improved for
/// plateau_patience generations. `incumbents` replace the first members of the
/// random initial population (warm start across outer iterations). Throws
/// EmptyDatasetError.
EvolveResult evolve(const LabeledDataset& data, const MinerConfig& cfg, std::uint64_t seed,
                    std::span<const stl::Formula> incumbents = {});

/// generation,best_fitness,mean_fitness,best_formula
std::string history_to_csv(const std::vector<GenerationStats>& history);

}  // namespace safelearn::mining
