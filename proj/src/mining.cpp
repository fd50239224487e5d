#include "safelearn/mining.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "safelearn/error.hpp"
#include "safelearn/parallel.hpp"
#include "safelearn/robustness.hpp"

namespace safelearn::mining {

using stl::Formula;
using stl::Kind;

nlohmann::json dataset_to_json(const LabeledDataset& data) {
  nlohmann::json pos = nlohmann::json::array();
  nlohmann::json neg = nlohmann::json::array();
  for (const auto& t : data.positives) pos.push_back(trace_to_json(t));
  for (const auto& t : data.negatives) neg.push_back(trace_to_json(t));
  return {{"positives", std::move(pos)}, {"negatives", std::move(neg)}};
}

LabeledDataset dataset_from_json(const nlohmann::json& j) {
  LabeledDataset data;
  for (const auto& t : j.at("positives")) data.positives.push_back(trace_from_json(t));
  for (const auto& t : j.at("negatives")) data.negatives.push_back(trace_from_json(t));
  return data;
}

void MinerConfig::validate() const {
  if (population_size < 2 || population_size % 2 != 0) {
    throw ConfigError("population_size must be even and at least 2");
  }
  if (max_generations < 1) throw ConfigError("max_generations must be at least 1");
  if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(mutation_prob) || !prob(crossover_prob)) {
    throw ConfigError("operator probabilities must lie in [0, 1]");
  }
  if (!(x_range.lo <= x_range.hi) || !(y_range.lo <= y_range.hi)) {
    throw ConfigError("threshold ranges must satisfy lo <= hi");
  }
  if (max_time < 0) throw ConfigError("max_time must be non-negative");
  if (plateau_patience < 1) throw ConfigError("plateau_patience must be at least 1");
}

MinerConfig miner_config_for(const grid::GridEnv& env) {
  MinerConfig cfg;
  cfg.x_range = {0.0, static_cast<double>(env.width - 1)};
  cfg.y_range = {0.0, static_cast<double>(env.height - 1)};
  cfg.max_time = env.episode_length - 1;
  return cfg;
}

MinerConfig miner_config_from_json(const nlohmann::json& j, const grid::GridEnv& env) {
  MinerConfig cfg = miner_config_for(env);
  cfg.population_size = j.value("population_size", cfg.population_size);
  cfg.max_generations = j.value("max_generations", cfg.max_generations);
  cfg.max_depth = j.value("max_depth", cfg.max_depth);
  cfg.mutation_prob = j.value("mutation_prob", cfg.mutation_prob);
  cfg.crossover_prob = j.value("crossover_prob", cfg.crossover_prob);
  cfg.plateau_patience = j.value("plateau_patience", cfg.plateau_patience);
  if (j.contains("x_range")) cfg.x_range = {j["x_range"].at(0).get<double>(), j["x_range"].at(1).get<double>()};
  if (j.contains("y_range")) cfg.y_range = {j["y_range"].at(0).get<double>(), j["y_range"].at(1).get<double>()};
  cfg.validate();
  return cfg;
}

nlohmann::json miner_config_to_json(const MinerConfig& cfg) {
  return {{"population_size", cfg.population_size},
          {"max_generations", cfg.max_generations},
          {"max_depth", cfg.max_depth},
          {"mutation_prob", cfg.mutation_prob},
          {"crossover_prob", cfg.crossover_prob},
          {"x_range", {cfg.x_range.lo, cfg.x_range.hi}},
          {"y_range", {cfg.y_range.lo, cfg.y_range.hi}},
          {"max_time", cfg.max_time},
          {"plateau_patience", cfg.plateau_patience}};
}

// ---------------------------------------------------------------------------
// Fitness and MCR

std::optional<FitnessTerms> fitness_terms(const Formula& phi, const LabeledDataset& data) {
  const int h = stl::horizon(phi);
  auto evaluable = [h](const Trace& w) { return w.length() >= h + 1; };
  if (!std::all_of(data.positives.begin(), data.positives.end(), evaluable) ||
      !std::all_of(data.negatives.begin(), data.negatives.end(), evaluable)) {
    return std::nullopt;
  }
  FitnessTerms terms;
  double sum_p = 0.0;
  double sum_n = 0.0;
  for (const auto& w : data.positives) {
    const double rho = stl::robustness_unchecked(phi, w);
    if (rho >= 0.0) ++terms.true_positives;
    sum_p += rho;
  }
  for (const auto& w : data.negatives) {
    const double rho = stl::robustness_unchecked(phi, w);
    if (rho < 0.0) ++terms.true_negatives;
    sum_n += rho;
  }
  if (!data.positives.empty() && !data.negatives.empty()) {
    terms.margin = std::abs(sum_p / static_cast<double>(data.positives.size()) -
                            sum_n / static_cast<double>(data.negatives.size()));
  }
  return terms;
}

double fitness(const Formula& phi, const LabeledDataset& data) {
  const auto terms = fitness_terms(phi, data);
  return terms ? terms->total() : kUnevaluable;
}

double mcr(const Formula& phi, const LabeledDataset& data) {
  if (data.empty()) throw EmptyDatasetError("cannot compute misclassification rate on an empty dataset");
  std::size_t errors = 0;
  for (const auto& w : data.positives) errors += stl::satisfies(phi, w) ? 0 : 1;
  for (const auto& w : data.negatives) errors += stl::satisfies(phi, w) ? 1 : 0;
  return static_cast<double>(errors) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Random generation

namespace {

constexpr std::array<Kind, 7> kAllKinds{Kind::Predicate, Kind::Not,        Kind::And,  Kind::Or,
                                        Kind::Globally,  Kind::Eventually, Kind::Until};
constexpr std::array<Kind, 3> kUnaryKinds{Kind::Not, Kind::Globally, Kind::Eventually};
constexpr std::array<Kind, 3> kBinaryKinds{Kind::And, Kind::Or, Kind::Until};

stl::Interval random_interval(const MinerConfig& cfg, Rng& rng) {
  int a = uniform_int(rng, 0, cfg.max_time);
  int b = uniform_int(rng, 0, cfg.max_time);
  if (a > b) std::swap(a, b);
  return {a, b};
}

stl::Cmp random_cmp(Rng& rng) { return static_cast<stl::Cmp>(uniform_int(rng, 0, 3)); }

}  // namespace

Formula random_predicate(const MinerConfig& cfg, Rng& rng) {
  const auto dim = uniform_int(rng, 0, 1) == 0 ? stl::Dim::X : stl::Dim::Y;
  const auto cmp = random_cmp(rng);
  const Range& r = cfg.range(dim);
  return stl::predicate(dim, cmp, uniform_real(rng, r.lo, r.hi));
}

Formula random_formula(const MinerConfig& cfg, int depth_budget, Rng& rng) {
  if (depth_budget <= 1) return random_predicate(cfg, rng);
  const Kind kind = kAllKinds[static_cast<std::size_t>(uniform_int(rng, 0, kAllKinds.size() - 1))];
  switch (kind) {
    case Kind::Predicate: return random_predicate(cfg, rng);
    case Kind::Not: return stl::negation(random_formula(cfg, depth_budget - 1, rng));
    case Kind::Globally:
    case Kind::Eventually: {
      const auto iv = random_interval(cfg, rng);
      auto child = random_formula(cfg, depth_budget - 1, rng);
      return kind == Kind::Globally ? stl::globally(iv, std::move(child))
                                    : stl::eventually(iv, std::move(child));
    }
    case Kind::And:
    case Kind::Or: {
      auto lhs = random_formula(cfg, depth_budget - 1, rng);
      auto rhs = random_formula(cfg, depth_budget - 1, rng);
      return kind == Kind::And ? stl::conjunction(std::move(lhs), std::move(rhs))
                               : stl::disjunction(std::move(lhs), std::move(rhs));
    }
    case Kind::Until: {
      auto lhs = random_formula(cfg, depth_budget - 1, rng);
      const auto iv = random_interval(cfg, rng);
      auto rhs = random_formula(cfg, depth_budget - 1, rng);
      return stl::until(std::move(lhs), iv, std::move(rhs));
    }
  }
  return random_predicate(cfg, rng);
}

Population init_population(const MinerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Population pop;
  pop.individuals.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int i = 0; i < cfg.population_size; ++i) {
    pop.individuals.push_back({random_formula(cfg, cfg.max_depth, rng), std::nullopt});
  }
  return pop;
}

// ---------------------------------------------------------------------------
// Tree addressing

namespace {

template <typename F>
F* find_node(F& node, int& remaining) {
  if (remaining == 0) return &node;
  --remaining;
  for (auto& c : node.children) {
    if (F* hit = find_node(c, remaining)) return hit;
  }
  return nullptr;
}

struct NodeInfo {
  int index;
  int depth;  // root is 1
};

void collect(const Formula& f, int depth, int& counter, std::vector<NodeInfo>& out) {
  out.push_back({counter++, depth});
  for (const auto& c : f.children) collect(c, depth + 1, counter, out);
}

std::vector<NodeInfo> nodes_of(const Formula& f) {
  std::vector<NodeInfo> out;
  int counter = 0;
  collect(f, 1, counter, out);
  return out;
}

template <typename Pred>
std::vector<NodeInfo> nodes_where(const Formula& root, Pred pred) {
  std::vector<NodeInfo> out;
  for (const auto& n : nodes_of(root)) {
    if (pred(node_at(root, n.index))) out.push_back(n);
  }
  return out;
}

const NodeInfo& pick(const std::vector<NodeInfo>& nodes, Rng& rng) {
  return nodes[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(nodes.size()) - 1))];
}

// Replaces every non-predicate node sitting at the depth limit with a fresh
// random predicate.
void repair_depth(Formula& f, int depth, const MinerConfig& cfg, Rng& rng) {
  if (depth >= cfg.max_depth) {
    if (f.kind != Kind::Predicate) f = random_predicate(cfg, rng);
    return;
  }
  for (auto& c : f.children) repair_depth(c, depth + 1, cfg, rng);
}

void change_kind(Formula& node, Kind kind, const MinerConfig& cfg, Rng& rng) {
  const bool had_interval = stl::is_temporal(node.kind);
  node.kind = kind;
  if (stl::is_temporal(kind) && !had_interval) node.interval = random_interval(cfg, rng);
  if (!stl::is_temporal(kind)) node.interval = {};
}

stl::Cmp flipped(stl::Cmp c) {
  switch (c) {
    case stl::Cmp::Lt: return stl::Cmp::Gt;
    case stl::Cmp::Gt: return stl::Cmp::Lt;
    case stl::Cmp::Le: return stl::Cmp::Ge;
    case stl::Cmp::Ge: return stl::Cmp::Le;
  }
  return c;
}

enum class Mutation { Threshold, IntervalJitter, ComparatorFlip, KindSwap, SubtreeReplace };

}  // namespace

const Formula& node_at(const Formula& root, int index) {
  int remaining = index;
  const Formula* hit = find_node(root, remaining);
  if (!hit) throw std::out_of_range("formula node index out of range");
  return *hit;
}

Formula& node_at(Formula& root, int index) {
  int remaining = index;
  Formula* hit = find_node(root, remaining);
  if (!hit) throw std::out_of_range("formula node index out of range");
  return *hit;
}

// ---------------------------------------------------------------------------
// Genetic operators

Individual mutate(const Individual& ind, const MinerConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Formula f = ind.formula;

  const auto temporal = nodes_where(f, [](const Formula& n) { return stl::is_temporal(n.kind); });
  const auto operators = nodes_where(f, [](const Formula& n) { return n.kind != Kind::Predicate; });
  const auto predicates = nodes_where(f, [](const Formula& n) { return n.kind == Kind::Predicate; });

  std::vector<Mutation> options{Mutation::Threshold, Mutation::ComparatorFlip, Mutation::SubtreeReplace};
  if (!temporal.empty()) options.push_back(Mutation::IntervalJitter);
  if (!operators.empty()) options.push_back(Mutation::KindSwap);
  const Mutation m = options[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(options.size()) - 1))];

  switch (m) {
    case Mutation::Threshold: {
      Formula& node = node_at(f, pick(predicates, rng).index);
      const Range& r = cfg.range(node.pred.dim);
      const double scale = 0.1 * (r.hi - r.lo);
      const double noise = scale > 0.0 ? std::normal_distribution<double>(0.0, scale)(rng) : 0.0;
      node.pred.threshold = std::clamp(node.pred.threshold + noise, r.lo, r.hi);
      break;
    }
    case Mutation::ComparatorFlip: {
      Formula& node = node_at(f, pick(predicates, rng).index);
      node.pred.cmp = flipped(node.pred.cmp);
      break;
    }
    case Mutation::IntervalJitter: {
      Formula& node = node_at(f, pick(temporal, rng).index);
      const int delta = uniform_int(rng, 0, 1) == 0 ? -1 : 1;
      int& bound = uniform_int(rng, 0, 1) == 0 ? node.interval.lo : node.interval.hi;
      bound = std::clamp(bound + delta, 0, cfg.max_time);
      if (node.interval.lo > node.interval.hi) std::swap(node.interval.lo, node.interval.hi);
      break;
    }
    case Mutation::KindSwap: {
      Formula& node = node_at(f, pick(operators, rng).index);
      const auto& family = stl::arity(node.kind) == 1 ? kUnaryKinds : kBinaryKinds;
      std::vector<Kind> others;
      for (Kind k : family) {
        if (k != node.kind) others.push_back(k);
      }
      change_kind(node, others[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(others.size()) - 1))],
                  cfg, rng);
      break;
    }
    case Mutation::SubtreeReplace: {
      const NodeInfo target = pick(nodes_of(f), rng);
      node_at(f, target.index) = random_formula(cfg, cfg.max_depth - target.depth + 1, rng);
      break;
    }
  }
  return {std::move(f), std::nullopt};
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            const MinerConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Formula ca = a.formula;
  Formula cb = b.formula;
  const int ia = uniform_int(rng, 0, stl::node_count(ca) - 1);
  const int ib = uniform_int(rng, 0, stl::node_count(cb) - 1);
  std::swap(node_at(ca, ia), node_at(cb, ib));
  repair_depth(ca, 1, cfg, rng);
  repair_depth(cb, 1, cfg, rng);
  return {Individual{std::move(ca), std::nullopt}, Individual{std::move(cb), std::nullopt}};
}

// ---------------------------------------------------------------------------
// Generational loop

namespace {

void evaluate(std::vector<Individual>& individuals, const LabeledDataset& data) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < individuals.size(); ++i) {
    if (!individuals[i].fitness) pending.push_back(i);
  }
  parallel_for(pending.size(), [&](std::size_t k) {
    auto& ind = individuals[pending[k]];
    ind.fitness = fitness(ind.formula, data);
  });
}

}  // namespace

EvolveResult evolve(const LabeledDataset& data, const MinerConfig& cfg, std::uint64_t seed,
                    std::span<const Formula> incumbents) {
  if (data.empty()) throw EmptyDatasetError("cannot mine a formula from an empty dataset");
  cfg.validate();

  Population pop = init_population(cfg, derive_seed(seed, "init"));
  std::size_t slot = 0;
  for (const auto& f : incumbents) {
    if (slot == pop.individuals.size()) break;
    if (stl::is_well_formed(f, cfg.max_depth, cfg.max_time)) pop.individuals[slot++] = {f, std::nullopt};
  }
  Rng rng(derive_seed(seed, "select"));
  EvolveResult result;
  int stale = 0;
  const auto survivors = static_cast<std::size_t>(cfg.population_size / 2);

  for (int g = 0; g < cfg.max_generations; ++g) {
    pop.generation = g;
    evaluate(pop.individuals, data);
    std::stable_sort(pop.individuals.begin(), pop.individuals.end(),
                     [](const Individual& x, const Individual& y) { return *x.fitness > *y.fitness; });

    const Individual& leader = pop.individuals.front();
    if (result.history.empty() || *leader.fitness > result.best_fitness) {
      result.best = leader.formula;
      result.best_fitness = *leader.fitness;
      stale = 0;
    } else {
      ++stale;
    }

    double sum = 0.0;
    int finite = 0;
    for (const auto& ind : pop.individuals) {
      if (std::isfinite(*ind.fitness)) {
        sum += *ind.fitness;
        ++finite;
      }
    }
    result.history.push_back({g, result.best_fitness, finite > 0 ? sum / finite : kUnevaluable,
                              stl::format_formula(result.best)});

    if (stale >= cfg.plateau_patience || g + 1 == cfg.max_generations) break;

    pop.individuals.resize(survivors);
    std::uint64_t op_index = 0;
    auto parent = [&]() -> const Individual& {
      return pop.individuals[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(survivors) - 1))];
    };
    std::vector<Individual> children;
    children.reserve(survivors);
    while (children.size() < static_cast<std::size_t>(cfg.population_size) - survivors) {
      const Individual& pa = parent();
      const Individual& pb = parent();
      std::pair<Individual, Individual> kids{pa, pb};
      if (bernoulli(rng, cfg.crossover_prob)) {
        kids = crossover(pa, pb, cfg, derive_seed(seed, "crossover", (static_cast<std::uint64_t>(g) << 32) | op_index++));
      }
      for (Individual* kid : {&kids.first, &kids.second}) {
        if (children.size() + survivors >= static_cast<std::size_t>(cfg.population_size)) break;
        if (bernoulli(rng, cfg.mutation_prob)) {
          *kid = mutate(*kid, cfg, derive_seed(seed, "mutate", (static_cast<std::uint64_t>(g) << 32) | op_index++));
        }
        children.push_back(std::move(*kid));
      }
    }
    for (auto& c : children) pop.individuals.push_back(std::move(c));
  }
  return result;
}

std::string history_to_csv(const std::vector<GenerationStats>& history) {
  std::ostringstream out;
  out << "generation,best_fitness,mean_fitness,best_formula\n";
  for (const auto& s : history) {
    out << s.generation << ',' << s.best_fitness << ',' << s.mean_fitness << ",\"" << s.best_formula << "\"\n";
  }
  return out.str();
}

}  // namespace safelearn::mining
