#include "safelearn/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "safelearn/error.hpp"
#include "safelearn/robustness.hpp"

namespace safelearn {

namespace fs = std::filesystem;

std::string_view to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Converged: return "converged";
    case RunStatus::IterationCapped: return "iteration_capped";
  }
  return "unknown";
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string iteration_dir(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "iter_%02d", iteration);
  return buf;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back({{"iteration", r.iteration},
                       {"formula", r.formula},
                       {"fitness", r.fitness},
                       {"unsafe_fraction", r.unsafe_fraction},
                       {"mcr", r.mcr},
                       {"policy_gap", optional_number(r.policy_gap)},
                       {"dataset_size", r.dataset_size}});
  }
  nlohmann::json j = {{"status", std::string(to_string(report.status))},
                      {"iterations", std::move(records)},
                      {"final_formula", report.final_formula},
                      {"final_policy", report.final_policy},
                      {"final_mcr", report.final_mcr},
                      {"mcr_folds", report.mcr_folds},
                      {"mcr_mean", report.mcr_mean},
                      {"mcr_stderr", report.mcr_stderr}};
  if (!report.records.empty()) {
    j["first_unsafe_fraction"] = report.records.front().unsafe_fraction;
    j["last_unsafe_fraction"] = report.records.back().unsafe_fraction;
  } else {
    j["first_unsafe_fraction"] = nullptr;
    j["last_unsafe_fraction"] = nullptr;
  }
  return j;
}

std::pair<double, double> mean_and_stderr(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double k = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (k - 1.0));
  return {mean, sd / std::sqrt(k)};
}

std::vector<double> mcr_folds(const stl::Formula& phi, const mining::LabeledDataset& heldout,
                              int k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> pos(heldout.positives.size());
  std::vector<std::size_t> neg(heldout.negatives.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::iota(neg.begin(), neg.end(), 0);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::vector<mining::LabeledDataset> folds(static_cast<std::size_t>(k));
  std::size_t slot = 0;
  for (std::size_t i : pos) folds[slot++ % folds.size()].positives.push_back(heldout.positives[i]);
  for (std::size_t i : neg) folds[slot++ % folds.size()].negatives.push_back(heldout.negatives[i]);

  std::vector<double> out;
  for (const auto& f : folds) {
    if (!f.empty()) out.push_back(mining::mcr(phi, f));
  }
  return out;
}

OracleLabeler make_oracle(const RunConfig& cfg) { return OracleLabeler(cfg.environment.ground_truth); }

BootstrapData bootstrap(const RunConfig& cfg, Labeler& labeler) {
  const auto& env = cfg.environment.env;
  std::vector<Trace> traces;
  traces.reserve(static_cast<std::size_t>(cfg.loop.bootstrap_traces));
  for (int i = 0; i < cfg.loop.bootstrap_traces; ++i) {
    traces.push_back(grid::random_trace(env, env.episode_length,
                                        derive_seed(cfg.seed, "bootstrap", static_cast<std::uint64_t>(i))));
  }
  mining::LabeledDataset all;
  labeling::merge_into_dataset(all, labeler.label(std::move(traces), 0));

  Rng rng(derive_seed(cfg.seed, "split"));
  std::shuffle(all.positives.begin(), all.positives.end(), rng);
  std::shuffle(all.negatives.begin(), all.negatives.end(), rng);

  const double f = cfg.loop.heldout_fraction;
  const auto total = static_cast<std::size_t>(std::llround(f * static_cast<double>(all.size())));
  const auto held_p = std::min({static_cast<std::size_t>(std::llround(f * static_cast<double>(all.positives.size()))),
                                total, all.positives.size()});
  const auto held_n = std::min(total - held_p, all.negatives.size());

  BootstrapData out;
  out.heldout.positives.assign(all.positives.begin(), all.positives.begin() + static_cast<std::ptrdiff_t>(held_p));
  out.train.positives.assign(all.positives.begin() + static_cast<std::ptrdiff_t>(held_p), all.positives.end());
  out.heldout.negatives.assign(all.negatives.begin(), all.negatives.begin() + static_cast<std::ptrdiff_t>(held_n));
  out.train.negatives.assign(all.negatives.begin() + static_cast<std::ptrdiff_t>(held_n), all.negatives.end());
  return out;
}

IterationRecord run_iteration(LoopState& state, const RunConfig& cfg, Labeler& labeler,
                              LoopObserver* observer, const fs::path& run_dir) {
  const auto started = std::chrono::steady_clock::now();
  const auto& env = cfg.environment.env;
  const int iteration = static_cast<int>(state.records.size()) + 1;
  const auto iter_u = static_cast<std::uint64_t>(iteration);
  auto phase = [&](std::string_view name) {
    if (observer) observer->on_phase(name, iteration);
  };
  if (state.train.empty()) throw EmptyDatasetError("the training dataset is empty");

  phase("mining");
  std::vector<stl::Formula> incumbents;
  if (state.formula) incumbents.push_back(*state.formula);
  auto mined = mining::evolve(state.train, cfg.miner, derive_seed(cfg.seed, "miner", iter_u), incumbents);
  // Every candidate overflowing the horizon leaves nothing trainable; re-mine.
  for (std::uint64_t retry = 0; !std::isfinite(mined.best_fitness) && retry < 3; ++retry) {
    mined = mining::evolve(state.train, cfg.miner, derive_seed(cfg.seed, "miner-retry", iter_u * 16 + retry));
  }
  if (!std::isfinite(mined.best_fitness)) {
    throw HorizonTooLongError("miner found no formula evaluable within the episode length");
  }
  for (const auto& g : mined.history) state.generation_stats.emplace_back(iteration, g);

  phase("training");
  rl::QTable q = rl::train(env, mined.best, cfg.learner, derive_seed(cfg.seed, "learner", iter_u));
  const rl::Policy policy = rl::greedy_policy(q);

  phase("rollout");
  const std::uint64_t rollout_seed = derive_seed(cfg.seed, "rollout", iter_u);
  std::vector<Trace> rollouts;
  rollouts.reserve(static_cast<std::size_t>(cfg.loop.rollouts_per_iteration));
  auto policy_fn = [&](grid::Cell c, int t) { return policy(c, t); };
  for (int i = 0; i < cfg.loop.rollouts_per_iteration; ++i) {
    rollouts.push_back(grid::rollout_policy(env, policy_fn, env.episode_length, cfg.loop.rollout_exploration,
                                            derive_seed(rollout_seed, "trace", static_cast<std::uint64_t>(i))));
  }

  phase("labeling");
  const labeling::LabelingSession session = labeler.label(std::move(rollouts), iteration);
  std::size_t unsafe = 0;
  for (const auto& l : session.labels()) unsafe += l->verdict == labeling::Verdict::Unsafe ? 1 : 0;
  labeling::merge_into_dataset(state.train, session);

  IterationRecord rec;
  rec.iteration = iteration;
  rec.formula = stl::format_formula(mined.best);
  rec.fitness = mined.best_fitness;
  rec.unsafe_fraction = static_cast<double>(unsafe) / static_cast<double>(session.traces().size());
  rec.mcr = mining::mcr(mined.best, state.heldout.empty() ? state.train : state.heldout);
  if (state.reference) {
    rec.policy_gap = rl::policy_gap(*state.reference, policy, env, cfg.environment.ground_truth,
                                    cfg.loop.gap_samples, derive_seed(cfg.seed, "gap"));
  }
  rec.dataset_size = state.train.size();

  if (!run_dir.empty()) {
    const fs::path dir = run_dir / iteration_dir(iteration);
    fs::create_directories(dir);
    write_atomic(dir / "formula.txt", rec.formula + "\n");
    write_atomic(dir / "qtable.json", rl::qtable_to_json(q).dump());
  }

  state.formula = mined.best;
  state.qtable = std::move(q);
  rec.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  state.records.push_back(rec);
  return rec;
}

namespace {

RunReport build_report(const LoopState& state, const RunConfig& cfg, RunStatus status) {
  RunReport report;
  report.status = status;
  report.records = state.records;
  if (state.formula) {
    report.final_formula = stl::format_formula(*state.formula);
    report.final_policy = (fs::path(iteration_dir(static_cast<int>(state.records.size()))) / "qtable.json").string();
    const auto& eval_set = state.heldout.empty() ? state.train : state.heldout;
    report.final_mcr = mining::mcr(*state.formula, eval_set);
    report.mcr_folds = mcr_folds(*state.formula, eval_set, cfg.loop.mcr_resplits, derive_seed(cfg.seed, "resplit"));
    std::tie(report.mcr_mean, report.mcr_stderr) = mean_and_stderr(report.mcr_folds);
  }
  return report;
}

std::string stats_csv(const LoopState& state) {
  std::ostringstream out;
  out << "iteration,generation,best_fitness,mean_fitness,best_formula\n";
  for (const auto& [iteration, s] : state.generation_stats) {
    out << iteration << ',' << s.generation << ',' << s.best_fitness << ',' << s.mean_fitness << ",\""
        << s.best_formula << "\"\n";
  }
  return out.str();
}

}  // namespace

RunReport run_joint_loop(const RunConfig& cfg, Labeler& labeler, LoopObserver* observer) {
  cfg.validate();
  const fs::path run_dir = cfg.output_dir;
  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    write_atomic(run_dir / "config.json", run_config_to_json(cfg).dump(2) + "\n");
  }

  if (observer) observer->on_phase("bootstrap", 0);
  LoopState state;
  {
    BootstrapData boot = bootstrap(cfg, labeler);
    state.train = std::move(boot.train);
    state.heldout = std::move(boot.heldout);
  }

  if (cfg.loop.mode == labeling::Mode::Oracle) {
    if (observer) observer->on_phase("reference", 0);
    rl::LearnHyperparams hp = cfg.learner;
    hp.episodes *= cfg.loop.reference_episode_multiplier;
    state.reference = rl::greedy_policy(
        rl::train(cfg.environment.env, cfg.environment.ground_truth, hp, derive_seed(cfg.seed, "reference")));
  }

  RunStatus status = RunStatus::IterationCapped;
  for (int i = 0; i < cfg.loop.max_outer_iterations; ++i) {
    const IterationRecord rec = run_iteration(state, cfg, labeler, observer, run_dir);
    const bool converged = 1.0 - rec.unsafe_fraction >= cfg.loop.safe_fraction_threshold;
    if (observer) observer->on_record(rec, build_report(state, cfg, RunStatus::Running));
    if (converged) {
      status = RunStatus::Converged;
      break;
    }
  }

  RunReport report = build_report(state, cfg, status);
  if (!run_dir.empty()) {
    write_atomic(run_dir / "dataset.json", mining::dataset_to_json(state.train).dump() + "\n");
    write_atomic(run_dir / "heldout.json", mining::dataset_to_json(state.heldout).dump() + "\n");
    write_atomic(run_dir / "stats.csv", stats_csv(state));
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& r : report.records) {
      timings.push_back({{"iteration", r.iteration}, {"duration_seconds", r.duration_seconds}});
    }
    write_atomic(run_dir / "timings.json", timings.dump(2) + "\n");
    write_atomic(run_dir / "report.json", report_to_json(report).dump(2) + "\n");
  }
  if (observer) observer->on_phase("done", static_cast<int>(report.records.size()));
  return report;
}

// ---------------------------------------------------------------------------
// Report evaluation

ReportSummary summarize_report(const nlohmann::json& j) {
  try {
    ReportSummary s;
    const auto& records = j.at("iterations");
    if (!records.is_array() || records.empty()) throw std::runtime_error("report has no iterations");
    s.iterations = records.size();
    s.status = j.at("status").get<std::string>();
    s.first_unsafe = records.front().at("unsafe_fraction").get<double>();
    s.last_unsafe = records.back().at("unsafe_fraction").get<double>();
    for (const auto& r : records) {
      const auto& g = r.at("policy_gap");
      s.policy_gaps.push_back(g.is_null() ? std::nullopt : std::optional<double>(g.get<double>()));
    }
    const auto folds = j.at("mcr_folds").get<std::vector<double>>();
    s.mcr_resplits = folds.size();
    std::tie(s.mcr_mean, s.mcr_stderr) = mean_and_stderr(folds);
    s.final_formula = j.at("final_formula").get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("corrupt report: ") + e.what());
  }
}

ReportSummary load_report_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt report " + path.string() + ": " + e.what());
  }
  return summarize_report(j);
}

std::string format_summary(const ReportSummary& s) {
  std::ostringstream out;
  out << std::fixed;
  out << "status " << s.status << ", iterations " << s.iterations << "\n";
  out << "unsafe traces: first " << std::setprecision(1) << 100.0 * s.first_unsafe << "% last "
      << 100.0 * s.last_unsafe << "%\n";
  out << "final MCR " << std::setprecision(4) << s.mcr_mean << " +/- " << s.mcr_stderr << " over "
      << s.mcr_resplits << " held-out resplits\n";
  out << "policy gap:";
  for (const auto& g : s.policy_gaps) {
    out << ' ';
    if (g) {
      out << std::setprecision(3) << *g;
    } else {
      out << "n/a";
    }
  }
  out << "\nfinal formula " << s.final_formula << "\n";
  return out.str();
}

}  // namespace safelearn
