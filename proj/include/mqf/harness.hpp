#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mqf/checkpoint.hpp"
#include "mqf/config.hpp"
#include "mqf/envs.hpp"
#include "mqf/learners.hpp"

namespace mqf {

inline constexpr const char* kMetricsHeader =
    "episode,env_steps,mean_test_team_reward,success_rate,captures,captures3,loss_ema,wall_time_s";

struct EpisodeRecord {
  double team_reward = 0.0;
  bool success = false;
  std::size_t captures = 0;
  std::size_t captures3 = 0;
};

/// Greedy evaluation over a number of episodes. Half-widths are 95% normal
/// approximations over episodes (1.96 sd / sqrt(n)).
struct EvalSummary {
  ScenarioFamily family = ScenarioFamily::landmark;
  std::size_t episodes = 0;
  double mean_team_reward = 0.0;
  double team_reward_ci95 = 0.0;
  double success_rate = 0.0;
  double success_ci95 = 0.0;
  double mean_captures = 0.0;
  double mean_captures3 = 0.0;
  std::vector<EpisodeRecord> per_episode;
};

/// Greedy policy, no exploration noise. The environment and the action
/// samples are driven by streams derived from `seed`.
EvalSummary evaluate(const Learner& learner, Scenario& scenario, std::size_t episodes, std::uint64_t seed);
/// Loads the checkpoint and evaluates it; LoadError when the checkpoint's
/// agent dimensions do not match the scenario.
EvalSummary evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::string& scenario,
                                std::size_t episodes, std::uint64_t seed, const EnvParams& env = {});
/// Uniform-random joint actions, as a reference baseline.
EvalSummary evaluate_random(Scenario& scenario, std::size_t episodes, std::uint64_t seed);

struct MetricsRow {
  std::size_t episode = 0;
  std::size_t env_steps = 0;
  double mean_test_team_reward = 0.0;
  std::optional<double> success_rate;
  std::optional<double> captures;
  std::optional<double> captures3;
  std::optional<double> loss_ema;
  std::optional<double> wall_time_s;
};

std::string format_metrics_row(const MetricsRow& row);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::size_t env_steps = 0;
  std::size_t gradient_updates = 0;
  std::filesystem::path checkpoint;
  std::unique_ptr<Learner> learner;
};

/// Runs the full training protocol and writes into `out_dir`:
///   metrics.csv      one row per evaluation, plus a final row
///   timing.csv       wall-clock seconds per evaluation
///   config.cfg       the resolved configuration
///   checkpoint.json  refreshed at every evaluation
/// `log`, when given, receives one progress line per evaluation.
TrainResult train(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// Independent runs for several seeds, `jobs` at a time, in
/// `out_root/seed-<n>`. Run directories are returned in seed order.
std::vector<std::filesystem::path> train_seeds(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                                               const std::filesystem::path& out_root, int jobs,
                                               std::ostream* log = nullptr);

/// One row per algorithm: mean and 95% half-width over runs of the final
/// metrics row.
struct AggregateRow {
  std::string algorithm;
  std::string scenario;
  std::size_t runs = 0;
  double team_reward_mean = 0.0;
  double team_reward_ci95 = 0.0;
  std::optional<double> success_mean;
  std::optional<double> success_ci95;
  std::optional<double> captures_mean;
  std::optional<double> captures_ci95;
  std::optional<double> captures3_mean;
  std::optional<double> captures3_ci95;
};

std::vector<AggregateRow> aggregate(const std::vector<std::filesystem::path>& run_dirs);
std::string format_aggregate(const std::vector<AggregateRow>& rows);

/// Mean and 95% normal half-width; the half-width is 0 for fewer than two values.
std::pair<double, double> mean_ci95(const std::vector<double>& values);

}  // namespace mqf
