#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mqf/envs.hpp"
#include "mqf/learners.hpp"
#include "mqf/qfunctional.hpp"

namespace mqf {

/// Everything needed to launch one training run.
///
/// Defaults follow the 2A2L algorithmic hyperparameters. `nb_layers` counts
/// linear layers, so 3 layers of 256 neurons are two hidden layers plus the
/// coefficient output layer. `epsilon_decay_steps = 0` resolves to half the
/// total environment steps.
struct RunConfig {
  std::string scenario = "lc-2a2l";
  LearnerConfig learner;
  std::size_t nb_layers = 3;
  std::size_t nb_neurons = 256;
  std::size_t steps_per_update = 1;
  std::size_t learning_starts_steps = 10000;
  std::size_t max_episodes = 10000;
  ExplorationPolicy exploration{ExplorationPolicy::Kind::epsilon_greedy, 0.1, 1.0, 0.05, 0};
  std::size_t eval_interval_steps = 10000;
  std::size_t eval_episodes = 10;
  std::uint64_t seed = 0;
  bool log_wall_time = false;
  EnvParams env;

  std::size_t total_env_steps() const noexcept { return max_episodes * env.episode_length; }
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines. `[section]` headers qualify the keys that
/// follow; `#` starts a comment. Unknown keys and malformed values raise
/// ConfigError naming the field.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` override. The key may be qualified
/// (`learner.gamma`) or bare (`gamma`) when the bare name is unambiguous.
void apply_override(RunConfig& config, std::string_view assignment);

/// Fills derived values (hidden layer sizes, epsilon decay horizon) and
/// validates. Idempotent.
void resolve(RunConfig& config);
void validate(const RunConfig& config);

/// Every field as (qualified key, value text), in a fixed order.
ConfigEcho echo(const RunConfig& config);
/// echo() rendered in the config file format; parse_config reads it back.
std::string echo_text(const RunConfig& config);
RunConfig from_echo(const ConfigEcho& pairs);

std::string_view to_string(ExplorationPolicy::Kind kind);
ExplorationPolicy::Kind parse_exploration_kind(std::string_view name);

}  // namespace mqf
