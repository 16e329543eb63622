#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mqf/learners.hpp"

namespace mqf {

/// Run-level facts stored next to the learner parameters.
struct CheckpointMeta {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t total_steps = 0;
  std::size_t episodes = 0;
  /// Fully resolved run configuration, key = value in echo order.
  std::vector<std::pair<std::string, std::string>> config;
};

struct LoadedCheckpoint {
  std::unique_ptr<Learner> learner;
  CheckpointMeta meta;
};

/// Serializes learner kind, agent dimensions, every network (layers with
/// row-major weights, biases and activation name), mixer, Adam moments and
/// the run metadata as one JSON document.
std::string checkpoint_to_string(const Learner& learner, const CheckpointMeta& meta);
LoadedCheckpoint checkpoint_from_string(const std::string& text);

/// Writes atomically (temporary file then rename).
void save_checkpoint(const std::filesystem::path& path, const Learner& learner, const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mqf
