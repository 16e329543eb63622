#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mqf/matrix.hpp"
#include "mqf/rng.hpp"

namespace mqf {

using JointVector = std::vector<std::vector<double>>;

/// One joint environment step across all agents.
struct Transition {
  JointVector obs;
  JointVector actions;
  std::vector<double> rewards;
  JointVector next_obs;
  bool done = false;
};

struct AgentDims {
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  friend bool operator==(const AgentDims&, const AgentDims&) = default;
};

/// Minibatch of time-aligned transitions: row j of every matrix comes from
/// the same stored step.
struct TransitionBatch {
  std::vector<Matrix2D> obs;       // per agent, b x obs_dim
  std::vector<Matrix2D> actions;   // per agent, b x action_dim
  std::vector<Matrix2D> next_obs;  // per agent, b x obs_dim
  Matrix2D rewards;                // b x N
  std::vector<double> done;        // 1.0 for terminal transitions
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return done.size(); }
  Matrix2D joint_obs() const { return hconcat(obs); }
  Matrix2D joint_next_obs() const { return hconcat(next_obs); }
  Matrix2D joint_actions() const { return hconcat(actions); }
};

/// Joint FIFO experience store with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::vector<AgentDims> dims);

  void push(const Transition& t);
  /// nullopt when fewer than `batch` transitions are stored.
  std::optional<TransitionBatch> sample(std::size_t batch, Rng& rng) const;
  /// Gathers the given logical indices (0 = oldest).
  TransitionBatch gather(const std::vector<std::size_t>& logical) const;
  Transition at(std::size_t logical) const;

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t n_agents() const noexcept { return dims_.size(); }
  const std::vector<AgentDims>& dims() const noexcept { return dims_; }

 private:
  std::size_t slot(std::size_t logical) const noexcept;

  std::size_t capacity_;
  std::vector<AgentDims> dims_;
  std::size_t stride_ = 0;
  std::vector<double> storage_;  // one record of `stride_` doubles per slot
  std::size_t write_cursor_ = 0;
  std::size_t size_ = 0;
};

}  // namespace mqf
