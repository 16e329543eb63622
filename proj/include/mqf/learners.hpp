#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mqf/matrix.hpp"
#include "mqf/mixer.hpp"
#include "mqf/network.hpp"
#include "mqf/qfunctional.hpp"
#include "mqf/replay.hpp"
#include "mqf/rng.hpp"

namespace mqf {

enum class LearnerKind { mqf, iqf, cqf };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::mqf;
  MixerKind mixer = MixerKind::sum;
  std::size_t mixer_hidden_dim = 32;
  double gamma = 0.99;
  double tau = 0.005;
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t buffer_size = 500000;
  std::size_t sample_size = 1000;
  std::size_t rank = 2;
  std::vector<std::size_t> hidden{256, 256};
  Activation activation = Activation::tanh;
  /// Global gradient-norm clip across all trained networks; 0 disables.
  double grad_clip_norm = 0.0;

  void validate() const;
};

/// Read access to one agent's observation at a time.
class ObservationView {
 public:
  virtual ~ObservationView() = default;
  virtual std::size_t n_agents() const = 0;
  virtual std::span<const double> agent(std::size_t i) const = 0;
};

class JointObservationView final : public ObservationView {
 public:
  explicit JointObservationView(const JointVector& obs) : obs_(obs) {}
  std::size_t n_agents() const override { return obs_.size(); }
  std::span<const double> agent(std::size_t i) const override { return obs_.at(i); }

 private:
  const JointVector& obs_;
};

enum class ActMode { explore, greedy };

/// Loss of one batch and its gradient for every trainable network, in the
/// order of Learner::trainable_networks().
struct LossAndGradients {
  double loss = 0.0;
  std::vector<NetworkGradients> grads;
};

/// Common machinery of the Q-functional learners: replay, targets, Adam.
///
/// td_target returns a b x heads matrix: heads = N for IQF (one target per
/// agent), 1 for MQF and CQF (team target).
class Learner {
 public:
  virtual ~Learner() = default;

  LearnerKind kind() const noexcept { return config_.kind; }
  const LearnerConfig& config() const noexcept { return config_; }
  const std::vector<AgentDims>& agent_dims() const noexcept { return dims_; }
  std::size_t n_agents() const noexcept { return dims_.size(); }

  /// Q-functionals owned by the learner: one per agent, or a single joint one (CQF).
  const std::vector<QFunctionalAgent>& agents() const noexcept { return agents_; }
  std::vector<QFunctionalAgent>& mutable_agents() noexcept { return agents_; }

  virtual JointVector act(const ObservationView& obs, std::size_t step, const ExplorationPolicy& policy,
                          Rng& sampling, Rng& noise, ActMode mode) const = 0;
  JointVector act(const JointVector& obs, std::size_t step, const ExplorationPolicy& policy, Rng& sampling, Rng& noise,
                  ActMode mode) const;

  void observe(const Transition& t) { buffer_.push(t); }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  ReplayBuffer& mutable_buffer() noexcept { return buffer_; }

  virtual Matrix2D td_target(const TransitionBatch& batch, Rng& sampling) const = 0;
  virtual LossAndGradients loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const = 0;

  /// One sampled minibatch update. nullopt when the buffer holds fewer than
  /// batch_size transitions.
  std::optional<double> train_step(Rng& buffer_rng, Rng& sampling);
  void apply_gradients(const LossAndGradients& lg);
  virtual void update_targets();

  virtual std::vector<DenseNetwork*> trainable_networks();
  std::vector<const DenseNetwork*> trainable_networks() const;
  virtual std::vector<const DenseNetwork*> target_networks() const;

  std::vector<AdamState>& optimizers() noexcept { return optimizers_; }
  const std::vector<AdamState>& optimizers() const noexcept { return optimizers_; }
  std::size_t gradient_updates() const noexcept { return gradient_updates_; }
  void set_gradient_updates(std::size_t n) noexcept { gradient_updates_ = n; }

 protected:
  Learner(const LearnerConfig& config, std::vector<AgentDims> dims);
  AgentShape agent_shape(std::size_t obs_dim, std::size_t action_dim) const;
  void init_optimizers();

  LearnerConfig config_;
  std::vector<AgentDims> dims_;
  std::vector<QFunctionalAgent> agents_;
  ReplayBuffer buffer_;
  std::vector<AdamState> optimizers_;
  std::size_t gradient_updates_ = 0;
};

/// Learners with one Q-functional per agent and decentralized action selection.
class PerAgentLearner : public Learner {
 public:
  JointVector act(const ObservationView& obs, std::size_t step, const ExplorationPolicy& policy, Rng& sampling,
                  Rng& noise, ActMode mode) const override;
  using Learner::act;

  /// Per-agent max over one fresh uniform action sample (b x N), each agent
  /// evaluated with its target network on its own next observation.
  Matrix2D target_maxima(const TransitionBatch& batch, Rng& sampling) const;

 protected:
  PerAgentLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init);
};

/// Mixed Q-functionals: per-agent Q-functionals trained through a mixed team
/// value with the centralized TD loss.
class MqfLearner final : public PerAgentLearner {
 public:
  MqfLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init);

  Matrix2D td_target(const TransitionBatch& batch, Rng& sampling) const override;
  LossAndGradients loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const override;
  void update_targets() override;
  std::vector<DenseNetwork*> trainable_networks() override;
  std::vector<const DenseNetwork*> target_networks() const override;
  using Learner::trainable_networks;

  const Mixer& mixer_prediction() const noexcept { return mixer_prediction_; }
  const Mixer& mixer_target() const noexcept { return mixer_target_; }
  Mixer& mutable_mixer_prediction() noexcept { return mixer_prediction_; }
  Mixer& mutable_mixer_target() noexcept { return mixer_target_; }

 private:
  Mixer mixer_prediction_;
  Mixer mixer_target_;
};

/// Independent Q-functionals: each agent regresses on its own reward.
class IqfLearner final : public PerAgentLearner {
 public:
  IqfLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init);

  Matrix2D td_target(const TransitionBatch& batch, Rng& sampling) const override;
  LossAndGradients loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const override;
};

/// Centralized Q-functional over concatenated observations and actions.
class CqfLearner final : public Learner {
 public:
  CqfLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init);

  JointVector act(const ObservationView& obs, std::size_t step, const ExplorationPolicy& policy, Rng& sampling,
                  Rng& noise, ActMode mode) const override;
  using Learner::act;
  Matrix2D td_target(const TransitionBatch& batch, Rng& sampling) const override;
  LossAndGradients loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const override;

  /// Splits a joint action into per-agent actions.
  JointVector split_action(std::span<const double> joint) const;
};

std::unique_ptr<Learner> make_learner(const LearnerConfig& config, const std::vector<AgentDims>& dims, Rng& init);

}  // namespace mqf
