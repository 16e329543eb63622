#include "mqf/learners.hpp"

#include <cmath>
#include <string>

#include "mqf/errors.hpp"
#include "mqf/kernels.hpp"

namespace mqf {

namespace {

// q[j] = coeffs.row(j) . features.col(j): the value of the stored action of row j.
std::vector<double> stored_action_values(const Matrix2D& coeffs, const Matrix2D& features) {
  std::vector<double> q(coeffs.rows(), 0.0);
  for (std::size_t j = 0; j < coeffs.rows(); ++j) {
    double acc = 0.0;
    for (std::size_t m = 0; m < coeffs.cols(); ++m) acc += coeffs(j, m) * features(m, j);
    q[j] = acc;
  }
  return q;
}

// d loss / d coeffs given d loss / d q for stored-action values.
Matrix2D coefficient_gradient(std::span<const double> dq, const Matrix2D& features) {
  Matrix2D g(dq.size(), features.rows());
  for (std::size_t j = 0; j < dq.size(); ++j)
    for (std::size_t m = 0; m < features.rows(); ++m) g(j, m) = dq[j] * features(m, j);
  return g;
}

struct SquaredError {
  double loss = 0.0;
  std::vector<double> grad;
};

// Batch mean of (prediction - target)^2 and its gradient.
SquaredError mean_squared_error(std::span<const double> prediction, const Matrix2D& targets, std::size_t column) {
  const std::size_t b = prediction.size();
  if (targets.rows() != b || column >= targets.cols()) throw ShapeError("TD loss: target batch shape mismatch");
  SquaredError out;
  out.grad.resize(b);
  double acc = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    const double diff = prediction[j] - targets(j, column);
    acc += diff * diff;
    out.grad[j] = 2.0 * diff / static_cast<double>(b);
  }
  out.loss = acc / static_cast<double>(b);
  return out;
}

double reward_sum(const Matrix2D& rewards, std::size_t row) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rewards.cols(); ++i) acc += rewards(row, i);
  return acc;
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::mqf: return "mqf";
    case LearnerKind::iqf: return "iqf";
    case LearnerKind::cqf: return "cqf";
  }
  return "mqf";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "mqf") return LearnerKind::mqf;
  if (name == "iqf") return LearnerKind::iqf;
  if (name == "cqf") return LearnerKind::cqf;
  throw DomainError("unknown learner '" + std::string(name) + "'");
}

void LearnerConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("learner: gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("learner: tau must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw DomainError("learner: learning rate must be positive");
  if (batch_size == 0 || buffer_size == 0 || sample_size == 0) throw DomainError("learner: counts must be positive");
  if (mixer_hidden_dim == 0) throw DomainError("learner: mixer_hidden_dim must be positive");
  if (!(grad_clip_norm >= 0.0)) throw DomainError("learner: grad_clip_norm must be >= 0");
  for (std::size_t h : hidden)
    if (h == 0) throw DomainError("learner: hidden layer widths must be positive");
}

// ---------------------------------------------------------------------------
// Learner

Learner::Learner(const LearnerConfig& config, std::vector<AgentDims> dims)
    : config_(config), dims_(std::move(dims)), buffer_(config.buffer_size, dims_) {
  config_.validate();
}

AgentShape Learner::agent_shape(std::size_t obs_dim, std::size_t action_dim) const {
  AgentShape s;
  s.obs_dim = obs_dim;
  s.action_dim = action_dim;
  s.rank = config_.rank;
  s.sample_size = config_.sample_size;
  s.hidden = config_.hidden;
  s.activation = config_.activation;
  return s;
}

void Learner::init_optimizers() {
  optimizers_.clear();
  for (const DenseNetwork* net : trainable_networks())
    optimizers_.push_back(AdamState::for_network(*net, config_.learning_rate));
}

JointVector Learner::act(const JointVector& obs, std::size_t step, const ExplorationPolicy& policy, Rng& sampling,
                         Rng& noise, ActMode mode) const {
  return act(JointObservationView(obs), step, policy, sampling, noise, mode);
}

std::optional<double> Learner::train_step(Rng& buffer_rng, Rng& sampling) {
  const auto batch = buffer_.sample(config_.batch_size, buffer_rng);
  if (!batch) return std::nullopt;
  const Matrix2D targets = td_target(*batch, sampling);
  const LossAndGradients lg = loss_and_gradients(*batch, targets);
  if (!std::isfinite(lg.loss)) throw NumericError("train_step: non-finite TD loss");
  apply_gradients(lg);
  ++gradient_updates_;
  return lg.loss;
}

void Learner::apply_gradients(const LossAndGradients& lg) {
  auto nets = trainable_networks();
  if (lg.grads.size() != nets.size() || optimizers_.size() != nets.size())
    throw ShapeError("apply_gradients: gradient list does not match the trainable networks");
  double factor = 1.0;
  if (config_.grad_clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& g : lg.grads) sq += squared_norm(g);
    const double norm = std::sqrt(sq);
    if (norm > config_.grad_clip_norm) factor = config_.grad_clip_norm / norm;
  }
  for (std::size_t n = 0; n < nets.size(); ++n) {
    if (factor != 1.0) {
      NetworkGradients g = lg.grads[n];
      scale(g, factor);
      adam_step(*nets[n], g, optimizers_[n]);
    } else {
      adam_step(*nets[n], lg.grads[n], optimizers_[n]);
    }
    if (!nets[n]->all_finite()) throw NumericError("apply_gradients: parameter became non-finite");
  }
}

void Learner::update_targets() {
  for (auto& agent : agents_) soft_update(agent.mutable_target(), agent.prediction(), config_.tau);
}

std::vector<DenseNetwork*> Learner::trainable_networks() {
  std::vector<DenseNetwork*> nets;
  for (auto& agent : agents_) nets.push_back(&agent.mutable_prediction());
  return nets;
}

std::vector<const DenseNetwork*> Learner::trainable_networks() const {
  auto nets = const_cast<Learner*>(this)->trainable_networks();
  return {nets.begin(), nets.end()};
}

std::vector<const DenseNetwork*> Learner::target_networks() const {
  std::vector<const DenseNetwork*> nets;
  for (const auto& agent : agents_) nets.push_back(&agent.target());
  return nets;
}

// ---------------------------------------------------------------------------
// Per-agent learners

PerAgentLearner::PerAgentLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init)
    : Learner(config, std::move(dims)) {
  for (const auto& d : dims_) agents_.emplace_back(agent_shape(d.obs_dim, d.action_dim), init);
}

JointVector PerAgentLearner::act(const ObservationView& obs, std::size_t step, const ExplorationPolicy& policy,
                                 Rng& sampling, Rng& noise, ActMode mode) const {
  if (obs.n_agents() != agents_.size()) throw ShapeError("act: observation count does not match agent count");
  JointVector actions;
  actions.reserve(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    // Agent i reads only its own observation.
    const std::span<const double> own = obs.agent(i);
    if (mode == ActMode::greedy)
      actions.push_back(agents_[i].greedy_action(own, sampling).action);
    else
      actions.push_back(agents_[i].explore_action(policy, own, step, sampling, noise));
  }
  return actions;
}

Matrix2D PerAgentLearner::target_maxima(const TransitionBatch& batch, Rng& sampling) const {
  const std::size_t b = batch.size();
  Matrix2D maxima(b, agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& agent = agents_[i];
    const Matrix2D features = phi(agent.basis(), agent.sample_actions(sampling));
    const Matrix2D coeffs = agent.coefficients(batch.next_obs[i], NetworkRole::target);
    const kernels::RowMax best = kernels::max_of_product(coeffs, features);
    for (std::size_t j = 0; j < b; ++j) maxima(j, i) = best.value[j];
  }
  return maxima;
}

MqfLearner::MqfLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init)
    : PerAgentLearner(config, std::move(dims), init), mixer_prediction_(Mixer::sum(dims_.size())),
      mixer_target_(Mixer::sum(dims_.size())) {
  if (config_.mixer == MixerKind::monotonic) {
    std::size_t joint = 0;
    for (const auto& d : dims_) joint += d.obs_dim;
    mixer_prediction_ = Mixer::monotonic(dims_.size(), joint, config_.mixer_hidden_dim, init);
    mixer_target_ = mixer_prediction_;
  }
  init_optimizers();
}

Matrix2D MqfLearner::td_target(const TransitionBatch& batch, Rng& sampling) const {
  const Matrix2D maxima = target_maxima(batch, sampling);
  const Matrix2D joint_next =
      mixer_target_.kind() == MixerKind::monotonic ? batch.joint_next_obs() : Matrix2D();
  const std::vector<double> mixed = mixer_target_.mix(maxima, joint_next);
  Matrix2D y(batch.size(), 1);
  for (std::size_t j = 0; j < batch.size(); ++j)
    y(j, 0) = reward_sum(batch.rewards, j) + config_.gamma * (1.0 - batch.done[j]) * mixed[j];
  return y;
}

LossAndGradients MqfLearner::loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const {
  const std::size_t n = agents_.size();
  const std::size_t b = batch.size();
  std::vector<ForwardTape> tapes(n);
  std::vector<Matrix2D> features(n);
  Matrix2D agent_qs(b, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix2D coeffs = agents_[i].prediction().forward(batch.obs[i], tapes[i]);
    features[i] = phi(agents_[i].basis(), batch.actions[i]);
    const std::vector<double> q = stored_action_values(coeffs, features[i]);
    for (std::size_t j = 0; j < b; ++j) agent_qs(j, i) = q[j];
  }
  const Matrix2D joint_obs = mixer_prediction_.kind() == MixerKind::monotonic ? batch.joint_obs() : Matrix2D();
  MixerTape mixer_tape;
  const std::vector<double> q_tot = mixer_prediction_.forward(agent_qs, joint_obs, mixer_tape);
  const SquaredError err = mean_squared_error(q_tot, targets, 0);
  const MixerGradients mg = mixer_prediction_.backward(mixer_tape, agent_qs, err.grad);

  LossAndGradients out;
  out.loss = err.loss;
  std::vector<double> dq(b);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < b; ++j) dq[j] = mg.agent_qs(j, i);
    out.grads.push_back(agents_[i].prediction().backward(tapes[i], coefficient_gradient(dq, features[i])));
  }
  if (mixer_prediction_.kind() == MixerKind::monotonic) {
    out.grads.push_back(mg.hyper_w);
    out.grads.push_back(mg.hyper_b);
  }
  return out;
}

void MqfLearner::update_targets() {
  Learner::update_targets();
  soft_update(mixer_target_, mixer_prediction_, config_.tau);
}

std::vector<DenseNetwork*> MqfLearner::trainable_networks() {
  auto nets = Learner::trainable_networks();
  if (mixer_prediction_.kind() == MixerKind::monotonic) {
    nets.push_back(&mixer_prediction_.mutable_hyper_w());
    nets.push_back(&mixer_prediction_.mutable_hyper_b());
  }
  return nets;
}

std::vector<const DenseNetwork*> MqfLearner::target_networks() const {
  auto nets = Learner::target_networks();
  if (mixer_target_.kind() == MixerKind::monotonic) {
    nets.push_back(&mixer_target_.hyper_w());
    nets.push_back(&mixer_target_.hyper_b());
  }
  return nets;
}

IqfLearner::IqfLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init)
    : PerAgentLearner(config, std::move(dims), init) {
  init_optimizers();
}

Matrix2D IqfLearner::td_target(const TransitionBatch& batch, Rng& sampling) const {
  const Matrix2D maxima = target_maxima(batch, sampling);
  Matrix2D y(batch.size(), agents_.size());
  for (std::size_t j = 0; j < batch.size(); ++j)
    for (std::size_t i = 0; i < agents_.size(); ++i)
      y(j, i) = batch.rewards(j, i) + config_.gamma * (1.0 - batch.done[j]) * maxima(j, i);
  return y;
}

LossAndGradients IqfLearner::loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const {
  LossAndGradients out;
  double total = 0.0;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    ForwardTape tape;
    const Matrix2D coeffs = agents_[i].prediction().forward(batch.obs[i], tape);
    const Matrix2D features = phi(agents_[i].basis(), batch.actions[i]);
    const SquaredError err = mean_squared_error(stored_action_values(coeffs, features), targets, i);
    total += err.loss;
    out.grads.push_back(agents_[i].prediction().backward(tape, coefficient_gradient(err.grad, features)));
  }
  out.loss = total;
  return out;
}

// ---------------------------------------------------------------------------
// Centralized learner

CqfLearner::CqfLearner(const LearnerConfig& config, std::vector<AgentDims> dims, Rng& init)
    : Learner(config, std::move(dims)) {
  std::size_t obs_total = 0;
  std::size_t action_total = 0;
  for (const auto& d : dims_) {
    obs_total += d.obs_dim;
    action_total += d.action_dim;
  }
  agents_.emplace_back(agent_shape(obs_total, action_total), init);
  init_optimizers();
}

JointVector CqfLearner::split_action(std::span<const double> joint) const {
  JointVector out;
  std::size_t offset = 0;
  for (const auto& d : dims_) {
    out.emplace_back(joint.begin() + offset, joint.begin() + offset + d.action_dim);
    offset += d.action_dim;
  }
  if (offset != joint.size()) throw ShapeError("split_action: joint action length mismatch");
  return out;
}

JointVector CqfLearner::act(const ObservationView& obs, std::size_t step, const ExplorationPolicy& policy,
                            Rng& sampling, Rng& noise, ActMode mode) const {
  if (obs.n_agents() != dims_.size()) throw ShapeError("act: observation count does not match agent count");
  std::vector<double> joint;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto o = obs.agent(i);
    joint.insert(joint.end(), o.begin(), o.end());
  }
  const auto& agent = agents_.front();
  const std::vector<double> action = mode == ActMode::greedy
                                         ? agent.greedy_action(joint, sampling).action
                                         : agent.explore_action(policy, joint, step, sampling, noise);
  return split_action(action);
}

Matrix2D CqfLearner::td_target(const TransitionBatch& batch, Rng& sampling) const {
  const auto& agent = agents_.front();
  const Matrix2D features = phi(agent.basis(), agent.sample_actions(sampling));
  const Matrix2D coeffs = agent.coefficients(batch.joint_next_obs(), NetworkRole::target);
  const kernels::RowMax best = kernels::max_of_product(coeffs, features);
  Matrix2D y(batch.size(), 1);
  for (std::size_t j = 0; j < batch.size(); ++j)
    y(j, 0) = reward_sum(batch.rewards, j) + config_.gamma * (1.0 - batch.done[j]) * best.value[j];
  return y;
}

LossAndGradients CqfLearner::loss_and_gradients(const TransitionBatch& batch, const Matrix2D& targets) const {
  const auto& agent = agents_.front();
  ForwardTape tape;
  const Matrix2D coeffs = agent.prediction().forward(batch.joint_obs(), tape);
  const Matrix2D features = phi(agent.basis(), batch.joint_actions());
  const SquaredError err = mean_squared_error(stored_action_values(coeffs, features), targets, 0);
  LossAndGradients out;
  out.loss = err.loss;
  out.grads.push_back(agent.prediction().backward(tape, coefficient_gradient(err.grad, features)));
  return out;
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& config, const std::vector<AgentDims>& dims, Rng& init) {
  switch (config.kind) {
    case LearnerKind::mqf: return std::make_unique<MqfLearner>(config, dims, init);
    case LearnerKind::iqf: return std::make_unique<IqfLearner>(config, dims, init);
    case LearnerKind::cqf: return std::make_unique<CqfLearner>(config, dims, init);
  }
  throw DomainError("make_learner: unknown learner kind");
}

}  // namespace mqf
