#include "mqf/mixer.hpp"

#include <cmath>
#include <string>

#include "mqf/errors.hpp"

namespace mqf {

std::string_view to_string(MixerKind kind) { return kind == MixerKind::sum ? "sum" : "monotonic"; }

MixerKind parse_mixer_kind(std::string_view name) {
  if (name == "sum") return MixerKind::sum;
  if (name == "monotonic") return MixerKind::monotonic;
  throw DomainError("unknown mixer kind '" + std::string(name) + "'");
}

Mixer Mixer::sum(std::size_t n_agents) {
  if (n_agents == 0) throw DomainError("Mixer: need at least one agent");
  return Mixer(MixerKind::sum, n_agents);
}

Mixer Mixer::monotonic(std::size_t n_agents, std::size_t joint_obs_dim, std::size_t hidden_dim, Rng& rng) {
  const std::size_t hidden[] = {hidden_dim};
  DenseNetwork w = DenseNetwork::mlp(joint_obs_dim, hidden, n_agents, Activation::tanh, rng);
  DenseNetwork b = DenseNetwork::mlp(joint_obs_dim, hidden, 1, Activation::tanh, rng);
  return Mixer(n_agents, std::move(w), std::move(b));
}

Mixer::Mixer(std::size_t n_agents, DenseNetwork hyper_w, DenseNetwork hyper_b)
    : kind_(MixerKind::monotonic), n_agents_(n_agents), hyper_w_(std::move(hyper_w)), hyper_b_(std::move(hyper_b)) {
  if (n_agents_ == 0) throw DomainError("Mixer: need at least one agent");
  if (hyper_w_.output_dim() != n_agents_ || hyper_b_.output_dim() != 1 ||
      hyper_w_.input_dim() != hyper_b_.input_dim())
    throw ShapeError("Mixer: hypernetwork shapes do not match the agent count");
}

void Mixer::check(const Matrix2D& agent_qs, const Matrix2D& joint_obs) const {
  if (agent_qs.cols() != n_agents_)
    throw ShapeError("Mixer: expected " + std::to_string(n_agents_) + " agent Q columns, got " +
                     std::to_string(agent_qs.cols()));
  if (kind_ == MixerKind::monotonic && (joint_obs.rows() != agent_qs.rows() || joint_obs.cols() != joint_obs_dim()))
    throw ShapeError("Mixer: joint observation batch shape mismatch");
}

std::vector<double> Mixer::mix(const Matrix2D& agent_qs, const Matrix2D& joint_obs) const {
  MixerTape tape;
  return forward(agent_qs, joint_obs, tape);
}

std::vector<double> Mixer::forward(const Matrix2D& agent_qs, const Matrix2D& joint_obs, MixerTape& tape) const {
  check(agent_qs, joint_obs);
  const std::size_t b = agent_qs.rows();
  std::vector<double> q_tot(b, 0.0);
  if (kind_ == MixerKind::sum) {
    for (std::size_t j = 0; j < b; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_agents_; ++i) acc += agent_qs(j, i);
      q_tot[j] = acc;
    }
    return q_tot;
  }
  tape.raw_weights = hyper_w_.forward(joint_obs, tape.hyper_w);
  const Matrix2D bias = hyper_b_.forward(joint_obs, tape.hyper_b);
  for (std::size_t j = 0; j < b; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_agents_; ++i) acc += std::fabs(tape.raw_weights(j, i)) * agent_qs(j, i);
    q_tot[j] = acc + bias(j, 0);
  }
  return q_tot;
}

MixerGradients Mixer::backward(const MixerTape& tape, const Matrix2D& agent_qs,
                               std::span<const double> upstream) const {
  const std::size_t b = agent_qs.rows();
  if (upstream.size() != b) throw ShapeError("Mixer::backward: upstream length mismatch");
  MixerGradients g;
  g.agent_qs = Matrix2D(b, n_agents_);
  if (kind_ == MixerKind::sum) {
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t i = 0; i < n_agents_; ++i) g.agent_qs(j, i) = upstream[j];
    return g;
  }
  if (tape.raw_weights.rows() != b || tape.raw_weights.cols() != n_agents_)
    throw UsageError("Mixer::backward: tape does not match the agent Q batch");
  Matrix2D d_raw(b, n_agents_);
  Matrix2D d_bias(b, 1);
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t i = 0; i < n_agents_; ++i) {
      const double w = tape.raw_weights(j, i);
      const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
      g.agent_qs(j, i) = upstream[j] * std::fabs(w);
      d_raw(j, i) = upstream[j] * agent_qs(j, i) * sign;
    }
    d_bias(j, 0) = upstream[j];
  }
  g.hyper_w = hyper_w_.backward(tape.hyper_w, d_raw);
  g.hyper_b = hyper_b_.backward(tape.hyper_b, d_bias);
  return g;
}

MixerGradients Mixer::mix_gradient(const Matrix2D& agent_qs, const Matrix2D& joint_obs,
                                   std::span<const double> upstream) const {
  MixerTape tape;
  forward(agent_qs, joint_obs, tape);
  return backward(tape, agent_qs, upstream);
}

Matrix2D Mixer::mixing_weights(const Matrix2D& joint_obs) const {
  if (kind_ == MixerKind::sum) return Matrix2D(joint_obs.rows(), n_agents_, 1.0);
  Matrix2D w = hyper_w_.predict(joint_obs);
  for (double& v : w.flat()) v = std::fabs(v);
  return w;
}

bool operator==(const Mixer& a, const Mixer& b) {
  if (a.kind_ != b.kind_ || a.n_agents_ != b.n_agents_) return false;
  return a.kind_ == MixerKind::sum || (a.hyper_w_ == b.hyper_w_ && a.hyper_b_ == b.hyper_b_);
}

void soft_update(Mixer& target, const Mixer& prediction, double tau) {
  if (target.kind() != prediction.kind() || target.n_agents() != prediction.n_agents())
    throw ShapeError("soft_update: mixers differ in kind or agent count");
  if (target.kind() == MixerKind::sum) return;
  soft_update(target.mutable_hyper_w(), prediction.hyper_w(), tau);
  soft_update(target.mutable_hyper_b(), prediction.hyper_b(), tau);
}

}  // namespace mqf
