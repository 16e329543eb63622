#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mqf/matrix.hpp"
#include "mqf/network.hpp"
#include "mqf/rng.hpp"

namespace mqf {

enum class MixerKind { sum, monotonic };

std::string_view to_string(MixerKind kind);
MixerKind parse_mixer_kind(std::string_view name);

struct MixerTape {
  ForwardTape hyper_w;
  ForwardTape hyper_b;
  Matrix2D raw_weights;  // hyper_w output before the absolute value
};

struct MixerGradients {
  Matrix2D agent_qs;  // d q_tot / d agent_qs, scaled by upstream
  NetworkGradients hyper_w;
  NetworkGradients hyper_b;
};

/// Combines per-agent Q-values into a team value.
///
/// sum:       q_tot = sum_i q_i
/// monotonic: q_tot = sum_i |w_i(s)| q_i + b(s), where w and b are
///            hypernetworks of the joint observation, so dq_tot/dq_i >= 0.
class Mixer {
 public:
  static Mixer sum(std::size_t n_agents);
  static Mixer monotonic(std::size_t n_agents, std::size_t joint_obs_dim, std::size_t hidden_dim, Rng& rng);
  /// Monotonic mixer from existing hypernetworks (checkpoint loading).
  Mixer(std::size_t n_agents, DenseNetwork hyper_w, DenseNetwork hyper_b);

  MixerKind kind() const noexcept { return kind_; }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t joint_obs_dim() const noexcept { return hyper_w_.input_dim(); }
  const DenseNetwork& hyper_w() const noexcept { return hyper_w_; }
  const DenseNetwork& hyper_b() const noexcept { return hyper_b_; }
  DenseNetwork& mutable_hyper_w() noexcept { return hyper_w_; }
  DenseNetwork& mutable_hyper_b() noexcept { return hyper_b_; }

  /// agent_qs is b x N; joint_obs is b x joint_obs_dim (ignored by the sum kind).
  std::vector<double> mix(const Matrix2D& agent_qs, const Matrix2D& joint_obs) const;
  std::vector<double> forward(const Matrix2D& agent_qs, const Matrix2D& joint_obs, MixerTape& tape) const;
  MixerGradients backward(const MixerTape& tape, const Matrix2D& agent_qs, std::span<const double> upstream) const;
  MixerGradients mix_gradient(const Matrix2D& agent_qs, const Matrix2D& joint_obs,
                              std::span<const double> upstream) const;
  /// Effective non-negative weights applied to each agent's Q (b x N).
  Matrix2D mixing_weights(const Matrix2D& joint_obs) const;

  friend bool operator==(const Mixer& a, const Mixer& b);

 private:
  Mixer(MixerKind kind, std::size_t n_agents) : kind_(kind), n_agents_(n_agents) {}
  void check(const Matrix2D& agent_qs, const Matrix2D& joint_obs) const;

  MixerKind kind_;
  std::size_t n_agents_;
  DenseNetwork hyper_w_;
  DenseNetwork hyper_b_;
};

void soft_update(Mixer& target, const Mixer& prediction, double tau);

}  // namespace mqf
