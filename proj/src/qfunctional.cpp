#include "mqf/qfunctional.hpp"

#include <algorithm>
#include <string>

#include "mqf/errors.hpp"
#include "mqf/kernels.hpp"

namespace mqf {

double ExplorationPolicy::epsilon_at(std::size_t step) const {
  if (epsilon_decay_steps == 0 || step >= epsilon_decay_steps) return epsilon_end;
  const double frac = static_cast<double>(step) / static_cast<double>(epsilon_decay_steps);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

void ExplorationPolicy::validate() const {
  if (!(gaussian_sigma >= 0.0)) throw DomainError("exploration: gaussian_sigma must be >= 0");
  if (!(0.0 <= epsilon_end && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
    throw DomainError("exploration: need 0 <= epsilon_end <= epsilon_start <= 1");
}

Matrix2D sample_uniform_actions(std::size_t k, std::size_t d, double low, double high, Rng& rng) {
  Matrix2D out(k, d);
  for (double& v : out.flat()) v = rng.uniform(low, high);
  return out;
}

namespace {

const AgentShape& checked(const AgentShape& shape) {
  if (shape.obs_dim == 0 || shape.action_dim == 0) throw DomainError("QFunctionalAgent: zero obs or action dim");
  if (shape.sample_size == 0) throw DomainError("QFunctionalAgent: sample_size must be >= 1");
  if (!(shape.action_low < shape.action_high) || shape.action_low < -1.0 || shape.action_high > 1.0)
    throw DomainError("QFunctionalAgent: action range must satisfy -1 <= low < high <= 1");
  return shape;
}

}  // namespace

QFunctionalAgent::QFunctionalAgent(const AgentShape& shape, Rng& init_rng)
    : shape_(checked(shape)), basis_(shape.action_dim, shape.rank) {
  prediction_ = DenseNetwork::mlp(shape.obs_dim, shape.hidden, basis_.size(), shape.activation, init_rng);
  target_ = prediction_;
}

QFunctionalAgent::QFunctionalAgent(const AgentShape& shape, DenseNetwork prediction, DenseNetwork target)
    : shape_(checked(shape)),
      basis_(shape.action_dim, shape.rank),
      prediction_(std::move(prediction)),
      target_(std::move(target)) {
  if (prediction_.input_dim() != shape_.obs_dim || prediction_.output_dim() != basis_.size())
    throw ShapeError("QFunctionalAgent: prediction network does not map obs_dim -> basis size");
  if (!prediction_.same_shape(target_)) throw ShapeError("QFunctionalAgent: prediction and target differ in shape");
}

const DenseNetwork& QFunctionalAgent::network(NetworkRole role) const noexcept {
  return role == NetworkRole::prediction ? prediction_ : target_;
}

Matrix2D QFunctionalAgent::sample_actions(Rng& rng) const {
  return sample_uniform_actions(shape_.sample_size, shape_.action_dim, shape_.action_low, shape_.action_high, rng);
}

Matrix2D QFunctionalAgent::coefficients(const Matrix2D& observations, NetworkRole role) const {
  return network(role).predict(observations);
}

std::vector<double> QFunctionalAgent::evaluate_actions(std::span<const double> obs, const Matrix2D& actions,
                                                       NetworkRole role) const {
  if (obs.size() != shape_.obs_dim) throw ShapeError("evaluate_actions: observation length mismatch");
  const Matrix2D state(1, obs.size(), std::vector<double>(obs.begin(), obs.end()));
  const Matrix2D coeffs = coefficients(state, role);
  const Matrix2D q = q_from_coefficients(coeffs, phi(basis_, actions));
  return q.to_vector();
}

GreedyChoice QFunctionalAgent::select_best(std::span<const double> obs, const Matrix2D& actions) const {
  if (actions.rows() == 0) throw ShapeError("select_best: empty action batch");
  const std::vector<double> q = evaluate_actions(obs, actions, NetworkRole::prediction);
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  const auto row = actions.row(best);
  return {std::vector<double>(row.begin(), row.end()), q[best], best};
}

GreedyChoice QFunctionalAgent::greedy_action(std::span<const double> obs, Rng& sampling) const {
  return select_best(obs, sample_actions(sampling));
}

std::vector<double> QFunctionalAgent::explore_action(const ExplorationPolicy& policy, std::span<const double> obs,
                                                     std::size_t step, Rng& sampling, Rng& noise) const {
  using Kind = ExplorationPolicy::Kind;
  if (policy.kind == Kind::epsilon_greedy) {
    const double eps = policy.epsilon_at(step);
    if (eps > 0.0 && noise.bernoulli(eps)) {
      std::vector<double> a(shape_.action_dim);
      for (double& v : a) v = noise.uniform(shape_.action_low, shape_.action_high);
      return a;
    }
    return greedy_action(obs, sampling).action;
  }
  std::vector<double> a = greedy_action(obs, sampling).action;
  if (policy.kind == Kind::gaussian && policy.gaussian_sigma > 0.0) {
    for (double& v : a)
      v = std::clamp(v + noise.normal(0.0, policy.gaussian_sigma), shape_.action_low, shape_.action_high);
  }
  return a;
}

}  // namespace mqf
