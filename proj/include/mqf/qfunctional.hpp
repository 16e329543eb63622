#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mqf/basis.hpp"
#include "mqf/matrix.hpp"
#include "mqf/network.hpp"
#include "mqf/rng.hpp"

namespace mqf {

/// Architecture of one agent's Q-functional.
struct AgentShape {
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::size_t rank = 2;
  std::size_t sample_size = 1000;
  std::vector<std::size_t> hidden{256, 256};
  Activation activation = Activation::tanh;
  double action_low = -1.0;
  double action_high = 1.0;

  friend bool operator==(const AgentShape&, const AgentShape&) = default;
};

enum class NetworkRole { prediction, target };

struct ExplorationPolicy {
  enum class Kind { gaussian, epsilon_greedy, none };

  Kind kind = Kind::epsilon_greedy;
  double gaussian_sigma = 0.1;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t epsilon_decay_steps = 1;

  /// Linear decay from epsilon_start to epsilon_end over epsilon_decay_steps.
  double epsilon_at(std::size_t step) const;
  void validate() const;
};

struct GreedyChoice {
  std::vector<double> action;
  double q = 0.0;
  std::size_t index = 0;
};

/// k x d matrix with entries i.i.d. uniform on [low, high], drawn row-major.
Matrix2D sample_uniform_actions(std::size_t k, std::size_t d, double low, double high, Rng& rng);

/// A state-to-function value model: the coefficient network maps an
/// observation to polynomial coefficients over the action space, so any
/// number of candidate actions is scored by one matrix product.
class QFunctionalAgent {
 public:
  QFunctionalAgent(const AgentShape& shape, Rng& init_rng);
  QFunctionalAgent(const AgentShape& shape, DenseNetwork prediction, DenseNetwork target);

  const AgentShape& shape() const noexcept { return shape_; }
  const MonomialBasis& basis() const noexcept { return basis_; }
  const DenseNetwork& prediction() const noexcept { return prediction_; }
  const DenseNetwork& target() const noexcept { return target_; }
  DenseNetwork& mutable_prediction() noexcept { return prediction_; }
  DenseNetwork& mutable_target() noexcept { return target_; }
  const DenseNetwork& network(NetworkRole role) const noexcept;

  Matrix2D sample_actions(Rng& rng) const;
  /// Coefficients (b x basis size) for a batch of observations.
  Matrix2D coefficients(const Matrix2D& observations, NetworkRole role) const;
  /// Q-values of each row of `actions` in state `obs`; one network forward.
  std::vector<double> evaluate_actions(std::span<const double> obs, const Matrix2D& actions, NetworkRole role) const;
  /// Highest-valued row of `actions` under the prediction network; ties go to
  /// the lowest row index.
  GreedyChoice select_best(std::span<const double> obs, const Matrix2D& actions) const;
  /// select_best over a fresh uniform sample of sample_size actions.
  GreedyChoice greedy_action(std::span<const double> obs, Rng& sampling) const;
  /// Greedy selection perturbed according to `policy`; result lies in the action box.
  std::vector<double> explore_action(const ExplorationPolicy& policy, std::span<const double> obs, std::size_t step,
                                     Rng& sampling, Rng& noise) const;

 private:
  AgentShape shape_;
  MonomialBasis basis_;
  DenseNetwork prediction_;
  DenseNetwork target_;
};

}  // namespace mqf
