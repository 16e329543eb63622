#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mqf/matrix.hpp"
#include "mqf/rng.hpp"

namespace mqf {

enum class Activation { tanh, relu, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected layer: y = act(x W^T + b), with W stored out x in.
struct DenseLayer {
  Matrix2D weight;
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t input_dim() const noexcept { return weight.cols(); }
  std::size_t output_dim() const noexcept { return weight.rows(); }
};

struct LayerGradient {
  Matrix2D weight;
  std::vector<double> bias;
};
using NetworkGradients = std::vector<LayerGradient>;

/// Activations cached by a forward pass. Bound to the network instance and
/// parameter generation that produced it.
struct ForwardTape {
  std::uint64_t network_id = 0;
  std::uint64_t generation = 0;
  Matrix2D input;
  std::vector<Matrix2D> outputs;  // post-activation output of each layer
};

class DenseNetwork {
 public:
  DenseNetwork();
  explicit DenseNetwork(std::vector<DenseLayer> layers);
  DenseNetwork(const DenseNetwork& other);
  DenseNetwork& operator=(const DenseNetwork& other);
  DenseNetwork(DenseNetwork&&) noexcept = default;
  DenseNetwork& operator=(DenseNetwork&&) noexcept = default;

  /// Multi-layer perceptron with `hidden` widths, `hidden_activation` on hidden
  /// layers and an identity output layer. Weights uniform in +-1/sqrt(fan_in),
  /// biases zero.
  static DenseNetwork mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                          Activation hidden_activation, Rng& rng);

  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::size_t parameter_count() const noexcept;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Mutable access; invalidates outstanding tapes.
  std::vector<DenseLayer>& mutable_layers() noexcept;

  Matrix2D forward(const Matrix2D& batch, ForwardTape& tape) const;
  /// Forward pass without recording a tape.
  Matrix2D predict(const Matrix2D& batch) const;
  /// Exact reverse-mode gradient of sum(output_grad .* forward(x)).
  NetworkGradients backward(const ForwardTape& tape, const Matrix2D& output_grad) const;

  std::size_t forward_calls() const noexcept { return forward_calls_; }
  std::uint64_t generation() const noexcept { return generation_; }
  bool all_finite() const noexcept;
  bool same_shape(const DenseNetwork& other) const noexcept;

  friend bool operator==(const DenseNetwork& a, const DenseNetwork& b);

 private:
  Matrix2D run(const Matrix2D& batch, ForwardTape* tape) const;

  std::vector<DenseLayer> layers_;
  std::uint64_t id_;
  std::uint64_t generation_ = 0;
  mutable std::size_t forward_calls_ = 0;
};

NetworkGradients zero_gradients(const DenseNetwork& net);
void accumulate(NetworkGradients& into, const NetworkGradients& g);
double squared_norm(const NetworkGradients& g);
void scale(NetworkGradients& g, double factor);

struct AdamState {
  std::uint64_t step_count = 0;
  NetworkGradients first_moment;
  NetworkGradients second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_network(const DenseNetwork& net, double learning_rate);
};

/// One bias-corrected Adam update.
void adam_step(DenseNetwork& net, const NetworkGradients& grads, AdamState& state);

/// target <- tau * prediction + (1 - tau) * target, elementwise.
void soft_update(DenseNetwork& target, const DenseNetwork& prediction, double tau);

}  // namespace mqf
