#include "mqf/network.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "mqf/errors.hpp"
#include "mqf/kernels.hpp"

namespace mqf {

namespace {

std::uint64_t next_network_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void apply_activation(Activation act, Matrix2D& z) {
  switch (act) {
    case Activation::tanh: kernels::tanh_inplace(z.flat()); break;
    case Activation::relu: kernels::relu_inplace(z.flat()); break;
    case Activation::identity: break;
  }
}

// grad <- grad .* act'(z) expressed through the activation output y.
void multiply_activation_derivative(Activation act, const Matrix2D& y, Matrix2D& grad) {
  double* g = grad.data();
  const double* out = y.data();
  const std::size_t n = grad.size();
  switch (act) {
    case Activation::tanh:
#pragma omp simd
      for (std::size_t i = 0; i < n; ++i) g[i] *= 1.0 - out[i] * out[i];
      break;
    case Activation::relu:
#pragma omp simd
      for (std::size_t i = 0; i < n; ++i) g[i] = out[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::identity: break;
  }
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

DenseNetwork::DenseNetwork() : id_(next_network_id()) {}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)), id_(next_network_id()) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (layers_[k].bias.size() != layers_[k].output_dim())
      throw ShapeError("DenseNetwork: layer " + std::to_string(k) + " bias length != output dim");
    if (k > 0 && layers_[k].input_dim() != layers_[k - 1].output_dim())
      throw ShapeError("DenseNetwork: layer " + std::to_string(k) + " input dim does not chain");
  }
}

DenseNetwork::DenseNetwork(const DenseNetwork& other)
    : layers_(other.layers_), id_(next_network_id()), generation_(other.generation_) {}

DenseNetwork& DenseNetwork::operator=(const DenseNetwork& other) {
  if (this != &other) {
    layers_ = other.layers_;
    ++generation_;
  }
  return *this;
}

DenseNetwork DenseNetwork::mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                               Activation hidden_activation, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t fan_in = input_dim;
  auto make = [&](std::size_t out, Activation act) {
    DenseLayer layer{Matrix2D(out, fan_in), std::vector<double>(out, 0.0), act};
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : layer.weight.flat()) w = rng.uniform(-bound, bound);
    layers.push_back(std::move(layer));
    fan_in = out;
  };
  for (std::size_t width : hidden) make(width, hidden_activation);
  make(output_dim, Activation::identity);
  return DenseNetwork(std::move(layers));
}

std::size_t DenseNetwork::input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().input_dim(); }
std::size_t DenseNetwork::output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().output_dim(); }

std::size_t DenseNetwork::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<DenseLayer>& DenseNetwork::mutable_layers() noexcept {
  ++generation_;
  return layers_;
}

Matrix2D DenseNetwork::run(const Matrix2D& batch, ForwardTape* tape) const {
  if (layers_.empty()) throw UsageError("DenseNetwork: no layers");
  if (batch.cols() != input_dim())
    throw ShapeError("DenseNetwork::forward: batch has " + std::to_string(batch.cols()) + " columns, expected " +
                     std::to_string(input_dim()));
  ++forward_calls_;
  if (tape) {
    tape->network_id = id_;
    tape->generation = generation_;
    tape->input = batch;
    tape->outputs.clear();
    tape->outputs.reserve(layers_.size());
  }
  Matrix2D x;
  const Matrix2D* in = &batch;
  for (const auto& layer : layers_) {
    Matrix2D z = kernels::matmul_nt(*in, layer.weight);
    kernels::add_row_vector(z, layer.bias);
    apply_activation(layer.activation, z);
    if (tape) {
      tape->outputs.push_back(std::move(z));
      in = &tape->outputs.back();
    } else {
      x = std::move(z);
      in = &x;
    }
  }
  Matrix2D out = *in;
  if (!out.all_finite()) throw NumericError("DenseNetwork::forward produced a non-finite value");
  return out;
}

Matrix2D DenseNetwork::forward(const Matrix2D& batch, ForwardTape& tape) const { return run(batch, &tape); }

Matrix2D DenseNetwork::predict(const Matrix2D& batch) const { return run(batch, nullptr); }

NetworkGradients DenseNetwork::backward(const ForwardTape& tape, const Matrix2D& output_grad) const {
  if (tape.network_id != id_ || tape.generation != generation_ || tape.outputs.size() != layers_.size())
    throw UsageError("DenseNetwork::backward: tape was not produced by this network's current parameters");
  const Matrix2D& last = tape.outputs.back();
  if (output_grad.rows() != last.rows() || output_grad.cols() != last.cols())
    throw ShapeError("DenseNetwork::backward: output gradient shape mismatch");

  NetworkGradients grads(layers_.size());
  Matrix2D upstream = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const DenseLayer& layer = layers_[k];
    multiply_activation_derivative(layer.activation, tape.outputs[k], upstream);
    const Matrix2D& x = k == 0 ? tape.input : tape.outputs[k - 1];
    grads[k].weight = kernels::matmul_tn(upstream, x);
    grads[k].bias = kernels::column_sums(upstream);
    if (k > 0) upstream = kernels::matmul(upstream, layer.weight);
  }
  return grads;
}

bool DenseNetwork::all_finite() const noexcept {
  for (const auto& l : layers_) {
    if (!l.weight.all_finite()) return false;
    for (double b : l.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

bool DenseNetwork::same_shape(const DenseNetwork& other) const noexcept {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (layers_[k].weight.rows() != other.layers_[k].weight.rows() ||
        layers_[k].weight.cols() != other.layers_[k].weight.cols() ||
        layers_[k].activation != other.layers_[k].activation)
      return false;
  }
  return true;
}

bool operator==(const DenseNetwork& a, const DenseNetwork& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k) {
    const auto& x = a.layers_[k];
    const auto& y = b.layers_[k];
    if (x.activation != y.activation || !(x.weight == y.weight) || x.bias != y.bias) return false;
  }
  return true;
}

NetworkGradients zero_gradients(const DenseNetwork& net) {
  NetworkGradients g;
  for (const auto& l : net.layers())
    g.push_back({Matrix2D(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size(), 0.0)});
  return g;
}

void accumulate(NetworkGradients& into, const NetworkGradients& g) {
  if (into.size() != g.size()) throw ShapeError("accumulate: layer count mismatch");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (into[k].weight.size() != g[k].weight.size() || into[k].bias.size() != g[k].bias.size())
      throw ShapeError("accumulate: layer shape mismatch");
    for (std::size_t i = 0; i < g[k].weight.size(); ++i) into[k].weight.data()[i] += g[k].weight.data()[i];
    for (std::size_t i = 0; i < g[k].bias.size(); ++i) into[k].bias[i] += g[k].bias[i];
  }
}

double squared_norm(const NetworkGradients& g) {
  double s = 0.0;
  for (const auto& l : g) {
    for (double v : l.weight.flat()) s += v * v;
    for (double v : l.bias) s += v * v;
  }
  return s;
}

void scale(NetworkGradients& g, double factor) {
  for (auto& l : g) {
    for (double& v : l.weight.flat()) v *= factor;
    for (double& v : l.bias) v *= factor;
  }
}

AdamState AdamState::for_network(const DenseNetwork& net, double learning_rate) {
  AdamState s;
  s.first_moment = zero_gradients(net);
  s.second_moment = zero_gradients(net);
  s.learning_rate = learning_rate;
  return s;
}

namespace {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 double b1, double b2, double step_size, double v_correction, double eps) {
  const std::size_t n = param.size();
  double* p = param.data();
  const double* g = grad.data();
  double* mm = m.data();
  double* vv = v.data();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    mm[i] = b1 * mm[i] + (1.0 - b1) * g[i];
    vv[i] = b2 * vv[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= step_size * mm[i] / (std::sqrt(vv[i] / v_correction) + eps);
  }
}

}  // namespace

void adam_step(DenseNetwork& net, const NetworkGradients& grads, AdamState& state) {
  const auto& layers = net.layers();
  if (grads.size() != layers.size() || state.first_moment.size() != layers.size() ||
      state.second_moment.size() != layers.size())
    throw ShapeError("adam_step: layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (grads[k].weight.size() != layers[k].weight.size() || grads[k].bias.size() != layers[k].bias.size() ||
        state.first_moment[k].weight.size() != layers[k].weight.size() ||
        state.second_moment[k].weight.size() != layers[k].weight.size())
      throw ShapeError("adam_step: parameter shape mismatch in layer " + std::to_string(k));
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double m_correction = 1.0 - std::pow(state.beta1, t);
  const double v_correction = 1.0 - std::pow(state.beta2, t);
  const double step_size = state.learning_rate / m_correction;
  auto& mutable_layers = net.mutable_layers();
  for (std::size_t k = 0; k < mutable_layers.size(); ++k) {
    auto& layer = mutable_layers[k];
    adam_update(layer.weight.flat(), grads[k].weight.flat(), state.first_moment[k].weight.flat(),
                state.second_moment[k].weight.flat(), state.beta1, state.beta2, step_size, v_correction,
                state.epsilon);
    adam_update(layer.bias, grads[k].bias, state.first_moment[k].bias, state.second_moment[k].bias, state.beta1,
                state.beta2, step_size, v_correction, state.epsilon);
  }
}

void soft_update(DenseNetwork& target, const DenseNetwork& prediction, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("soft_update: tau must lie in (0, 1]");
  if (!target.same_shape(prediction)) throw ShapeError("soft_update: networks are not shape-congruent");
  auto& dst = target.mutable_layers();
  const auto& src = prediction.layers();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    double* t = dst[k].weight.data();
    const double* p = src[k].weight.data();
    for (std::size_t i = 0; i < dst[k].weight.size(); ++i) t[i] = tau * p[i] + (1.0 - tau) * t[i];
    for (std::size_t i = 0; i < dst[k].bias.size(); ++i)
      dst[k].bias[i] = tau * src[k].bias[i] + (1.0 - tau) * dst[k].bias[i];
  }
}

}  // namespace mqf
