#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mqf::oracle {

std::vector<double> scalar_forward(const DenseNetwork& net, const std::vector<double>& x) {
  std::vector<double> h = x;
  for (const auto& layer : net.layers()) {
    std::vector<double> next(layer.output_dim());
    for (std::size_t o = 0; o < layer.output_dim(); ++o) {
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.input_dim(); ++i) s += layer.weight(o, i) * h[i];
      switch (layer.activation) {
        case Activation::tanh: s = std::tanh(s); break;
        case Activation::relu: s = s > 0.0 ? s : 0.0; break;
        case Activation::identity: break;
      }
      next[o] = s;
    }
    h = std::move(next);
  }
  return h;
}

std::vector<double> row_vector(const Matrix2D& m, std::size_t r) {
  std::vector<double> v(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) v[c] = m(r, c);
  return v;
}

Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  Matrix2D c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    t[i].assign(i + 1, 1);
    for (std::size_t j = 1; j < i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
  }
  return k > n ? 0 : t[n][k];
}

std::vector<std::vector<unsigned>> brute_force_monomials(std::size_t d, std::size_t r) {
  std::vector<std::vector<unsigned>> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= r + 1;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<unsigned> e(d);
    std::size_t c = code;
    unsigned sum = 0;
    for (std::size_t i = 0; i < d; ++i) {
      e[i] = static_cast<unsigned>(c % (r + 1));
      c /= r + 1;
      sum += e[i];
    }
    if (sum <= r) out.push_back(e);
  }
  return out;
}

double monomial(const std::vector<unsigned>& exponents, const std::vector<double>& action) {
  double v = 1.0;
  for (std::size_t i = 0; i < exponents.size(); ++i)
    for (unsigned p = 0; p < exponents[i]; ++p) v *= action[i];
  return v;
}

double q_value(const QFunctionalAgent& agent, NetworkRole role, const std::vector<double>& obs,
               const std::vector<double>& action) {
  const std::vector<double> coeffs = scalar_forward(agent.network(role), obs);
  const auto& exps = agent.basis().exponents();
  double q = 0.0;
  for (std::size_t j = 0; j < exps.size(); ++j) q += coeffs[j] * monomial(exps[j], action);
  return q;
}

double td_loss(const Learner& learner, const TransitionBatch& batch, const Matrix2D& targets) {
  const std::size_t b = batch.size();
  const std::size_t n = learner.n_agents();
  auto joint_row = [&](const std::vector<Matrix2D>& parts, std::size_t j) {
    std::vector<double> v;
    for (const auto& p : parts)
      for (std::size_t c = 0; c < p.cols(); ++c) v.push_back(p(j, c));
    return v;
  };
  double loss = 0.0;
  switch (learner.kind()) {
    case LearnerKind::mqf: {
      const auto& mqf = dynamic_cast<const MqfLearner&>(learner);
      const Mixer& mixer = mqf.mixer_prediction();
      for (std::size_t j = 0; j < b; ++j) {
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i)
          q[i] = q_value(learner.agents()[i], NetworkRole::prediction, row_vector(batch.obs[i], j),
                         row_vector(batch.actions[i], j));
        double total = 0.0;
        if (mixer.kind() == MixerKind::sum) {
          for (double v : q) total += v;
        } else {
          const auto s = joint_row(batch.obs, j);
          const auto w = scalar_forward(mixer.hyper_w(), s);
          total = scalar_forward(mixer.hyper_b(), s)[0];
          for (std::size_t i = 0; i < n; ++i) total += std::fabs(w[i]) * q[i];
        }
        const double diff = total - targets(j, 0);
        loss += diff * diff;
      }
      return loss / static_cast<double>(b);
    }
    case LearnerKind::iqf: {
      for (std::size_t i = 0; i < n; ++i) {
        double agent_loss = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
          const double q = q_value(learner.agents()[i], NetworkRole::prediction, row_vector(batch.obs[i], j),
                                   row_vector(batch.actions[i], j));
          agent_loss += (q - targets(j, i)) * (q - targets(j, i));
        }
        loss += agent_loss / static_cast<double>(b);
      }
      return loss;
    }
    case LearnerKind::cqf: {
      for (std::size_t j = 0; j < b; ++j) {
        const double q = q_value(learner.agents()[0], NetworkRole::prediction, joint_row(batch.obs, j),
                                 joint_row(batch.actions, j));
        loss += (q - targets(j, 0)) * (q - targets(j, 0));
      }
      return loss / static_cast<double>(b);
    }
  }
  return loss;
}

double central_difference(const std::function<double()>& f, double& p, double h) {
  const double saved = p;
  p = saved + h;
  const double up = f();
  p = saved - h;
  const double down = f();
  p = saved;
  return (up - down) / (2.0 * h);
}

double relative_error(double a, double b, double floor) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

double gradient_check(const std::vector<DenseNetwork*>& nets, const std::vector<NetworkGradients>& analytic,
                      const std::function<double()>& loss, double h) {
  double worst = 0.0;
  for (std::size_t n = 0; n < nets.size(); ++n) {
    auto& layers = nets[n]->mutable_layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto& w = layers[k].weight;
      for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c)
          worst = std::max(worst,
                           relative_error(analytic[n][k].weight(r, c), central_difference(loss, w(r, c), h)));
      for (std::size_t o = 0; o < layers[k].bias.size(); ++o)
        worst = std::max(worst,
                         relative_error(analytic[n][k].bias[o], central_difference(loss, layers[k].bias[o], h)));
    }
  }
  return worst;
}

void integrate(Vec2& pos, Vec2& vel, Vec2 action, double accel, double max_speed, double dt, double damping) {
  const double gain = accel * dt;
  double vx = vel.x * (1.0 - damping) + action.x * gain;
  double vy = vel.y * (1.0 - damping) + action.y * gain;
  const double speed = std::hypot(vx, vy);
  if (speed > max_speed) {
    vx *= max_speed / speed;
    vy *= max_speed / speed;
  }
  vel = {vx, vy};
  pos = {pos.x + vx * dt, pos.y + vy * dt};
}

double landmark_reward(Vec2 agent, const std::vector<Vec2>& landmarks, double threshold, double scale) {
  double nearest = 1e300;
  double sum = 0.0;
  for (const auto& l : landmarks) {
    const double d = std::sqrt((agent.x - l.x) * (agent.x - l.x) + (agent.y - l.y) * (agent.y - l.y));
    nearest = std::min(nearest, d);
    sum += d;
  }
  return nearest <= threshold ? std::exp(-nearest * nearest / scale) : -sum;
}

std::vector<PreyCandidate> prey_rescan(const ScenarioWorld& world, const EnvParams& params) {
  const Entity& prey = *world.prey;
  std::vector<PreyCandidate> out;
  for (std::size_t j = 0; j <= params.prey_directions; ++j) {
    PreyCandidate c;
    if (j < params.prey_directions) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(params.prey_directions);
      c.direction = {std::cos(angle), std::sin(angle)};
    }
    Vec2 pos = prey.pos;
    Vec2 vel = prey.vel;
    integrate(pos, vel, c.direction, prey.accel, prey.max_speed, world.dt, world.damping);
    c.position = pos;
    c.nearest = 1e300;
    for (const auto& p : world.agents)
      c.nearest = std::min(c.nearest, std::hypot(pos.x - p.pos.x, pos.y - p.pos.y));
    c.feasible = std::fabs(pos.x) <= params.arena_half_width && std::fabs(pos.y) <= params.arena_half_width;
    for (const auto& o : world.obstacles)
      if (std::hypot(pos.x - o.pos.x, pos.y - o.pos.y) < prey.radius + o.radius) c.feasible = false;
    out.push_back(c);
  }
  return out;
}

DenseNetwork random_network(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, Activation act,
                            Rng& rng, double scale) {
  std::vector<DenseLayer> layers;
  std::size_t prev = in;
  for (std::size_t k = 0; k <= hidden.size(); ++k) {
    const std::size_t width = k < hidden.size() ? hidden[k] : out;
    DenseLayer l;
    l.weight = Matrix2D(width, prev);
    const double bound = scale / std::sqrt(static_cast<double>(prev));
    for (double& w : l.weight.flat()) w = rng.uniform(-bound, bound);
    l.bias.resize(width);
    for (double& b : l.bias) b = rng.uniform(-0.5, 0.5);
    l.activation = k < hidden.size() ? act : Activation::identity;
    layers.push_back(std::move(l));
    prev = width;
  }
  return DenseNetwork(std::move(layers));
}

TransitionBatch random_batch(const std::vector<AgentDims>& dims, std::size_t b, Rng& rng) {
  TransitionBatch batch;
  for (const auto& d : dims) {
    Matrix2D o(b, d.obs_dim), a(b, d.action_dim), n(b, d.obs_dim);
    for (double& v : o.flat()) v = rng.uniform(-1.0, 1.0);
    for (double& v : a.flat()) v = rng.uniform(-1.0, 1.0);
    for (double& v : n.flat()) v = rng.uniform(-1.0, 1.0);
    batch.obs.push_back(std::move(o));
    batch.actions.push_back(std::move(a));
    batch.next_obs.push_back(std::move(n));
  }
  batch.rewards = Matrix2D(b, dims.size());
  for (double& v : batch.rewards.flat()) v = rng.uniform(-1.0, 1.0);
  batch.done.resize(b);
  for (double& v : batch.done) v = rng.bernoulli(0.2) ? 1.0 : 0.0;
  batch.indices.resize(b);
  for (std::size_t j = 0; j < b; ++j) batch.indices[j] = j;
  return batch;
}

}  // namespace mqf::oracle
