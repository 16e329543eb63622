#include <doctest.h>

#include <cmath>
#include <utility>

#include "checks.hpp"
#include "mqf/errors.hpp"
#include "mqf/learners.hpp"
#include "oracles.hpp"

using namespace mqf;

namespace {

const std::vector<AgentDims> kTwo{{6, 2}, {6, 2}};

LearnerConfig small_config(LearnerKind kind, MixerKind mixer = MixerKind::sum) {
  LearnerConfig c;
  c.kind = kind;
  c.mixer = mixer;
  c.mixer_hidden_dim = 8;
  c.hidden = {16, 16};
  c.batch_size = 8;
  c.buffer_size = 200;
  c.sample_size = 32;
  return c;
}

void fill_buffer(Learner& learner, std::size_t n, Rng& rng) {
  for (std::size_t s = 0; s < n; ++s) {
    Transition t;
    for (const auto& d : learner.agent_dims()) {
      std::vector<double> o(d.obs_dim), a(d.action_dim), o2(d.obs_dim);
      for (double& v : o) v = rng.uniform(-1.0, 1.0);
      for (double& v : a) v = rng.uniform(-1.0, 1.0);
      for (double& v : o2) v = rng.uniform(-1.0, 1.0);
      t.obs.push_back(o);
      t.actions.push_back(a);
      t.next_obs.push_back(o2);
      t.rewards.push_back(rng.uniform(-1.0, 1.0));
    }
    t.done = s % 7 == 6;
    learner.observe(t);
  }
}

void zero_output_layers(std::vector<DenseNetwork*> nets) {
  for (DenseNetwork* net : nets) {
    auto& out = net->mutable_layers().back();
    out.weight.fill(0.0);
    std::fill(out.bias.begin(), out.bias.end(), 0.0);
  }
}

std::vector<DenseNetwork*> target_nets(Learner& learner) {
  std::vector<DenseNetwork*> nets;
  for (auto& agent : learner.mutable_agents()) nets.push_back(&agent.mutable_target());
  return nets;
}

// Records which agents' observations were read.
class TracingView final : public ObservationView {
 public:
  explicit TracingView(const JointVector& obs) : obs_(obs) {}
  std::size_t n_agents() const override { return obs_.size(); }
  std::span<const double> agent(std::size_t i) const override {
    reads.push_back(i);
    return obs_.at(i);
  }
  mutable std::vector<std::size_t> reads;

 private:
  const JointVector& obs_;
};

JointVector two_observations() {
  return {{0.1, 0.2, -0.3, 0.4, 0.5, -0.6}, {-0.7, 0.8, 0.9, -0.1, 0.2, 0.3}};
}

const ExplorationPolicy kNoNoise{ExplorationPolicy::Kind::epsilon_greedy, 0.0, 0.0, 0.0, 1};

}  // namespace

TEST_SUITE("learners") {

TEST_CASE("greedy joint action is each agent's greedy action") {
  Rng init(1);
  const auto learner = make_learner(small_config(LearnerKind::mqf), kTwo, init);
  const auto obs = two_observations();
  Rng s1(2), s2(2), noise(3);
  const auto joint = learner->act(obs, 0, kNoNoise, s1, noise, ActMode::greedy);
  REQUIRE(joint.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(joint[i] == learner->agents()[i].greedy_action(obs[i], s2).action);
  CHECK(noise.draws() == 0);
}

TEST_CASE("explore mode without noise equals greedy") {
  for (LearnerKind kind : {LearnerKind::mqf, LearnerKind::iqf, LearnerKind::cqf}) {
    Rng init(4);
    const auto learner = make_learner(small_config(kind), kTwo, init);
    const auto obs = two_observations();
    Rng s1(5), s2(5), n1(6), n2(6);
    const ExplorationPolicy zero_sigma{ExplorationPolicy::Kind::gaussian, 0.0, 1.0, 0.05, 1};
    const auto greedy = learner->act(obs, 0, kNoNoise, s1, n1, ActMode::greedy);
    CHECK(learner->act(obs, 0, zero_sigma, s2, n2, ActMode::explore) == greedy);
  }
}

TEST_CASE("centralized action is split per agent") {
  Rng init(7);
  const auto learner = make_learner(small_config(LearnerKind::cqf), kTwo, init);
  REQUIRE(learner->agents().size() == 1);
  CHECK(learner->agents()[0].shape().action_dim == 4);
  CHECK(learner->agents()[0].basis().size() == binomial(6, 4));
  Rng s(8), noise(9);
  const auto joint = learner->act(two_observations(), 0, kNoNoise, s, noise, ActMode::greedy);
  REQUIRE(joint.size() == 2);
  CHECK(joint[0].size() == 2);
  CHECK(joint[1].size() == 2);
  const auto& cqf = dynamic_cast<const CqfLearner&>(*learner);
  CHECK(cqf.split_action(std::vector<double>{1, 2, 3, 4}) == JointVector{{1, 2}, {3, 4}});
  CHECK_THROWS_AS(cqf.split_action(std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("decentralized execution reads only the acting agent's observation") {
  Rng init(10);
  const auto learner = make_learner(small_config(LearnerKind::mqf), kTwo, init);
  auto obs = two_observations();
  TracingView view(obs);
  Rng s1(11), n1(12);
  const auto first = learner->act(view, 0, kNoNoise, s1, n1, ActMode::greedy);
  CHECK(view.reads == std::vector<std::size_t>{0, 1});

  // Changing agent 1's observation cannot change agent 0's action.
  obs[1] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  Rng s2(11), n2(12);
  CHECK(learner->act(obs, 0, kNoNoise, s2, n2, ActMode::greedy)[0] == first[0]);
}

TEST_CASE("targets without bootstrap") {
  for (LearnerKind kind : {LearnerKind::mqf, LearnerKind::iqf, LearnerKind::cqf}) {
    CAPTURE(to_string(kind));
    Rng data(13);

    SUBCASE("gamma zero") {
      auto config = small_config(kind);
      config.gamma = 0.0;
      Rng init(14);
      const auto learner = make_learner(config, kTwo, init);
      const auto batch = oracle::random_batch(kTwo, 16, data);
      Rng s(15);
      const auto y = learner->td_target(batch, s);
      for (std::size_t j = 0; j < 16; ++j) {
        if (kind == LearnerKind::iqf) {
          CHECK(y(j, 0) == batch.rewards(j, 0));
          CHECK(y(j, 1) == batch.rewards(j, 1));
        } else {
          CHECK(y(j, 0) == batch.rewards(j, 0) + batch.rewards(j, 1));
        }
      }
    }
    SUBCASE("terminal transitions") {
      Rng init(14);
      const auto learner = make_learner(small_config(kind), kTwo, init);
      auto batch = oracle::random_batch(kTwo, 16, data);
      std::fill(batch.done.begin(), batch.done.end(), 1.0);
      Rng s(15);
      const auto y = learner->td_target(batch, s);
      for (std::size_t j = 0; j < 16; ++j) {
        if (kind == LearnerKind::iqf)
          CHECK(y(j, 1) == batch.rewards(j, 1));
        else
          CHECK(y(j, 0) == batch.rewards(j, 0) + batch.rewards(j, 1));
      }
    }
    SUBCASE("zeroed target networks") {
      Rng init(14);
      auto learner = make_learner(small_config(kind), kTwo, init);
      zero_output_layers(target_nets(*learner));
      auto batch = oracle::random_batch(kTwo, 16, data);
      std::fill(batch.done.begin(), batch.done.end(), 0.0);
      Rng s(15);
      const auto y = learner->td_target(batch, s);
      for (std::size_t j = 0; j < 16; ++j) {
        if (kind == LearnerKind::iqf)
          CHECK(y(j, 0) == batch.rewards(j, 0));
        else
          CHECK(y(j, 0) == batch.rewards(j, 0) + batch.rewards(j, 1));
      }
    }
  }
}

TEST_CASE("bootstrap uses the target networks' maxima over fresh samples") {
  Rng init(16);
  const auto learner = make_learner(small_config(LearnerKind::iqf), kTwo, init);
  Rng data(17);
  auto batch = oracle::random_batch(kTwo, 6, data);
  std::fill(batch.done.begin(), batch.done.end(), 0.0);
  Rng s(18), replay(18);
  const auto y = learner->td_target(batch, s);
  // One shared uniform batch per agent per call.
  CHECK(s.draws() == 2 * 32 * 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& agent = learner->agents()[i];
    const auto actions = agent.sample_actions(replay);
    for (std::size_t j = 0; j < 6; ++j) {
      const auto q = agent.evaluate_actions(oracle::row_vector(batch.next_obs[i], j), actions, NetworkRole::target);
      const double best = q[oracle::argmax(q)];
      CHECK(y(j, i) == doctest::Approx(batch.rewards(j, i) + 0.99 * best).epsilon(1e-12));
    }
  }
  // A second call draws new samples.
  learner->td_target(batch, s);
  CHECK(s.draws() == 2 * 2 * 32 * 2);
}

TEST_CASE("perfect fit gives zero loss and zero gradients") {
  for (LearnerKind kind : {LearnerKind::mqf, LearnerKind::iqf, LearnerKind::cqf}) {
    auto config = small_config(kind);
    config.gamma = 0.0;
    Rng init(19);
    auto learner = make_learner(config, kTwo, init);
    zero_output_layers(learner->trainable_networks());
    Rng data(20);
    auto batch = oracle::random_batch(kTwo, 8, data);
    batch.rewards.fill(0.0);
    Rng s(21);
    const auto lg = learner->loss_and_gradients(batch, learner->td_target(batch, s));
    CHECK(lg.loss == 0.0);
    for (const auto& net_grads : lg.grads)
      for (const auto& layer : net_grads) {
        for (double v : layer.weight.flat()) CHECK(v == 0.0);
        for (double v : layer.bias) CHECK(v == 0.0);
      }
  }
}

TEST_CASE("loss agrees with the independent recomputation") {
  for (LearnerKind kind : {LearnerKind::mqf, LearnerKind::iqf, LearnerKind::cqf}) {
    for (MixerKind mixer : {MixerKind::sum, MixerKind::monotonic}) {
      Rng init(22);
      const auto learner = make_learner(small_config(kind, mixer), kTwo, init);
      Rng data(23);
      const auto batch = oracle::random_batch(kTwo, 8, data);
      Rng s(24);
      const auto y = learner->td_target(batch, s);
      const auto lg = learner->loss_and_gradients(batch, y);
      CHECK(lg.loss >= 0.0);
      CHECK(lg.loss == doctest::Approx(oracle::td_loss(*learner, batch, y)).epsilon(1e-12));
    }
  }
}

TEST_CASE("TD gradients match central differences") {
  struct Case {
    LearnerKind kind;
    MixerKind mixer;
  };
  for (const Case c : {Case{LearnerKind::mqf, MixerKind::sum}, Case{LearnerKind::mqf, MixerKind::monotonic},
                       Case{LearnerKind::iqf, MixerKind::sum}, Case{LearnerKind::cqf, MixerKind::sum}}) {
    const auto result = oracle::check_td_gradients(25, 4, c.kind, c.mixer, 1e-4);
    INFO(result.detail);
    CHECK(result.pass);
  }
}

TEST_CASE("train step leaves the target networks alone") {
  for (MixerKind mixer : {MixerKind::sum, MixerKind::monotonic}) {
    Rng init(26);
    auto learner = make_learner(small_config(LearnerKind::mqf, mixer), kTwo, init);
    Rng data(27);
    fill_buffer(*learner, 50, data);
    std::vector<DenseNetwork> targets_before;
    for (const DenseNetwork* net : learner->target_networks()) targets_before.push_back(*net);
    std::vector<DenseNetwork> predictions_before;
    for (const DenseNetwork* net : std::as_const(*learner).trainable_networks()) predictions_before.push_back(*net);

    Rng b(28), s(29);
    for (int step = 0; step < 5; ++step) {
      const auto loss = learner->train_step(b, s);
      REQUIRE(loss);
      CHECK(std::isfinite(*loss));
      CHECK(*loss >= 0.0);
    }
    CHECK(learner->gradient_updates() == 5);
    const auto targets_after = learner->target_networks();
    for (std::size_t n = 0; n < targets_after.size(); ++n) CHECK(*targets_after[n] == targets_before[n]);
    const auto predictions_after = std::as_const(*learner).trainable_networks();
    for (std::size_t n = 0; n < predictions_after.size(); ++n) CHECK_FALSE(*predictions_after[n] == predictions_before[n]);
    for (const auto& opt : learner->optimizers()) CHECK(opt.step_count == 5);
  }
}

TEST_CASE("train step waits for a full batch") {
  Rng init(30);
  auto learner = make_learner(small_config(LearnerKind::iqf), kTwo, init);
  Rng data(31), b(32), s(33);
  fill_buffer(*learner, 7, data);
  CHECK_FALSE(learner->train_step(b, s));
  CHECK(learner->gradient_updates() == 0);
}

TEST_CASE("target updates") {
  auto config = small_config(LearnerKind::mqf, MixerKind::monotonic);
  Rng init(34);
  auto learner = make_learner(config, kTwo, init);
  Rng data(35), b(36), s(37);
  fill_buffer(*learner, 50, data);
  learner->train_step(b, s);

  SUBCASE("tau one copies every prediction") {
    auto copy_config = config;
    copy_config.tau = 1.0;
    Rng init2(34);
    auto copier = make_learner(copy_config, kTwo, init2);
    Rng data2(35), b2(36), s2(37);
    fill_buffer(*copier, 50, data2);
    copier->train_step(b2, s2);
    copier->update_targets();
    const auto preds = std::as_const(*copier).trainable_networks();
    const auto targets = copier->target_networks();
    REQUIRE(preds.size() == targets.size());
    for (std::size_t n = 0; n < preds.size(); ++n) CHECK(*preds[n] == *targets[n]);
  }
  SUBCASE("frozen predictions pull the targets geometrically") {
    const auto pred = learner->agents()[0].prediction().layers()[0].weight(0, 0);
    const auto start = learner->agents()[0].target().layers()[0].weight(0, 0);
    for (int n = 1; n <= 50; ++n) {
      learner->update_targets();
      const double residual = pred - learner->agents()[0].target().layers()[0].weight(0, 0);
      CHECK(residual == doctest::Approx((pred - start) * std::pow(0.995, n)).epsilon(1e-9));
    }
  }
}

TEST_CASE("sum mixer has nothing to soft-update") {
  Rng init(38);
  auto learner = make_learner(small_config(LearnerKind::mqf), kTwo, init);
  auto& mqf = dynamic_cast<MqfLearner&>(*learner);
  CHECK(mqf.trainable_networks().size() == 2);
  CHECK(learner->target_networks().size() == 2);
  learner->update_targets();
  CHECK(mqf.mixer_target() == Mixer::sum(2));
}

TEST_CASE("single-agent MQF with a sum mixer coincides with IQF") {
  const auto result = oracle::check_single_agent_degeneracy(39, 5);
  INFO(result.detail);
  CHECK(result.pass);
}

TEST_CASE("learner configuration is validated") {
  auto config = small_config(LearnerKind::mqf);
  config.gamma = 1.0;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config = small_config(LearnerKind::mqf);
  config.tau = 0.0;
  CHECK_THROWS_AS(config.validate(), DomainError);
  for (LearnerKind k : {LearnerKind::mqf, LearnerKind::iqf, LearnerKind::cqf}) CHECK(parse_learner_kind(to_string(k)) == k);
}

}  // TEST_SUITE
