#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "checks.hpp"
#include "mqf/qfunctional.hpp"
#include "oracles.hpp"

using namespace mqf;

namespace {

AgentShape small_shape(std::size_t sample_size = 200) {
  AgentShape s;
  s.obs_dim = 4;
  s.action_dim = 2;
  s.sample_size = sample_size;
  s.hidden = {16, 16};
  return s;
}

// Output layer replaced by a constant: coefficients equal `coeffs` for every state.
void set_constant_coefficients(QFunctionalAgent& agent, const std::vector<double>& coeffs) {
  auto& out = agent.mutable_prediction().mutable_layers().back();
  out.weight.fill(0.0);
  out.bias = coeffs;
}

const std::vector<double> kObs{0.1, -0.2, 0.3, 0.4};

}  // namespace

TEST_SUITE("qfunctional") {

TEST_CASE("sampled actions fill the box") {
  AgentShape shape = small_shape(1000);
  Rng init(1);
  const QFunctionalAgent agent(shape, init);
  Rng a(7), b(7);
  const auto first = agent.sample_actions(a);
  CHECK(first.rows() == 1000);
  CHECK(first.cols() == 2);
  for (double v : first.flat()) CHECK((v >= -1.0 && v <= 1.0));
  CHECK(first == agent.sample_actions(b));
  Rng c(3);
  CHECK(sample_uniform_actions(5, 3, 0.0, 0.0, c) == Matrix2D(5, 3));
}

TEST_CASE("zero output layer scores every action at zero") {
  Rng init(2);
  QFunctionalAgent agent(small_shape(), init);
  set_constant_coefficients(agent, std::vector<double>(6, 0.0));
  Rng rng(3);
  for (double q : agent.evaluate_actions(kObs, agent.sample_actions(rng), NetworkRole::prediction)) CHECK(q == 0.0);
}

TEST_CASE("duplicate actions get duplicate values") {
  Rng init(4);
  const QFunctionalAgent agent(small_shape(), init);
  const Matrix2D actions{{0.3, -0.4}, {0.9, 0.1}, {0.3, -0.4}};
  const auto q = agent.evaluate_actions(kObs, actions, NetworkRole::prediction);
  CHECK(q[0] == q[2]);
}

TEST_CASE("evaluate_actions matches the per-action oracle") {
  Rng init(5);
  const QFunctionalAgent agent(small_shape(50), init);
  Rng rng(6);
  const auto actions = agent.sample_actions(rng);
  for (NetworkRole role : {NetworkRole::prediction, NetworkRole::target}) {
    const auto q = agent.evaluate_actions(kObs, actions, role);
    for (std::size_t i = 0; i < 50; ++i)
      CHECK(q[i] == doctest::Approx(oracle::q_value(agent, role, kObs, oracle::row_vector(actions, i))).epsilon(1e-12));
  }
}

TEST_CASE("one network forward per evaluated batch") {
  Rng init(8);
  const QFunctionalAgent agent(small_shape(1000), init);
  Rng rng(9);
  const auto before = agent.prediction().forward_calls();
  agent.evaluate_actions(kObs, agent.sample_actions(rng), NetworkRole::prediction);
  CHECK(agent.prediction().forward_calls() == before + 1);
  agent.greedy_action(kObs, rng);
  CHECK(agent.prediction().forward_calls() == before + 2);
}

TEST_CASE("greedy selection") {
  Rng init(10);
  QFunctionalAgent agent(small_shape(), init);
  Rng rng(11);

  SUBCASE("linear in the first component picks the largest first component") {
    set_constant_coefficients(agent, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    const auto actions = agent.sample_actions(rng);
    const auto choice = agent.select_best(kObs, actions);
    double best = -2.0;
    for (std::size_t i = 0; i < actions.rows(); ++i) best = std::max(best, actions(i, 0));
    CHECK(choice.action[0] == best);
  }
  SUBCASE("constant Q picks sample zero") {
    set_constant_coefficients(agent, {1.5, 0.0, 0.0, 0.0, 0.0, 0.0});
    const auto actions = agent.sample_actions(rng);
    const auto choice = agent.select_best(kObs, actions);
    CHECK(choice.index == 0);
    CHECK(choice.action == oracle::row_vector(actions, 0));
    CHECK(choice.q == 1.5);
  }
  SUBCASE("a single sample is returned as is") {
    const Matrix2D one{{0.25, -0.75}};
    CHECK(agent.select_best(kObs, one).action == std::vector<double>{0.25, -0.75});
  }
  SUBCASE("greedy equals a re-scan of the same samples") {
    Rng a(12), b(12);
    const auto choice = agent.greedy_action(kObs, a);
    const auto actions = agent.sample_actions(b);
    const auto q = agent.evaluate_actions(kObs, actions, NetworkRole::prediction);
    CHECK(choice.index == oracle::argmax(q));
    CHECK(choice.q == q[choice.index]);
  }
}

TEST_CASE("selection oracle with constructed ties") {
  const auto result = oracle::check_selection(13, 300);
  INFO(result.detail);
  CHECK(result.pass);
}

TEST_CASE("permuting samples permutes values and keeps the choice") {
  Rng init(14);
  const QFunctionalAgent agent(small_shape(100), init);
  Rng rng(15);
  const auto actions = agent.sample_actions(rng);
  const auto q = agent.evaluate_actions(kObs, actions, NetworkRole::prediction);
  std::vector<std::size_t> order(actions.rows());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::swap(order[3], order[50]);
  Matrix2D shuffled(actions.rows(), actions.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t c = 0; c < actions.cols(); ++c) shuffled(i, c) = actions(order[i], c);
  const auto q2 = agent.evaluate_actions(kObs, shuffled, NetworkRole::prediction);
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(q2[i] == doctest::Approx(q[order[i]]).epsilon(1e-14));
  CHECK(agent.select_best(kObs, shuffled).action == agent.select_best(kObs, actions).action);
}

TEST_CASE("exploration") {
  Rng init(16);
  QFunctionalAgent agent(small_shape(), init);

  SUBCASE("zero sigma is greedy") {
    const ExplorationPolicy policy{ExplorationPolicy::Kind::gaussian, 0.0, 1.0, 0.05, 1};
    Rng s1(1), s2(1), noise(2);
    CHECK(agent.explore_action(policy, kObs, 0, s1, noise) == agent.greedy_action(kObs, s2).action);
    CHECK(noise.draws() == 0);
  }
  SUBCASE("no exploration is greedy") {
    const ExplorationPolicy policy{ExplorationPolicy::Kind::none, 0.1, 1.0, 0.05, 1};
    Rng s1(1), s2(1), noise(2);
    CHECK(agent.explore_action(policy, kObs, 0, s1, noise) == agent.greedy_action(kObs, s2).action);
  }
  SUBCASE("epsilon one is uniform over the box") {
    const ExplorationPolicy policy{ExplorationPolicy::Kind::epsilon_greedy, 0.0, 1.0, 1.0, 1};
    Rng sampling(3), noise(4);
    const std::size_t n = 100000;
    double sum0 = 0.0, sum1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = agent.explore_action(policy, kObs, i, sampling, noise);
      sum0 += a[0];
      sum1 += a[1];
    }
    // The mean of n uniforms on [-1, 1] has standard deviation 1 / sqrt(3 n).
    const double three_sigma = 3.0 / std::sqrt(3.0 * static_cast<double>(n));
    CHECK(std::abs(sum0 / n) <= three_sigma);
    CHECK(std::abs(sum1 / n) <= three_sigma);
    CHECK(sampling.draws() == 0);
  }
  SUBCASE("gaussian noise is clamped at the boundary") {
    set_constant_coefficients(agent, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    const ExplorationPolicy policy{ExplorationPolicy::Kind::gaussian, 5.0, 1.0, 0.05, 1};
    Rng sampling(5), noise(6);
    std::size_t at_upper = 0;
    for (int i = 0; i < 2000; ++i) {
      const auto a = agent.explore_action(policy, kObs, 0, sampling, noise);
      for (double v : a) CHECK((v >= -1.0 && v <= 1.0));
      if (a[0] == 1.0) ++at_upper;
    }
    CHECK(at_upper > 500);
  }
}

TEST_CASE("epsilon decays linearly") {
  const ExplorationPolicy policy{ExplorationPolicy::Kind::epsilon_greedy, 0.1, 1.0, 0.05, 100};
  CHECK(policy.epsilon_at(0) == 1.0);
  CHECK(policy.epsilon_at(50) == doctest::Approx(0.525));
  CHECK(policy.epsilon_at(100) == 0.05);
  CHECK(policy.epsilon_at(1000000) == 0.05);
  const ExplorationPolicy bad{ExplorationPolicy::Kind::epsilon_greedy, 0.1, 0.1, 0.5, 100};
  CHECK_THROWS(bad.validate());
}

}  // TEST_SUITE
