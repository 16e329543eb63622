#include <doctest.h>

#include "checks.hpp"
#include "mqf/errors.hpp"
#include "mqf/mixer.hpp"
#include "oracles.hpp"

using namespace mqf;

namespace {

Matrix2D random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix2D m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_SUITE("mixer") {

TEST_CASE("sum mixer adds agent values") {
  const auto mixer = Mixer::sum(3);
  CHECK(mixer.mix(Matrix2D{{1.0, 2.0, -0.5}}, Matrix2D(1, 0)) == std::vector<double>{2.5});
  const auto single = Mixer::sum(1);
  CHECK(single.mix(Matrix2D{{-4.25}, {3.0}}, Matrix2D(2, 0)) == std::vector<double>{-4.25, 3.0});
}

TEST_CASE("sum mixer gradient is one per agent") {
  const auto mixer = Mixer::sum(4);
  Rng rng(1);
  const auto g = mixer.mix_gradient(random_matrix(6, 4, rng), Matrix2D(6, 0), std::vector<double>(6, 1.0));
  for (double v : g.agent_qs.flat()) CHECK(v == 1.0);
  CHECK(g.hyper_w.empty());
}

TEST_CASE("monotonic mixer with unit weights and no bias is a sum") {
  Rng rng(2);
  auto mixer = Mixer::monotonic(3, 5, 32, rng);
  auto& w_out = mixer.mutable_hyper_w().mutable_layers().back();
  w_out.weight.fill(0.0);
  std::fill(w_out.bias.begin(), w_out.bias.end(), 1.0);
  auto& b_out = mixer.mutable_hyper_b().mutable_layers().back();
  b_out.weight.fill(0.0);
  std::fill(b_out.bias.begin(), b_out.bias.end(), 0.0);
  const auto qs = random_matrix(8, 3, rng);
  const auto joint = random_matrix(8, 5, rng);
  const auto mixed = mixer.mix(qs, joint);
  const auto summed = Mixer::sum(3).mix(qs, joint);
  for (std::size_t j = 0; j < 8; ++j) CHECK(mixed[j] == doctest::Approx(summed[j]).epsilon(1e-15));
}

TEST_CASE("monotonic agent gradients equal the absolute mixing weights") {
  Rng rng(3);
  const auto mixer = Mixer::monotonic(3, 6, 32, rng);
  const auto qs = random_matrix(1000, 3, rng);
  const auto joint = random_matrix(1000, 6, rng);
  const auto g = mixer.mix_gradient(qs, joint, std::vector<double>(1000, 1.0));
  const auto w = mixer.mixing_weights(joint);
  for (std::size_t i = 0; i < g.agent_qs.size(); ++i) {
    CHECK(g.agent_qs.flat()[i] >= 0.0);
    CHECK(g.agent_qs.flat()[i] == doctest::Approx(w.flat()[i]).epsilon(1e-15));
  }
}

TEST_CASE("sum exactness and monotonicity oracles") {
  const auto result = oracle::check_mixer(4, 1000);
  INFO(result.detail);
  CHECK(result.pass);
}

TEST_CASE("monotonic hypernetwork gradients match central differences") {
  Rng rng(5);
  auto mixer = Mixer::monotonic(2, 4, 8, rng);
  const auto qs = random_matrix(5, 2, rng);
  const auto joint = random_matrix(5, 4, rng);
  std::vector<double> upstream(5);
  for (double& u : upstream) u = rng.uniform(-1.0, 1.0);
  const auto g = mixer.mix_gradient(qs, joint, upstream);
  const auto loss = [&] {
    const auto q = mixer.mix(qs, joint);
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += upstream[j] * q[j];
    return s;
  };
  const double worst = oracle::gradient_check({&mixer.mutable_hyper_w(), &mixer.mutable_hyper_b()},
                                              {g.hyper_w, g.hyper_b}, loss);
  CHECK(worst <= 1e-4);
}

TEST_CASE("mixer shape checks") {
  Rng rng(6);
  const auto mixer = Mixer::monotonic(2, 4, 8, rng);
  CHECK_THROWS_AS(mixer.mix(Matrix2D(3, 3), Matrix2D(3, 4)), ShapeError);
  CHECK_THROWS_AS(mixer.mix(Matrix2D(3, 2), Matrix2D(3, 5)), ShapeError);
  CHECK_THROWS_AS(Mixer::sum(2).mix(Matrix2D(1, 3), Matrix2D(1, 0)), ShapeError);
}

TEST_CASE("mixer soft update") {
  Rng rng(7);
  auto target = Mixer::monotonic(2, 4, 8, rng);
  const auto prediction = Mixer::monotonic(2, 4, 8, rng);
  soft_update(target, prediction, 1.0);
  CHECK(target == prediction);
  auto sum_target = Mixer::sum(2);
  soft_update(sum_target, Mixer::sum(2), 0.005);
  CHECK(sum_target == Mixer::sum(2));
  CHECK_THROWS_AS(soft_update(sum_target, prediction, 0.5), ShapeError);
}

TEST_CASE("mixer kind names round-trip") {
  for (MixerKind k : {MixerKind::sum, MixerKind::monotonic}) CHECK(parse_mixer_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_mixer_kind("qtran"), DomainError);
}

}  // TEST_SUITE
