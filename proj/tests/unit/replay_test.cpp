#include <doctest.h>

#include <cmath>

#include "mqf/errors.hpp"
#include "mqf/replay.hpp"

using namespace mqf;

namespace {

// Two agents with different shapes; every field encodes the step counter so
// alignment can be read back from any sampled row.
const std::vector<AgentDims> kDims{{3, 2}, {4, 1}};

Transition tagged(double step) {
  Transition t;
  t.obs = {{step, 0.0, 1.0}, {step, 0.0, 0.0, 2.0}};
  t.actions = {{step, -step}, {step}};
  t.rewards = {step, 2.0 * step};
  t.next_obs = {{step + 1.0, 0.0, 1.0}, {step + 1.0, 0.0, 0.0, 2.0}};
  t.done = static_cast<long>(step) % 5 == 4;
  return t;
}

}  // namespace

TEST_SUITE("replay") {

TEST_CASE("full buffer evicts the oldest entry") {
  ReplayBuffer buffer(3, kDims);
  for (int s = 1; s <= 4; ++s) buffer.push(tagged(s));
  CHECK(buffer.size() == 3);
  CHECK(buffer.at(0).obs[0][0] == 2.0);
  CHECK(buffer.at(1).obs[0][0] == 3.0);
  CHECK(buffer.at(2).obs[0][0] == 4.0);
  for (int s = 5; s <= 11; ++s) buffer.push(tagged(s));
  for (std::size_t i = 0; i < 3; ++i) CHECK(buffer.at(i).obs[0][0] == 9.0 + static_cast<double>(i));
}

TEST_CASE("a single stored transition comes back intact") {
  ReplayBuffer buffer(10, kDims);
  const auto t = tagged(4);
  buffer.push(t);
  Rng rng(1);
  const auto batch = buffer.sample(1, rng);
  REQUIRE(batch);
  CHECK(batch->size() == 1);
  CHECK(batch->obs[1].to_vector() == t.obs[1]);
  CHECK(batch->actions[0].to_vector() == t.actions[0]);
  CHECK(batch->next_obs[0].to_vector() == t.next_obs[0]);
  CHECK(batch->rewards.to_vector() == t.rewards);
  CHECK(batch->done[0] == 1.0);
  const auto back = buffer.at(0);
  CHECK(back.obs == t.obs);
  CHECK(back.done == t.done);
}

TEST_CASE("size grows to the number of pushes below capacity") {
  ReplayBuffer buffer(500000, kDims);
  for (int s = 0; s < 100000; ++s) buffer.push(tagged(s));
  CHECK(buffer.size() == 100000);
  CHECK(buffer.capacity() == 500000);
}

TEST_CASE("sampling is not ready below the batch size") {
  ReplayBuffer buffer(100, kDims);
  Rng rng(2);
  for (int s = 0; s < 5; ++s) buffer.push(tagged(s));
  CHECK_FALSE(buffer.sample(6, rng));
  CHECK(buffer.sample(5, rng));
}

TEST_CASE("every sampled row is one aligned step") {
  ReplayBuffer buffer(1000, kDims);
  for (int s = 0; s < 1500; ++s) buffer.push(tagged(s));
  Rng rng(3);
  const auto batch = buffer.sample(512, rng);
  REQUIRE(batch);
  CHECK(batch->size() == 512);
  for (std::size_t j = 0; j < 512; ++j) {
    const double step = batch->obs[0](j, 0);
    CHECK(step >= 500.0);
    CHECK(batch->obs[1](j, 0) == step);
    CHECK(batch->actions[0](j, 1) == -step);
    CHECK(batch->actions[1](j, 0) == step);
    CHECK(batch->next_obs[0](j, 0) == step + 1.0);
    CHECK(batch->next_obs[1](j, 0) == step + 1.0);
    CHECK(batch->rewards(j, 1) == 2.0 * step);
    CHECK(batch->done[j] == (static_cast<long>(step) % 5 == 4 ? 1.0 : 0.0));
  }
  CHECK(batch->joint_obs().cols() == 7);
  CHECK(batch->joint_actions().cols() == 3);
}

TEST_CASE("sampled indices are uniform") {
  ReplayBuffer buffer(100, kDims);
  for (int s = 0; s < 100; ++s) buffer.push(tagged(s));
  Rng rng(4);
  std::vector<double> counts(100, 0.0);
  const std::size_t draws = 1000000;
  for (std::size_t done = 0; done < draws; done += 100) {
    const auto batch = buffer.sample(100, rng);
    REQUIRE(batch);
    for (std::size_t idx : batch->indices) counts[idx] += 1.0;
  }
  const double expected = static_cast<double>(draws) / 100.0;
  const double sigma = std::sqrt(static_cast<double>(draws) * 0.01 * 0.99);
  for (double c : counts) CHECK(std::abs(c - expected) <= 5.0 * sigma);
}

TEST_CASE("inconsistent transitions are rejected") {
  ReplayBuffer buffer(10, kDims);
  auto t = tagged(1);
  t.obs[1].pop_back();
  CHECK_THROWS_AS(buffer.push(t), DomainError);
  t = tagged(1);
  t.rewards.push_back(0.0);
  CHECK_THROWS_AS(buffer.push(t), DomainError);
  CHECK(buffer.size() == 0);
}

}  // TEST_SUITE
