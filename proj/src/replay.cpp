#include "mqf/replay.hpp"

#include <algorithm>
#include <string>

#include "mqf/errors.hpp"

namespace mqf {

// Record layout: for each agent [obs | action | next_obs], then N rewards, then done.

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::vector<AgentDims> dims)
    : capacity_(capacity), dims_(std::move(dims)) {
  if (capacity_ == 0) throw DomainError("ReplayBuffer: capacity must be >= 1");
  if (dims_.empty()) throw DomainError("ReplayBuffer: need at least one agent");
  for (const auto& d : dims_) stride_ += 2 * d.obs_dim + d.action_dim;
  stride_ += dims_.size() + 1;
}

std::size_t ReplayBuffer::slot(std::size_t logical) const noexcept {
  return size_ < capacity_ ? logical : (write_cursor_ + logical) % capacity_;
}

void ReplayBuffer::push(const Transition& t) {
  const std::size_t n = dims_.size();
  if (t.obs.size() != n || t.actions.size() != n || t.next_obs.size() != n || t.rewards.size() != n)
    throw DomainError("ReplayBuffer::push: transition does not cover all " + std::to_string(n) + " agents");
  for (std::size_t i = 0; i < n; ++i) {
    if (t.obs[i].size() != dims_[i].obs_dim || t.next_obs[i].size() != dims_[i].obs_dim ||
        t.actions[i].size() != dims_[i].action_dim)
      throw DomainError("ReplayBuffer::push: agent " + std::to_string(i) + " field has the wrong length");
  }
  if (storage_.size() < capacity_ * stride_ && write_cursor_ * stride_ == storage_.size())
    storage_.resize(storage_.size() + stride_);
  double* rec = storage_.data() + write_cursor_ * stride_;
  for (std::size_t i = 0; i < n; ++i) {
    rec = std::copy(t.obs[i].begin(), t.obs[i].end(), rec);
    rec = std::copy(t.actions[i].begin(), t.actions[i].end(), rec);
    rec = std::copy(t.next_obs[i].begin(), t.next_obs[i].end(), rec);
  }
  rec = std::copy(t.rewards.begin(), t.rewards.end(), rec);
  *rec = t.done ? 1.0 : 0.0;
  write_cursor_ = (write_cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::optional<TransitionBatch> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch == 0 || size_ < batch) return std::nullopt;
  std::vector<std::size_t> logical(batch);
  for (auto& idx : logical) idx = rng.index(size_);
  return gather(logical);
}

TransitionBatch ReplayBuffer::gather(const std::vector<std::size_t>& logical) const {
  const std::size_t n = dims_.size();
  const std::size_t b = logical.size();
  TransitionBatch out;
  for (const auto& d : dims_) {
    out.obs.emplace_back(b, d.obs_dim);
    out.actions.emplace_back(b, d.action_dim);
    out.next_obs.emplace_back(b, d.obs_dim);
  }
  out.rewards = Matrix2D(b, n);
  out.done.resize(b);
  out.indices = logical;
  for (std::size_t j = 0; j < b; ++j) {
    if (logical[j] >= size_) throw DomainError("ReplayBuffer::gather: index out of range");
    const double* rec = storage_.data() + slot(logical[j]) * stride_;
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(rec, dims_[i].obs_dim, out.obs[i].row(j).begin());
      rec += dims_[i].obs_dim;
      std::copy_n(rec, dims_[i].action_dim, out.actions[i].row(j).begin());
      rec += dims_[i].action_dim;
      std::copy_n(rec, dims_[i].obs_dim, out.next_obs[i].row(j).begin());
      rec += dims_[i].obs_dim;
    }
    std::copy_n(rec, n, out.rewards.row(j).begin());
    out.done[j] = rec[n];
  }
  return out;
}

Transition ReplayBuffer::at(std::size_t logical) const {
  const TransitionBatch one = gather({logical});
  Transition t;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    t.obs.push_back(one.obs[i].to_vector());
    t.actions.push_back(one.actions[i].to_vector());
    t.next_obs.push_back(one.next_obs[i].to_vector());
  }
  t.rewards = one.rewards.to_vector();
  t.done = one.done[0] != 0.0;
  return t;
}

}  // namespace mqf
