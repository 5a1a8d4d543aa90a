// Experience tuples and the bounded FIFO replay memory.
#pragma once

#include <deque>
#include <stdexcept>
#include <vector>

#include "mecoff/observation.hpp"
#include "mecoff/rng.hpp"

namespace mecoff {

struct Experience {
  Observation state;
  ActionChoice action;
  double cost = 0.0;
  Observation next_state;
  bool terminal = false;  // episode-final; no bootstrap
};

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  void store(Experience e) {
    buffer_.push_back(std::move(e));
    if (buffer_.size() > capacity_) buffer_.pop_front();
  }

  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& at(std::size_t i) const { return buffer_.at(i); }

  // Uniform sample of k distinct indices (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const {
    if (k > buffer_.size())
      throw std::invalid_argument("sample larger than memory");
    std::vector<std::size_t> idx(buffer_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + rng.uniform_below(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::size_t capacity_;
  std::deque<Experience> buffer_;
};

}  // namespace mecoff
