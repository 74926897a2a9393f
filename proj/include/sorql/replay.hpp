#pragma once

#include <cstddef>
#include <vector>

#include "sorql/errors.hpp"
#include "sorql/rng.hpp"

namespace sorql {

/// Replay record; states are kept as environment ids and features are
/// re-derived from the precomputed per-state table when batches are built.
struct StoredTransition {
    int state = 0;
    int action = 0;
    int opponent_action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false;
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity < 1) throw InvalidParams("ReplayBuffer: capacity must be positive");
        data_.reserve(capacity);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return data_.size(); }

    void push(const StoredTransition& tr) {
        if (data_.size() < capacity_) {
            data_.push_back(tr);
        } else {
            data_[head_] = tr;
            head_ = (head_ + 1) % capacity_;
        }
    }

    const StoredTransition& at(std::size_t i) const { return data_[i]; }

    const StoredTransition& sample(Rng& rng) const {
        if (data_.empty()) throw InvalidParams("ReplayBuffer: sampling from empty buffer");
        return data_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size())))];
    }

  private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<StoredTransition> data_;
};

}  // namespace sorql
