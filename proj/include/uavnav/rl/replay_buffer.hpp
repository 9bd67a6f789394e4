#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "uavnav/core/error.hpp"
#include "uavnav/core/rng.hpp"

namespace uavnav::rl {

// One experience record. Depth images are stored raw (pre-augmentation) and
// in single precision; interventions and encoding happen at sampling time so
// every gradient step sees fresh variants through the current encoder.
struct Transition {
    std::vector<float> x;       // depth image, row-major, meters
    std::vector<float> x_next;
    std::array<float, 3> goal{}, vel{};
    std::array<float, 3> goal_next{}, vel_next{};
    std::array<float, 3> action{};
    float reward = 0.0f;
    bool done = false;
};

// Fixed-capacity FIFO ring with uniform with-replacement sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity = 20000) : capacity_(capacity) {
        if (capacity_ < 1) throw ConfigError("replay buffer capacity must be >= 1");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return storage_.size(); }
    std::size_t cursor() const { return cursor_; }

    void push(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    const Transition& at(std::size_t i) const { return storage_[i]; }

    std::vector<const Transition*> sample(std::size_t batch_size, Rng& rng) const {
        if (storage_.size() < batch_size)
            throw NotReadyError("replay buffer holds " + std::to_string(storage_.size()) +
                                " transitions, batch needs " + std::to_string(batch_size));
        std::vector<const Transition*> out(batch_size);
        for (auto& p : out) p = &storage_[rng.below(storage_.size())];
        return out;
    }

    // Checkpoint access.
    std::vector<Transition>& storage() { return storage_; }
    const std::vector<Transition>& storage() const { return storage_; }
    void set_cursor(std::size_t c) { cursor_ = c % capacity_; }

  private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

}  // namespace uavnav::rl
