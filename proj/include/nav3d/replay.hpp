#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "nav3d/pomdp_env.hpp"
#include "nav3d/rng.hpp"

namespace nav3d::agent {

// Episode-structured transition storage. Consecutive observations share their
// costmap frames, so each step stores only the newest frame plus the
// low-dimensional state; full 3-frame observations are reassembled on demand.
class ReplayBuffer {
 public:
  struct Frame {
    perception::CostmapImage image;
    float rho = 0, phi = 0, v = 0, w = 0;
  };

  struct Episode {
    std::vector<Frame> frames;           // steps + 1 entries
    std::vector<std::uint8_t> actions;
    std::vector<float> rewards;          // total reward per step
    std::vector<std::uint8_t> terminal;  // 1 = bootstrap-free target
    int steps() const { return static_cast<int>(actions.size()); }
  };

  struct SeqRef {
    const Episode* episode = nullptr;
    int start = 0;
  };

  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void begin_episode(const env::Observation& first_obs);
  void push(int action, double total_reward, bool terminal, const env::Observation& next_obs);

  std::size_t size() const { return total_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t num_episodes() const { return episodes_.size(); }

  // Number of valid sequence start points for the given unroll.
  std::size_t eligible_starts(int unroll) const;

  // Uniformly samples `batch` sequence starts; returns false when fewer than
  // `batch` eligible starts exist.
  bool sample(int batch, int unroll, Rng& rng, std::vector<SeqRef>& out) const;

  // Rebuilds the stacked observation at step `k` of an episode (k may equal
  // episode.steps() for the observation following the last action).
  static env::Observation observation_at(const Episode& ep, int k);

 private:
  void evict();

  std::size_t capacity_;
  std::size_t total_ = 0;  // transitions across all stored episodes
  std::deque<Episode> episodes_;
};

}  // namespace nav3d::agent
