#include "nav3d/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace nav3d::agent {

namespace {

ReplayBuffer::Frame make_frame(const env::Observation& obs) {
  ReplayBuffer::Frame f;
  f.image = obs.frames[env::Observation::kFrames - 1];  // newest
  f.rho = static_cast<float>(obs.goal.rho);
  f.phi = static_cast<float>(obs.goal.phi);
  f.v = static_cast<float>(obs.v);
  f.w = static_cast<float>(obs.w);
  return f;
}

}  // namespace

void ReplayBuffer::begin_episode(const env::Observation& first_obs) {
  episodes_.emplace_back();
  episodes_.back().frames.push_back(make_frame(first_obs));
}

void ReplayBuffer::push(int action, double total_reward, bool terminal,
                        const env::Observation& next_obs) {
  if (episodes_.empty()) throw std::logic_error("ReplayBuffer::push before begin_episode");
  Episode& ep = episodes_.back();
  ep.actions.push_back(static_cast<std::uint8_t>(action));
  ep.rewards.push_back(static_cast<float>(total_reward));
  ep.terminal.push_back(terminal ? 1 : 0);
  ep.frames.push_back(make_frame(next_obs));
  ++total_;
  evict();
}

void ReplayBuffer::evict() {
  // FIFO over whole episodes; the episode currently being filled stays.
  while (total_ > capacity_ && episodes_.size() > 1) {
    total_ -= static_cast<std::size_t>(episodes_.front().steps());
    episodes_.pop_front();
  }
}

std::size_t ReplayBuffer::eligible_starts(int unroll) const {
  std::size_t n = 0;
  for (const Episode& ep : episodes_) {
    const int e = ep.steps() - unroll + 1;
    if (e > 0) n += static_cast<std::size_t>(e);
  }
  return n;
}

bool ReplayBuffer::sample(int batch, int unroll, Rng& rng, std::vector<SeqRef>& out) const {
  // Prefix sums over per-episode eligible counts, so a uniform draw over the
  // virtual concatenation maps back to (episode, start).
  std::vector<std::size_t> cum;
  std::vector<const Episode*> eps;
  cum.reserve(episodes_.size());
  eps.reserve(episodes_.size());
  std::size_t total = 0;
  for (const Episode& ep : episodes_) {
    const int e = ep.steps() - unroll + 1;
    if (e > 0) {
      total += static_cast<std::size_t>(e);
      cum.push_back(total);
      eps.push_back(&ep);
    }
  }
  if (total < static_cast<std::size_t>(batch)) return false;

  out.clear();
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    const std::size_t pick = rng.uniform_int(total);
    const auto it = std::upper_bound(cum.begin(), cum.end(), pick);
    const std::size_t idx = static_cast<std::size_t>(it - cum.begin());
    const std::size_t before = idx == 0 ? 0 : cum[idx - 1];
    out.push_back(SeqRef{eps[idx], static_cast<int>(pick - before)});
  }
  return true;
}

env::Observation ReplayBuffer::observation_at(const Episode& ep, int k) {
  if (k < 0 || k >= static_cast<int>(ep.frames.size())) {
    throw std::out_of_range("ReplayBuffer::observation_at: step " + std::to_string(k));
  }
  env::Observation obs;
  for (int i = 0; i < env::Observation::kFrames; ++i) {
    const int j = std::max(0, k - (env::Observation::kFrames - 1) + i);
    obs.frames[i] = ep.frames[j].image;
  }
  const Frame& f = ep.frames[k];
  obs.goal.rho = f.rho;
  obs.goal.phi = f.phi;
  obs.v = f.v;
  obs.w = f.w;
  return obs;
}

}  // namespace nav3d::agent
