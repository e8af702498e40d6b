#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nav3d/checkpoint.hpp"
#include "nav3d/qnet.hpp"
#include "nav3d/replay.hpp"

namespace nav3d::agent {

struct AgentConfig {
  nn::ArchConfig arch;
  double lr = 1e-3;
  double gamma = 0.97;
  int batch = 1024;
  int unroll = 3;
  double eps_init = 1.0;
  double eps_final = 0.1;
  std::int64_t eps_horizon = 100000;  // environment steps to reach eps_final
  std::int64_t sync_period = 2000;    // train steps between target syncs
  std::size_t replay_capacity = 200000;
  // Terminal rewards are two orders of magnitude above the per-step ones, so
  // a squared loss occasionally produces gradients violent enough to saturate
  // the recurrent trunk for good. The Huber loss caps the per-sample slope
  // and the global-norm clip caps the batch as a whole.
  double huber_delta = 10.0;
  double clip_norm = 10.0;
};

// Linear decay from eps_init (step 0) to eps_final (at the horizon), constant
// afterwards.
double epsilon_at(std::int64_t step, const AgentConfig& cfg);

// Epsilon-greedy over Q; greedy ties break toward the lowest index.
int select_action(const std::vector<float>& q, double eps, Rng& rng);

// Quadratic within |err| <= delta, linear beyond; the gradient is err clamped
// to [-delta, delta].
double huber_loss(double err, double delta);
double huber_grad(double err, double delta);

// y = r if terminal, else r + gamma * q_target[argmax(q_online)].
float double_q_value(const std::vector<float>& q_online_next,
                     const std::vector<float>& q_target_next, float reward, bool terminal,
                     double gamma);

// Double-Q regression target for one sequence: both networks warm their
// recurrent state over the observations, then apply double_q_value to the
// final transition.
float double_q_target(const nn::QNetwork<float>& online, const nn::QNetwork<float>& target,
                      const std::vector<env::Observation>& seq_obs,
                      const env::Observation& next_obs, float reward, bool terminal,
                      double gamma);

// Double dueling DRQN learner: online/target networks, epsilon-greedy acting,
// and truncated-BPTT updates on sequences sampled from replay.
class Agent {
 public:
  Agent(const AgentConfig& cfg, std::uint64_t seed);

  const AgentConfig& config() const { return cfg_; }
  nn::QNetwork<float>& online() { return online_; }
  const nn::QNetwork<float>& online() const { return online_; }
  const nn::QNetwork<float>& target() const { return target_; }
  std::int64_t train_steps() const { return train_steps_; }

  // Forward the observation through the online network (advancing `state`)
  // and pick an epsilon-greedy action.
  int act(const env::Observation& obs, nn::RecurrentState<float>& state, double eps, Rng& rng);

  // One gradient step on a sampled batch. Returns the batch MSE loss, or
  // nullopt when the buffer lacks enough eligible sequences. Fires a target
  // sync every cfg.sync_period train steps. The update is skipped (and the
  // loss still returned) if the loss is non-finite, leaving parameters good.
  std::optional<double> train_step(ReplayBuffer& buffer, Rng& rng);

  void sync_target();

  ckpt::Snapshot snapshot(std::int64_t env_steps, int level) const;
  static Agent from_snapshot(const ckpt::Snapshot& snap, const AgentConfig& cfg,
                             std::uint64_t seed);

 private:
  AgentConfig cfg_;
  nn::QNetwork<float> online_;
  nn::QNetwork<float> target_;
  nn::AdamState<float> adam_;
  std::int64_t train_steps_ = 0;
};

}  // namespace nav3d::agent
