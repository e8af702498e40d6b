#include "nav3d/agent.hpp"

#include <algorithm>
#include <cmath>

namespace nav3d::agent {

double epsilon_at(std::int64_t step, const AgentConfig& cfg) {
  if (step >= cfg.eps_horizon) return cfg.eps_final;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.eps_horizon);
  return cfg.eps_init + (cfg.eps_final - cfg.eps_init) * frac;
}

int select_action(const std::vector<float>& q, double eps, Rng& rng) {
  if (eps > 0.0 && rng.uniform() < eps) {
    return static_cast<int>(rng.uniform_int(q.size()));
  }
  return nn::argmax(q);
}

double huber_loss(double err, double delta) {
  const double a = std::abs(err);
  if (a <= delta) return 0.5 * err * err;
  return delta * (a - 0.5 * delta);
}

double huber_grad(double err, double delta) { return std::clamp(err, -delta, delta); }

float double_q_value(const std::vector<float>& q_online_next,
                     const std::vector<float>& q_target_next, float reward, bool terminal,
                     double gamma) {
  if (terminal) return reward;
  return reward + static_cast<float>(gamma) * q_target_next[nn::argmax(q_online_next)];
}

float double_q_target(const nn::QNetwork<float>& online, const nn::QNetwork<float>& target,
                      const std::vector<env::Observation>& seq_obs,
                      const env::Observation& next_obs, float reward, bool terminal,
                      double gamma) {
  if (terminal) return reward;
  const int frames = online.arch().frames;
  nn::RecurrentState<float> s_on, s_tg;
  s_on.reset(online.arch().hidden);
  s_tg.reset(target.arch().hidden);
  std::vector<float> q;
  for (const auto& obs : seq_obs) {
    const auto in = nn::encode_observation<float>(obs, frames);
    online.forward(in, s_on, q, nullptr, false);
    target.forward(in, s_tg, q, nullptr, false);
  }
  const auto in_next = nn::encode_observation<float>(next_obs, frames);
  std::vector<float> q_on, q_tg;
  online.forward(in_next, s_on, q_on);
  target.forward(in_next, s_tg, q_tg);
  return double_q_value(q_on, q_tg, reward, false, gamma);
}

Agent::Agent(const AgentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), online_(cfg.arch), target_(cfg.arch) {
  online_.init(seed);
  target_.params() = online_.params();
  adam_ = nn::AdamState<float>::like(online_.params());
}

int Agent::act(const env::Observation& obs, nn::RecurrentState<float>& state, double eps,
               Rng& rng) {
  const auto in = nn::encode_observation<float>(obs, cfg_.arch.frames);
  std::vector<float> q;
  online_.forward(in, state, q);
  return select_action(q, eps, rng);
}

void Agent::sync_target() { target_.params() = online_.params(); }

std::optional<double> Agent::train_step(ReplayBuffer& buffer, Rng& rng) {
  const int U = cfg_.arch.use_lstm ? cfg_.unroll : 1;
  std::vector<ReplayBuffer::SeqRef> refs;
  if (!buffer.sample(cfg_.batch, U, rng, refs)) return std::nullopt;

  auto grads = online_.zero_grads();
  const int H = cfg_.arch.hidden;
  const int frames = cfg_.arch.frames;
  double loss = 0.0;

  std::vector<nn::StepCache<float>> caches(U);
  for (const auto& ref : refs) {
    const ReplayBuffer::Episode& ep = *ref.episode;
    const int last = ref.start + U - 1;

    // Online pass over the sequence, caching for BPTT; heads only where the
    // loss applies.
    nn::RecurrentState<float> s_on;
    s_on.reset(H);
    std::vector<float> q_final;
    for (int t = 0; t < U; ++t) {
      const auto obs = ReplayBuffer::observation_at(ep, ref.start + t);
      const auto in = nn::encode_observation<float>(obs, frames);
      online_.forward(in, s_on, q_final, &caches[t], t == U - 1);
    }

    const int action = ep.actions[last];
    const float r = ep.rewards[last];
    const bool terminal = ep.terminal[last] != 0;

    float y = r;
    if (!terminal) {
      const auto next_obs = ReplayBuffer::observation_at(ep, last + 1);
      const auto in_next = nn::encode_observation<float>(next_obs, frames);
      // Target warm-up over the same sequence.
      nn::RecurrentState<float> s_tg;
      s_tg.reset(H);
      std::vector<float> q_tmp;
      if (cfg_.arch.use_lstm) {
        for (int t = 0; t < U; ++t) {
          target_.forward(caches[t].in, s_tg, q_tmp, nullptr, false);
        }
      }
      std::vector<float> q_on_next, q_tg_next;
      online_.forward(in_next, s_on, q_on_next);
      target_.forward(in_next, s_tg, q_tg_next);
      y = double_q_value(q_on_next, q_tg_next, r, false, cfg_.gamma);
    }

    const double err = static_cast<double>(q_final[action]) - static_cast<double>(y);
    loss += huber_loss(err, cfg_.huber_delta);

    std::vector<float> dq(cfg_.arch.num_actions, 0.0f);
    dq[action] = static_cast<float>(huber_grad(err, cfg_.huber_delta) / cfg_.batch);
    std::vector<float> dh(H, 0.0f), dc(H, 0.0f);
    for (int t = U - 1; t >= 0; --t) {
      online_.backward(caches[t], t == U - 1 ? dq.data() : nullptr, dh, dc, grads);
      if (!cfg_.arch.use_lstm) break;
    }
  }
  loss /= cfg_.batch;

  if (std::isfinite(loss)) {
    nn::clip_by_global_norm(grads, cfg_.clip_norm);
    nn::AdamConfig ac;
    ac.lr = cfg_.lr;
    nn::adam_step(online_.params(), grads, adam_, ac);
  }
  ++train_steps_;
  if (train_steps_ % cfg_.sync_period == 0) sync_target();
  return loss;
}

ckpt::Snapshot Agent::snapshot(std::int64_t env_steps, int level) const {
  ckpt::Snapshot snap;
  snap.arch = cfg_.arch;
  snap.params = online_.params();
  snap.adam = adam_;
  snap.has_adam = true;
  snap.env_steps = env_steps;
  snap.train_steps = train_steps_;
  snap.level = level;
  return snap;
}

Agent Agent::from_snapshot(const ckpt::Snapshot& snap, const AgentConfig& cfg,
                           std::uint64_t seed) {
  Agent a(cfg, seed);
  ckpt::check_shapes(snap.params, a.online_.params());
  a.online_.params() = snap.params;
  a.target_.params() = snap.params;
  if (snap.has_adam) {
    a.adam_ = snap.adam;
    a.adam_.t = snap.adam.t;
  }
  a.train_steps_ = snap.train_steps;
  return a;
}

}  // namespace nav3d::agent
