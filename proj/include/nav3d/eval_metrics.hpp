#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nav3d/pomdp_env.hpp"
#include "nav3d/qnet.hpp"

namespace nav3d::eval {

struct EpisodeLog {
  std::uint64_t seed = 0;
  sim::ScenarioKind kind = sim::ScenarioKind::Random;
  env::Outcome outcome = env::Outcome::Timeout;
  int steps = 0;
  std::vector<float> rewards;  // per-step total reward
  std::vector<float> vs, ws;   // per-step commanded velocities
};

struct MetricsReport {
  int episodes = 0;
  double sr = 0.0;    // successes / episodes
  double er = 0.0;    // mean episode reward sum, failures included
  double rt = 0.0;    // mean steps * dt over successful episodes
  bool rt_defined = false;
  double aavc = 0.0;  // mean over episodes of mean |w_t - w_{t-1}|
};

// Greedy rollouts on scenarios seeded base_seed..base_seed+n-1. `jobs` > 1
// runs episodes on worker threads against the shared read-only network;
// results are stored in seed order, so output is identical at any job count.
std::vector<EpisodeLog> run_episodes(const nn::QNetwork<float>& net, sim::ScenarioKind kind,
                                     int n, std::uint64_t base_seed,
                                     const env::EnvConfig& env_cfg, int level, int jobs = 1);

// Same protocol with uniformly random actions (no network) — the floor any
// trained policy must beat.
std::vector<EpisodeLog> run_episodes_random(sim::ScenarioKind kind, int n,
                                            std::uint64_t base_seed,
                                            const env::EnvConfig& env_cfg, int level,
                                            std::uint64_t policy_seed, int jobs = 1);

MetricsReport compute_metrics(const std::vector<EpisodeLog>& logs);

// CSV: header `scenario,episodes,sr,er,rt,aavc`, 4 decimal places, "NA" when
// no episode succeeded.
void emit_report(const std::vector<std::pair<std::string, MetricsReport>>& rows,
                 const std::string& path);
std::string format_report(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace nav3d::eval
