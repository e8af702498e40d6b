#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nav3d/agent.hpp"
#include "nav3d/eval_metrics.hpp"

namespace nav3d::train {

struct TrainerConfig {
  agent::AgentConfig agent;
  env::EnvConfig env;

  bool curriculum = true;
  int curriculum_window = 100;
  double promote_threshold = 0.8;

  std::int64_t max_env_steps = 200000;
  std::int64_t warmup = 5000;  // transitions in replay before updates start
  int train_every = 1;         // environment steps per gradient step

  std::int64_t eval_period = 10000;  // environment steps between evaluations
  int eval_episodes = 100;
  int eval_jobs = 1;
  int eval_level = -1;  // -1: evaluate at the highest curriculum level
  double stop_sr = -1.0;  // stop once an evaluation reaches this SR (<0: off)

  std::int64_t ckpt_period = 0;  // environment steps; 0 = final only
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: keep everything in memory, write no files
};

// full: as configured; no_lstm: recurrence-free single-frame network,
// unroll 1; no_curriculum: fixed top difficulty from the first episode.
void apply_ablation(TrainerConfig& cfg, const std::string& name);

struct EvalPoint {
  std::int64_t env_step = 0;
  int level = 0;
  double epsilon = 0.0;
  double loss = 0.0;
  eval::MetricsReport metrics;
};

struct TrainOutcome {
  std::vector<EvalPoint> evals;
  std::int64_t env_steps = 0;
  std::int64_t train_steps = 0;
  int episodes = 0;
  int final_level = 0;
  bool aborted = false;        // non-finite loss; parameters kept pre-update
  bool early_stopped = false;  // stop_sr reached
  std::string final_checkpoint;
  ckpt::Snapshot final_snapshot;
};

TrainOutcome train(const TrainerConfig& cfg);

}  // namespace nav3d::train
