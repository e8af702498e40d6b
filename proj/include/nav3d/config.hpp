#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nav3d/trainer.hpp"

namespace nav3d::config {

// Flat run configuration. Defaults are the published full-scale values; the
// `desk` preset swaps in the small-network fast-turnaround variant.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir;

  std::string arch = "paper";     // paper | desk | gradcheck
  std::string ablation = "full";  // full | no_lstm | no_curriculum

  // learner
  double lr = 1e-3;
  double gamma = 0.97;
  int batch = 1024;
  int unroll = 3;
  double eps_init = 1.0;
  double eps_final = 0.1;
  std::int64_t eps_horizon = 100000;
  std::int64_t sync_period = 2000;
  std::int64_t replay_capacity = 200000;
  double huber_delta = 10.0;
  double clip_norm = 10.0;

  // schedule
  std::int64_t max_env_steps = 200000;
  std::int64_t warmup = 5000;
  int train_every = 1;
  std::int64_t eval_period = 10000;
  int eval_episodes = 100;
  int eval_jobs = 1;
  int eval_level = -1;
  double stop_sr = -1.0;
  std::int64_t ckpt_period = 50000;

  // curriculum
  bool curriculum = true;
  int curriculum_window = 100;
  double promote_threshold = 0.8;
  std::vector<int> level_obstacles = {0, 2, 4, 6, 8};
  std::vector<double> level_distances = {2.0, 3.0, 4.0, 5.0, 6.0};

  // world
  double arena_half = 4.0;
  int max_steps = 200;
  double depth_noise_std = 0.0;

  // perception
  double voxel_leaf = 0.05;
  int sor_k = 50;
  double sor_std_mul = 1.0;
  double height_max = 1.35;
  double obstacle_z = 0.05;
  double blind_radius = 0.8;

  void apply_preset(const std::string& name);  // "paper" | "desk"
  void load_file(const std::string& path);     // strict: unknown keys rejected
  void validate() const;

  std::string resolved_json() const;  // deterministic snapshot of every key

  nav3d::train::TrainerConfig to_trainer_config() const;
  env::EnvConfig to_env_config() const;
  nn::ArchConfig to_arch_config() const;
};

}  // namespace nav3d::config
