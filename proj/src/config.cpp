#include "nav3d/config.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace nav3d::config {

using nlohmann::json;

void RunConfig::apply_preset(const std::string& name) {
  if (name == "paper") return;  // the defaults
  if (name == "desk") {
    arch = "desk";
    batch = 64;
    eps_horizon = 20000;
    sync_period = 500;
    max_env_steps = 50000;
    warmup = 1000;
    train_every = 4;
    eval_period = 5000;
    ckpt_period = 25000;
    curriculum_window = 50;
    level_obstacles = {0, 1, 2, 3, 4};
    level_distances = {1.5, 2.0, 2.5, 3.0, 3.5};
    arena_half = 2.0;
    max_steps = 100;
    // The simulator adds no speckle by default, so the outlier filter only
    // needs a small neighborhood at this scale; k=50 would triple step cost.
    sor_k = 12;
    return;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (paper|desk)");
}

namespace {

template <typename T>
void read_key(const json& j, const std::string& key, T& field) {
  try {
    field = j.at(key).get<T>();
  } catch (const json::type_error&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object: " + path);

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key == "seed") read_key(j, key, seed);
    else if (key == "out_dir") read_key(j, key, out_dir);
    else if (key == "arch") read_key(j, key, arch);
    else if (key == "ablation") read_key(j, key, ablation);
    else if (key == "lr") read_key(j, key, lr);
    else if (key == "gamma") read_key(j, key, gamma);
    else if (key == "batch") read_key(j, key, batch);
    else if (key == "unroll") read_key(j, key, unroll);
    else if (key == "eps_init") read_key(j, key, eps_init);
    else if (key == "eps_final") read_key(j, key, eps_final);
    else if (key == "eps_horizon") read_key(j, key, eps_horizon);
    else if (key == "sync_period") read_key(j, key, sync_period);
    else if (key == "replay_capacity") read_key(j, key, replay_capacity);
    else if (key == "huber_delta") read_key(j, key, huber_delta);
    else if (key == "clip_norm") read_key(j, key, clip_norm);
    else if (key == "max_env_steps") read_key(j, key, max_env_steps);
    else if (key == "warmup") read_key(j, key, warmup);
    else if (key == "train_every") read_key(j, key, train_every);
    else if (key == "eval_period") read_key(j, key, eval_period);
    else if (key == "eval_episodes") read_key(j, key, eval_episodes);
    else if (key == "eval_jobs") read_key(j, key, eval_jobs);
    else if (key == "eval_level") read_key(j, key, eval_level);
    else if (key == "stop_sr") read_key(j, key, stop_sr);
    else if (key == "ckpt_period") read_key(j, key, ckpt_period);
    else if (key == "curriculum") read_key(j, key, curriculum);
    else if (key == "curriculum_window") read_key(j, key, curriculum_window);
    else if (key == "promote_threshold") read_key(j, key, promote_threshold);
    else if (key == "level_obstacles") read_key(j, key, level_obstacles);
    else if (key == "level_distances") read_key(j, key, level_distances);
    else if (key == "arena_half") read_key(j, key, arena_half);
    else if (key == "max_steps") read_key(j, key, max_steps);
    else if (key == "depth_noise_std") read_key(j, key, depth_noise_std);
    else if (key == "voxel_leaf") read_key(j, key, voxel_leaf);
    else if (key == "sor_k") read_key(j, key, sor_k);
    else if (key == "sor_std_mul") read_key(j, key, sor_std_mul);
    else if (key == "height_max") read_key(j, key, height_max);
    else if (key == "obstacle_z") read_key(j, key, obstacle_z);
    else if (key == "blind_radius") read_key(j, key, blind_radius);
    else throw std::invalid_argument("unknown config key '" + key + "' in " + path);
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (arch != "paper" && arch != "desk" && arch != "gradcheck") {
    fail("arch must be paper|desk|gradcheck, got '" + arch + "'");
  }
  if (ablation != "full" && ablation != "no_lstm" && ablation != "no_curriculum") {
    fail("ablation must be full|no_lstm|no_curriculum, got '" + ablation + "'");
  }
  if (gamma < 0.0 || gamma > 1.0) fail("gamma must lie in [0, 1]");
  if (eps_final > eps_init) fail("eps_final must not exceed eps_init");
  if (eps_init < 0.0 || eps_init > 1.0 || eps_final < 0.0) fail("epsilon out of range");
  if (batch < 1) fail("batch must be >= 1");
  if (unroll < 1) fail("unroll must be >= 1");
  if (eps_horizon < 0) fail("eps_horizon must be >= 0");
  if (huber_delta <= 0.0) fail("huber_delta must be > 0");
  if (clip_norm <= 0.0) fail("clip_norm must be > 0");
  if (replay_capacity < static_cast<std::int64_t>(max_steps)) {
    fail("replay_capacity must hold at least one full episode");
  }
  if (level_obstacles.empty() || level_obstacles.size() != level_distances.size()) {
    fail("level_obstacles and level_distances must be non-empty and equal length");
  }
  for (int n : level_obstacles) {
    if (n < 0) fail("level_obstacles entries must be >= 0");
  }
  for (double d : level_distances) {
    if (d <= 0.0) fail("level_distances entries must be > 0");
  }
  if (arena_half <= 0.5) fail("arena_half must exceed 0.5");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (curriculum_window < 1) fail("curriculum_window must be >= 1");
  if (promote_threshold <= 0.0 || promote_threshold > 1.0) {
    fail("promote_threshold must lie in (0, 1]");
  }
  if (voxel_leaf <= 0.0) fail("voxel_leaf must be > 0");
  if (sor_k < 1) fail("sor_k must be >= 1");
  if (eval_episodes < 1) fail("eval_episodes must be >= 1");
  if (eval_jobs < 1) fail("eval_jobs must be >= 1");
  if (train_every < 1) fail("train_every must be >= 1");
  if (eval_period < 1) fail("eval_period must be >= 1");
}

std::string RunConfig::resolved_json() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["arch"] = arch;
  j["ablation"] = ablation;
  j["lr"] = lr;
  j["gamma"] = gamma;
  j["batch"] = batch;
  j["unroll"] = unroll;
  j["eps_init"] = eps_init;
  j["eps_final"] = eps_final;
  j["eps_horizon"] = eps_horizon;
  j["sync_period"] = sync_period;
  j["replay_capacity"] = replay_capacity;
  j["huber_delta"] = huber_delta;
  j["clip_norm"] = clip_norm;
  j["max_env_steps"] = max_env_steps;
  j["warmup"] = warmup;
  j["train_every"] = train_every;
  j["eval_period"] = eval_period;
  j["eval_episodes"] = eval_episodes;
  j["eval_jobs"] = eval_jobs;
  j["eval_level"] = eval_level;
  j["stop_sr"] = stop_sr;
  j["ckpt_period"] = ckpt_period;
  j["curriculum"] = curriculum;
  j["curriculum_window"] = curriculum_window;
  j["promote_threshold"] = promote_threshold;
  j["level_obstacles"] = level_obstacles;
  j["level_distances"] = level_distances;
  j["arena_half"] = arena_half;
  j["max_steps"] = max_steps;
  j["depth_noise_std"] = depth_noise_std;
  j["voxel_leaf"] = voxel_leaf;
  j["sor_k"] = sor_k;
  j["sor_std_mul"] = sor_std_mul;
  j["height_max"] = height_max;
  j["obstacle_z"] = obstacle_z;
  j["blind_radius"] = blind_radius;
  return j.dump(2) + "\n";
}

nn::ArchConfig RunConfig::to_arch_config() const {
  nn::ArchConfig a;
  if (arch == "paper") a = nn::ArchConfig::paper();
  else if (arch == "desk") a = nn::ArchConfig::desk();
  else if (arch == "gradcheck") a = nn::ArchConfig::gradcheck();
  else throw std::invalid_argument("unknown arch '" + arch + "'");
  a.map_size = perception::Costmap::kSize;
  return a;
}

env::EnvConfig RunConfig::to_env_config() const {
  env::EnvConfig e;
  e.scenario.arena_half = arena_half;
  e.scenario.level_obstacles = level_obstacles;
  e.scenario.level_distances = level_distances;
  e.camera.depth_noise_std = depth_noise_std;
  e.costmap.obstacle_z = obstacle_z;
  e.costmap.blind_radius = blind_radius;
  e.voxel_leaf = voxel_leaf;
  e.sor_k = sor_k;
  e.sor_std_mul = sor_std_mul;
  e.height_max = height_max;
  e.max_steps = max_steps;
  return e;
}

nav3d::train::TrainerConfig RunConfig::to_trainer_config() const {
  validate();
  nav3d::train::TrainerConfig t;
  t.agent.arch = to_arch_config();
  t.agent.lr = lr;
  t.agent.gamma = gamma;
  t.agent.batch = batch;
  t.agent.unroll = unroll;
  t.agent.eps_init = eps_init;
  t.agent.eps_final = eps_final;
  t.agent.eps_horizon = eps_horizon;
  t.agent.sync_period = sync_period;
  t.agent.replay_capacity = static_cast<std::size_t>(replay_capacity);
  t.agent.huber_delta = huber_delta;
  t.agent.clip_norm = clip_norm;
  t.env = to_env_config();
  t.curriculum = curriculum;
  t.curriculum_window = curriculum_window;
  t.promote_threshold = promote_threshold;
  t.max_env_steps = max_env_steps;
  t.warmup = warmup;
  t.train_every = train_every;
  t.eval_period = eval_period;
  t.eval_episodes = eval_episodes;
  t.eval_jobs = eval_jobs;
  t.eval_level = eval_level;
  t.stop_sr = stop_sr;
  t.ckpt_period = ckpt_period;
  t.seed = seed;
  t.out_dir = out_dir;
  nav3d::train::apply_ablation(t, ablation);
  return t;
}

}  // namespace nav3d::config
