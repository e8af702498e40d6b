#include "nav3d/eval_metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace nav3d::eval {

namespace {

EpisodeLog roll_one(const nn::QNetwork<float>* net, sim::ScenarioKind kind, std::uint64_t seed,
                    const env::EnvConfig& env_cfg, int level, std::uint64_t policy_seed) {
  env::Environment environment(env_cfg);
  env::Observation obs = environment.reset(kind, level, seed);

  nn::RecurrentState<float> state;
  Rng action_rng(mix_seed(policy_seed, seed));
  if (net != nullptr) state.reset(net->arch().hidden);

  EpisodeLog log;
  log.seed = seed;
  log.kind = kind;
  std::vector<float> q;
  while (true) {
    int a;
    if (net != nullptr) {
      const auto in = nn::encode_observation<float>(obs, net->arch().frames);
      net->forward(in, state, q);
      a = nn::argmax(q);
    } else {
      a = static_cast<int>(action_rng.uniform_int(env::kNumActions));
    }
    const env::Action cmd = env::action_from_index(a);
    const env::StepResult res = environment.step(a);
    log.rewards.push_back(static_cast<float>(res.reward.total()));
    log.vs.push_back(static_cast<float>(cmd.v));
    log.ws.push_back(static_cast<float>(cmd.w));
    obs = res.obs;
    if (res.episode_over()) {
      log.outcome = res.outcome;
      break;
    }
  }
  log.steps = environment.steps_taken();
  return log;
}

std::vector<EpisodeLog> run_batch(const nn::QNetwork<float>* net, sim::ScenarioKind kind, int n,
                                  std::uint64_t base_seed, const env::EnvConfig& env_cfg,
                                  int level, std::uint64_t policy_seed, int jobs) {
  if (n < 1) throw std::invalid_argument("run_episodes: n must be >= 1");
  std::vector<EpisodeLog> logs(n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) {
      logs[i] = roll_one(net, kind, base_seed + static_cast<std::uint64_t>(i), env_cfg, level,
                         policy_seed);
    }
    return logs;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      logs[i] = roll_one(net, kind, base_seed + static_cast<std::uint64_t>(i), env_cfg, level,
                         policy_seed);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return logs;
}

}  // namespace

std::vector<EpisodeLog> run_episodes(const nn::QNetwork<float>& net, sim::ScenarioKind kind,
                                     int n, std::uint64_t base_seed,
                                     const env::EnvConfig& env_cfg, int level, int jobs) {
  return run_batch(&net, kind, n, base_seed, env_cfg, level, 0, jobs);
}

std::vector<EpisodeLog> run_episodes_random(sim::ScenarioKind kind, int n,
                                            std::uint64_t base_seed,
                                            const env::EnvConfig& env_cfg, int level,
                                            std::uint64_t policy_seed, int jobs) {
  return run_batch(nullptr, kind, n, base_seed, env_cfg, level, policy_seed, jobs);
}

MetricsReport compute_metrics(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("compute_metrics: no episodes");
  MetricsReport rep;
  rep.episodes = static_cast<int>(logs.size());

  int successes = 0;
  double reward_sum = 0.0;
  double time_sum = 0.0;
  double aavc_sum = 0.0;
  for (const EpisodeLog& log : logs) {
    double ep_reward = 0.0;
    for (float r : log.rewards) ep_reward += r;
    reward_sum += ep_reward;

    if (log.outcome == env::Outcome::Goal) {
      ++successes;
      time_sum += log.steps * env::kDt;
    }

    // Mean absolute change between consecutive angular commands; an episode
    // with fewer than two commands contributes 0.
    double change_sum = 0.0;
    const int pairs = static_cast<int>(log.ws.size()) - 1;
    for (int i = 1; i < static_cast<int>(log.ws.size()); ++i) {
      change_sum += std::fabs(static_cast<double>(log.ws[i]) - log.ws[i - 1]);
    }
    aavc_sum += pairs > 0 ? change_sum / pairs : 0.0;
  }

  rep.sr = static_cast<double>(successes) / rep.episodes;
  rep.er = reward_sum / rep.episodes;
  rep.rt_defined = successes > 0;
  rep.rt = rep.rt_defined ? time_sum / successes : 0.0;
  rep.aavc = aavc_sum / rep.episodes;
  return rep;
}

std::string format_report(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::string out = "scenario,episodes,sr,er,rt,aavc\n";
  char buf[256];
  for (const auto& [name, r] : rows) {
    if (r.rt_defined) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.4f,%.4f,%.4f,%.4f\n", name.c_str(), r.episodes,
                    r.sr, r.er, r.rt, r.aavc);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.4f,%.4f,NA,%.4f\n", name.c_str(), r.episodes,
                    r.sr, r.er, r.aavc);
    }
    out += buf;
  }
  return out;
}

void emit_report(const std::vector<std::pair<std::string, MetricsReport>>& rows,
                 const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open report for writing: " + path);
  f << format_report(rows);
  if (!f) throw std::runtime_error("report write failed: " + path);
}

}  // namespace nav3d::eval
