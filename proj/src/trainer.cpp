#include "nav3d/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace nav3d::train {

void apply_ablation(TrainerConfig& cfg, const std::string& name) {
  if (name == "full") return;
  if (name == "no_lstm") {
    cfg.agent.arch = cfg.agent.arch.without_lstm();
    cfg.agent.unroll = 1;
    return;
  }
  if (name == "no_curriculum") {
    cfg.curriculum = false;
    return;
  }
  throw std::invalid_argument("unknown ablation '" + name + "' (full|no_lstm|no_curriculum)");
}

namespace {

std::string log_row(std::int64_t step, int level, double epsilon, double loss,
                    const eval::MetricsReport& m) {
  char buf[256];
  if (m.rt_defined) {
    std::snprintf(buf, sizeof(buf), "%" PRId64 ",%d,%.4f,%.6f,%.4f,%.4f,%.4f,%.4f\n", step,
                  level, epsilon, loss, m.sr, m.er, m.rt, m.aavc);
  } else {
    std::snprintf(buf, sizeof(buf), "%" PRId64 ",%d,%.4f,%.6f,%.4f,%.4f,NA,%.4f\n", step, level,
                  epsilon, loss, m.sr, m.er, m.aavc);
  }
  return buf;
}

}  // namespace

TrainOutcome train(const TrainerConfig& cfg) {
  const int max_level = cfg.env.scenario.max_level();
  const int eval_level = cfg.eval_level >= 0 ? cfg.eval_level : max_level;
  if (eval_level > max_level) {
    throw std::invalid_argument("eval_level exceeds the curriculum table");
  }

  agent::Agent learner(cfg.agent, mix_seed(cfg.seed, 0x1217));
  agent::ReplayBuffer buffer(cfg.agent.replay_capacity);
  env::CurriculumScheduler scheduler(max_level, cfg.curriculum_window, cfg.promote_threshold);
  env::Environment environment(cfg.env);

  Rng act_rng(mix_seed(cfg.seed, 0xAC7));
  Rng sample_rng(mix_seed(cfg.seed, 0x5A3));
  const std::uint64_t eval_base = mix_seed(cfg.seed, 0xE4A1);

  const bool to_disk = !cfg.out_dir.empty();
  std::ofstream log;
  if (to_disk) {
    std::filesystem::create_directories(cfg.out_dir);
    log.open(cfg.out_dir + "/train_log.csv", std::ios::binary);
    if (!log) throw std::runtime_error("cannot open train log in " + cfg.out_dir);
    log << "step,level,epsilon,loss,eval_sr,eval_er,eval_rt,eval_aavc\n";
  }

  TrainOutcome out;
  std::int64_t env_steps = 0;
  double last_loss = 0.0;
  bool stop = false;

  auto level_now = [&]() { return cfg.curriculum ? scheduler.level() : max_level; };

  auto evaluate = [&]() {
    EvalPoint pt;
    pt.env_step = env_steps;
    pt.level = level_now();
    pt.epsilon = agent::epsilon_at(env_steps, cfg.agent);
    pt.loss = last_loss;
    const auto logs = eval::run_episodes(learner.online(), sim::ScenarioKind::Random,
                                         cfg.eval_episodes, eval_base, cfg.env, eval_level,
                                         cfg.eval_jobs);
    pt.metrics = eval::compute_metrics(logs);
    out.evals.push_back(pt);
    if (to_disk) {
      log << log_row(pt.env_step, pt.level, pt.epsilon, pt.loss, pt.metrics);
      log.flush();
    }
    if (cfg.stop_sr >= 0.0 && pt.metrics.sr >= cfg.stop_sr) {
      out.early_stopped = true;
      stop = true;
    }
  };

  auto save_ckpt = [&](const std::string& name) {
    if (!to_disk) return std::string();
    const std::string path = cfg.out_dir + "/" + name;
    ckpt::save_snapshot(path, learner.snapshot(env_steps, level_now()));
    return path;
  };

  while (env_steps < cfg.max_env_steps && !stop) {
    const std::uint64_t episode_seed = mix_seed(cfg.seed, 0x45500000 + out.episodes);
    ++out.episodes;
    env::Observation obs = environment.reset(sim::ScenarioKind::Random, level_now(),
                                             episode_seed);
    buffer.begin_episode(obs);
    nn::RecurrentState<float> state;
    state.reset(cfg.agent.arch.hidden);

    env::Outcome outcome = env::Outcome::Running;
    while (env_steps < cfg.max_env_steps && !stop) {
      const double eps = agent::epsilon_at(env_steps, cfg.agent);
      const int a = learner.act(obs, state, eps, act_rng);
      const env::StepResult res = environment.step(a);
      buffer.push(a, res.reward.total(), res.terminal(), res.obs);
      obs = res.obs;
      ++env_steps;

      if (buffer.size() >= static_cast<std::size_t>(cfg.warmup) &&
          env_steps % cfg.train_every == 0) {
        if (auto loss = learner.train_step(buffer, sample_rng)) {
          last_loss = *loss;
          if (!std::isfinite(last_loss)) {
            // Parameters were not updated with this batch; keep them.
            out.aborted = true;
            stop = true;
            break;
          }
        }
      }

      if (cfg.ckpt_period > 0 && env_steps % cfg.ckpt_period == 0) {
        save_ckpt("ckpt_" + std::to_string(env_steps) + ".bin");
      }
      if (env_steps % cfg.eval_period == 0) evaluate();

      if (res.episode_over()) {
        outcome = res.outcome;
        break;
      }
    }

    if (cfg.curriculum && outcome != env::Outcome::Running) {
      scheduler.record(outcome == env::Outcome::Goal);
    }
  }

  // Close with a fresh evaluation unless one just ran or training diverged.
  if (!out.aborted && (out.evals.empty() || out.evals.back().env_step != env_steps)) {
    stop = false;
    evaluate();
  }

  out.env_steps = env_steps;
  out.train_steps = learner.train_steps();
  out.final_level = level_now();
  out.final_snapshot = learner.snapshot(env_steps, level_now());
  out.final_checkpoint = save_ckpt("ckpt_final.bin");
  return out;
}

}  // namespace nav3d::train
