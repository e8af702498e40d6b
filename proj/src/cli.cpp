#include "nav3d/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nav3d/checkpoint.hpp"
#include "nav3d/config.hpp"
#include "nav3d/eval_metrics.hpp"
#include "nav3d/io.hpp"
#include "nav3d/trainer.hpp"

namespace nav3d::cli {

namespace {

// Relative output paths land under $NAV3D_OUT_ROOT when it is set.
std::string rooted(const std::string& path) {
  if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
  const char* root = std::getenv("NAV3D_OUT_ROOT");
  if (root == nullptr || root[0] == '\0') return path;
  return (std::filesystem::path(root) / path).string();
}

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

config::RunConfig resolve_config(const CommonOpts& opts, const std::string& default_preset) {
  config::RunConfig rc;
  rc.apply_preset(opts.preset.empty() ? default_preset : opts.preset);
  if (!opts.config_path.empty()) rc.load_file(opts.config_path);
  if (opts.seed_set) rc.seed = opts.seed;
  return rc;
}

sim::ScenarioKind parse_kind(const std::string& name) {
  if (name == "random") return sim::ScenarioKind::Random;
  if (name == "office") return sim::ScenarioKind::Office;
  if (name == "coffee") return sim::ScenarioKind::Coffee;
  throw std::invalid_argument("unknown scenario '" + name + "' (random|office|coffee|all)");
}

int cmd_train(const CommonOpts& opts, const std::string& out_dir) {
  config::RunConfig rc = resolve_config(opts, "paper");
  if (!out_dir.empty()) rc.out_dir = out_dir;
  if (rc.out_dir.empty()) {
    rc.out_dir = "runs/train-seed" + std::to_string(rc.seed);
  }
  rc.out_dir = rooted(rc.out_dir);
  rc.validate();

  std::filesystem::create_directories(rc.out_dir);
  {
    std::ofstream f(rc.out_dir + "/resolved_config.json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write resolved config in " + rc.out_dir);
    f << rc.resolved_json();
  }

  const auto outcome = nav3d::train::train(rc.to_trainer_config());
  for (const auto& pt : outcome.evals) {
    std::printf("step %lld  level %d  eps %.3f  loss %.6f  sr %.4f  er %.2f\n",
                static_cast<long long>(pt.env_step), pt.level, pt.epsilon, pt.loss,
                pt.metrics.sr, pt.metrics.er);
  }
  if (outcome.aborted) {
    std::fprintf(stderr,
                 "training aborted: non-finite loss at env step %lld; "
                 "last good parameters kept in %s\n",
                 static_cast<long long>(outcome.env_steps), outcome.final_checkpoint.c_str());
    return 2;
  }
  std::printf("done: %lld env steps, %lld train steps, level %d, checkpoint %s\n",
              static_cast<long long>(outcome.env_steps),
              static_cast<long long>(outcome.train_steps), outcome.final_level,
              outcome.final_checkpoint.c_str());
  return 0;
}

// Picks the preset whose architecture matches the checkpoint, so eval/render
// default to a consistent environment; flags still override.
std::string preset_for_arch(const nn::ArchConfig& arch) {
  nn::ArchConfig desk = nn::ArchConfig::desk();
  nn::ArchConfig desk_nl = desk.without_lstm();
  if (arch == desk || arch == desk_nl) return "desk";
  return "paper";
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt_path, const std::string& scenario,
             int episodes, int jobs, int level, const std::string& csv_path) {
  const ckpt::Snapshot snap = ckpt::load_snapshot(ckpt_path);
  config::RunConfig rc = resolve_config(opts, preset_for_arch(snap.arch));
  rc.validate();

  nn::QNetwork<float> net(snap.arch);
  net.init(0);
  ckpt::check_shapes(snap.params, net.params());
  net.params() = snap.params;

  const env::EnvConfig env_cfg = rc.to_env_config();
  const int eval_level = level >= 0 ? level : env_cfg.scenario.max_level();
  if (eval_level > env_cfg.scenario.max_level()) {
    throw std::invalid_argument("eval level exceeds the curriculum table");
  }

  std::vector<std::string> kinds;
  if (scenario == "all") kinds = {"random", "office", "coffee"};
  else kinds = {scenario};

  std::vector<std::pair<std::string, eval::MetricsReport>> rows;
  for (const auto& name : kinds) {
    const auto logs = eval::run_episodes(net, parse_kind(name), episodes, rc.seed, env_cfg,
                                         eval_level, jobs);
    rows.emplace_back(name, eval::compute_metrics(logs));
  }
  std::fputs(eval::format_report(rows).c_str(), stdout);
  if (!csv_path.empty()) eval::emit_report(rows, rooted(csv_path));
  return 0;
}

int cmd_render(const CommonOpts& opts, const std::string& ckpt_path,
               const std::string& scenario, const std::string& out_dir) {
  const ckpt::Snapshot snap = ckpt::load_snapshot(ckpt_path);
  config::RunConfig rc = resolve_config(opts, preset_for_arch(snap.arch));
  rc.validate();

  nn::QNetwork<float> net(snap.arch);
  net.init(0);
  ckpt::check_shapes(snap.params, net.params());
  net.params() = snap.params;

  env::EnvConfig env_cfg = rc.to_env_config();
  env_cfg.keep_trace = true;
  const sim::ScenarioKind kind = parse_kind(scenario);
  const int level = env_cfg.scenario.max_level();

  const std::string dir = rooted(out_dir);
  std::filesystem::create_directories(dir);

  env::Environment environment(env_cfg);
  env::Observation obs = environment.reset(kind, kind == sim::ScenarioKind::Random ? level : 0,
                                           rc.seed);
  nn::RecurrentState<float> state;
  state.reset(net.arch().hidden);

  std::vector<sim::Pose> trajectory{environment.robot().pose};
  std::vector<float> q;
  int frame = 0;
  while (true) {
    const auto in = nn::encode_observation<float>(obs, net.arch().frames);
    net.forward(in, state, q);
    const env::StepResult res = environment.step(nn::argmax(q));
    ++frame;
    char name[64];
    std::snprintf(name, sizeof(name), "/costmap_%04d.pgm", frame);
    perception::write_pgm(obs.frames[env::Observation::kFrames - 1], dir + name);
    // The frame written above is the view the action was chosen from; the
    // step result already carries the next one.
    obs = res.obs;
    trajectory.push_back(environment.robot().pose);
    if (res.episode_over()) {
      std::printf("episode: %s after %d steps\n", env::outcome_name(res.outcome),
                  environment.steps_taken());
      break;
    }
  }
  io::write_trace(environment.trace(), dir + "/trace.csv");
  io::write_world_pgm(io::render_world(environment.world(), trajectory), dir + "/world.pgm");
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"map-based recurrent Q-learning for depth-camera obstacle avoidance"};
  app.set_version_flag("--version", std::string("nav3d ") + kVersion + " (checkpoint format " +
                                        std::to_string(ckpt::kFormatVersion) + ")");
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_dir, ckpt_path, scenario = "random", csv_path;
  int episodes = 200, jobs = 1, level = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON config file (flat keys)");
    cmd->add_option("--preset", opts.preset, "paper|desk")
        ->check(CLI::IsMember({"paper", "desk"}));
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t s) {
          opts.seed = s;
          opts.seed_set = true;
        },
        "random seed");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train an agent");
  add_common(train_cmd);
  train_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--scenario", scenario, "random|office|coffee|all");
  eval_cmd->add_option("--episodes", episodes, "episodes per scenario");
  eval_cmd->add_option("--jobs", jobs, "parallel episode workers");
  eval_cmd->add_option("--level", level, "difficulty level (-1 = hardest)");
  eval_cmd->add_option("--csv", csv_path, "write the report CSV here");

  CLI::App* render_cmd = app.add_subcommand("render", "roll out one episode and dump images");
  add_common(render_cmd);
  render_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  render_cmd->add_option("--scenario", scenario, "random|office|coffee");
  render_cmd->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(opts, out_dir);
    if (eval_cmd->parsed()) {
      if (scenario != "all") parse_kind(scenario);  // validate early
      if (episodes < 1) throw std::invalid_argument("--episodes must be >= 1");
      if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
      return cmd_eval(opts, ckpt_path, scenario, episodes, jobs, level, csv_path);
    }
    if (render_cmd->parsed()) {
      parse_kind(scenario);
      return cmd_render(opts, ckpt_path, scenario, out_dir);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace nav3d::cli
