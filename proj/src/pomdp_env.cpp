#include "nav3d/pomdp_env.hpp"

#include <cmath>
#include <stdexcept>

namespace nav3d::env {

Action action_from_index(int index) {
  if (index < 0 || index >= kNumActions) {
    throw std::out_of_range("action_from_index: index " + std::to_string(index));
  }
  static constexpr double kLinear[4] = {0.0, 0.2, 0.4, 0.6};
  static constexpr double kAngular[7] = {-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9};
  return Action{kLinear[index / 7], kAngular[index % 7]};
}

RewardTerms compute_reward(double prev_goal_dist, double goal_dist, double prev_min_d,
                           double min_d, bool reached_goal, bool collided) {
  RewardTerms r;
  r.r_goal = reached_goal ? 500.0 : 200.0 * (prev_goal_dist - goal_dist);
  r.r_collision = collided ? -500.0 : 0.0;
  r.r_safety = -100.0 * (prev_min_d - min_d);
  r.r_step = -5.0;
  return r;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Goal: return "goal";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

PolarGoal relative_goal(const sim::Pose& pose, const sim::Vec2& goal) {
  const double dx = goal.x - pose.x;
  const double dy = goal.y - pose.y;
  PolarGoal g;
  g.rho = std::hypot(dx, dy);
  g.phi = sim::wrap_angle(std::atan2(dy, dx) - pose.theta);
  return g;
}

perception::Costmap Environment::sense() {
  Rng* noise = cfg_.camera.depth_noise_std > 0.0 ? &noise_rng_ : nullptr;
  PointCloud cloud = sim::render_depth(world_, robot_, cfg_.camera, noise);
  cloud = perception::voxel_downsample(cloud, cfg_.voxel_leaf);
  cloud = perception::remove_statistical_outliers(cloud, cfg_.sor_k, cfg_.sor_std_mul);
  cloud = perception::height_filter(cloud, cfg_.height_max);
  return perception::build_costmap(cloud, &map_, cfg_.costmap);
}

Observation Environment::make_observation() const {
  Observation obs;
  for (int i = 0; i < Observation::kFrames; ++i) {
    obs.frames[i] = frame_stack_[i];
  }
  obs.goal = relative_goal(robot_.pose, world_.goal);
  obs.v = robot_.v;
  obs.w = robot_.w;
  return obs;
}

Observation Environment::reset(sim::ScenarioKind kind, int level, std::uint64_t seed) {
  world_ = sim::generate_scenario(kind, level, seed, cfg_.scenario);
  robot_ = sim::RobotState{};
  robot_.pose = world_.start;
  robot_.radius = cfg_.scenario.robot_radius;
  noise_rng_ = Rng(mix_seed(seed, 0x5eb5c0de));
  map_ = perception::Costmap();  // fresh map: everything unknown
  steps_ = 0;
  done_ = false;
  trace_.clear();

  map_ = sense();
  const auto img = perception::costmap_to_image(map_);
  frame_stack_.clear();
  for (int i = 0; i < Observation::kFrames; ++i) frame_stack_.push_back(img);

  goal_dist_ = sim::distance(sim::Vec2{robot_.pose.x, robot_.pose.y}, world_.goal);
  min_d_ = sim::min_obstacle_distance(world_, robot_);
  return make_observation();
}

StepResult Environment::step(int action_index) {
  if (done_) throw std::logic_error("Environment::step called on a finished episode");
  const Action a = action_from_index(action_index);
  const sim::Pose old_pose = robot_.pose;
  robot_ = sim::step_kinematics(robot_, a.v, a.w, kDt);
  ++steps_;

  const bool collided = sim::check_collision(world_, robot_);
  const double goal_dist =
      sim::distance(sim::Vec2{robot_.pose.x, robot_.pose.y}, world_.goal);
  const bool reached_goal = !collided && goal_dist < kGoalRadius;
  const double min_d = sim::min_obstacle_distance(world_, robot_);

  StepResult result;
  result.reward = compute_reward(goal_dist_, goal_dist, min_d_, min_d, reached_goal, collided);
  if (collided) {
    result.outcome = Outcome::Collision;
  } else if (reached_goal) {
    result.outcome = Outcome::Goal;
  } else if (steps_ >= cfg_.max_steps) {
    result.outcome = Outcome::Timeout;
  }

  goal_dist_ = goal_dist;
  min_d_ = min_d;

  // Carry the map into the new robot frame, then fold in the fresh scan.
  map_ = perception::transform_costmap(map_, old_pose, robot_.pose);
  map_ = sense();
  frame_stack_.pop_front();
  frame_stack_.push_back(perception::costmap_to_image(map_));
  result.obs = make_observation();

  if (cfg_.keep_trace) {
    TraceRow row;
    row.step = steps_;
    row.pose = robot_.pose;
    row.v = a.v;
    row.w = a.w;
    row.action_index = action_index;
    row.reward = result.reward;
    row.outcome = result.outcome;
    trace_.push_back(row);
  }
  if (result.episode_over()) done_ = true;
  return result;
}

bool CurriculumScheduler::record(bool success) {
  results_.push_back(success);
  if (static_cast<int>(results_.size()) > window_) results_.pop_front();
  if (static_cast<int>(results_.size()) < window_ || level_ >= max_level_) return false;
  int wins = 0;
  for (bool b : results_) wins += b ? 1 : 0;
  if (static_cast<double>(wins) / window_ >= threshold_) {
    ++level_;
    results_.clear();
    return true;
  }
  return false;
}

}  // namespace nav3d::env
