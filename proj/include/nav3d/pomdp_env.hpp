#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "nav3d/perception.hpp"
#include "nav3d/rng.hpp"
#include "nav3d/sim_world.hpp"

namespace nav3d::env {

inline constexpr int kNumActions = 28;
inline constexpr double kDt = 0.1;
inline constexpr int kMaxSteps = 200;
inline constexpr double kGoalRadius = 0.3;

inline constexpr double kMaxLinear = 0.6;
inline constexpr double kMaxAngular = 0.9;
inline constexpr double kGoalDistNorm = 6.0;

// Discrete command table: 4 linear speeds x 7 angular rates.
struct Action {
  double v = 0.0;
  double w = 0.0;
};

Action action_from_index(int index);  // throws std::out_of_range outside [0, 28)

struct RewardTerms {
  double r_goal = 0.0;
  double r_collision = 0.0;
  double r_safety = 0.0;
  double r_step = 0.0;
  double total() const { return r_goal + r_collision + r_safety + r_step; }
};

// prev/cur distances are robot-center-to-goal; prev/cur min_d are the capped
// clearance values from sim::min_obstacle_distance.
RewardTerms compute_reward(double prev_goal_dist, double goal_dist, double prev_min_d,
                           double min_d, bool reached_goal, bool collided);

enum class Outcome : std::uint8_t { Running = 0, Goal = 1, Collision = 2, Timeout = 3 };

const char* outcome_name(Outcome o);

// Goal position in the robot frame, expressed as (distance, bearing).
struct PolarGoal {
  double rho = 0.0;
  double phi = 0.0;
};

PolarGoal relative_goal(const sim::Pose& pose, const sim::Vec2& goal);

// One observation: stacked costmap frames plus the low-dimensional state in
// raw units (the network encoder does the normalization).
struct Observation {
  static constexpr int kFrames = 3;
  static constexpr int kMapSize = perception::Costmap::kSize;
  // frames[0] is the oldest; each frame is row-major kMapSize x kMapSize.
  std::array<perception::CostmapImage, kFrames> frames;
  PolarGoal goal;     // raw (meters, radians)
  double v = 0.0;     // raw commanded velocities from the previous step
  double w = 0.0;
};

struct StepResult {
  Observation obs;
  RewardTerms reward;
  Outcome outcome = Outcome::Running;
  bool terminal() const { return outcome == Outcome::Goal || outcome == Outcome::Collision; }
  bool episode_over() const { return outcome != Outcome::Running; }
};

struct TraceRow {
  int step = 0;
  sim::Pose pose;
  double v = 0.0, w = 0.0;
  int action_index = -1;
  RewardTerms reward;
  Outcome outcome = Outcome::Running;
};

struct EnvConfig {
  sim::ScenarioParams scenario;
  sim::CameraSpec camera;
  perception::CostmapParams costmap;
  double voxel_leaf = 0.05;
  int sor_k = 50;
  double sor_std_mul = 1.0;
  double height_max = 1.35;
  int max_steps = kMaxSteps;
  bool keep_trace = false;
};

// Sequential decision process around the simulator: reset() builds a scenario
// and primes the frame stack, step() applies one command for dt seconds.
class Environment {
 public:
  explicit Environment(const EnvConfig& config) : cfg_(config) {}

  Observation reset(sim::ScenarioKind kind, int level, std::uint64_t seed);
  StepResult step(int action_index);

  const sim::World& world() const { return world_; }
  const sim::RobotState& robot() const { return robot_; }
  const perception::Costmap& costmap() const { return map_; }
  int steps_taken() const { return steps_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  const EnvConfig& config() const { return cfg_; }

 private:
  perception::Costmap sense();
  Observation make_observation() const;

  EnvConfig cfg_;
  sim::World world_;
  sim::RobotState robot_;
  perception::Costmap map_;
  std::deque<perception::CostmapImage> frame_stack_;
  Rng noise_rng_{0};
  double goal_dist_ = 0.0;
  double min_d_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
  std::vector<TraceRow> trace_;
};

// Promotion-only curriculum over scenario difficulty levels, driven by the
// success rate across a sliding window of finished episodes.
class CurriculumScheduler {
 public:
  CurriculumScheduler(int max_level, int window, double threshold)
      : max_level_(max_level), window_(window), threshold_(threshold) {}

  // Returns true when this episode outcome triggered a promotion.
  bool record(bool success);

  int level() const { return level_; }
  int window_count() const { return static_cast<int>(results_.size()); }

 private:
  int max_level_;
  int window_;
  double threshold_;
  int level_ = 0;
  std::deque<bool> results_;
};

}  // namespace nav3d::env
