#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nav3d/point_cloud.hpp"
#include "nav3d/rng.hpp"

namespace nav3d::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

enum class ShapeKind { Box, Cylinder };

// Axis-aligned box or vertical cylinder footprint with a height range.
// A nonzero z_lo models overhangs (table tops, desk surfaces).
struct Obstacle {
  ShapeKind kind = ShapeKind::Box;
  double cx = 0.0, cy = 0.0;
  double hx = 0.0, hy = 0.0;  // box half extents
  double radius = 0.0;        // cylinder radius
  double z_lo = 0.0, z_hi = 1.0;

  // Distance from a point to the footprint boundary; 0 inside.
  double footprint_distance(double px, double py) const;
  bool height_overlaps(double lo, double hi) const {
    return z_lo <= hi && z_hi >= lo;
  }

  static Obstacle box(double cx, double cy, double hx, double hy, double z_lo, double z_hi);
  static Obstacle cylinder(double cx, double cy, double r, double z_lo, double z_hi);
};

struct Bounds {
  double xmin = -4.0, xmax = 4.0;
  double ymin = -4.0, ymax = 4.0;

  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
};

struct World {
  Bounds bounds;
  std::vector<Obstacle> obstacles;
  Vec2 goal;
  Pose start;
  double wall_height = 2.0;
};

struct RobotState {
  Pose pose;
  double v = 0.0;
  double w = 0.0;
  double radius = 0.3;
};

struct CameraSpec {
  double h_fov = 57.0 * M_PI / 180.0;
  double v_fov = 43.0 * M_PI / 180.0;
  double range_min = 0.8;
  double range_max = 4.0;
  int rays_h = 64;
  int rays_v = 48;
  double mount_height = 0.6;
  double depth_noise_std = 0.0;
};

enum class ScenarioKind { Random, Office, Coffee };

ScenarioKind scenario_kind_from_string(const std::string& s);
std::string to_string(ScenarioKind k);

struct ScenarioParams {
  double arena_half = 4.0;  // random-scenario arena half extent
  std::vector<int> level_obstacles = {0, 2, 4, 6, 8};
  std::vector<double> level_distances = {2.0, 3.0, 4.0, 5.0, 6.0};
  double robot_radius = 0.3;
  double goal_radius = 0.3;
  double wall_height = 2.0;

  int max_level() const { return static_cast<int>(level_obstacles.size()) - 1; }
};

// Deterministic for fixed (kind, level, seed). Office/coffee ignore level.
// Throws std::out_of_range for a bad level and std::runtime_error when no
// collision-free placement is found within bounded retries.
World generate_scenario(ScenarioKind kind, int level, std::uint64_t seed,
                        const ScenarioParams& params);

// Explicit-Euler unicycle update; theta wrapped to (-pi, pi]. The command is
// stored as the new state's current velocities.
RobotState step_kinematics(const RobotState& state, double v, double w, double dt);

// True iff the robot disc intersects any obstacle footprint whose height range
// overlaps [0, body_height], or the disc exits the world bounds.
bool check_collision(const World& world, const RobotState& state,
                     double body_height = 1.35);

// Distance from the robot disc edge to the nearest obstacle footprint boundary
// among height-overlapping obstacles, clamped to [0, cap]. Returns cap when no
// such obstacle exists.
double min_obstacle_distance(const World& world, const RobotState& state,
                             double body_height = 1.35, double cap = 10.0);

// Casts rays_h x rays_v rays over the FOV from the camera pose (robot pose,
// mount height). Each ray contributes its nearest surface hit (obstacle, arena
// wall, or ground) iff the hit range lies in [range_min, range_max]. Points
// are returned in the robot frame. `noise` adds zero-mean Gaussian depth noise
// when depth_noise_std > 0.
PointCloud render_depth(const World& world, const RobotState& state,
                        const CameraSpec& cam, Rng* noise = nullptr);

}  // namespace nav3d::sim
