#pragma once

#include <string>
#include <vector>

#include "nav3d/pomdp_env.hpp"

namespace nav3d::io {

// CSV schema: step,x,y,theta,v,omega,action_index,r_goal,r_collision,
// r_safety,r_step,total,outcome
std::string format_trace(const std::vector<env::TraceRow>& rows);
void write_trace(const std::vector<env::TraceRow>& rows, const std::string& path);

// Top-down world snapshot as an 8-bit PGM: obstacles dark, free space white,
// trajectory grey, start/goal marked with crosses.
struct WorldImage {
  int size = 0;  // square, row 0 = +x edge, col 0 = +y edge (map convention)
  std::vector<std::uint8_t> pixels;

  // World coordinates -> pixel; false if outside the image.
  bool to_pixel(const sim::World& world, double x, double y, int& row, int& col) const;
};

WorldImage render_world(const sim::World& world, const std::vector<sim::Pose>& trajectory,
                        int size = 240);
void write_world_pgm(const WorldImage& img, const std::string& path);

}  // namespace nav3d::io
