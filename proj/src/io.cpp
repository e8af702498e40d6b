#include "nav3d/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nav3d::io {

std::string format_trace(const std::vector<env::TraceRow>& rows) {
  std::string out =
      "step,x,y,theta,v,omega,action_index,r_goal,r_collision,r_safety,r_step,total,outcome\n";
  char buf[320];
  for (const env::TraceRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.6f,%.6f,%.6f,%.2f,%.2f,%d,%.6f,%.1f,%.6f,%.1f,%.6f,%s\n", r.step,
                  r.pose.x, r.pose.y, r.pose.theta, r.v, r.w, r.action_index, r.reward.r_goal,
                  r.reward.r_collision, r.reward.r_safety, r.reward.r_step, r.reward.total(),
                  env::outcome_name(r.outcome));
    out += buf;
  }
  return out;
}

void write_trace(const std::vector<env::TraceRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace for writing: " + path);
  f << format_trace(rows);
  if (!f) throw std::runtime_error("trace write failed: " + path);
}

bool WorldImage::to_pixel(const sim::World& world, double x, double y, int& row, int& col) const {
  const double sx = (world.bounds.xmax - world.bounds.xmin) / size;
  const double sy = (world.bounds.ymax - world.bounds.ymin) / size;
  row = static_cast<int>(std::floor((world.bounds.xmax - x) / sx));
  col = static_cast<int>(std::floor((world.bounds.ymax - y) / sy));
  return row >= 0 && row < size && col >= 0 && col < size;
}

namespace {

void draw_cross(WorldImage& img, int row, int col, std::uint8_t value) {
  for (int d = -3; d <= 3; ++d) {
    const int r = row + d, c = col + d, c2 = col - d;
    if (r >= 0 && r < img.size) {
      if (c >= 0 && c < img.size) img.pixels[r * img.size + c] = value;
      if (c2 >= 0 && c2 < img.size) img.pixels[r * img.size + c2] = value;
    }
  }
}

}  // namespace

WorldImage render_world(const sim::World& world, const std::vector<sim::Pose>& trajectory,
                        int size) {
  WorldImage img;
  img.size = size;
  img.pixels.assign(static_cast<std::size_t>(size) * size, 255);

  // Obstacle footprints (anything a robot body of height 1.35 could touch).
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double x = world.bounds.xmax -
                       (r + 0.5) * (world.bounds.xmax - world.bounds.xmin) / size;
      const double y = world.bounds.ymax -
                       (c + 0.5) * (world.bounds.ymax - world.bounds.ymin) / size;
      for (const sim::Obstacle& o : world.obstacles) {
        if (!o.height_overlaps(0.0, 1.35)) continue;
        if (o.footprint_distance(x, y) <= 0.0) {
          img.pixels[r * size + c] = 0;
          break;
        }
      }
    }
  }

  for (const sim::Pose& p : trajectory) {
    int r, c;
    if (img.to_pixel(world, p.x, p.y, r, c)) img.pixels[r * size + c] = 160;
  }

  int r, c;
  if (img.to_pixel(world, world.start.x, world.start.y, r, c)) draw_cross(img, r, c, 96);
  if (img.to_pixel(world, world.goal.x, world.goal.y, r, c)) draw_cross(img, r, c, 32);
  return img;
}

void write_world_pgm(const WorldImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image for writing: " + path);
  f << "P5\n" << img.size << " " << img.size << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw std::runtime_error("image write failed: " + path);
}

}  // namespace nav3d::io
