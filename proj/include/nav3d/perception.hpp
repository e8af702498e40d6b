#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "nav3d/point_cloud.hpp"
#include "nav3d/sim_world.hpp"

namespace nav3d::perception {

enum class Cell : std::uint8_t { Free = 0, Obstacle = 1, Unknown = 2 };

// Tri-state bird's-eye grid, 6 m x 6 m at 0.1 m/cell, centered on the robot
// and aligned with its heading. Row 0 is the farthest-forward row; column 0 is
// the leftmost (robot +y).
struct Costmap {
  static constexpr int kSize = 60;
  static constexpr double kResolution = 0.1;
  static constexpr double kHalfExtent = kSize * kResolution / 2.0;

  std::array<Cell, kSize * kSize> cells;

  Costmap() { cells.fill(Cell::Unknown); }

  Cell at(int row, int col) const { return cells[row * kSize + col]; }
  Cell& at(int row, int col) { return cells[row * kSize + col]; }

  // Robot-frame point -> cell index; false when outside the extent.
  static bool point_to_cell(double x, double y, int& row, int& col) {
    row = static_cast<int>(std::floor((kHalfExtent - x) / kResolution));
    col = static_cast<int>(std::floor((kHalfExtent - y) / kResolution));
    return row >= 0 && row < kSize && col >= 0 && col < kSize;
  }

  // Robot-frame coordinates of a cell center.
  static void cell_center(int row, int col, double& x, double& y) {
    x = kHalfExtent - (row + 0.5) * kResolution;
    y = kHalfExtent - (col + 0.5) * kResolution;
  }

  bool operator==(const Costmap& other) const { return cells == other.cells; }
};

struct CostmapImage {
  std::array<std::uint8_t, Costmap::kSize * Costmap::kSize> pixels{};

  bool operator==(const CostmapImage& other) const { return pixels == other.pixels; }
};

constexpr std::uint8_t kPixelFree = 255;
constexpr std::uint8_t kPixelUnknown = 127;
constexpr std::uint8_t kPixelObstacle = 0;

struct CostmapParams {
  double obstacle_z = 0.05;   // column with any point at or above -> obstacle
  double blind_radius = 0.8;  // near-front cells never updated (camera min range)
};

// Replaces all points in each occupied leaf-sized cube (anchored at the
// origin, half-open intervals) with the cube center. Output is ordered by
// ascending voxel index.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf = 0.05);

// Removes points whose mean distance to their k nearest neighbors exceeds the
// population mean plus std_mul standard deviations (upper tail only). Clouds
// with fewer than 2 points are returned unchanged; order is preserved.
PointCloud remove_statistical_outliers(const PointCloud& cloud, int k = 50,
                                       double std_mul = 1.0);

// Removes points strictly above max_h; order preserved.
PointCloud height_filter(const PointCloud& cloud, double max_h = 1.35);

// Projects a filtered cloud into the grid on top of an optional prior (already
// in the current robot frame). Cells inside the blind radius keep their prior
// state; points outside the extent are ignored.
Costmap build_costmap(const PointCloud& cloud, const Costmap* prior,
                      const CostmapParams& params);

// Resamples a prior grid from an old robot pose into a new one; cells that
// fall outside the old extent become unknown.
Costmap transform_costmap(const Costmap& prior, const sim::Pose& old_pose,
                          const sim::Pose& new_pose);

CostmapImage costmap_to_image(const Costmap& map);
Costmap image_to_costmap(const CostmapImage& image);

// Debug dump: binary PGM (P5, 60x60, maxval 255).
void write_pgm(const CostmapImage& image, const std::string& path);

// Plain-text cloud format, one "x y z" triple per line.
PointCloud load_xyz(const std::string& path);
void save_xyz(const PointCloud& cloud, const std::string& path);

}  // namespace nav3d::perception
