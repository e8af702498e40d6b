#pragma once

#include <array>
#include <vector>

namespace nav3d {

// 3D points in the robot frame: x forward, y left, z up, meters.
struct PointCloud {
  std::vector<std::array<double, 3>> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace nav3d
