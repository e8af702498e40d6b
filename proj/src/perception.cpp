#include "nav3d/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nav3d::perception {

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (leaf <= 0.0) throw std::invalid_argument("voxel_downsample: leaf must be > 0");
  std::map<std::array<std::int64_t, 3>, bool> occupied;
  for (const auto& p : cloud.points) {
    occupied[{static_cast<std::int64_t>(std::floor(p[0] / leaf)),
              static_cast<std::int64_t>(std::floor(p[1] / leaf)),
              static_cast<std::int64_t>(std::floor(p[2] / leaf))}] = true;
  }
  PointCloud out;
  out.points.reserve(occupied.size());
  for (const auto& [idx, used] : occupied) {
    (void)used;
    out.points.push_back({(idx[0] + 0.5) * leaf, (idx[1] + 0.5) * leaf, (idx[2] + 0.5) * leaf});
  }
  return out;
}

namespace {

inline double dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Mean of the sqrt of the kk smallest squared distances; summed in ascending
// order so the grid and brute-force paths round identically.
double mean_of_knn(std::vector<double>& d2s, int kk) {
  std::partial_sort(d2s.begin(), d2s.begin() + kk, d2s.end());
  double sum = 0.0;
  for (int i = 0; i < kk; ++i) sum += std::sqrt(d2s[i]);
  return sum / kk;
}

void knn_brute(const PointCloud& cloud, int kk, std::vector<double>& mean_dist) {
  const std::size_t n = cloud.points.size();
  std::vector<double> d2s;
  d2s.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    d2s.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d2s.push_back(dist2(cloud.points[i], cloud.points[j]));
    }
    mean_dist[i] = mean_of_knn(d2s, kk);
  }
}

// Exact k-nearest-neighbor mean distances via a dense linked-cell grid with
// ring expansion. Produces the same values as the brute-force pass: every
// point within the final kNN radius is collected before mean_of_knn runs.
void knn_grid(const PointCloud& cloud, int kk, std::vector<double>& mean_dist) {
  const std::size_t n = cloud.points.size();
  double lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = hi[a] = cloud.points[0][a];
  }
  for (const auto& p : cloud.points) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  // Surface-like clouds spread over the two largest axes; a wall seen face-on
  // is flat in x, so sizing cells from ex*ey alone would collapse them and the
  // ring search below would crawl over millions of empty cells.
  double e[3] = {std::max(hi[0] - lo[0], 1e-6), std::max(hi[1] - lo[1], 1e-6),
                 std::max(hi[2] - lo[2], 1e-6)};
  std::sort(e, e + 3);
  const double max_extent = e[2];
  // Roughly 2k candidates in the 3x3x3 block around a query.
  double s = std::sqrt(e[2] * e[1] / static_cast<double>(n)) * std::sqrt(2.0 * kk / 9.0) * 1.5;
  s = std::max({s, max_extent / 256.0, 1e-4});

  int nx, ny, nz;
  for (;;) {
    nx = static_cast<int>((hi[0] - lo[0]) / s) + 1;
    ny = static_cast<int>((hi[1] - lo[1]) / s) + 1;
    nz = static_cast<int>((hi[2] - lo[2]) / s) + 1;
    if (static_cast<long long>(nx) * ny * nz <= static_cast<long long>(8 * n) + 1024) break;
    s *= 1.3;
  }
  const int max_ring = std::max({nx, ny, nz});

  auto cell_of = [&](const std::array<double, 3>& p, int c[3]) {
    c[0] = std::min(static_cast<int>((p[0] - lo[0]) / s), nx - 1);
    c[1] = std::min(static_cast<int>((p[1] - lo[1]) / s), ny - 1);
    c[2] = std::min(static_cast<int>((p[2] - lo[2]) / s), nz - 1);
  };

  std::vector<int> head(static_cast<std::size_t>(nx) * ny * nz, -1);
  std::vector<int> nxt(n);
  for (std::size_t i = 0; i < n; ++i) {
    int c[3];
    cell_of(cloud.points[i], c);
    const std::size_t idx = (static_cast<std::size_t>(c[0]) * ny + c[1]) * nz + c[2];
    nxt[i] = head[idx];
    head[idx] = static_cast<int>(i);
  }

  std::vector<double> cand;
  cand.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int c0[3];
    cell_of(cloud.points[i], c0);
    cand.clear();

    auto scan = [&](int cx, int cy, int cz) {
      if (cx < 0 || cx >= nx || cy < 0 || cy >= ny || cz < 0 || cz >= nz) return;
      for (int j = head[(static_cast<std::size_t>(cx) * ny + cy) * nz + cz]; j != -1;
           j = nxt[j]) {
        if (j != static_cast<int>(i)) cand.push_back(dist2(cloud.points[i], cloud.points[j]));
      }
    };

    // kk-th smallest seen so far; refreshed lazily, once per ring.
    double bound = 0.0;
    bool bound_stale = true;
    for (int m = 0; m <= max_ring; ++m) {
      if (m >= 1 && static_cast<int>(cand.size()) >= kk) {
        if (bound_stale) {
          std::nth_element(cand.begin(), cand.begin() + kk - 1, cand.end());
          bound = cand[kk - 1];
          bound_stale = false;
        }
        // Anything in ring m is at least (m-1)*s away.
        const double lb = (m - 1) * s;
        if (lb * lb > bound) break;
      }
      const std::size_t before = cand.size();
      if (m == 0) {
        scan(c0[0], c0[1], c0[2]);
      } else {
        for (int dx = -m; dx <= m; ++dx) {
          for (int dy = -m; dy <= m; ++dy) {
            scan(c0[0] + dx, c0[1] + dy, c0[2] - m);
            scan(c0[0] + dx, c0[1] + dy, c0[2] + m);
          }
        }
        for (int dz = -m + 1; dz <= m - 1; ++dz) {
          for (int dx = -m; dx <= m; ++dx) {
            scan(c0[0] + dx, c0[1] - m, c0[2] + dz);
            scan(c0[0] + dx, c0[1] + m, c0[2] + dz);
          }
          for (int dy = -m + 1; dy <= m - 1; ++dy) {
            scan(c0[0] - m, c0[1] + dy, c0[2] + dz);
            scan(c0[0] + m, c0[1] + dy, c0[2] + dz);
          }
        }
      }
      if (cand.size() != before) bound_stale = true;
    }
    mean_dist[i] = mean_of_knn(cand, std::min<int>(kk, static_cast<int>(cand.size())));
  }
}

}  // namespace

PointCloud remove_statistical_outliers(const PointCloud& cloud, int k, double std_mul) {
  if (k < 1) throw std::invalid_argument("remove_statistical_outliers: k must be >= 1");
  const std::size_t n = cloud.points.size();
  if (n < 2) return cloud;
  const int kk = static_cast<int>(std::min<std::size_t>(k, n - 1));

  std::vector<double> mean_dist(n);
  if (n <= 512) {
    knn_brute(cloud, kk, mean_dist);
  } else {
    knn_grid(cloud, kk, mean_dist);
  }

  double mu = 0.0;
  for (double d : mean_dist) mu += d;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  var /= static_cast<double>(n);
  const double threshold = mu + std_mul * std::sqrt(var);

  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mean_dist[i] <= threshold) out.points.push_back(cloud.points[i]);
  }
  return out;
}

PointCloud height_filter(const PointCloud& cloud, double max_h) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    if (p[2] <= max_h) out.points.push_back(p);
  }
  return out;
}

Costmap build_costmap(const PointCloud& cloud, const Costmap* prior,
                      const CostmapParams& params) {
  Costmap map = prior != nullptr ? *prior : Costmap();
  constexpr int N = Costmap::kSize;
  std::array<std::uint8_t, N * N> has_point{};
  std::array<std::uint8_t, N * N> has_obstacle{};

  const double blind2 = params.blind_radius * params.blind_radius;
  for (const auto& p : cloud.points) {
    int row, col;
    if (!Costmap::point_to_cell(p[0], p[1], row, col)) continue;
    double cx_r, cy_r;
    Costmap::cell_center(row, col, cx_r, cy_r);
    if (cx_r * cx_r + cy_r * cy_r < blind2) continue;  // near-front blind zone
    has_point[row * N + col] = 1;
    if (p[2] >= params.obstacle_z) has_obstacle[row * N + col] = 1;
  }
  for (int idx = 0; idx < N * N; ++idx) {
    if (has_obstacle[idx]) {
      map.cells[idx] = Cell::Obstacle;
    } else if (has_point[idx]) {
      map.cells[idx] = Cell::Free;
    }
  }
  return map;
}

Costmap transform_costmap(const Costmap& prior, const sim::Pose& old_pose,
                          const sim::Pose& new_pose) {
  Costmap out;
  const double co = std::cos(old_pose.theta), so = std::sin(old_pose.theta);
  const double cn = std::cos(new_pose.theta), sn = std::sin(new_pose.theta);
  for (int r = 0; r < Costmap::kSize; ++r) {
    for (int c = 0; c < Costmap::kSize; ++c) {
      double xr, yr;
      Costmap::cell_center(r, c, xr, yr);
      // New robot frame -> world -> old robot frame.
      const double wx = new_pose.x + cn * xr - sn * yr;
      const double wy = new_pose.y + sn * xr + cn * yr;
      const double dx = wx - old_pose.x;
      const double dy = wy - old_pose.y;
      int r_old, c_old;
      if (Costmap::point_to_cell(co * dx + so * dy, -so * dx + co * dy, r_old, c_old)) {
        out.at(r, c) = prior.at(r_old, c_old);
      }
    }
  }
  return out;
}

CostmapImage costmap_to_image(const Costmap& map) {
  CostmapImage img;
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    switch (map.cells[i]) {
      case Cell::Free: img.pixels[i] = kPixelFree; break;
      case Cell::Obstacle: img.pixels[i] = kPixelObstacle; break;
      case Cell::Unknown: img.pixels[i] = kPixelUnknown; break;
    }
  }
  return img;
}

Costmap image_to_costmap(const CostmapImage& image) {
  Costmap map;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    switch (image.pixels[i]) {
      case kPixelFree: map.cells[i] = Cell::Free; break;
      case kPixelObstacle: map.cells[i] = Cell::Obstacle; break;
      case kPixelUnknown: map.cells[i] = Cell::Unknown; break;
      default:
        throw std::invalid_argument("image_to_costmap: pixel value " +
                                    std::to_string(image.pixels[i]));
    }
  }
  return map;
}

void write_pgm(const CostmapImage& image, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  f << "P5\n" << Costmap::kSize << " " << Costmap::kSize << "\n255\n";
  f.write(reinterpret_cast<const char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
  if (!f) throw std::runtime_error("write_pgm: write failed for " + path);
}

PointCloud load_xyz(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_xyz: cannot open " + path);
  PointCloud cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw std::runtime_error("load_xyz: bad line " + std::to_string(lineno) + " in " + path);
    }
    cloud.points.push_back({x, y, z});
  }
  return cloud;
}

void save_xyz(const PointCloud& cloud, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_xyz: cannot open " + path);
  f.precision(17);
  for (const auto& p : cloud.points) {
    f << p[0] << " " << p[1] << " " << p[2] << "\n";
  }
}

}  // namespace nav3d::perception
