#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "nav3d/perception.hpp"
#include "nav3d/rng.hpp"

using namespace nav3d;
using namespace nav3d::perception;

namespace {

using VoxelKey = std::array<long long, 3>;

VoxelKey voxel_key(const std::array<double, 3>& p, double leaf) {
  return {static_cast<long long>(std::floor(p[0] / leaf)),
          static_cast<long long>(std::floor(p[1] / leaf)),
          static_cast<long long>(std::floor(p[2] / leaf))};
}

PointCloud random_cloud(std::size_t n, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.points.push_back({rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)});
  }
  return c;
}

// Independent quadratic reference for the statistical outlier filter: mean
// distance to the k nearest neighbors, thresholded at mean + mul * population
// standard deviation. Distances are summed in ascending order to match the
// library's summation order bit-for-bit.
PointCloud sor_reference(const PointCloud& cloud, int k, double mul) {
  const std::size_t n = cloud.size();
  if (n < 2) return cloud;
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
  std::vector<double> mean_d(n);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = cloud.points[i][0] - cloud.points[j][0];
      const double dy = cloud.points[i][1] - cloud.points[j][1];
      const double dz = cloud.points[i][2] - cloud.points[j][2];
      d2.push_back(dx * dx + dy * dy + dz * dz);
    }
    std::partial_sort(d2.begin(), d2.begin() + kk, d2.end());
    double sum = 0.0;
    for (std::size_t m = 0; m < kk; ++m) sum += std::sqrt(d2[m]);
    mean_d[i] = sum / static_cast<double>(kk);
  }
  double mu = 0.0;
  for (double d : mean_d) mu += d;
  mu /= static_cast<double>(n);
  double var = 0.0;
  for (double d : mean_d) var += (d - mu) * (d - mu);
  const double thresh = mu + mul * std::sqrt(var / static_cast<double>(n));
  PointCloud out;
  for (std::size_t i = 0; i < n; ++i) {
    if (mean_d[i] <= thresh) out.points.push_back(cloud.points[i]);
  }
  return out;
}

bool is_subsequence(const PointCloud& sub, const PointCloud& full) {
  std::size_t j = 0;
  for (const auto& p : sub.points) {
    while (j < full.size() && full.points[j] != p) ++j;
    if (j == full.size()) return false;
    ++j;
  }
  return true;
}

}  // namespace

TEST_CASE("voxel_downsample merges points sharing a leaf cube") {
  PointCloud c;
  c.points = {{0.01, 0.01, 0.01}, {0.04, 0.04, 0.04}};
  const PointCloud out = voxel_downsample(c, 0.05);
  REQUIRE(out.size() == 1);
  CHECK(out.points[0] == std::array<double, 3>{0.025, 0.025, 0.025});

  PointCloud neg;
  neg.points = {{-0.01, -0.01, -0.01}};
  const PointCloud nout = voxel_downsample(neg, 0.05);
  REQUIRE(nout.size() == 1);
  CHECK(nout.points[0] == std::array<double, 3>{-0.025, -0.025, -0.025});

  CHECK(voxel_downsample(PointCloud{}, 0.05).empty());
}

TEST_CASE("voxel_downsample matches a hash-set oracle and sorts by voxel index") {
  const double leaf = 0.07;
  const PointCloud cloud = random_cloud(500, -1.0, 1.0, 21);
  std::set<VoxelKey> expect;
  for (const auto& p : cloud.points) expect.insert(voxel_key(p, leaf));

  const PointCloud out = voxel_downsample(cloud, leaf);
  REQUIRE(out.size() == expect.size());
  VoxelKey prev{};
  bool first = true;
  for (const auto& p : out.points) {
    const VoxelKey k = voxel_key(p, leaf);
    CHECK(expect.count(k) == 1);
    // Each output point is the exact center of its cube.
    for (int a = 0; a < 3; ++a) {
      CHECK(p[a] == (static_cast<double>(k[a]) + 0.5) * leaf);
    }
    if (!first) CHECK(prev < k);  // strictly ascending voxel order
    prev = k;
    first = false;
  }
}

TEST_CASE("remove_statistical_outliers drops far points and keeps order") {
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.push_back({0.1 * i, 0.0, 0.0});
  c.points.push_back({100.0, 0.0, 0.0});
  const PointCloud out = remove_statistical_outliers(c, 3, 1.0);
  CHECK(out.size() == 10);
  for (const auto& p : out.points) CHECK(p[0] < 1.0);
  CHECK(is_subsequence(out, c));
}

TEST_CASE("remove_statistical_outliers equals the quadratic reference") {
  // Small cloud (exhaustive neighbor search path).
  {
    PointCloud c = random_cloud(300, -1.0, 1.0, 5);
    c.points.push_back({8.0, 8.0, 8.0});
    c.points.push_back({-7.0, 6.0, -5.0});
    const PointCloud got = remove_statistical_outliers(c, 20, 1.0);
    const PointCloud want = sor_reference(c, 20, 1.0);
    CHECK(got.points == want.points);
    CHECK(got.size() < c.size());
  }
  // Large cloud (grid-accelerated path) over a surface-like distribution.
  {
    Rng rng(17);
    PointCloud c;
    for (int i = 0; i < 1500; ++i) {
      const double x = rng.uniform(-2.0, 2.0);
      const double y = rng.uniform(-2.0, 2.0);
      c.points.push_back({x, y, 0.05 * std::sin(3.0 * x) + 0.01 * rng.normal()});
    }
    for (int i = 0; i < 8; ++i) {
      c.points.push_back({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), 3.0 + i});
    }
    const PointCloud got = remove_statistical_outliers(c, 50, 1.0);
    const PointCloud want = sor_reference(c, 50, 1.0);
    CHECK(got.points == want.points);
    CHECK(is_subsequence(got, c));
  }
  // Large uniform volume cloud.
  {
    const PointCloud c = random_cloud(900, -3.0, 3.0, 33);
    CHECK(remove_statistical_outliers(c, 50, 1.0).points ==
          sor_reference(c, 50, 1.0).points);
  }
}

TEST_CASE("remove_statistical_outliers edge cases") {
  CHECK(remove_statistical_outliers(PointCloud{}, 10, 1.0).empty());

  PointCloud one;
  one.points = {{1.0, 2.0, 3.0}};
  CHECK(remove_statistical_outliers(one, 10, 1.0).points == one.points);

  // k larger than the cloud clamps to n - 1 neighbors.
  PointCloud five = random_cloud(5, 0.0, 1.0, 9);
  CHECK(remove_statistical_outliers(five, 50, 1.0).points ==
        sor_reference(five, 50, 1.0).points);

  CHECK_THROWS_AS(remove_statistical_outliers(five, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(remove_statistical_outliers(five, -3, 1.0), std::invalid_argument);
}

TEST_CASE("height_filter keeps z <= max and preserves order") {
  PointCloud c;
  c.points = {{0, 0, 1.35}, {1, 0, 1.3500001}, {2, 0, -0.5}, {3, 0, 2.0}, {4, 0, 0.0}};
  const PointCloud out = height_filter(c, 1.35);
  REQUIRE(out.size() == 3);
  CHECK(out.points[0][0] == 0.0);  // boundary point kept
  CHECK(out.points[1][0] == 2.0);
  CHECK(out.points[2][0] == 4.0);
}

TEST_CASE("costmap cell geometry round-trips") {
  CHECK(Costmap::kHalfExtent == 3.0);
  for (int r = 0; r < Costmap::kSize; ++r) {
    for (int c = 0; c < Costmap::kSize; ++c) {
      double x, y;
      Costmap::cell_center(r, c, x, y);
      int rr, cc;
      REQUIRE(Costmap::point_to_cell(x, y, rr, cc));
      CHECK(rr == r);
      CHECK(cc == c);
    }
  }
  // Forward-left conventions: +x lowers the row, +y lowers the column.
  int r0, c0, r1, c1;
  REQUIRE(Costmap::point_to_cell(2.95, 0.0, r0, c0));
  REQUIRE(Costmap::point_to_cell(-2.95, 0.0, r1, c1));
  CHECK(r0 == 0);
  CHECK(r1 == Costmap::kSize - 1);
  REQUIRE(Costmap::point_to_cell(0.0, 2.95, r0, c0));
  CHECK(c0 == 0);
  REQUIRE(Costmap::point_to_cell(0.0, -2.95, r0, c0));
  CHECK(c0 == Costmap::kSize - 1);

  int r, c;
  CHECK_FALSE(Costmap::point_to_cell(3.05, 0.0, r, c));
  CHECK_FALSE(Costmap::point_to_cell(-3.05, 0.0, r, c));
  CHECK_FALSE(Costmap::point_to_cell(0.0, 3.05, r, c));
  CHECK_FALSE(Costmap::point_to_cell(0.0, -3.05, r, c));
}

TEST_CASE("build_costmap classifies columns by the obstacle height threshold") {
  const CostmapParams params;
  double x, y;
  Costmap::cell_center(5, 10, x, y);  // well outside the blind radius

  PointCloud ground;
  ground.points = {{x, y, 0.0}};
  const Costmap m1 = build_costmap(ground, nullptr, params);
  CHECK(m1.at(5, 10) == Cell::Free);

  PointCloud low;
  low.points = {{x, y, 0.049}};
  CHECK(build_costmap(low, nullptr, params).at(5, 10) == Cell::Free);

  PointCloud at_thresh;
  at_thresh.points = {{x, y, 0.05}};
  CHECK(build_costmap(at_thresh, nullptr, params).at(5, 10) == Cell::Obstacle);

  // A single high point marks the column even among ground returns.
  PointCloud mixed;
  mixed.points = {{x, y, 0.0}, {x, y, 0.6}, {x, y, 0.01}};
  const Costmap m2 = build_costmap(mixed, nullptr, params);
  CHECK(m2.at(5, 10) == Cell::Obstacle);

  // Untouched cells stay unknown.
  CHECK(m2.at(0, 0) == Cell::Unknown);
  int known = 0;
  for (Cell cell : m2.cells) known += cell != Cell::Unknown;
  CHECK(known == 1);
}

TEST_CASE("build_costmap leaves the blind zone and prior intact") {
  const CostmapParams params;
  int br, bc;
  REQUIRE(Costmap::point_to_cell(0.3, 0.0, br, bc));
  double bx, by;
  Costmap::cell_center(br, bc, bx, by);
  REQUIRE(std::hypot(bx, by) < params.blind_radius);

  PointCloud close;
  close.points = {{bx, by, 0.5}};
  CHECK(build_costmap(close, nullptr, params).at(br, bc) == Cell::Unknown);

  Costmap prior;
  prior.at(br, bc) = Cell::Free;
  prior.at(40, 40) = Cell::Obstacle;
  const Costmap out = build_costmap(close, &prior, params);
  CHECK(out.at(br, bc) == Cell::Free);      // blind cell keeps its prior
  CHECK(out.at(40, 40) == Cell::Obstacle);  // untouched prior carried over

  // New evidence overwrites the prior outside the blind zone.
  double fx, fy;
  Costmap::cell_center(40, 40, fx, fy);
  PointCloud clearing;
  clearing.points = {{fx, fy, 0.0}};
  CHECK(build_costmap(clearing, &prior, params).at(40, 40) == Cell::Free);

  // An empty cloud reproduces the prior exactly.
  CHECK(build_costmap(PointCloud{}, &prior, params) == prior);
}

TEST_CASE("transform_costmap identity and pure translation") {
  Costmap prior;
  prior.at(10, 20) = Cell::Obstacle;
  prior.at(30, 30) = Cell::Free;
  const sim::Pose pose{1.0, -2.0, 0.7};
  const Costmap same = transform_costmap(prior, pose, pose);
  CHECK(same == prior);

  // Robot advances one cell forward (heading 0): contents shift one row down
  // in the new map, and the vacated far edge becomes unknown.
  const sim::Pose old_pose{0.0, 0.0, 0.0};
  const sim::Pose new_pose{Costmap::kResolution, 0.0, 0.0};
  const Costmap shifted = transform_costmap(prior, old_pose, new_pose);
  CHECK(shifted.at(11, 20) == Cell::Obstacle);
  CHECK(shifted.at(31, 30) == Cell::Free);
  CHECK(shifted.at(10, 20) == Cell::Unknown);
  for (int c = 0; c < Costmap::kSize; ++c) CHECK(shifted.at(0, c) == Cell::Unknown);

  // Cells pulled from outside the old extent are unknown: move far away.
  const sim::Pose far_pose{100.0, 0.0, 0.0};
  const Costmap vacated = transform_costmap(prior, old_pose, far_pose);
  for (int r = 0; r < Costmap::kSize; ++r) {
    for (int c = 0; c < Costmap::kSize; ++c) CHECK(vacated.at(r, c) == Cell::Unknown);
  }
}

TEST_CASE("transform_costmap half-turn maps forward to backward") {
  Costmap prior;
  prior.at(0, 30) = Cell::Obstacle;  // directly ahead near the far edge
  const sim::Pose old_pose{0.0, 0.0, 0.0};
  const sim::Pose turned{0.0, 0.0, M_PI};
  const Costmap out = transform_costmap(prior, old_pose, turned);
  // The old forward cell is now behind the robot: bottom row, mirrored column.
  CHECK(out.at(Costmap::kSize - 1, Costmap::kSize - 1 - 30) == Cell::Obstacle);
}

TEST_CASE("costmap image conversion round-trips with fixed codes") {
  Costmap map;
  Rng rng(3);
  for (auto& cell : map.cells) {
    cell = static_cast<Cell>(rng.uniform_index(3));
  }
  const CostmapImage img = costmap_to_image(map);
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const std::uint8_t expect = map.cells[i] == Cell::Free      ? kPixelFree
                                : map.cells[i] == Cell::Obstacle ? kPixelObstacle
                                                                 : kPixelUnknown;
    CHECK(img.pixels[i] == expect);
  }
  CHECK(image_to_costmap(img) == map);

  CostmapImage bad = img;
  bad.pixels[7] = 128;
  CHECK_THROWS_AS(image_to_costmap(bad), std::invalid_argument);
}

TEST_CASE("write_pgm emits a P5 header and raw pixels") {
  Costmap map;
  map.at(0, 0) = Cell::Free;
  map.at(0, 1) = Cell::Obstacle;
  const CostmapImage img = costmap_to_image(map);
  const std::string path = "test_costmap.pgm";
  write_pgm(img, path);

  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n60 60\n255\n";
  REQUIRE(content.size() == header.size() + 3600);
  CHECK(content.compare(0, header.size(), header) == 0);
  CHECK(static_cast<std::uint8_t>(content[header.size()]) == kPixelFree);
  CHECK(static_cast<std::uint8_t>(content[header.size() + 1]) == kPixelObstacle);
  CHECK(static_cast<std::uint8_t>(content[header.size() + 2]) == kPixelUnknown);
  std::remove(path.c_str());
}

TEST_CASE("xyz text files round-trip") {
  PointCloud c;
  c.points = {{0.125, -3.5, 2.25}, {1e-9, 100.0, -0.333333333333333}};
  const std::string path = "test_cloud.xyz";
  save_xyz(c, path);
  const PointCloud back = load_xyz(path);
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      CHECK(back.points[i][a] == doctest::Approx(c.points[i][a]).epsilon(1e-15));
    }
  }
  std::remove(path.c_str());

  {
    std::ofstream f(path);
    f << "1 2 3\n\n4 5 6\n";
  }
  CHECK(load_xyz(path).size() == 2);  // blank lines are skipped
  {
    std::ofstream f(path);
    f << "1 2 3\nnot a number\n";
  }
  CHECK_THROWS_WITH_AS(load_xyz(path), doctest::Contains("line 2"), std::runtime_error);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_xyz("does_not_exist.xyz"), std::runtime_error);
}
