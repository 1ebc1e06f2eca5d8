#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "pdlvo/association.h"
#include "pdlvo/error.h"
#include "pdlvo/keypoints.h"
#include "test_util.h"

namespace pdlvo {
namespace {

RigCalibration rig() { return make_panoramic_rig(test::test_camera(), 0.05); }

TEST(SparseDepth, PointOnOpticalAxis) {
  const RigCalibration r = rig();
  LidarScan scan;
  scan.points.push_back(Vec3(0, 0, 2));
  const SparseDepthMap map = build_sparse_depth(scan, r, 1, Pose::identity());
  ASSERT_EQ(map.size(), 1u);
  const DepthSample s = map.samples().front();
  EXPECT_DOUBLE_EQ(s.pixel.u, 160);
  EXPECT_DOUBLE_EQ(s.pixel.v, 120);
  EXPECT_DOUBLE_EQ(s.depth, 2);
}

TEST(SparseDepth, NearerPointWinsCell) {
  const RigCalibration r = rig();
  LidarScan scan;
  scan.points.push_back(Vec3(0, 0, 5));
  scan.points.push_back(Vec3(0.001, 0, 2));
  const SparseDepthMap map = build_sparse_depth(scan, r, 1, Pose::identity());
  ASSERT_EQ(map.size(), 1u);
  EXPECT_DOUBLE_EQ(map.samples().front().depth, 2);
}

TEST(SparseDepth, BehindCameraExcluded) {
  const RigCalibration r = rig();
  LidarScan scan;
  scan.points.push_back(Vec3(0, 0, -2));
  EXPECT_TRUE(build_sparse_depth(scan, r, 1, Pose::identity()).empty());
}

TEST(SparseDepth, EmptyScanThrows) {
  try {
    build_sparse_depth(LidarScan{}, rig(), 1, Pose::identity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyScan);
  }
}

TEST(DepthLookup, Examples) {
  SparseDepthMap map(1, 100, 100, 2);
  map.insert({Pixel{10, 10}, 3.0});
  EXPECT_EQ(depth_lookup(map, Pixel{10, 10}, 0.0), 3.0);

  SparseDepthMap two(1, 100, 100, 2);
  two.insert({Pixel{51, 50}, 4.0});    // distance 1.0
  two.insert({Pixel{50, 48.5}, 7.0});  // distance 1.5
  EXPECT_EQ(depth_lookup(two, Pixel{50, 50}, 2.0), 4.0);
  EXPECT_FALSE(depth_lookup(two, Pixel{80, 80}, 2.0));
  EXPECT_FALSE(depth_lookup(SparseDepthMap(1, 10, 10, 2), Pixel{5, 5}, 3.0));
}

TEST(DepthNeighbors, RadiusIsInclusive) {
  SparseDepthMap map(1, 100, 100, 1);
  map.insert({Pixel{10, 10}, 1.0});
  map.insert({Pixel{13, 10}, 2.0});
  map.insert({Pixel{14, 10}, 3.0});
  EXPECT_EQ(depth_neighbors(map, Pixel{10, 10}, 3.0).size(), 2u);
}

// Random scan in front of the rig with the LiDAR offset from the body.
LidarScan random_scan(std::mt19937_64& rng, int n) {
  LidarScan scan;
  for (int i = 0; i < n; ++i) {
    const double az = test::uniform(rng, -3.14, 3.14);
    const double el = test::uniform(rng, -0.4, 0.4);
    const double r = test::uniform(rng, 1.0, 30.0);
    scan.points.push_back(r * Vec3(std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el)));
  }
  return scan;
}

TEST(SparseDepth, SelfConsistentAndOcclusionOracle) {
  std::mt19937_64 rng(31);
  const RigCalibration r = rig();
  const Pose body_from_lidar(so3_exp(Vec3(0.01, 0.3, -0.02)), Vec3(0.05, -0.1, 0.02));
  const LidarScan scan = random_scan(rng, 20000);
  for (int v = 1; v <= kNumViews; ++v) {
    const SparseDepthMap map = build_sparse_depth(scan, r, v, body_from_lidar, 2);
    EXPECT_LE(map.size(), scan.points.size());
    EXPECT_GT(map.size(), 100u);

    // Brute-force list oracle of the minimum depth per cell.
    const Pose cam_from_lidar = r.cam_from_body(v) * body_from_lidar;
    std::map<std::pair<int, int>, double> best;
    for (const auto& p : scan.points) {
      const Vec3 pc = cam_from_lidar * p;
      auto px = try_project(r.camera(v), pc);
      if (!px || px->u < 0 || px->v < 0 || px->u > 319 || px->v > 239) continue;
      const auto key = std::make_pair(int(px->u) / 2, int(px->v) / 2);
      auto [it, fresh] = best.emplace(key, pc.z());
      if (!fresh) it->second = std::min(it->second, pc.z());
    }
    EXPECT_EQ(best.size(), map.size());
    for (const auto& s : map.samples()) {
      const auto key = std::make_pair(int(s.pixel.u) / 2, int(s.pixel.v) / 2);
      ASSERT_TRUE(best.count(key));
      EXPECT_EQ(s.depth, best[key]);

      // unproject -> lidar -> camera -> project lands on the same pixel.
      const Vec3 pl = cam_from_lidar.inverse() * unproject(r.camera(v), s.pixel, s.depth);
      const Pixel back = project(r.camera(v), cam_from_lidar * pl);
      EXPECT_LT(std::hypot(back.u - s.pixel.u, back.v - s.pixel.v), 0.5);
    }
  }
}

TEST(Scan, SaveLoadRoundTrip) {
  test::TempDir dir("scan");
  LidarScan scan;
  scan.points = {Vec3(1.5, -2.25, 3.125), Vec3(0, 0, 1)};
  save_scan(scan, dir.path() / "a.xyz");
  const LidarScan back = load_scan(dir.path() / "a.xyz", 4.5);
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_EQ(back.points[0], scan.points[0]);
  EXPECT_EQ(back.timestamp, 4.5);
  {
    std::ofstream out(dir.path() / "bad.xyz");
    out << "# header\n1 2\n";
  }
  EXPECT_THROW(load_scan(dir.path() / "bad.xyz"), Error);
}

// Depth map with the same depth on every other pixel.
SparseDepthMap dense_depth(int w, int h, double depth) {
  SparseDepthMap map(1, w, h, 2);
  for (int y = 0; y < h; y += 2)
    for (int x = 0; x < w; x += 2) map.insert({Pixel{double(x), double(y)}, depth});
  return map;
}

TEST(Keypoints, ConstantImageGivesNone) {
  const Image img(128, 96, 100.0);
  EXPECT_TRUE(select_keypoints(img, dense_depth(128, 96, 3.0), KeypointConfig{}).empty());
}

TEST(Keypoints, StepEdgeSelectsEdgeColumns) {
  Image img(128, 96, 50.0);
  for (int y = 0; y < 96; ++y)
    for (int x = 40; x < 128; ++x) img(x, y) = 200.0;
  KeypointConfig cfg;
  const auto kps = select_keypoints(img, dense_depth(128, 96, 3.0), cfg);
  ASSERT_FALSE(kps.empty());
  for (const auto& kp : kps) {
    EXPECT_GE(kp.pixel.u, 39);
    EXPECT_LE(kp.pixel.u, 41);
    EXPECT_DOUBLE_EQ(kp.depth, 3.0);
  }
}

TEST(Keypoints, NoDepthMeansNoKeypoint) {
  Image img(128, 96, 50.0);
  for (int y = 0; y < 96; ++y)
    for (int x = 40; x < 128; ++x) img(x, y) = 200.0;
  SparseDepthMap far(1, 128, 96, 2);
  far.insert({Pixel{100, 50}, 3.0});
  EXPECT_TRUE(select_keypoints(img, far, KeypointConfig{}).empty());
}

TEST(Keypoints, DepthEdgeRejected) {
  Image img(128, 96, 50.0);
  for (int y = 0; y < 96; ++y)
    for (int x = 40; x < 128; ++x) img(x, y) = 200.0;
  // Foreground left of the edge, background right of it.
  SparseDepthMap map(1, 128, 96, 2);
  for (int y = 0; y < 96; y += 2)
    for (int x = 0; x < 128; x += 2) map.insert({Pixel{double(x), double(y)}, x < 40 ? 2.0 : 6.0});
  EXPECT_TRUE(select_keypoints(img, map, KeypointConfig{}).empty());
  KeypointConfig off;
  off.depth_consistency = 0;
  EXPECT_FALSE(select_keypoints(img, map, off).empty());
}

TEST(Keypoints, MedianPrefilterIgnoresImpulses) {
  Image img(128, 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 128; ++x) img(x, y) = 128 + 100 * std::sin(0.5 * x) * std::cos(0.3 * y);
  std::mt19937_64 rng(2);
  std::vector<std::pair<int, int>> salt;
  for (int i = 0; i < 40; ++i) {
    const int x = 4 + static_cast<int>(rng() % 120), y = 4 + static_cast<int>(rng() % 88);
    img(x, y) = 255.0;
    salt.emplace_back(x, y);
  }
  const auto kps = select_keypoints(img, dense_depth(128, 96, 3.0), KeypointConfig{});
  ASSERT_FALSE(kps.empty());
  for (const auto& kp : kps) {
    for (auto [x, y] : salt) {
      EXPECT_FALSE(std::abs(kp.pixel.u - x) <= 1 && std::abs(kp.pixel.v - y) <= 1);
    }
  }
}

TEST(Keypoints, SelectionProperties) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Image img = test::smooth_image(160, 120, trial * 0.7);
    KeypointConfig cfg;
    cfg.block_size = 16 + 8 * (trial % 3);
    cfg.max_points = trial % 2 ? 20 : 400;
    cfg.median_prefilter = trial % 4 == 0;
    const auto kps = select_keypoints(img, dense_depth(160, 120, 4.0), cfg);
    const Image filtered = cfg.median_prefilter ? median3(img) : img;
    const int bw = (160 + cfg.block_size - 1) / cfg.block_size;
    const int bh = (120 + cfg.block_size - 1) / cfg.block_size;
    EXPECT_LE(static_cast<int>(kps.size()), std::min(bw * bh, cfg.max_points));
    std::set<std::pair<int, int>> blocks;
    for (const auto& kp : kps) {
      const int x = static_cast<int>(kp.pixel.u), y = static_cast<int>(kp.pixel.v);
      const int bx = x / cfg.block_size, by = y / cfg.block_size;
      EXPECT_TRUE(blocks.emplace(bx, by).second) << "two keypoints in block " << bx << "," << by;
      EXPECT_GE(gradient_magnitude(filtered, x, y), block_threshold(filtered, bx, by, cfg));
      EXPECT_GT(kp.depth, 0);
      EXPECT_GE(x, kKeypointMargin);
      EXPECT_LT(x, 160 - kKeypointMargin);
      for (int i = 0; i < kPatternSize; ++i) {
        EXPECT_EQ(kp.pattern[static_cast<size_t>(i)],
                  img(x + kPattern[static_cast<size_t>(i)][0], y + kPattern[static_cast<size_t>(i)][1]));
      }
    }
  }
}

TEST(Keypoints, Median3) {
  Image img(5, 5, 10.0);
  img(2, 2) = 255;
  const Image m = median3(img);
  EXPECT_EQ(m(2, 2), 10.0);
  Image ramp(4, 1, std::vector<double>{1, 2, 3, 4});
  const Image mr = median3(ramp);
  EXPECT_EQ(mr(0, 0), 1.0);
  EXPECT_EQ(mr(1, 0), 2.0);
  EXPECT_EQ(mr(3, 0), 4.0);
}

}  // namespace
}  // namespace pdlvo
