#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "pdlvo/error.h"
#include "pdlvo/pipeline.h"
#include "pdlvo/tracking.h"
#include "test_util.h"

namespace pdlvo {
namespace {

// Keyframe at frame 0 of a noise-free line sequence plus the next frames.
struct World {
  SyntheticSequence seq{test::small_spec(TrajectoryKind::Line, 4, 0.0)};
  PipelineConfig cfg;
  Keyframe kf;
  std::vector<Frame> frames;

  World() {
    const FrameInput in0 = seq.frame(0);
    kf = build_keyframe(in0, Pose::identity(), seq.rig(), cfg);
    for (size_t i = 0; i < seq.size(); ++i) {
      const FrameInput in = seq.frame(i);
      frames.push_back(make_frame(in.id, in.timestamp, in.images, cfg.tracking.pyramid_levels));
    }
  }

  Pose true_motion(size_t i) const { return seq.poses()[i].inverse() * seq.poses()[0]; }
};

const World& world() {
  static const World w;
  return w;
}

TEST(Huber, Examples) {
  EXPECT_DOUBLE_EQ(huber_cost(3, 9), 9);
  EXPECT_DOUBLE_EQ(huber_cost(20, 9), 279);
  EXPECT_DOUBLE_EQ(huber_cost(-20, 9), 279);
  EXPECT_DOUBLE_EQ(huber_weight(3, 9), 1);
  EXPECT_DOUBLE_EQ(huber_weight(-18, 9), 0.5);
}

TEST(Huber, MonotoneAndContinuous) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double gamma = test::uniform(rng, 0.1, 20);
    double a = test::uniform(rng, -50, 50), b = test::uniform(rng, -50, 50);
    if (std::abs(a) > std::abs(b)) std::swap(a, b);
    ASSERT_LE(huber_cost(a, gamma), huber_cost(b, gamma));
  }
  EXPECT_NEAR(huber_cost(9 + 1e-12, 9), huber_cost(9 - 1e-12, 9), 1e-9);
}

TEST(ReferenceGradient, RampAndBorderFallback) {
  Image ramp(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) ramp(x, y) = 2 * x - 3 * y;
  const auto g = reference_gradient(ramp, Pixel{7.3, 9.6});
  ASSERT_TRUE(g);
  EXPECT_NEAR(g->x(), 2, 1e-12);
  EXPECT_NEAR(g->y(), -3, 1e-12);
  const auto edge = reference_gradient(ramp, Pixel{1.5, 9});
  ASSERT_TRUE(edge);
  EXPECT_NEAR(edge->x(), 2, 1e-12);
  EXPECT_FALSE(reference_gradient(ramp, Pixel{0.5, 9}));
}

TEST(Photometric, ReferenceJacobianEqualsExactForIdenticalRamp) {
  const CameraModel cam = test::test_camera();
  Image ramp(320, 240);
  for (int y = 0; y < 240; ++y)
    for (int x = 0; x < 320; ++x) ramp(x, y) = 0.5 * x + 0.25 * y;
  const Pixel px{100.3, 80.7};
  const Vec3 p = unproject(cam, px, 4.0);
  const Vec2 g_norm(0.5 * cam.fx, 0.25 * cam.fy);
  const auto exact = tracking_term(p, 0.0, Pose::identity(), Pose::identity(), Pose::identity(), cam, ramp);
  const auto ref = tracking_term(p, 0.0, Pose::identity(), Pose::identity(), Pose::identity(), cam, ramp,
                                 true, &g_norm);
  ASSERT_TRUE(exact && ref);
  EXPECT_LT((exact->jacobian - ref->jacobian).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Photometric, JacobiansMatchFiniteDifferences) {
  const Image img = test::smooth_image(320, 240);
  std::mt19937_64 rng(7);
  int tracked = 0, bundled = 0;
  for (int i = 0; i < 5000 && (tracked < 100 || bundled < 100); ++i) {
    if (tracked < 100) {
      if (auto e = test::tracking_jacobian_error(rng, img)) {
        EXPECT_LT(*e, 1e-4);
        ++tracked;
      }
    }
    if (bundled < 100) {
      if (auto e = test::bundle_jacobian_error(rng, img)) {
        EXPECT_LT(*e, 1e-4);
        ++bundled;
      }
    }
  }
  EXPECT_EQ(tracked, 100);
  EXPECT_EQ(bundled, 100);
}

TEST(Photometric, HostPointsCarryScaledGradients) {
  const World& w = world();
  const auto hosts = host_points(w.kf, w.seq.rig(), {1, 2, 3, 4, 5}, 0);
  EXPECT_LE(hosts.size(), w.kf.keypoint_count() * kPatternSize);
  EXPECT_GT(hosts.size(), 100u);
  const CameraModel cam = w.seq.rig().camera(1);
  for (const auto& hp : hosts) {
    const Pixel back = project(w.seq.rig().camera(hp.view), hp.point);
    ASSERT_NEAR(back.u, hp.pixel.u, 1e-9);
    const auto g = reference_gradient(w.kf.reference[static_cast<size_t>(hp.view - 1)].level(0), hp.pixel);
    ASSERT_TRUE(g);
    ASSERT_NEAR(hp.gradient.x(), g->x() * cam.fx, 1e-9);
  }
}

TEST(Energy, IdenticalFrameIsZero) {
  const World& w = world();
  TrackingConfig cfg = w.cfg.tracking;
  cfg.cross_view = false;
  for (int level = 0; level < 3; ++level) {
    const auto e = evaluate_energy(w.kf, w.kf.frame, Pose::identity(), w.seq.rig(), cfg, level);
    EXPECT_LT(e.energy, 1e-15) << "level " << level;
    EXPECT_GT(e.valid, 0);
  }
  // Cross-view pairs compare two different cameras, so only the same-view
  // pairs vanish when they are enabled.
  const auto all = evaluate_energy(w.kf, w.kf.frame, Pose::identity(), w.seq.rig(), w.cfg.tracking);
  for (size_t j = 0; j < kNumViews; ++j) EXPECT_LT(all.pair_energy[j][j], 1e-15);
}

TEST(Energy, PairReparameterizationIsExact) {
  const World& w = world();
  const Pose motion = se3_exp(Vec6((Vec6() << 0.02, -0.01, 0.03, 0.01, -0.02, 0.005).finished()));
  for (bool cross : {true, false}) {
    TrackingConfig cfg = w.cfg.tracking;
    cfg.cross_view = cross;
    PairTable<Pose> pairs;
    for (int j = 1; j <= kNumViews; ++j)
      for (int l = 1; l <= kNumViews; ++l)
        pairs[static_cast<size_t>(j - 1)][static_cast<size_t>(l - 1)] = chain_tracking(w.seq.rig(), motion, j, l);
    const auto a = evaluate_energy(w.kf, w.frames[1], motion, w.seq.rig(), cfg);
    const auto b = evaluate_energy_pairs(w.kf, w.frames[1], pairs, w.seq.rig(), cfg);
    EXPECT_EQ(a.valid, b.valid);
    EXPECT_NEAR(a.energy, b.energy, 1e-12 * a.energy);
  }
}

TEST(Energy, CrossViewSwitchRestrictsToDiagonal) {
  const World& w = world();
  TrackingConfig on = w.cfg.tracking, off = w.cfg.tracking;
  off.cross_view = false;
  const Pose motion = w.true_motion(1);
  const auto full = evaluate_energy(w.kf, w.frames[1], motion, w.seq.rig(), on);
  const auto same = evaluate_energy(w.kf, w.frames[1], motion, w.seq.rig(), off);
  double diag = 0.0;
  int cross_pairs = 0;
  for (size_t j = 0; j < kNumViews; ++j) {
    diag += full.pair_energy[j][j];
    EXPECT_EQ(full.pair_counts[j][j], same.pair_counts[j][j]);
    for (size_t l = 0; l < kNumViews; ++l) {
      if (l != j) {
        EXPECT_EQ(same.pair_counts[j][l], 0);
        cross_pairs += full.pair_counts[j][l];
      }
    }
  }
  EXPECT_NEAR(same.energy, diag, 1e-9 * diag);
  EXPECT_GE(full.energy, same.energy);
  EXPECT_GT(cross_pairs, 0);
}

TEST(Tracking, ZeroMotionFixedPoint) {
  const World& w = world();
  TrackingConfig cfg = w.cfg.tracking;
  cfg.cross_view = false;
  const TrackResult r = track_frame(w.kf, w.kf.frame, Pose::identity(), w.seq.rig(), cfg);
  const Twist t = se3_log(r.cur_from_kf);
  EXPECT_LT(t.rotation.norm(), 1e-9);
  EXPECT_LT(t.translation.norm(), 1e-9);
  EXPECT_LT(r.energy, 1e-15);
  EXPECT_DOUBLE_EQ(r.valid_ratio, 1.0);
  EXPECT_LT(r.mean_flow, 1e-6);
}

// Walls facing the cameras; the keyframe sits at the origin.
struct Room {
  SimConfig sim = test::room_config();
  RigCalibration rig = make_panoramic_rig(sim.camera, sim.rig_radius);
  Scene scene = test::room_scene(rig, 3.0, 1);
  PipelineConfig cfg;
  Keyframe kf = build_keyframe(test::render_input(scene, rig, sim, Pose::identity(), 0), Pose::identity(), rig, cfg);
};

TEST(Tracking, RecoversForwardStep) {
  const Room room;
  const Pose world_from_cur(Mat3::Identity(), Vec3(0, 0, 0.1));
  const FrameInput in = test::render_input(room.scene, room.rig, room.sim, world_from_cur, 1);
  const Frame frame = make_frame(in.id, in.timestamp, in.images, room.cfg.tracking.pyramid_levels);
  const Pose truth = world_from_cur.inverse();
  for (bool cross : {true, false}) {
    TrackingConfig cfg = room.cfg.tracking;
    cfg.cross_view = cross;
    const TrackResult r = track_frame(room.kf, frame, Pose::identity(), room.rig, cfg);
    EXPECT_NEAR(r.cur_from_kf.translation().norm(), 0.1, 1e-3) << "cross " << cross;
    EXPECT_LT((r.cur_from_kf.translation() - truth.translation()).norm(), 1e-3) << "cross " << cross;
    EXPECT_LT(se3_log(r.cur_from_kf * truth.inverse()).rotation.norm(), 1e-3);
    for (const auto& level : r.energy_history) {
      for (size_t k = 1; k < level.size(); ++k) EXPECT_LE(level[k], level[k - 1]);
    }
  }
}

// On the random patch world, anti-aliased patch borders make the images
// slightly inconsistent with bilinear warping, so the energy minimum sits a
// few millimetres from the truth. The estimate must reach at least the
// ground-truth energy.
TEST(Tracking, ReachesEnergyMinimumOnPatchWorld) {
  const World& w = world();
  for (bool cross : {true, false}) {
    for (bool reference : {true, false}) {
      TrackingConfig cfg = w.cfg.tracking;
      cfg.cross_view = cross;
      cfg.reference_gradient = reference;
      for (size_t i = 1; i < w.frames.size(); ++i) {
        const TrackResult r = track_frame(w.kf, w.frames[i], Pose::identity(), w.seq.rig(), cfg);
        const Pose truth = w.true_motion(i);
        const auto at_estimate = evaluate_energy(w.kf, w.frames[i], r.cur_from_kf, w.seq.rig(), cfg);
        const auto at_truth = evaluate_energy(w.kf, w.frames[i], truth, w.seq.rig(), cfg);
        EXPECT_LE(at_estimate.energy, at_truth.energy) << "frame " << i;
        EXPECT_LT((r.cur_from_kf.translation() - truth.translation()).norm(), 5e-3)
            << "frame " << i << " cross " << cross << " reference " << reference;
        EXPECT_LT(se3_log(r.cur_from_kf * truth.inverse()).rotation.norm(), 1e-3);
        for (const auto& level : r.energy_history) {
          for (size_t k = 1; k < level.size(); ++k) EXPECT_LE(level[k], level[k - 1]);
        }
        EXPECT_GT(r.mean_flow, 0.0);
      }
    }
  }
}

TEST(Tracking, MonoUsesOnlyForwardView) {
  const World& w = world();
  TrackingConfig cfg = w.cfg.tracking;
  cfg.active_views = {1};
  const TrackResult r = track_frame(w.kf, w.frames[1], Pose::identity(), w.seq.rig(), cfg);
  for (size_t j = 0; j < kNumViews; ++j) {
    for (size_t l = 0; l < kNumViews; ++l) {
      if (j || l) {
        EXPECT_EQ(r.pair_counts[j][l], 0);
      }
    }
  }
  EXPECT_GT(r.pair_counts[0][0], 0);
}

TEST(Tracking, TexturelessFrameIsInsufficient) {
  const World& w = world();
  std::array<Image, kNumViews> blank;
  for (auto& img : blank) img = Image(320, 240, 128.0);
  const Frame f = make_frame(9, 1.0, blank, w.cfg.tracking.pyramid_levels);
  try {
    track_frame(w.kf, f, Pose::identity(), w.seq.rig(), w.cfg.tracking);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientResiduals);
  }
}

TEST(Tracking, ConfigValidation) {
  TrackingConfig cfg;
  cfg.huber = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrackingConfig{};
  cfg.active_views = {};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.active_views = {6};
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace pdlvo
