#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include "oracles.h"
#include "pdlvo/error.h"
#include "pdlvo/pipeline.h"
#include "test_util.h"

namespace pdlvo {
namespace {

namespace fs = std::filesystem;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no pdlvo::Error thrown";
  return ErrorCode::TrackingLost;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Config, ParsesSectionsAndKeepsDefaults) {
  const PipelineConfig cfg = parse_pipeline_config(
      "[tracking]\nhuber = 5\nviews = 1, 3\ncross_view = false\n"
      "[window]\nsize = 6\n[keypoints]\nmax_points = 300\n"
      "[simulation]\ntrajectory = arc\nframes = 12\nsalt_pepper = 0.1\n");
  EXPECT_DOUBLE_EQ(cfg.tracking.huber, 5);
  EXPECT_DOUBLE_EQ(cfg.window.huber, 5);
  EXPECT_EQ(cfg.tracking.active_views, (std::vector<int>{1, 3}));
  EXPECT_FALSE(cfg.tracking.cross_view);
  EXPECT_EQ(cfg.window_size, 6);
  EXPECT_EQ(cfg.keypoints.max_points, 300);
  EXPECT_EQ(cfg.simulation.kind, TrajectoryKind::Arc);
  EXPECT_EQ(cfg.simulation.frames, 12);
  EXPECT_DOUBLE_EQ(cfg.simulation.salt_pepper, 0.1);
  const PipelineConfig defaults;
  EXPECT_EQ(cfg.tracking.pyramid_levels, defaults.tracking.pyramid_levels);
  EXPECT_TRUE(cfg.tracking.reference_gradient);
}

TEST(Config, Defaults) {
  const PipelineConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.tracking.huber, 9.0);
  EXPECT_EQ(cfg.window_size, 7);
  EXPECT_EQ(cfg.tracking.active_views, (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_TRUE(cfg.tracking.cross_view);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_EQ(code_of([] { parse_pipeline_config("[tracking]\nhubr = 5\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_pipeline_config("[optics]\nx = 1\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_pipeline_config("[window]\nsize = 3\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_pipeline_config("[simulation]\ntrajectory = spiral\n"); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_pipeline_config("[tracking]\nhuber = abc\n"); }), ErrorCode::ParseError);
}

TEST(Integration, Examples) {
  const Pose kf(Mat3::Identity(), Vec3(1, 0, 0));
  const Pose motion(Mat3::Identity(), Vec3(0, 0, -0.5));
  EXPECT_LT((transform_integration(kf, motion).translation() - Vec3(1, 0, 0.5)).norm(), 1e-15);
  EXPECT_LT((transform_integration(kf, Pose::identity()).matrix() - kf.matrix()).norm(), 1e-15);
}

TEST(Integration, MatchesDenseMatrices) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Pose kf = test::random_pose(rng), motion = test::random_pose(rng);
    const Mat4 dense = kf.matrix() * motion.matrix().inverse();
    ASSERT_LT((transform_integration(kf, motion).matrix() - dense).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Dataset, WriteIngestRoundTrip) {
  const SyntheticSequence seq(test::small_spec(TrajectoryKind::Line, 10));
  test::TempDir dir("ds");
  write_dataset(seq, dir.path());
  const DatasetStream stream = ingest_dataset(dir.path());
  ASSERT_EQ(stream.records.size(), 10u);
  EXPECT_LT((stream.body_from_lidar().matrix() - seq.rig().body_from_lidar().matrix()).norm(), 1e-9);
  for (size_t i : {size_t{0}, size_t{7}}) {
    const FrameInput a = load_record(stream.records[i]);
    const FrameInput b = seq.frame(i);
    EXPECT_EQ(a.id, b.id);
    EXPECT_NEAR(a.timestamp, b.timestamp, 1e-6);
    for (size_t v = 0; v < kNumViews; ++v) EXPECT_EQ(a.images[v], b.images[v]);
    ASSERT_EQ(a.scan.points.size(), b.scan.points.size());
    EXPECT_LT((a.scan.points.back() - b.scan.points.back()).norm(), 1e-5);
  }
  const Trajectory gt = load_trajectory(dir.path() / "groundtruth.txt");
  EXPECT_EQ(gt.size(), 10u);
}

TEST(Dataset, MissingViewAndScan) {
  const SyntheticSequence seq(test::small_spec(TrajectoryKind::Line, 3));
  test::TempDir dir("missing");
  write_dataset(seq, dir.path());
  fs::remove(dir.path() / "frames" / frame_file_name(1, 4));
  EXPECT_EQ(code_of([&] { ingest_dataset(dir.path()); }), ErrorCode::MissingView);

  test::TempDir dir2("noscan");
  write_dataset(seq, dir2.path());
  fs::remove(dir2.path() / "scans" / scan_file_name(2));
  EXPECT_EQ(code_of([&] { ingest_dataset(dir2.path()); }), ErrorCode::MissingScan);
}

TEST(Dataset, ScansAssociateByNearestTimestamp) {
  const SyntheticSequence seq(test::small_spec(TrajectoryKind::Line, 4));
  test::TempDir dir("offset");
  {
    DatasetWriter w(dir.path(), seq.rig());
    for (size_t i = 0; i < seq.size(); ++i) {
      const FrameInput in = seq.frame(i);
      w.add_scan(in.id + 100, in.timestamp + 0.01, in.scan);
      w.add_frame(in.id, in.timestamp, in.images);
    }
  }
  const DatasetStream stream = ingest_dataset(dir.path());
  ASSERT_EQ(stream.records.size(), 4u);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(stream.records[i].scan.filename(), scan_file_name(static_cast<std::int64_t>(i) + 100));
    EXPECT_NEAR(stream.records[i].scan_timestamp, stream.records[i].timestamp + 0.01, 1e-9);
  }

  test::TempDir far("far");
  {
    DatasetWriter w(far.path(), seq.rig());
    const FrameInput in = seq.frame(0);
    w.add_scan(0, 0.05, in.scan);
    w.add_frame(0, 0.0, in.images);
  }
  EXPECT_EQ(code_of([&] { ingest_dataset(far.path()); }), ErrorCode::MissingScan);
}

TEST(Dataset, NonMonotoneTimestamps) {
  const SyntheticSequence seq(test::small_spec(TrajectoryKind::Line, 3));
  test::TempDir dir("order");
  write_dataset(seq, dir.path());
  std::string index = read_file(dir.path() / "index.txt");
  const auto at = index.find("frame 2 0.4");
  ASSERT_NE(at, std::string::npos);
  index.replace(at, 11, "frame 2 0.1");
  write_file(dir.path() / "index.txt", index);
  EXPECT_EQ(code_of([&] { ingest_dataset(dir.path()); }), ErrorCode::NonMonotoneTimestamps);
}

// Short runs shared by the odometry tests.
struct Runs {
  SyntheticSequence seq{test::small_spec(TrajectoryKind::Line, 8)};
  OdometryResult full = run_odometry(seq, PipelineConfig{});
  OdometryResult again = run_odometry(seq, PipelineConfig{});
  OdometryResult mono = [this] {
    PipelineConfig cfg;
    cfg.tracking.active_views = {1};
    return run_odometry(seq, cfg);
  }();
};

const Runs& runs() {
  static const Runs r;
  return r;
}

TEST(Odometry, OnePosePerFrameStartingAtIdentity) {
  const Runs& r = runs();
  ASSERT_FALSE(r.full.lost) << r.full.message;
  ASSERT_EQ(r.full.trajectory.size(), r.seq.size());
  EXPECT_EQ(r.full.trajectory[0].world_from_body.matrix(), Mat4::Identity());
  EXPECT_EQ(r.full.keyframe_ids.front(), 0);
  for (size_t i = 0; i < r.seq.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.full.trajectory[i].timestamp, r.seq.timestamp(i));
    EXPECT_LT((r.full.trajectory[i].world_from_body.translation() - r.seq.poses()[i].translation()).norm(), 0.01);
  }
}

TEST(Odometry, Deterministic) {
  const Runs& r = runs();
  EXPECT_EQ(format_trajectory(r.full.trajectory), format_trajectory(r.again.trajectory));
  EXPECT_EQ(r.full.keyframe_ids, r.again.keyframe_ids);
}

TEST(Odometry, UsesCrossViewPairsOnlyWhenEnabled) {
  const Runs& r = runs();
  std::int64_t cross = 0;
  for (size_t j = 0; j < kNumViews; ++j)
    for (size_t l = 0; l < kNumViews; ++l)
      if (j != l) cross += r.full.pair_usage[j][l];
  EXPECT_GT(cross, 0);

  ASSERT_FALSE(r.mono.lost) << r.mono.message;
  for (size_t j = 0; j < kNumViews; ++j) {
    for (size_t l = 0; l < kNumViews; ++l) {
      if (j || l) {
        EXPECT_EQ(r.mono.pair_usage[j][l], 0);
      }
    }
  }
  EXPECT_GT(r.mono.pair_usage[0][0], 0);
}

TEST(Odometry, EmptyDatasetAndLoss) {
  const SyntheticSequence seq(test::small_spec(TrajectoryKind::Line, 3));
  EXPECT_EQ(code_of([&] { run_odometry(seq.rig(), 0, [&](size_t i) { return seq.frame(i); }, PipelineConfig{}); }),
            ErrorCode::EmptyDataset);

  // A frame with a textureless forward view cannot be tracked in mono mode.
  PipelineConfig cfg;
  cfg.tracking.active_views = {1};
  const auto loader = [&](size_t i) {
    FrameInput in = seq.frame(i);
    if (i == 2) saturate(in.images[0]);
    return in;
  };
  const OdometryResult res = run_odometry(seq.rig(), seq.size(), loader, cfg);
  EXPECT_TRUE(res.lost);
  EXPECT_EQ(res.lost_frame, 2);
  EXPECT_EQ(res.trajectory.size(), 2u);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PDLVO_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, SimulateRunEvaluate) {
  test::TempDir dir("cli");
  const std::string root = dir.path().string();
  EXPECT_EQ(run_cli("simulate --frames 4 --trajectory line --seed 3 --out " + root + "/ds"), 0);
  EXPECT_EQ(run_cli("run --dataset " + root + "/ds --out " + root + "/est.txt"), 0);
  EXPECT_EQ(load_trajectory(dir.path() / "est.txt").size(), 4u);

  const std::string eval = std::string("\"") + PDLVO_CLI_PATH + "\" evaluate --est " + root + "/est.txt --gt " +
                           root + "/ds/groundtruth.txt --plot " + root + "/plot.svg > " + root + "/ate.txt";
  ASSERT_EQ(std::system(eval.c_str()), 0);
  const double ate = std::stod(read_file(dir.path() / "ate.txt"));
  EXPECT_GE(ate, 0.0);
  EXPECT_LT(ate, 0.01);
  EXPECT_TRUE(fs::exists(dir.path() / "plot.svg"));
}

TEST(Cli, ExitCodes) {
  test::TempDir dir("cliexit");
  const std::string root = dir.path().string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("run --dataset " + root + "/none --out " + root + "/x.txt --views 7"), 1);
  EXPECT_EQ(run_cli("run --dataset " + root + "/none --out " + root + "/x.txt"), 2);
  write_file(dir.path() / "bad.txt", "0 1 2\n");
  EXPECT_EQ(run_cli("evaluate --est " + root + "/bad.txt --gt " + root + "/bad.txt"), 2);
}

}  // namespace
}  // namespace pdlvo
