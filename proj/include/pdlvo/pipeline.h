#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdlvo/dataset.h"
#include "pdlvo/error.h"
#include "pdlvo/evaluation.h"
#include "pdlvo/keypoints.h"
#include "pdlvo/sequence.h"
#include "pdlvo/tracking.h"
#include "pdlvo/window.h"

namespace pdlvo {

struct PipelineConfig {
  TrackingConfig tracking;  // also carries the active views and cross-view toggle
  WindowConfig window;
  KeypointConfig keypoints;
  int window_size = 7;
  int depth_cell_size = kDefaultDepthCellSize;
  SequenceSpec simulation;  // used by `simulate` only

  void validate() const;
};

// Sections [tracking], [window], [keypoints], [simulation]; unknown keys are
// rejected. Missing keys keep their defaults.
PipelineConfig parse_pipeline_config(const std::string& text, const std::string& origin = "<string>");
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// world_from_cur = world_from_kf * cur_from_kf^{-1}.
Pose transform_integration(const Pose& world_from_kf, const Pose& cur_from_kf);

// Keyframe from one capture: sparse depth, keypoints and reference images
// for every active view.
Keyframe build_keyframe(const FrameInput& in, Frame frame, const Pose& world_from_body,
                        const RigCalibration& rig, const PipelineConfig& cfg);
Keyframe build_keyframe(const FrameInput& in, const Pose& world_from_body, const RigCalibration& rig,
                        const PipelineConfig& cfg);

struct OdometryResult {
  Trajectory trajectory;  // one pose per processed frame
  bool lost = false;
  std::optional<ErrorCode> lost_reason;
  std::int64_t lost_frame = -1;
  std::string message;

  std::vector<std::int64_t> keyframe_ids;
  // Valid tracking residuals per (host view, target view), summed over the run.
  PairTable<std::int64_t> pair_usage{};
};

using FrameLoader = std::function<FrameInput(size_t)>;

// Runs the frame loop. Tracking failures (InsufficientResiduals, Diverged)
// stop the run and are reported in the result with the partial trajectory;
// an empty input throws EmptyDataset.
OdometryResult run_odometry(const RigCalibration& rig, size_t frame_count, const FrameLoader& load,
                            const PipelineConfig& cfg);
OdometryResult run_odometry(const DatasetStream& stream, const PipelineConfig& cfg);
OdometryResult run_odometry(const SyntheticSequence& seq, const PipelineConfig& cfg);

}  // namespace pdlvo
