#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pdlvo/dataset.h"
#include "pdlvo/evaluation.h"
#include "pdlvo/simworld.h"

namespace pdlvo {

struct SequenceSpec {
  std::uint64_t seed = 1;
  int frames = 100;
  TrajectoryKind kind = TrajectoryKind::LineArc;
  TrajectoryConfig trajectory;
  SimConfig sim;
  // Free space kept around the path before patches are placed.
  double clear_margin = 1.5;

  // Degradations. Frames [blank_begin, blank_begin + blank_count) of
  // blank_view are saturated to white; salt_pepper is the fraction of
  // outlier pixels injected into every view of every frame after the first.
  int blank_view = 0;
  int blank_begin = 0;
  int blank_count = 0;
  double salt_pepper = 0.0;
};

// Scene, rig and ground truth for a synthetic run; frames are rendered on
// demand and quantized to 8 bits exactly as the PGM writer would.
class SyntheticSequence {
 public:
  explicit SyntheticSequence(const SequenceSpec& spec);

  const SequenceSpec& spec() const { return spec_; }
  const RigCalibration& rig() const { return rig_; }
  const Scene& scene() const { return scene_; }
  const std::vector<Pose>& poses() const { return poses_; }
  size_t size() const { return poses_.size(); }
  double timestamp(size_t i) const { return static_cast<double>(i) * spec_.sim.frame_interval; }
  Trajectory ground_truth() const;

  FrameInput frame(size_t i) const;

 private:
  SequenceSpec spec_;
  std::vector<Pose> poses_;
  RigCalibration rig_;
  Scene scene_;
};

// Dataset directory plus groundtruth.txt.
void write_dataset(const SyntheticSequence& seq, const std::filesystem::path& dir);

}  // namespace pdlvo
