#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include <Eigen/Core>

#include "pdlvo/frame.h"
#include "pdlvo/rig.h"
#include "pdlvo/tracking.h"

namespace pdlvo {

struct WindowConfig {
  double huber = 9.0;  // shared with tracking
  int max_iterations = 8;
  double flow_threshold = 8.0;  // pixels
  double min_ratio = 0.6;       // tracked-residual ratio
  bool reference_gradient = true;

  void validate() const;
};

// Quadratic prior left behind by marginalized keyframes:
// E(delta) = 2 b^T delta + delta^T H delta, where delta stacks
// log(world_from_body * lin^{-1}) for each id in `ids`.
struct MarginalizationPrior {
  std::vector<std::int64_t> ids;
  std::vector<Pose> linearization;
  Eigen::MatrixXd H;
  Eigen::VectorXd b;

  bool empty() const { return ids.empty(); }
};

class KeyframeWindow {
 public:
  static constexpr int kMinCapacity = 5;

  explicit KeyframeWindow(int max_size = 7);

  int max_size() const { return max_size_; }
  int size() const { return static_cast<int>(keyframes_.size()); }
  bool full() const { return size() >= max_size_; }
  bool empty() const { return keyframes_.empty(); }

  // Throws IndexOutOfRange if the window is already full.
  void add(Keyframe kf);

  std::deque<Keyframe>& keyframes() { return keyframes_; }
  const std::deque<Keyframe>& keyframes() const { return keyframes_; }
  const Keyframe& newest() const { return keyframes_.back(); }

  MarginalizationPrior& prior() { return prior_; }
  const MarginalizationPrior& prior() const { return prior_; }

 private:
  int max_size_;
  std::deque<Keyframe> keyframes_;
  MarginalizationPrior prior_;
};

struct BaEnergy {
  double energy = 0.0;
  int valid = 0;
  int invalid = 0;
  // [host view - 1][target view - 1]; only the diagonal is ever populated.
  PairTable<int> view_pairs{};
};

// Same-view photometric energy over all ordered keyframe pairs (s, l),
// s != l. Throws WindowTooSmall with fewer than two keyframes.
BaEnergy ba_energy(const KeyframeWindow& window, const RigCalibration& rig,
                   const WindowConfig& cfg);

// Value of the marginalization prior at the current estimates.
double prior_energy(const KeyframeWindow& window);

struct WindowOptimizationStats {
  int iterations = 0;
  double initial_energy = 0.0;  // photometric + prior
  double final_energy = 0.0;
  double last_step_norm = 0.0;
  std::vector<double> history;  // accepted total energies, initial first
};

// Gauss-Newton over every keyframe body pose except the oldest, which fixes
// the gauge. Depths stay fixed. Throws WindowTooSmall or Diverged.
WindowOptimizationStats optimize_window(KeyframeWindow& window, const RigCalibration& rig,
                                        const WindowConfig& cfg);

// Eliminates the oldest keyframe via Schur complement into the prior and
// drops it. Throws WindowNotFull unless the window is at capacity.
void marginalize_oldest(KeyframeWindow& window, const RigCalibration& rig,
                        const WindowConfig& cfg);

bool keyframe_decision(const TrackResult& tr, const WindowConfig& cfg);

struct MarginalSystem {
  Eigen::MatrixXd H;
  Eigen::VectorXd b;
};

// Schur complement of the block [start, start + size) out of (H, b):
// H* = H_rr - H_rm H_mm^+ H_mr, b* = b_r - H_rm H_mm^+ b_m, with the
// result symmetrized and projected onto the PSD cone.
MarginalSystem schur_marginalize(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, int start,
                                 int size);

}  // namespace pdlvo
