#pragma once

#include <array>
#include <vector>

#include "pdlvo/frame.h"
#include "pdlvo/photometric.h"
#include "pdlvo/rig.h"

namespace pdlvo {

struct TrackingConfig {
  double huber = 9.0;           // gamma, intensity units
  int pyramid_levels = 4;       // factor 2 per level
  int max_iterations = 20;      // per level
  double convergence_step = 1e-6;
  int min_valid = 50;
  bool cross_view = true;
  std::vector<int> active_views{1, 2, 3, 4, 5};
  // Jacobians from the keyframe's reference gradient instead of the
  // current image (see tracking_term).
  bool reference_gradient = true;

  void validate() const;
  // Host/target pair (1-based) contributes a residual under this config.
  bool uses_pair(int host_view, int target_view) const;
  bool is_active(int view) const;
};

// Indexed [host_view - 1][target_view - 1].
template <typename T>
using PairTable = std::array<std::array<T, kNumViews>, kNumViews>;

struct EnergyBreakdown {
  double energy = 0.0;
  int valid = 0;
  int invalid = 0;
  // Valid residuals whose target gradient is non-zero.
  int informative = 0;
  PairTable<int> pair_counts{};
  PairTable<double> pair_energy{};
};

// Photometric energy of the keyframe against `frame` for the body motion
// `cur_from_kf`, at pyramid `level`. Throws InsufficientResiduals when the
// valid count drops below cfg.min_valid.
EnergyBreakdown evaluate_energy(const Keyframe& kf, const Frame& frame, const Pose& cur_from_kf,
                                const RigCalibration& rig, const TrackingConfig& cfg,
                                int level = 0);

// Same energy, but every host/target pair pose is supplied explicitly:
// pair_poses[j-1][l-1] = curcam_l_from_kfcam_j. No minimum-count check.
EnergyBreakdown evaluate_energy_pairs(const Keyframe& kf, const Frame& frame,
                                      const PairTable<Pose>& pair_poses,
                                      const RigCalibration& rig, const TrackingConfig& cfg,
                                      int level = 0);

struct TrackResult {
  Pose cur_from_kf;  // keyframe body -> current body
  double energy = 0.0;
  int valid_count = 0;
  PairTable<int> pair_counts{};
  double mean_flow = 0.0;    // pixels, same-view warp of keypoint centres
  double valid_ratio = 0.0;  // host residuals with at least one valid target
  bool converged = false;
  int iterations = 0;
  // Energies of accepted iterates, coarsest level first; each entry starts
  // with the energy at the level's initial pose.
  std::vector<std::vector<double>> energy_history;
};

// Coarse-to-fine Gauss-Newton with Huber reweighting over the single body
// motion; all 25 pair poses follow from the rig extrinsics. Throws
// InsufficientResiduals or Diverged.
TrackResult track_frame(const Keyframe& kf, const Frame& frame, const Pose& init,
                        const RigCalibration& rig, const TrackingConfig& cfg);

}  // namespace pdlvo
