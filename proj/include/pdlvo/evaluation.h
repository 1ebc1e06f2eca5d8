#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pdlvo/geometry.h"

namespace pdlvo {

struct StampedPose {
  double timestamp = 0.0;
  Pose world_from_body;
};

// Timestamps strictly increasing. Construction from a list validates this
// (NonMonotoneTimestamps); an empty trajectory is allowed only as a
// partial result.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<StampedPose> poses);

  // Throws NonMonotoneTimestamps if t is not after the last stamp.
  void push_back(double t, const Pose& world_from_body);

  const std::vector<StampedPose>& poses() const { return poses_; }
  size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const StampedPose& operator[](size_t i) const { return poses_[i]; }

  double path_length() const;

 private:
  std::vector<StampedPose> poses_;
};

// "t tx ty tz qx qy qz qw" per line, '#' comments and blank lines ignored.
Trajectory load_trajectory(const std::filesystem::path& path);
Trajectory parse_trajectory(const std::string& text, const std::string& origin = "<string>");
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);
std::string format_trajectory(const Trajectory& traj);

inline constexpr double kDefaultAssociationTolerance = 0.02;

// (estimated position, ground-truth position) for each estimated stamp whose
// nearest ground-truth stamp is within `tolerance`. Throws NoAssociations.
std::vector<std::pair<Vec3, Vec3>> associate(const Trajectory& est, const Trajectory& gt,
                                             double tolerance = kDefaultAssociationTolerance);

// Rigid gt_from_est minimizing sum |R p_est + t - p_gt|^2 (no scale).
// Throws DegenerateAlignment for fewer than 3 pairs or collinear positions.
Pose umeyama_align(const std::vector<std::pair<Vec3, Vec3>>& pairs);
Pose umeyama_align(const Trajectory& est, const Trajectory& gt,
                   double tolerance = kDefaultAssociationTolerance);

double ate_rmse(const Trajectory& est, const Trajectory& gt,
                double tolerance = kDefaultAssociationTolerance);

// Top-down (x/z) plot of the aligned estimate over the ground truth.
std::string svg_plot(const Trajectory& est, const Trajectory& gt,
                     double tolerance = kDefaultAssociationTolerance);

}  // namespace pdlvo
