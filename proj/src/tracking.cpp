#include "pdlvo/tracking.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "pdlvo/error.h"

namespace pdlvo {

namespace {

constexpr double kInformativeGradient = 1e-6;
constexpr double kDivergenceFactor = 4.0;
constexpr int kMaxStepHalvings = 10;

struct LevelSystem {
  Mat6 H = Mat6::Zero();
  Vec6 b = Vec6::Zero();
  EnergyBreakdown e;
};

struct TargetView {
  int view;
  Pose target_from_body;
  CameraModel cam;
  const Image* img;
};

// Accumulates energy and (optionally) the IRLS normal equations at one
// level. `any_valid`, when given, receives per-host "has a valid target".
LevelSystem accumulate(const std::vector<HostPoint>& hosts, const Frame& frame, int level,
                       const Pose& cur_from_kf, const RigCalibration& rig,
                       const TrackingConfig& cfg, bool with_jacobian,
                       std::vector<char>* any_valid = nullptr) {
  LevelSystem sys;
  std::array<Pose, kNumViews> cur_from_host;
  for (int v = 1; v <= kNumViews; ++v) {
    cur_from_host[static_cast<size_t>(v - 1)] = cur_from_kf * rig.body_from_cam(v);
  }
  std::vector<TargetView> targets;
  for (int v : cfg.active_views) {
    targets.push_back({v, rig.cam_from_body(v), rig.camera(v).downscaled(level),
                       &frame.image(v, level)});
  }
  if (any_valid) any_valid->assign(hosts.size(), 0);

  for (size_t h = 0; h < hosts.size(); ++h) {
    const HostPoint& hp = hosts[h];
    for (const auto& tv : targets) {
      if (!cfg.uses_pair(hp.view, tv.view)) continue;
      // Host-side pose folded into the body motion; the Jacobian only
      // depends on the point in the current body frame.
      auto t = tracking_term(hp.point, hp.intensity, cur_from_host[static_cast<size_t>(hp.view - 1)],
                             Pose::identity(), tv.target_from_body, tv.cam, *tv.img, with_jacobian,
                             cfg.reference_gradient ? &hp.gradient : nullptr);
      if (!t) {
        ++sys.e.invalid;
        continue;
      }
      const double cost = huber_cost(t->residual, cfg.huber);
      ++sys.e.valid;
      ++sys.e.pair_counts[static_cast<size_t>(hp.view - 1)][static_cast<size_t>(tv.view - 1)];
      sys.e.pair_energy[static_cast<size_t>(hp.view - 1)][static_cast<size_t>(tv.view - 1)] += cost;
      sys.e.energy += cost;
      if (t->gradient_norm > kInformativeGradient) ++sys.e.informative;
      if (any_valid) (*any_valid)[h] = 1;
      if (with_jacobian) {
        const double w = huber_weight(t->residual, cfg.huber);
        sys.H.noalias() += w * t->jacobian.transpose() * t->jacobian;
        sys.b.noalias() += w * t->residual * t->jacobian.transpose();
      }
    }
  }
  return sys;
}

bool usable(const EnergyBreakdown& e, const TrackingConfig& cfg) {
  return e.valid >= cfg.min_valid && e.informative >= cfg.min_valid;
}

std::optional<Vec6> solve_step(const Mat6& H, const Vec6& b) {
  const double damping = 1e-9 * std::max(H.diagonal().maxCoeff(), 1e-12);
  const Mat6 Hd = H + damping * Mat6::Identity();
  Eigen::LDLT<Mat6> ldlt(Hd);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Vec6 delta = ldlt.solve(-b);
  if (!delta.allFinite()) return std::nullopt;
  return delta;
}

double mean_same_view_flow(const Keyframe& kf, const Pose& cur_from_kf, const RigCalibration& rig,
                           const TrackingConfig& cfg) {
  double sum = 0.0;
  int n = 0;
  for (int v : cfg.active_views) {
    const Pose pair = chain_tracking(rig, cur_from_kf, v, v);
    const CameraModel& cam = rig.camera(v);
    for (const auto& kp : kf.keypoints[static_cast<size_t>(v - 1)]) {
      if (auto px = try_warp_pixel(cam, cam, pair, kp.pixel, kp.depth)) {
        sum += (px->vec() - kp.pixel.vec()).norm();
        ++n;
      }
    }
  }
  return n ? sum / n : 0.0;
}

}  // namespace

void TrackingConfig::validate() const {
  std::ostringstream why;
  if (!(huber > 0)) why << "huber threshold must be positive; ";
  if (pyramid_levels < 1) why << "pyramid levels must be >= 1; ";
  if (max_iterations < 1) why << "max iterations must be >= 1; ";
  if (active_views.empty()) why << "active view set is empty; ";
  for (int v : active_views) {
    if (v < 1 || v > kNumViews) why << "active view " << v << " out of range; ";
  }
  if (!why.str().empty()) throw Error(ErrorCode::ParseError, "tracking config: " + why.str());
}

bool TrackingConfig::is_active(int view) const {
  return std::find(active_views.begin(), active_views.end(), view) != active_views.end();
}

bool TrackingConfig::uses_pair(int host_view, int target_view) const {
  if (!is_active(host_view) || !is_active(target_view)) return false;
  return cross_view || host_view == target_view;
}

EnergyBreakdown evaluate_energy(const Keyframe& kf, const Frame& frame, const Pose& cur_from_kf,
                                const RigCalibration& rig, const TrackingConfig& cfg, int level) {
  const auto hosts = host_points(kf, rig, cfg.active_views, level);
  LevelSystem sys = accumulate(hosts, frame, level, cur_from_kf, rig, cfg, false);
  if (sys.e.valid < cfg.min_valid) {
    throw Error(ErrorCode::InsufficientResiduals,
                "only " + std::to_string(sys.e.valid) + " valid residuals (need " +
                    std::to_string(cfg.min_valid) + ")");
  }
  return sys.e;
}

EnergyBreakdown evaluate_energy_pairs(const Keyframe& kf, const Frame& frame,
                                      const PairTable<Pose>& pair_poses,
                                      const RigCalibration& rig, const TrackingConfig& cfg,
                                      int level) {
  EnergyBreakdown e;
  const auto hosts = host_points(kf, rig, cfg.active_views, level);
  for (const auto& hp : hosts) {
    for (int l : cfg.active_views) {
      if (!cfg.uses_pair(hp.view, l)) continue;
      const size_t j = static_cast<size_t>(hp.view - 1), li = static_cast<size_t>(l - 1);
      const CameraModel cam = rig.camera(l).downscaled(level);
      auto px = try_project(cam, pair_poses[j][li] * hp.point);
      std::optional<Sample> s;
      if (px) s = try_sample_bilinear(frame.image(l, level), *px);
      if (!s) {
        ++e.invalid;
        continue;
      }
      const double cost = huber_cost(hp.intensity - s->intensity, cfg.huber);
      ++e.valid;
      ++e.pair_counts[j][li];
      e.pair_energy[j][li] += cost;
      e.energy += cost;
      if (s->gradient.norm() > kInformativeGradient) ++e.informative;
    }
  }
  return e;
}

TrackResult track_frame(const Keyframe& kf, const Frame& frame, const Pose& init,
                        const RigCalibration& rig, const TrackingConfig& cfg) {
  cfg.validate();
  int levels = cfg.pyramid_levels;
  for (int v : cfg.active_views) {
    levels = std::min({levels, kf.frame.images[static_cast<size_t>(v - 1)].levels(),
                       frame.images[static_cast<size_t>(v - 1)].levels()});
  }

  TrackResult result;
  Pose pose = init;

  const auto finest_hosts = host_points(kf, rig, cfg.active_views, 0);
  const LevelSystem initial_finest = accumulate(finest_hosts, frame, 0, init, rig, cfg, false);

  for (int level = levels - 1; level >= 0; --level) {
    const auto hosts = level == 0 ? finest_hosts : host_points(kf, rig, cfg.active_views, level);
    LevelSystem sys = accumulate(hosts, frame, level, pose, rig, cfg, true);
    if (!usable(sys.e, cfg)) {
      if (level > 0) continue;
      throw Error(ErrorCode::InsufficientResiduals,
                  "frame " + std::to_string(frame.id) + ": " + std::to_string(sys.e.valid) +
                      " valid / " + std::to_string(sys.e.informative) +
                      " informative residuals (need " + std::to_string(cfg.min_valid) + ")");
    }
    std::vector<double> history{sys.e.energy};
    bool level_converged = false;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      auto delta = solve_step(sys.H, sys.b);
      if (!delta) break;
      double alpha = 1.0;
      bool accepted = false;
      for (int halving = 0; halving <= kMaxStepHalvings; ++halving, alpha *= 0.5) {
        const Pose candidate = (se3_exp(Vec6(alpha * *delta)) * pose).renormalized();
        LevelSystem next = accumulate(hosts, frame, level, candidate, rig, cfg, true);
        if (usable(next.e, cfg) && next.e.energy <= sys.e.energy) {
          pose = candidate;
          sys = std::move(next);
          accepted = true;
          break;
        }
      }
      ++result.iterations;
      if (!accepted) {
        level_converged = true;  // no descent direction left at this level
        break;
      }
      history.push_back(sys.e.energy);
      if ((alpha * *delta).norm() < cfg.convergence_step) {
        level_converged = true;
        break;
      }
    }
    result.energy_history.push_back(std::move(history));
    if (level == 0) result.converged = level_converged;
  }

  std::vector<char> any_valid;
  const LevelSystem final_sys = accumulate(finest_hosts, frame, 0, pose, rig, cfg, false, &any_valid);
  if (!usable(final_sys.e, cfg)) {
    throw Error(ErrorCode::InsufficientResiduals,
                "frame " + std::to_string(frame.id) + ": residuals lost during optimization");
  }
  if (initial_finest.e.valid > 0 &&
      final_sys.e.energy > kDivergenceFactor * initial_finest.e.energy) {
    std::ostringstream os;
    os << "frame " << frame.id << ": energy " << final_sys.e.energy << " exceeds "
       << kDivergenceFactor << "x initial " << initial_finest.e.energy;
    throw Error(ErrorCode::Diverged, os.str());
  }

  result.cur_from_kf = pose;
  result.energy = final_sys.e.energy;
  result.valid_count = final_sys.e.valid;
  result.pair_counts = final_sys.e.pair_counts;
  const auto tracked = std::count(any_valid.begin(), any_valid.end(), 1);
  result.valid_ratio = finest_hosts.empty() ? 0.0 : double(tracked) / double(finest_hosts.size());
  result.mean_flow = mean_same_view_flow(kf, pose, rig, cfg);
  return result;
}

}  // namespace pdlvo
