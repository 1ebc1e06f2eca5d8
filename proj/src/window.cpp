#include "pdlvo/window.h"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pdlvo/error.h"
#include "pdlvo/photometric.h"

namespace pdlvo {

namespace {

constexpr double kDivergenceFactor = 4.0;
constexpr int kMaxStepHalvings = 10;
constexpr double kConvergenceStep = 1e-6;

const std::vector<int> kAllViews{1, 2, 3, 4, 5};

struct WindowSystem {
  Eigen::MatrixXd H;
  Eigen::VectorXd b;
  BaEnergy photometric;
  double prior = 0.0;

  double total() const { return photometric.energy + prior; }
};

// Stacked prior deltas for the current estimates, indexed like prior.ids.
Eigen::VectorXd prior_delta(const MarginalizationPrior& prior,
                            const std::deque<Keyframe>& kfs) {
  Eigen::VectorXd delta(static_cast<Eigen::Index>(6 * prior.ids.size()));
  for (size_t i = 0; i < prior.ids.size(); ++i) {
    const Keyframe* match = nullptr;
    for (const auto& kf : kfs) {
      if (kf.id() == prior.ids[i]) match = &kf;
    }
    if (!match) throw Error(ErrorCode::IndexOutOfRange, "prior refers to a keyframe outside the window");
    delta.segment<6>(static_cast<Eigen::Index>(6 * i)) =
        se3_log(match->world_from_body * prior.linearization[i].inverse()).vector();
  }
  return delta;
}

int window_index(const std::deque<Keyframe>& kfs, std::int64_t id) {
  for (size_t i = 0; i < kfs.size(); ++i) {
    if (kfs[i].id() == id) return static_cast<int>(i);
  }
  return -1;
}

// Photometric + prior system over all keyframes in the window (6 per pose).
WindowSystem build_system(const std::deque<Keyframe>& kfs, const MarginalizationPrior& prior,
                          const RigCalibration& rig, const WindowConfig& cfg,
                          bool with_jacobian) {
  const auto n = static_cast<Eigen::Index>(kfs.size());
  WindowSystem sys;
  if (with_jacobian) {
    sys.H = Eigen::MatrixXd::Zero(6 * n, 6 * n);
    sys.b = Eigen::VectorXd::Zero(6 * n);
  }
  for (Eigen::Index s = 0; s < n; ++s) {
    const Keyframe& host = kfs[static_cast<size_t>(s)];
    const auto hosts = host_points(host, rig, kAllViews, 0);
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l == s) continue;
      const Keyframe& target = kfs[static_cast<size_t>(l)];
      for (const auto& hp : hosts) {
        const int j = hp.view;
        auto t = bundle_term(hp.point, hp.intensity, rig.cam_from_body(j), host.world_from_body,
                             target.world_from_body, rig.camera(j), target.frame.image(j, 0),
                             with_jacobian, cfg.reference_gradient ? &hp.gradient : nullptr);
        if (!t) {
          ++sys.photometric.invalid;
          continue;
        }
        ++sys.photometric.valid;
        ++sys.photometric.view_pairs[static_cast<size_t>(j - 1)][static_cast<size_t>(j - 1)];
        sys.photometric.energy += huber_cost(t->residual, cfg.huber);
        if (with_jacobian) {
          const double w = huber_weight(t->residual, cfg.huber);
          const Mat6 a = w * t->jacobian_host.transpose() * t->jacobian_host;
          const Vec6 g = w * t->residual * t->jacobian_host.transpose();
          sys.H.block<6, 6>(6 * s, 6 * s) += a;
          sys.H.block<6, 6>(6 * l, 6 * l) += a;
          sys.H.block<6, 6>(6 * s, 6 * l) -= a;
          sys.H.block<6, 6>(6 * l, 6 * s) -= a;
          sys.b.segment<6>(6 * s) += g;
          sys.b.segment<6>(6 * l) -= g;
        }
      }
    }
  }
  if (!prior.empty()) {
    const Eigen::VectorXd delta = prior_delta(prior, kfs);
    sys.prior = 2.0 * prior.b.dot(delta) + delta.dot(prior.H * delta);
    if (with_jacobian) {
      const Eigen::VectorXd grad = prior.b + prior.H * delta;
      for (size_t a = 0; a < prior.ids.size(); ++a) {
        const int ia = window_index(kfs, prior.ids[a]);
        sys.b.segment<6>(6 * ia) += grad.segment<6>(static_cast<Eigen::Index>(6 * a));
        for (size_t c = 0; c < prior.ids.size(); ++c) {
          const int ic = window_index(kfs, prior.ids[c]);
          sys.H.block<6, 6>(6 * ia, 6 * ic) +=
              prior.H.block<6, 6>(static_cast<Eigen::Index>(6 * a), static_cast<Eigen::Index>(6 * c));
        }
      }
    }
  }
  return sys;
}

void require_pairs(const KeyframeWindow& window) {
  if (window.size() < 2) {
    throw Error(ErrorCode::WindowTooSmall,
                "window holds " + std::to_string(window.size()) + " keyframe(s), need 2");
  }
}

}  // namespace

void WindowConfig::validate() const {
  if (!(huber > 0) || max_iterations < 1 || !(flow_threshold > 0) || !(min_ratio > 0)) {
    throw Error(ErrorCode::ParseError, "window config: thresholds must be positive");
  }
}

KeyframeWindow::KeyframeWindow(int max_size) : max_size_(max_size) {
  if (max_size < kMinCapacity) {
    throw Error(ErrorCode::IndexOutOfRange,
                "window capacity " + std::to_string(max_size) + " below minimum of 5");
  }
}

void KeyframeWindow::add(Keyframe kf) {
  if (full()) throw Error(ErrorCode::IndexOutOfRange, "keyframe window is full");
  keyframes_.push_back(std::move(kf));
}

BaEnergy ba_energy(const KeyframeWindow& window, const RigCalibration& rig,
                   const WindowConfig& cfg) {
  require_pairs(window);
  return build_system(window.keyframes(), MarginalizationPrior{}, rig, cfg, false).photometric;
}

double prior_energy(const KeyframeWindow& window) {
  const auto& prior = window.prior();
  if (prior.empty()) return 0.0;
  const Eigen::VectorXd delta = prior_delta(prior, window.keyframes());
  return 2.0 * prior.b.dot(delta) + delta.dot(prior.H * delta);
}

WindowOptimizationStats optimize_window(KeyframeWindow& window, const RigCalibration& rig,
                                        const WindowConfig& cfg) {
  require_pairs(window);
  cfg.validate();
  auto& kfs = window.keyframes();
  const auto n = static_cast<Eigen::Index>(kfs.size());
  const Eigen::Index free = 6 * (n - 1);

  WindowSystem sys = build_system(kfs, window.prior(), rig, cfg, true);
  WindowOptimizationStats stats;
  stats.initial_energy = sys.total();
  stats.history.push_back(sys.total());

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Eigen::MatrixXd Hf = sys.H.bottomRightCorner(free, free);
    const Eigen::VectorXd bf = sys.b.tail(free);
    const double damping = 1e-9 * std::max(Hf.diagonal().maxCoeff(), 1e-12);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hf + damping * Eigen::MatrixXd::Identity(free, free));
    const Eigen::VectorXd delta = ldlt.solve(-bf);
    ++stats.iterations;
    if (ldlt.info() != Eigen::Success || !delta.allFinite()) break;

    double alpha = 1.0;
    bool accepted = false;
    std::vector<Pose> saved;
    for (const auto& kf : kfs) saved.push_back(kf.world_from_body);
    for (int halving = 0; halving <= kMaxStepHalvings; ++halving, alpha *= 0.5) {
      for (Eigen::Index i = 1; i < n; ++i) {
        const Vec6 step = alpha * delta.segment<6>(6 * (i - 1));
        kfs[static_cast<size_t>(i)].world_from_body =
            (se3_exp(step) * saved[static_cast<size_t>(i)]).renormalized();
      }
      WindowSystem next = build_system(kfs, window.prior(), rig, cfg, true);
      if (next.total() <= sys.total()) {
        sys = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      for (size_t i = 0; i < kfs.size(); ++i) kfs[i].world_from_body = saved[i];
      stats.last_step_norm = 0.0;
      break;
    }
    stats.last_step_norm = alpha * delta.norm();
    stats.history.push_back(sys.total());
    if (stats.last_step_norm < kConvergenceStep) break;
  }
  stats.final_energy = sys.total();
  if (stats.initial_energy > 0 && stats.final_energy > kDivergenceFactor * stats.initial_energy) {
    std::ostringstream os;
    os << "window energy " << stats.final_energy << " exceeds " << kDivergenceFactor
       << "x initial " << stats.initial_energy;
    throw Error(ErrorCode::Diverged, os.str());
  }
  return stats;
}

MarginalSystem schur_marginalize(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, int start,
                                 int size) {
  const Eigen::Index n = H.rows();
  const Eigen::Index keep = n - size;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < start || i >= start + size) kept.push_back(i);
  }
  Eigen::MatrixXd Hrr(keep, keep), Hrm(keep, size);
  Eigen::VectorXd br(keep);
  for (Eigen::Index r = 0; r < keep; ++r) {
    br(r) = b(kept[static_cast<size_t>(r)]);
    for (Eigen::Index c = 0; c < keep; ++c) Hrr(r, c) = H(kept[static_cast<size_t>(r)], kept[static_cast<size_t>(c)]);
    Hrm.row(r) = H.block(kept[static_cast<size_t>(r)], start, 1, size);
  }
  Eigen::MatrixXd Hmm = H.block(start, start, size, size);
  Hmm = 0.5 * (Hmm + Hmm.transpose()).eval();
  const Eigen::VectorXd bm = b.segment(start, size);

  // Pseudo-inverse of the marginalized block; null directions carry no
  // information and are dropped.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hmm);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cutoff = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv_ev(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv_ev(i) = ev(i) > cutoff ? 1.0 / ev(i) : 0.0;
  const Eigen::MatrixXd Hmm_inv = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();

  MarginalSystem out;
  out.H = Hrr - Hrm * Hmm_inv * Hrm.transpose();
  out.b = br - Hrm * Hmm_inv * bm;
  out.H = 0.5 * (out.H + out.H.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(out.H);
  if (check.eigenvalues().minCoeff() < 0.0) {
    const Eigen::VectorXd clamped = check.eigenvalues().cwiseMax(0.0);
    out.H = check.eigenvectors() * clamped.asDiagonal() * check.eigenvectors().transpose();
    out.H = 0.5 * (out.H + out.H.transpose()).eval();
  }
  return out;
}

void marginalize_oldest(KeyframeWindow& window, const RigCalibration& rig,
                        const WindowConfig& cfg) {
  if (!window.full()) {
    throw Error(ErrorCode::WindowNotFull, "window holds " + std::to_string(window.size()) +
                                              " of " + std::to_string(window.max_size()) +
                                              " keyframes");
  }
  auto& kfs = window.keyframes();
  const WindowSystem sys = build_system(kfs, window.prior(), rig, cfg, true);
  MarginalSystem marg = schur_marginalize(sys.H, sys.b, 0, 6);

  MarginalizationPrior prior;
  for (size_t i = 1; i < kfs.size(); ++i) {
    prior.ids.push_back(kfs[i].id());
    prior.linearization.push_back(kfs[i].world_from_body);
  }
  prior.H = std::move(marg.H);
  prior.b = std::move(marg.b);
  window.prior() = std::move(prior);
  kfs.pop_front();
}

bool keyframe_decision(const TrackResult& tr, const WindowConfig& cfg) {
  return tr.mean_flow > cfg.flow_threshold || tr.valid_ratio < cfg.min_ratio;
}

}  // namespace pdlvo
