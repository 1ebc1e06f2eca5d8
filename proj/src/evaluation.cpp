#include "pdlvo/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>

#include "pdlvo/error.h"

namespace pdlvo {

Trajectory::Trajectory(std::vector<StampedPose> poses) {
  for (const auto& p : poses) push_back(p.timestamp, p.world_from_body);
}

void Trajectory::push_back(double t, const Pose& world_from_body) {
  if (!poses_.empty() && !(t > poses_.back().timestamp)) {
    std::ostringstream os;
    os << "timestamp " << t << " does not follow " << poses_.back().timestamp;
    throw Error(ErrorCode::NonMonotoneTimestamps, os.str());
  }
  poses_.push_back({t, world_from_body});
}

double Trajectory::path_length() const {
  double len = 0.0;
  for (size_t i = 1; i < poses_.size(); ++i) {
    len += (poses_[i].world_from_body.translation() - poses_[i - 1].world_from_body.translation()).norm();
  }
  return len;
}

Trajectory parse_trajectory(const std::string& text, const std::string& origin) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) {
        throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(lineno) + ": expected 8 numbers");
      }
    }
    std::string extra;
    if (ls >> extra) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(lineno) + ": trailing data '" + extra + "'");
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-9)) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(lineno) + ": zero quaternion");
    }
    q.normalize();
    traj.push_back(v[0], Pose(q.toRotationMatrix(), Vec3(v[1], v[2], v[3])));
  }
  return traj;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trajectory(ss.str(), path.string());
}

std::string format_trajectory(const Trajectory& traj) {
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  char buf[256];
  for (const auto& p : traj.poses()) {
    const Eigen::Quaterniond q(p.world_from_body.rotation());
    const Vec3& t = p.world_from_body.translation();
    std::snprintf(buf, sizeof buf, "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", p.timestamp, t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out += buf;
  }
  return out;
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << format_trajectory(traj);
}

std::vector<std::pair<Vec3, Vec3>> associate(const Trajectory& est, const Trajectory& gt,
                                             double tolerance) {
  std::vector<std::pair<Vec3, Vec3>> pairs;
  const auto& g = gt.poses();
  for (const auto& e : est.poses()) {
    auto it = std::lower_bound(g.begin(), g.end(), e.timestamp,
                               [](const StampedPose& p, double t) { return p.timestamp < t; });
    const StampedPose* best = nullptr;
    double best_dt = tolerance;
    for (auto c : {it, it == g.begin() ? g.end() : std::prev(it)}) {
      if (c == g.end()) continue;
      const double dt = std::abs(c->timestamp - e.timestamp);
      if (dt <= best_dt) {
        best_dt = dt;
        best = &*c;
      }
    }
    if (best) pairs.emplace_back(e.world_from_body.translation(), best->world_from_body.translation());
  }
  if (pairs.empty()) throw Error(ErrorCode::NoAssociations, "no timestamps within tolerance");
  return pairs;
}

Pose umeyama_align(const std::vector<std::pair<Vec3, Vec3>>& pairs) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  if (n < 3) {
    throw Error(ErrorCode::DegenerateAlignment, "alignment needs at least 3 pairs, got " + std::to_string(n));
  }
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = pairs[static_cast<size_t>(i)].first;
    dst.col(i) = pairs[static_cast<size_t>(i)].second;
  }
  const Vec3 mu_src = src.rowwise().mean();
  const Vec3 mu_dst = dst.rowwise().mean();
  src.colwise() -= mu_src;
  dst.colwise() -= mu_dst;

  // Collinear (or coincident) source positions leave a free rotation.
  const Vec3 spread = Eigen::JacobiSVD<Eigen::Matrix3Xd>(src).singularValues();
  if (!(spread(1) > 1e-9 * std::max(1.0, spread(0)))) {
    throw Error(ErrorCode::DegenerateAlignment, "positions are collinear");
  }

  const Mat3 cov = dst * src.transpose() / static_cast<double>(n);
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) s(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * s * svd.matrixV().transpose();
  return Pose(r, mu_dst - r * mu_src);
}

Pose umeyama_align(const Trajectory& est, const Trajectory& gt, double tolerance) {
  return umeyama_align(associate(est, gt, tolerance));
}

double ate_rmse(const Trajectory& est, const Trajectory& gt, double tolerance) {
  const auto pairs = associate(est, gt, tolerance);
  const Pose gt_from_est = umeyama_align(pairs);
  double sum = 0.0;
  for (const auto& [p, q] : pairs) sum += (gt_from_est * p - q).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

std::string svg_plot(const Trajectory& est, const Trajectory& gt, double tolerance) {
  Pose align;
  try {
    align = umeyama_align(est, gt, tolerance);
  } catch (const Error&) {
    // Too short or straight to align: plot raw.
  }
  std::vector<Vec2> e, g;
  for (const auto& p : est.poses()) {
    const Vec3 x = align * p.world_from_body.translation();
    e.emplace_back(x.x(), x.z());
  }
  for (const auto& p : gt.poses()) g.emplace_back(p.world_from_body.translation().x(), p.world_from_body.translation().z());

  Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
  for (const auto* pts : {&e, &g}) {
    for (const auto& p : *pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  }
  if (e.empty() && g.empty()) lo = hi = Vec2::Zero();
  const double size = 600.0, margin = 20.0;
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-3});
  const double scale = (size - 2 * margin) / span;
  auto polyline = [&](const std::vector<Vec2>& pts, const char* color) {
    std::ostringstream os;
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) {
      // SVG y grows downward; world z forward is drawn upward.
      os << margin + (p.x() - lo.x()) * scale << ',' << size - margin - (p.y() - lo.y()) * scale << ' ';
    }
    os << "\"/>\n";
    return os.str();
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << polyline(g, "black") << polyline(e, "red")
      << "  <text x=\"10\" y=\"15\" font-size=\"12\">black: ground truth, red: estimate (aligned)</text>\n"
      << "</svg>\n";
  return svg.str();
}

}  // namespace pdlvo
