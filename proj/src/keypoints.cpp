#include "pdlvo/keypoints.h"

#include <algorithm>
#include <array>
#include <cmath>

namespace pdlvo {

double gradient_magnitude(const Image& img, int x, int y) {
  const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width() - 1);
  const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height() - 1);
  const double gx = (img(xp, y) - img(xm, y)) / std::max(xp - xm, 1);
  const double gy = (img(x, yp) - img(x, ym)) / std::max(yp - ym, 1);
  return std::sqrt(gx * gx + gy * gy);
}

double block_threshold(const Image& img, int block_x, int block_y, const KeypointConfig& cfg) {
  const int x0 = block_x * cfg.block_size, y0 = block_y * cfg.block_size;
  const int x1 = std::min(x0 + cfg.block_size, img.width());
  const int y1 = std::min(y0 + cfg.block_size, img.height());
  std::vector<double> mags;
  mags.reserve(static_cast<size_t>(cfg.block_size) * cfg.block_size);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) mags.push_back(gradient_magnitude(img, x, y));
  if (mags.empty()) return cfg.gradient_offset;
  auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  return *mid + cfg.gradient_offset;
}

bool depth_supported(const SparseDepthMap& depth, const Pixel& px, double assigned,
                     const KeypointConfig& cfg) {
  if (cfg.depth_consistency <= 0) return true;
  bool left = false, right = false, up = false, down = false;
  for (const auto& s : depth_neighbors(depth, px, cfg.support_radius)) {
    if (std::abs(s.depth - assigned) > cfg.depth_consistency * assigned) return false;
    left |= s.pixel.u <= px.u;
    right |= s.pixel.u >= px.u;
    up |= s.pixel.v <= px.v;
    down |= s.pixel.v >= px.v;
  }
  return left && right && up && down;
}

Image median3(const Image& img) {
  Image out(img.width(), img.height());
  std::array<double, 9> win{};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      size_t n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          win[n++] = img(std::clamp(x + dx, 0, img.width() - 1), std::clamp(y + dy, 0, img.height() - 1));
      std::nth_element(win.begin(), win.begin() + 4, win.end());
      out(x, y) = win[4];
    }
  }
  return out;
}

std::vector<Keypoint> select_keypoints(const Image& raw, const SparseDepthMap& depth,
                                       const KeypointConfig& cfg) {
  const Image filtered = cfg.median_prefilter ? median3(raw) : Image();
  const Image& img = cfg.median_prefilter ? filtered : raw;
  struct Candidate {
    double mag;
    int x, y;
    double depth;
  };
  std::vector<Candidate> picked;
  const int bw = (img.width() + cfg.block_size - 1) / cfg.block_size;
  const int bh = (img.height() + cfg.block_size - 1) / cfg.block_size;
  std::vector<Candidate> cands;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const double thresh = block_threshold(img, bx, by, cfg);
      const int x0 = std::max(bx * cfg.block_size, kKeypointMargin);
      const int y0 = std::max(by * cfg.block_size, kKeypointMargin);
      const int x1 = std::min((bx + 1) * cfg.block_size, img.width() - kKeypointMargin - 1);
      const int y1 = std::min((by + 1) * cfg.block_size, img.height() - kKeypointMargin - 1);
      cands.clear();
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double m = gradient_magnitude(img, x, y);
          if (m >= thresh) cands.push_back({m, x, y, 0.0});
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return a.mag != b.mag ? a.mag > b.mag : (a.y != b.y ? a.y < b.y : a.x < b.x);
      });
      for (auto& c : cands) {
        const Pixel px{double(c.x), double(c.y)};
        auto d = depth_lookup(depth, px, cfg.depth_radius);
        if (d && depth_supported(depth, px, *d, cfg)) {
          c.depth = *d;
          picked.push_back(c);
          break;
        }
      }
    }
  }
  if (static_cast<int>(picked.size()) > cfg.max_points) {
    std::stable_sort(picked.begin(), picked.end(),
                     [](const Candidate& a, const Candidate& b) { return a.mag > b.mag; });
    picked.resize(static_cast<size_t>(std::max(cfg.max_points, 0)));
  }
  std::vector<Keypoint> out;
  out.reserve(picked.size());
  for (const auto& c : picked) {
    Keypoint kp;
    kp.view = depth.view();
    kp.pixel = Pixel{double(c.x), double(c.y)};
    kp.depth = c.depth;
    for (int i = 0; i < kPatternSize; ++i) {
      kp.pattern[static_cast<size_t>(i)] =
          raw(c.x + kPattern[static_cast<size_t>(i)][0], c.y + kPattern[static_cast<size_t>(i)][1]);
    }
    out.push_back(kp);
  }
  return out;
}

}  // namespace pdlvo
