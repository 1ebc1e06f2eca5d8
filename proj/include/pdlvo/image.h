#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pdlvo/geometry.h"

namespace pdlvo {

// Grayscale image, row-major, intensities kept as doubles (0-255 range for
// data loaded from 8-bit files).
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  double operator()(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  double& operator()(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  // 2x2 box average; odd trailing rows/columns are dropped.
  Image half_sampled() const;

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct Sample {
  double intensity = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

// Bilinear intensity and the derivative of the bilinear surface at (u, v).
// Valid region is [1, w-2] x [1, h-2]; throws OutOfBounds elsewhere.
Sample sample_bilinear(const Image& img, const Pixel& px);
std::optional<Sample> try_sample_bilinear(const Image& img, const Pixel& px);
bool in_sampling_region(const Image& img, const Pixel& px);

// Level 0 is the input image; level i+1 is the 2x2 average of level i.
class ImagePyramid {
 public:
  ImagePyramid() = default;
  ImagePyramid(Image base, int levels);

  int levels() const { return static_cast<int>(levels_.size()); }
  const Image& level(int i) const { return levels_.at(static_cast<size_t>(i)); }

 private:
  std::vector<Image> levels_;
};

// Binary 8-bit PGM ("P5", maxval <= 255). Other magics raise ParseError.
Image load_pgm(const std::filesystem::path& path);
// Values are rounded and clamped to [0, 255].
void save_pgm(const Image& img, const std::filesystem::path& path);

}  // namespace pdlvo
