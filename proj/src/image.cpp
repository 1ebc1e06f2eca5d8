#include "pdlvo/image.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pdlvo/error.h"

namespace pdlvo {

Image::Image(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<size_t>(std::max(width, 0)) * static_cast<size_t>(std::max(height, 0)), fill) {}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != static_cast<size_t>(width) * static_cast<size_t>(height)) {
    throw Error(ErrorCode::ParseError, "image buffer length does not match width x height");
  }
}

Image Image::half_sampled() const {
  const int w = width_ / 2;
  const int h = height_ / 2;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = 0.25 * ((*this)(2 * x, 2 * y) + (*this)(2 * x + 1, 2 * y) +
                          (*this)(2 * x, 2 * y + 1) + (*this)(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

bool in_sampling_region(const Image& img, const Pixel& px) {
  return px.u >= 1.0 && px.v >= 1.0 && px.u <= img.width() - 2.0 && px.v <= img.height() - 2.0;
}

std::optional<Sample> try_sample_bilinear(const Image& img, const Pixel& px) {
  if (!in_sampling_region(img, px)) return std::nullopt;
  const int x0 = std::min(static_cast<int>(px.u), img.width() - 2);
  const int y0 = std::min(static_cast<int>(px.v), img.height() - 2);
  const double ax = px.u - x0;
  const double ay = px.v - y0;
  const double i00 = img(x0, y0);
  const double i10 = img(x0 + 1, y0);
  const double i01 = img(x0, y0 + 1);
  const double i11 = img(x0 + 1, y0 + 1);
  const double top = i00 + ax * (i10 - i00);
  const double bottom = i01 + ax * (i11 - i01);
  Sample s;
  s.intensity = top + ay * (bottom - top);
  s.gradient.x() = (1.0 - ay) * (i10 - i00) + ay * (i11 - i01);
  s.gradient.y() = bottom - top;
  return s;
}

Sample sample_bilinear(const Image& img, const Pixel& px) {
  auto s = try_sample_bilinear(img, px);
  if (!s) {
    std::ostringstream os;
    os << "sample at (" << px.u << ", " << px.v << ") outside " << img.width() << "x"
       << img.height() << " image";
    throw Error(ErrorCode::OutOfBounds, os.str());
  }
  return *s;
}

ImagePyramid::ImagePyramid(Image base, int levels) {
  levels_.reserve(static_cast<size_t>(std::max(levels, 1)));
  levels_.push_back(std::move(base));
  for (int i = 1; i < levels; ++i) {
    levels_.push_back(levels_.back().half_sampled());
  }
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

}  // namespace

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5") {
    throw Error(ErrorCode::ParseError, path.string() + ": unsupported magic '" + magic + "'");
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::ParseError, path.string() + ": unsupported PGM dimensions or maxval");
  }
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::ParseError, path.string() + ": truncated PGM raster");
  }
  std::vector<double> data(raw.begin(), raw.end());
  return Image(w, h, std::move(data));
}

void save_pgm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.data().size());
  std::transform(img.data().begin(), img.data().end(), raw.begin(), [](double v) {
    return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
  });
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace pdlvo
