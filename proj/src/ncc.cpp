#include "facetrack/ncc.hpp"

#include <algorithm>
#include <cmath>

namespace facetrack {

NccTemplate::NccTemplate(const GrayImage& source, const BoundingBox& region)
    : width_(region.w), height_(region.h), centered_(static_cast<std::size_t>(region.area())) {
  double sum = 0.0;
  for (int y = 0; y < region.h; ++y) {
    for (int x = 0; x < region.w; ++x) {
      const float v = source(region.x + x, region.y + y);
      centered_[static_cast<std::size_t>(y) * width_ + x] = v;
      sum += v;
    }
  }
  const double mean = sum / static_cast<double>(centered_.size());
  double sq = 0.0;
  for (float& v : centered_) {
    v = static_cast<float>(v - mean);
    sq += static_cast<double>(v) * v;
  }
  norm_ = std::sqrt(sq);
}

double NccTemplate::score_at(const GrayImage& image, int x, int y) const {
  if (norm_ <= 1e-9) return 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double cross = 0.0;
  for (int row = 0; row < height_; ++row) {
    const float* src = image.values.data() + static_cast<std::size_t>(y + row) * image.width + x;
    const float* tpl = centered_.data() + static_cast<std::size_t>(row) * width_;
    for (int col = 0; col < width_; ++col) {
      const double v = src[col];
      sum += v;
      sum_sq += v * v;
      cross += v * tpl[col];
    }
  }
  const double n = static_cast<double>(centered_.size());
  const double var_sum = sum_sq - sum * sum / n;
  if (var_sum <= 1e-9) return 0.0;
  // The template is zero-mean, so the window mean drops out of the cross term.
  return std::clamp(cross / (std::sqrt(var_sum) * norm_), -1.0, 1.0);
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, src - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, s - lo};
  }
  return taps;
}

// Exact when a == b, so constant images stay constant.
double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

GrayImage resize_bilinear(const GrayImage& image, int width, int height) {
  if (image.width == width && image.height == height) return image;
  const auto xs = make_taps(image.width, width);
  const auto ys = make_taps(image.height, height);
  GrayImage out{width, height, std::vector<float>(static_cast<std::size_t>(width) * height)};
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      const double top = lerp(image(tx.lo, ty.lo), image(tx.hi, ty.lo), tx.frac);
      const double bottom = lerp(image(tx.lo, ty.hi), image(tx.hi, ty.hi), tx.frac);
      out.values[static_cast<std::size_t>(y) * width + x] = static_cast<float>(lerp(top, bottom, ty.frac));
    }
  }
  return out;
}

std::vector<float> resize_bilinear_rgb(const RgbImage& image, int width, int height) {
  std::vector<float> out(static_cast<std::size_t>(width) * height * 3);
  if (image.width == width && image.height == height) {
    std::transform(image.pixels.begin(), image.pixels.end(), out.begin(), [](std::uint8_t v) { return float(v); });
    return out;
  }
  const auto xs = make_taps(image.width, width);
  const auto ys = make_taps(image.height, height);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double top = lerp(image.at(tx.lo, ty.lo)[c], image.at(tx.hi, ty.lo)[c], tx.frac);
        const double bottom = lerp(image.at(tx.lo, ty.hi)[c], image.at(tx.hi, ty.hi)[c], tx.frac);
        out[(static_cast<std::size_t>(y) * width + x) * 3 + c] = static_cast<float>(lerp(top, bottom, ty.frac));
      }
    }
  }
  return out;
}

}  // namespace facetrack
