#pragma once

#include <vector>

#include "facetrack/core.hpp"

namespace facetrack {

/// Grayscale template stored zero-mean, with its L2 norm cached so each
/// correlation only needs the window statistics.
class NccTemplate {
 public:
  NccTemplate() = default;
  NccTemplate(const GrayImage& source, const BoundingBox& region);

  int width() const { return width_; }
  int height() const { return height_; }
  /// Zero for a flat template; such a template correlates with nothing.
  double norm() const { return norm_; }
  const std::vector<float>& centered() const { return centered_; }

  /// Normalized cross-correlation with the window of `image` whose top-left
  /// is (x, y). The window must lie inside the image. Returns 0 when either
  /// side has zero variance.
  double score_at(const GrayImage& image, int x, int y) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> centered_;
  double norm_ = 0.0;
};

/// Bilinear resize with pixel-center alignment; an identity-size resize
/// returns the input values unchanged.
GrayImage resize_bilinear(const GrayImage& image, int width, int height);

/// Bilinear resize of an RGB image to interleaved float channels.
std::vector<float> resize_bilinear_rgb(const RgbImage& image, int width, int height);

}  // namespace facetrack
