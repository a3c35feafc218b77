#include "facetrack/core.hpp"

#include <algorithm>
#include <cmath>

namespace facetrack {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyCrop: return "EmptyCrop";
    case ErrorKind::MissingMeta: return "MissingMeta";
    case ErrorKind::NonContiguousIndices: return "NonContiguousIndices";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::BackendFailure: return "BackendFailure";
    case ErrorKind::NoFaceInSelection: return "NoFaceInSelection";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::FrameMismatch: return "FrameMismatch";
    case ErrorKind::VideoTooShort: return "VideoTooShort";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

double BoundingBox::diagonal() const {
  return std::hypot(static_cast<double>(w), static_cast<double>(h));
}

bool BoundingBox::contains_point(double px, double py) const {
  return px >= x && px < x + w && py >= y && py < y + h;
}

std::string to_string(const BoundingBox& box) {
  return "(" + std::to_string(box.x) + "," + std::to_string(box.y) + "," + std::to_string(box.w) + "," +
         std::to_string(box.h) + ")";
}

BoundingBox intersect(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w);
  const int y1 = std::min(a.y + a.h, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

BoundingBox clamp_to(const BoundingBox& box, int width, int height) {
  return intersect(box, {0, 0, width, height});
}

BoundingBox scale_about_center(const BoundingBox& box, double factor) {
  const double half_w = box.w * factor / 2.0;
  const double half_h = box.h * factor / 2.0;
  const int x0 = static_cast<int>(std::floor(box.center_x() - half_w));
  const int y0 = static_cast<int>(std::floor(box.center_y() - half_h));
  const int x1 = static_cast<int>(std::ceil(box.center_x() + half_w));
  const int y1 = static_cast<int>(std::ceil(box.center_y() + half_h));
  return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const BoundingBox inter = intersect(a, b);
  if (!inter.valid()) return 0.0;
  const double inter_area = static_cast<double>(inter.area());
  const double union_area = static_cast<double>(a.area() + b.area()) - inter_area;
  return inter_area / union_area;
}

double center_distance(const BoundingBox& a, const BoundingBox& b, const BoundingBox& normalize_by) {
  const double dx = b.center_x() - a.center_x();
  const double dy = b.center_y() - a.center_y();
  return std::hypot(dx, dy) / normalize_by.diagonal();
}

RgbImage::RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

RgbImage::RgbImage(int w, int h, std::vector<std::uint8_t> data) : width(w), height(h), pixels(std::move(data)) {
  if (w < 1 || h < 1 || pixels.size() != static_cast<std::size_t>(w) * h * 3) {
    throw Error(ErrorKind::DecodeError, "pixel buffer of " + std::to_string(pixels.size()) + " bytes does not match " +
                                            std::to_string(w) + "x" + std::to_string(h) + "x3");
  }
}

GrayImage to_gray(const RgbImage& image) {
  GrayImage gray{image.width, image.height, {}};
  gray.values.resize(static_cast<std::size_t>(image.width) * image.height);
  for (std::size_t i = 0; i < gray.values.size(); ++i) {
    const std::uint8_t* p = image.pixels.data() + i * 3;
    gray.values[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return gray;
}

RgbImage crop(const RgbImage& image, const BoundingBox& box) {
  const BoundingBox c = clamp_to(box, image.width, image.height);
  if (!c.valid()) throw Error(ErrorKind::EmptyCrop, "box " + to_string(box) + " does not intersect the image");
  RgbImage out(c.w, c.h);
  const std::size_t row_bytes = static_cast<std::size_t>(c.w) * 3;
  for (int row = 0; row < c.h; ++row) {
    std::copy_n(image.at(c.x, c.y + row), row_bytes, out.at(0, row));
  }
  return out;
}

RgbImage crop(const Frame& frame, const BoundingBox& box) { return crop(frame.image, box); }

void paste(RgbImage& image, const RgbImage& patch, int x, int y) {
  const BoundingBox target = clamp_to({x, y, patch.width, patch.height}, image.width, image.height);
  if (!target.valid()) return;
  const std::size_t row_bytes = static_cast<std::size_t>(target.w) * 3;
  for (int row = 0; row < target.h; ++row) {
    std::copy_n(patch.at(target.x - x, target.y - y + row), row_bytes, image.at(target.x, target.y + row));
  }
}

void EngineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (!(similarity_threshold > -1.0 && similarity_threshold <= 1.0)) fail("similarity_threshold must lie in (-1, 1]");
  if (!(distance_threshold > 0.0)) fail("distance_threshold must be > 0");
  if (skip_frames < 1) fail("skip_frames must be >= 1");
  if (bootstrap_frames < 1) fail("bootstrap_frames must be >= 1");
  if (!(frame_rate > 0.0)) fail("frame_rate must be > 0");
  if (!(search_region_scale >= 1.0)) fail("search_region_scale must be >= 1");
  if (periodic_verify_interval && *periodic_verify_interval < 1) fail("periodic_verify_interval must be >= 1");
}

}  // namespace facetrack
