#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace facetrack {

enum class ErrorKind {
  EmptyCrop,
  MissingMeta,
  NonContiguousIndices,
  DecodeError,
  OutOfRange,
  BackendFailure,
  NoFaceInSelection,
  DimensionMismatch,
  ZeroVector,
  FrameMismatch,
  VideoTooShort,
  IoError,
  InvalidSpec,
  InvalidConfig,
  UnknownLabel,
  SchemaError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the library is reported as an Error. what() always
/// starts with the kind name, e.g. "NoFaceInSelection: ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);
  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Integer pixel rectangle. (x, y) is the top-left corner; the right and
/// bottom edges (x + w, y + h) are exclusive.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool valid() const { return w > 0 && h > 0; }
  long long area() const { return static_cast<long long>(w) * h; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  double diagonal() const;
  bool contains_point(double px, double py) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

std::string to_string(const BoundingBox& box);

/// Intersection of two boxes; empty (w or h == 0) when they do not overlap.
BoundingBox intersect(const BoundingBox& a, const BoundingBox& b);

/// Box clamped to [0, width) x [0, height).
BoundingBox clamp_to(const BoundingBox& box, int width, int height);

/// Box scaled about its center by `factor`, rounded outward to integers.
BoundingBox scale_about_center(const BoundingBox& box, double factor);

double iou(const BoundingBox& a, const BoundingBox& b);

/// Euclidean distance between the centers of a and b divided by the
/// diagonal of normalize_by.
double center_distance(const BoundingBox& a, const BoundingBox& b, const BoundingBox& normalize_by);

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int width, int height);
  RgbImage(int width, int height, std::vector<std::uint8_t> pixels);

  std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
  std::uint8_t* at(int x, int y) { return pixels.data() + offset(x, y); }
  const std::uint8_t* at(int x, int y) const { return pixels.data() + offset(x, y); }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Single-channel float image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float operator()(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Luma conversion: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_gray(const RgbImage& image);

struct Frame {
  std::int64_t index = 0;
  double timestamp_s = 0.0;
  RgbImage image;

  int width() const { return image.width; }
  int height() const { return image.height; }
  BoundingBox bounds() const { return {0, 0, image.width, image.height}; }
};

/// Sub-image of `box` clamped to the image bounds. Throws EmptyCrop when the
/// clamped box is empty.
RgbImage crop(const RgbImage& image, const BoundingBox& box);
RgbImage crop(const Frame& frame, const BoundingBox& box);

/// Writes `patch` into `image` with its top-left at (x, y), clipping at the
/// image border.
void paste(RgbImage& image, const RgbImage& patch, int x, int y);

struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

struct EngineConfig {
  double similarity_threshold = 0.70;
  double distance_threshold = 0.10;
  int skip_frames = 60;
  int bootstrap_frames = 5;
  double frame_rate = 29.0;
  double search_region_scale = 2.0;
  std::optional<int> periodic_verify_interval;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

}  // namespace facetrack
