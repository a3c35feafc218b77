#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "facetrack/core.hpp"
#include "facetrack/scenario.hpp"
#include "facetrack/subprocess.hpp"

namespace facetrack {

struct Detection {
  BoundingBox box;
  double score = 0.0;  // [0, 1]
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectorCapabilities {
  /// The backend itself confines its search to a region. Backends without it
  /// scan the whole frame and the region filter is applied afterwards.
  bool supports_region_restriction = false;
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string name() const = 0;
  virtual DetectorCapabilities capabilities() const = 0;

  /// Raw detections; `region` is only passed when the backend supports it.
  /// Implementations throw BackendFailure when they cannot run at all.
  virtual std::vector<Detection> detect(const Frame& frame, const std::optional<BoundingBox>& region) const = 0;
};

/// All faces in `frame`, or only those whose box center lies inside
/// `region`. Boxes are clamped to the frame; the list is sorted by
/// descending score.
std::vector<Detection> detect_all_faces(const DetectorBackend& backend, const Frame& frame,
                                        const std::optional<BoundingBox>& region = std::nullopt);

/// Resolves a user-drawn box to the detection with the highest IoU against
/// it, searching `user_box` scaled by `search_region_scale`. Ties go to the
/// higher score. Throws NoFaceInSelection when nothing overlaps.
Detection localize_query(const DetectorBackend& backend, const Frame& frame, const BoundingBox& user_box,
                         double search_region_scale = 2.0);

/// Greedy non-maximum suppression; input need not be sorted.
std::vector<Detection> non_max_suppression(std::vector<Detection> detections, double iou_threshold);

struct SyntheticDetectorParams {
  double miss_rate = 0.0;
  double false_positive_rate = 0.0;
  int jitter = 0;
  std::uint64_t seed = 0;
};

/// Reports ground-truth boxes of visible identities, optionally corrupted by
/// seeded misses, jitter and false positives. Output depends only on
/// (seed, frame index), never on call order.
class SyntheticDetector final : public DetectorBackend {
 public:
  SyntheticDetector(std::shared_ptr<const GroundTruth> truth, SyntheticDetectorParams params);

  std::string name() const override { return "synthetic"; }
  DetectorCapabilities capabilities() const override { return {true}; }
  std::vector<Detection> detect(const Frame& frame, const std::optional<BoundingBox>& region) const override;

 private:
  std::shared_ptr<const GroundTruth> truth_;
  SyntheticDetectorParams params_;
};

struct TemplateDetectorParams {
  double ncc_threshold = 0.8;
  double nms_iou = 0.3;
  std::vector<double> scales{0.75, 0.875, 1.0, 1.125, 1.25};
};

/// Multi-scale normalized cross-correlation of grayscale gallery templates.
class TemplateDetector final : public DetectorBackend {
 public:
  TemplateDetector(std::vector<RgbImage> gallery, TemplateDetectorParams params = {});

  std::string name() const override { return "template"; }
  DetectorCapabilities capabilities() const override { return {false}; }
  std::vector<Detection> detect(const Frame& frame, const std::optional<BoundingBox>& region) const override;

 private:
  std::vector<GrayImage> gallery_;
  TemplateDetectorParams params_;
};

// Line protocol spoken with an external detector process.
std::string encode_detect_request(const std::string& frame_path, const std::optional<BoundingBox>& region);
std::vector<Detection> decode_detect_response(const std::string& line);

/// Delegates to a long-running child process: every call writes the frame
/// as PPM into a scratch directory and exchanges one JSON line each way.
class ExternalDetector final : public DetectorBackend {
 public:
  ExternalDetector(const std::string& command, std::filesystem::path scratch_dir);

  std::string name() const override { return "external"; }
  DetectorCapabilities capabilities() const override { return {true}; }
  std::vector<Detection> detect(const Frame& frame, const std::optional<BoundingBox>& region) const override;

 private:
  std::unique_ptr<LineProcess> process_;
  std::filesystem::path scratch_dir_;
};

}  // namespace facetrack
