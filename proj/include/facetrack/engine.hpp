#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "facetrack/core.hpp"
#include "facetrack/detect.hpp"
#include "facetrack/track.hpp"
#include "facetrack/verify.hpp"
#include "facetrack/video_io.hpp"

namespace facetrack {

enum class EventKind {
  Bootstrap,
  Tracked,
  DistanceJump,
  VerifyPass,
  VerifyFail,
  DetectSweep,
  Reappear,
  Skip,
  EndOfVideo,
};

std::string_view to_string(EventKind kind);
/// Throws SchemaError for unknown names.
EventKind event_kind_from_string(std::string_view name);

/// One step of the engine's control flow. Only the payload fields relevant to
/// the kind are set.
struct EngineEvent {
  std::int64_t frame = 0;
  EventKind kind = EventKind::Tracked;
  std::optional<BoundingBox> box;
  std::optional<double> score;
  std::optional<double> confidence;
  std::optional<double> distance;
  std::optional<BoundingBox> region;       // DetectSweep: restricted search area, absent for full frame
  std::optional<int> detections;           // DetectSweep: number of faces found
  std::optional<std::int64_t> target;      // Skip: frame the engine jumps to

  friend bool operator==(const EngineEvent&, const EngineEvent&) = default;
};

struct TimelineSegment {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // inclusive
  std::vector<BoundingBox> boxes;
  double mean_verification_score = 0.0;

  friend bool operator==(const TimelineSegment&, const TimelineSegment&) = default;
};

struct Timeline {
  std::vector<TimelineSegment> segments;
  EngineConfig config;
  std::int64_t query_frame = 0;

  /// Box reported for `frame`, if any segment covers it.
  std::optional<BoundingBox> box_at(std::int64_t frame) const;
  /// Throws SchemaError when segments are unsorted, overlapping or have a
  /// box count that disagrees with their frame range.
  void validate() const;

  friend bool operator==(const Timeline&, const Timeline&) = default;
};

struct EngineBackends {
  const DetectorBackend& detector;
  const EmbedderBackend& embedder;
  TrackerParams tracker{};
  const FaceChip* mean_image = nullptr;
};

struct BootstrapResult {
  QueryProfile query;
  TrackerState tracker;
  std::int64_t resume_frame = 0;
  std::vector<BoundingBox> boxes;     // query_frame .. resume_frame inclusive
  std::vector<double> scores;         // similarity of each bootstrap face to the query
  std::vector<EngineEvent> events;
};

/// Localises the user's box, tracks it for bootstrap_frames frames and
/// averages the embeddings of the faces on frames
/// [query_frame, query_frame + bootstrap_frames).
/// Throws VideoTooShort, NoFaceInSelection.
BootstrapResult bootstrap(const VideoSource& video, std::int64_t query_frame, const BoundingBox& user_box,
                          const EngineBackends& backends, const EngineConfig& config);

struct RunResult {
  Timeline timeline;
  std::vector<EngineEvent> trace;
  QueryProfile query;
};

/// Runs the long-term tracking loop from the user's query to the end of the
/// video.
RunResult run(const VideoSource& video, std::int64_t query_frame, const BoundingBox& user_box,
              const EngineBackends& backends, const EngineConfig& config);

/// Writes every timeline frame with a one-pixel yellow border around its
/// box as frame_NNNNNN.ppm. Returns the number of files written.
std::size_t annotate(const VideoSource& video, const Timeline& timeline, const std::filesystem::path& out_dir);

/// Sets the border pixels of `box` (clamped to the image) to (255, 255, 0).
void draw_box(RgbImage& image, const BoundingBox& box);

}  // namespace facetrack
