#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facetrack/core.hpp"

namespace facetrack {

/// Linear motion of one identity over the inclusive frame range [start, end].
struct IdentitySegment {
  int start = 0;
  int end = 0;
  BoundingBox start_box;
  double velocity_x = 0.0;  // px / frame
  double velocity_y = 0.0;

  /// Box at `frame`: start_box translated by velocity * (frame - start),
  /// rounded half away from zero.
  BoundingBox box_at(int frame) const;
  friend bool operator==(const IdentitySegment&, const IdentitySegment&) = default;
};

struct IdentitySpec {
  std::string label;
  std::vector<IdentitySegment> segments;
  std::uint64_t appearance_seed = 0;
  friend bool operator==(const IdentitySpec&, const IdentitySpec&) = default;
};

enum class ScenarioEventKind { HardCut, OcclusionStart, OcclusionEnd };

struct ScenarioEvent {
  int frame = 0;
  ScenarioEventKind kind = ScenarioEventKind::HardCut;
  std::string label;  // empty for HardCut
  friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

struct NoiseSpec {
  double detector_miss = 0.0;            // probability a visible face is not reported
  double detector_false_positive = 0.0;  // probability of one spurious box per frame
  int detector_jitter = 0;               // max |offset| in px applied to x and y
  double embed_sigma = 0.0;              // L2 norm of embedder noise before renormalisation
  double sensor_noise = 0.0;             // max |offset| of per-pixel uniform noise in rendered frames
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct ScenarioSpec {
  int duration_frames = 0;
  int width = 0;
  int height = 0;
  double frame_rate = 29.0;
  std::vector<IdentitySpec> identities;
  std::vector<ScenarioEvent> events;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec whose detail starts with the path of the offending
  /// field, e.g. "identities[0].segments[1].end".
  void validate() const;
  const IdentitySpec* find_identity(const std::string& label) const;
  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct TruthEntry {
  std::string label;
  BoundingBox box;
  bool visible = true;
  friend bool operator==(const TruthEntry&, const TruthEntry&) = default;
};

/// Per-frame record of every identity that is on screen or occluded.
struct GroundTruth {
  std::vector<std::vector<TruthEntry>> frames;

  const TruthEntry* find(std::int64_t frame, const std::string& label) const;
  bool has_label(const std::string& label) const;
  std::int64_t frame_count() const { return static_cast<std::int64_t>(frames.size()); }
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace facetrack
