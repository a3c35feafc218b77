#pragma once

#include <vector>

#include "facetrack/core.hpp"
#include "facetrack/ncc.hpp"

namespace facetrack {

struct PatchGrid {
  int rows = 3;
  int cols = 3;
};

struct TrackerOptions {
  /// Weight of the previous reliability in the moving average.
  double reliability_ema = 0.7;
  /// Templates are re-extracted from the new box above this confidence.
  double refresh_threshold = 0.8;
};

struct TrackerParams {
  PatchGrid grid;
  int search_radius = 16;
  TrackerOptions options;
};

struct TrackedPatch {
  double offset_u = 0.0;  // patch center within the box, normalized to [0, 1]
  double offset_v = 0.0;
  int rel_x = 0;          // patch top-left relative to the box, px
  int rel_y = 0;
  NccTemplate templ;
  double reliability = 1.0;
};

struct TrackerState {
  BoundingBox last_box;
  std::vector<TrackedPatch> patches;
  int patch_width = 0;
  int patch_height = 0;
  std::int64_t frame_index = 0;
};

/// Splits `box` (clamped to the frame) into a rows x cols grid of grayscale
/// templates with reliability 1. Throws EmptyCrop when the clamped box is
/// empty or smaller than the grid.
TrackerState init_track(const Frame& frame, const BoundingBox& box, PatchGrid grid = {});

struct TrackStep {
  TrackerState state;
  BoundingBox box;
  double confidence = 0.0;
};

/// Advances the tracker by one frame. Each patch is matched by NCC within
/// +-search_radius of where it sat in the previous box; the box moves by the
/// reliability-weighted median of patch displacements (per axis) and keeps
/// its size. Throws FrameMismatch unless next_frame directly follows the
/// state's frame.
TrackStep track_one_frame(const TrackerState& state, const Frame& next_frame, int search_radius,
                          const TrackerOptions& options = {});

/// Lower weighted median: the smallest value whose cumulative weight
/// reaches half the total. Weights must be non-negative with positive sum.
int weighted_median(std::vector<std::pair<int, double>> samples);

}  // namespace facetrack
