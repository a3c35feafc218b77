#include "facetrack/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace facetrack {

namespace {

bool window_inside(const GrayImage& image, int x, int y, int w, int h) {
  return x >= 0 && y >= 0 && x + w <= image.width && y + h <= image.height;
}

void extract_templates(TrackerState& state, const GrayImage& gray) {
  for (auto& patch : state.patches) {
    const int x = state.last_box.x + patch.rel_x;
    const int y = state.last_box.y + patch.rel_y;
    if (window_inside(gray, x, y, state.patch_width, state.patch_height)) {
      patch.templ = NccTemplate(gray, {x, y, state.patch_width, state.patch_height});
    }
  }
}

}  // namespace

int weighted_median(std::vector<std::pair<int, double>> samples) {
  std::sort(samples.begin(), samples.end());
  double total = 0.0;
  for (const auto& s : samples) total += s.second;
  double cumulative = 0.0;
  for (const auto& [value, weight] : samples) {
    cumulative += weight;
    if (cumulative >= total / 2.0) return value;
  }
  return samples.empty() ? 0 : samples.back().first;
}

TrackerState init_track(const Frame& frame, const BoundingBox& box, PatchGrid grid) {
  const BoundingBox clamped = clamp_to(box, frame.width(), frame.height());
  if (!clamped.valid()) throw Error(ErrorKind::EmptyCrop, "track box " + to_string(box) + " lies outside the frame");
  if (grid.rows < 1 || grid.cols < 1) throw Error(ErrorKind::InvalidConfig, "patch grid needs at least one cell");
  if (clamped.w < grid.cols || clamped.h < grid.rows) {
    throw Error(ErrorKind::EmptyCrop, "box " + to_string(clamped) + " is smaller than the patch grid");
  }

  TrackerState state;
  state.last_box = clamped;
  state.frame_index = frame.index;
  state.patch_width = clamped.w / grid.cols;
  state.patch_height = clamped.h / grid.rows;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      TrackedPatch patch;
      patch.offset_u = (c + 0.5) / grid.cols;
      patch.offset_v = (r + 0.5) / grid.rows;
      patch.rel_x = std::clamp(static_cast<int>(std::lround(patch.offset_u * clamped.w - state.patch_width / 2.0)), 0,
                               clamped.w - state.patch_width);
      patch.rel_y = std::clamp(static_cast<int>(std::lround(patch.offset_v * clamped.h - state.patch_height / 2.0)), 0,
                               clamped.h - state.patch_height);
      state.patches.push_back(std::move(patch));
    }
  }
  extract_templates(state, to_gray(frame.image));
  return state;
}

TrackStep track_one_frame(const TrackerState& state, const Frame& next_frame, int search_radius,
                          const TrackerOptions& options) {
  if (next_frame.index != state.frame_index + 1) {
    throw Error(ErrorKind::FrameMismatch, "tracker is at frame " + std::to_string(state.frame_index) +
                                              ", got frame " + std::to_string(next_frame.index));
  }
  const GrayImage gray = to_gray(next_frame.image);
  const int pw = state.patch_width;
  const int ph = state.patch_height;

  TrackStep step{state, state.last_box, 0.0};
  std::vector<std::pair<int, double>> shifts_x;
  std::vector<std::pair<int, double>> shifts_y;
  double weighted_peaks = 0.0;
  double total_reliability = 0.0;

  for (auto& patch : step.state.patches) {
    const int px = state.last_box.x + patch.rel_x;
    const int py = state.last_box.y + patch.rel_y;
    double best = -std::numeric_limits<double>::infinity();
    int best_dx = 0;
    int best_dy = 0;
    for (int dy = -search_radius; dy <= search_radius; ++dy) {
      for (int dx = -search_radius; dx <= search_radius; ++dx) {
        if (!window_inside(gray, px + dx, py + dy, pw, ph)) continue;
        const double s = patch.templ.score_at(gray, px + dx, py + dy);
        if (s > best) {
          best = s;
          best_dx = dx;
          best_dy = dy;
        }
      }
    }
    const bool observed = best > -std::numeric_limits<double>::infinity();
    const double peak = observed ? std::max(0.0, best) : 0.0;
    patch.reliability = options.reliability_ema * patch.reliability + (1.0 - options.reliability_ema) * peak;
    weighted_peaks += patch.reliability * peak;
    total_reliability += patch.reliability;
    if (observed) {
      shifts_x.emplace_back(best_dx, patch.reliability);
      shifts_y.emplace_back(best_dy, patch.reliability);
    }
  }

  double shift_weight = 0.0;
  for (const auto& s : shifts_x) shift_weight += s.second;
  if (shift_weight > 0.0) {
    step.box.x += weighted_median(shifts_x);
    step.box.y += weighted_median(shifts_y);
  }
  step.confidence = total_reliability > 0.0 ? std::clamp(weighted_peaks / total_reliability, 0.0, 1.0) : 0.0;
  step.state.last_box = step.box;
  step.state.frame_index = next_frame.index;
  if (step.confidence > options.refresh_threshold) extract_templates(step.state, gray);
  return step;
}

}  // namespace facetrack
