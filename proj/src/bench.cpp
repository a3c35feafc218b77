#include "facetrack/bench.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "facetrack/random.hpp"

namespace facetrack {

namespace {

constexpr int kIdentityCells = 8;
constexpr int kBackgroundCell = 8;

std::uint8_t hashed_level(std::uint64_t h, int channel, int lo, int hi) {
  const auto bits = (h >> (channel * 16)) & 0xffff;
  return static_cast<std::uint8_t>(lo + static_cast<int>(bits % static_cast<std::uint64_t>(hi - lo + 1)));
}

// Which identities are hidden at `frame` by occlusion events.
std::set<std::string> occluded_at(const ScenarioSpec& spec, int frame) {
  std::vector<const ScenarioEvent*> ordered;
  for (const auto& e : spec.events) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->frame < b->frame; });
  std::set<std::string> hidden;
  for (const auto* e : ordered) {
    if (e->frame > frame) break;
    if (e->kind == ScenarioEventKind::OcclusionStart) hidden.insert(e->label);
    if (e->kind == ScenarioEventKind::OcclusionEnd) hidden.erase(e->label);
  }
  return hidden;
}

int cuts_before(const ScenarioSpec& spec, int frame) {
  return static_cast<int>(std::count_if(spec.events.begin(), spec.events.end(), [&](const ScenarioEvent& e) {
    return e.kind == ScenarioEventKind::HardCut && e.frame <= frame;
  }));
}

const IdentitySegment* segment_at(const IdentitySpec& identity, int frame) {
  for (const auto& s : identity.segments) {
    if (frame >= s.start && frame <= s.end) return &s;
  }
  return nullptr;
}

double inside_fraction(const BoundingBox& box, int width, int height) {
  return static_cast<double>(clamp_to(box, width, height).area()) / static_cast<double>(box.area());
}

}  // namespace

BoundingBox IdentitySegment::box_at(int frame) const {
  const int t = frame - start;
  return {start_box.x + static_cast<int>(std::lround(velocity_x * t)),
          start_box.y + static_cast<int>(std::lround(velocity_y * t)), start_box.w, start_box.h};
}

const IdentitySpec* ScenarioSpec::find_identity(const std::string& label) const {
  for (const auto& id : identities) {
    if (id.label == label) return &id;
  }
  return nullptr;
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& path, const std::string& what) {
    throw Error(ErrorKind::InvalidSpec, path + ": " + what);
  };
  if (duration_frames < 1) fail("duration_frames", "must be >= 1");
  if (width < 1 || height < 1) fail("dimensions", "width and height must be >= 1");
  if (!(frame_rate > 0.0)) fail("frame_rate", "must be > 0");

  std::set<std::string> labels;
  for (std::size_t i = 0; i < identities.size(); ++i) {
    const auto& id = identities[i];
    const std::string path = "identities[" + std::to_string(i) + "]";
    if (id.label.empty()) fail(path + ".label", "must not be empty");
    if (!labels.insert(id.label).second) fail(path + ".label", "duplicate label '" + id.label + "'");
    for (std::size_t j = 0; j < id.segments.size(); ++j) {
      const auto& s = id.segments[j];
      const std::string seg = path + ".segments[" + std::to_string(j) + "]";
      const std::string who = "identity '" + id.label + "': ";
      if (s.start < 0 || s.start >= duration_frames) fail(seg + ".start", who + "outside [0, duration_frames)");
      if (s.end < 0 || s.end >= duration_frames) fail(seg + ".end", who + "outside [0, duration_frames)");
      if (s.start > s.end) fail(seg + ".end", who + "precedes start");
      if (!s.start_box.valid()) fail(seg + ".start_box", who + "width and height must be > 0");
      for (std::size_t k = 0; k < j; ++k) {
        const auto& o = id.segments[k];
        if (s.start <= o.end && o.start <= s.end) fail(seg, who + "overlaps segments[" + std::to_string(k) + "]");
      }
      for (int f = s.start; f <= s.end; ++f) {
        if (inside_fraction(s.box_at(f), width, height) < 0.5) {
          fail(seg, who + "box is less than half inside the frame at frame " + std::to_string(f));
        }
      }
    }
  }
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    const std::string path = "events[" + std::to_string(k) + "]";
    if (e.frame < 0 || e.frame >= duration_frames) fail(path + ".frame", "outside [0, duration_frames)");
    if (e.kind != ScenarioEventKind::HardCut && !labels.contains(e.label)) {
      fail(path + ".label", "unknown identity '" + e.label + "'");
    }
  }
  auto probability = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) fail(std::string("noise.") + name, "must lie in [0, 1]");
  };
  probability(noise.detector_miss, "detector_miss");
  probability(noise.detector_false_positive, "detector_false_positive");
  if (noise.detector_jitter < 0) fail("noise.detector_jitter", "must be >= 0");
  if (!(noise.embed_sigma >= 0.0)) fail("noise.embed_sigma", "must be >= 0");
  if (!(noise.sensor_noise >= 0.0 && noise.sensor_noise <= 255.0)) fail("noise.sensor_noise", "must lie in [0, 255]");
}

const TruthEntry* GroundTruth::find(std::int64_t frame, const std::string& label) const {
  if (frame < 0 || frame >= frame_count()) return nullptr;
  for (const auto& e : frames[static_cast<std::size_t>(frame)]) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

bool GroundTruth::has_label(const std::string& label) const {
  return std::any_of(frames.begin(), frames.end(), [&](const auto& entries) {
    return std::any_of(entries.begin(), entries.end(), [&](const TruthEntry& e) { return e.label == label; });
  });
}

RgbImage render_identity(const ScenarioSpec& spec, const IdentitySpec& identity, int width, int height) {
  RgbImage image(width, height);
  const std::uint64_t base = mix_seed({spec.seed, identity.appearance_seed, 0x1de});
  for (int y = 0; y < height; ++y) {
    const int cy = y * kIdentityCells / height;
    for (int x = 0; x < width; ++x) {
      const int cx = x * kIdentityCells / width;
      const std::uint64_t h = mix_seed({base, static_cast<std::uint64_t>(cy * kIdentityCells + cx)});
      std::uint8_t* p = image.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = hashed_level(h, c, 0, 255);
    }
  }
  return image;
}

std::vector<LabeledFace> identity_gallery(const ScenarioSpec& spec) {
  std::vector<LabeledFace> gallery;
  for (const auto& id : spec.identities) {
    gallery.push_back({id.label, render_identity(spec, id, FaceChip::kSize, FaceChip::kSize)});
  }
  return gallery;
}

ScenarioVideo::ScenarioVideo(ScenarioSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

RgbImage ScenarioVideo::decode(std::int64_t index) const {
  const int frame = static_cast<int>(index);
  RgbImage image(spec_.width, spec_.height);

  const std::uint64_t background = mix_seed({spec_.seed, static_cast<std::uint64_t>(cuts_before(spec_, frame)), 0xb6});
  for (int y = 0; y < spec_.height; ++y) {
    for (int x = 0; x < spec_.width; ++x) {
      const auto cell = static_cast<std::uint64_t>((y / kBackgroundCell) * 4096 + x / kBackgroundCell);
      const std::uint64_t h = mix_seed({background, cell});
      std::uint8_t* p = image.at(x, y);
      for (int c = 0; c < 3; ++c) p[c] = hashed_level(h, c, 40, 215);
    }
  }

  const auto hidden = occluded_at(spec_, frame);
  for (const auto& id : spec_.identities) {
    const IdentitySegment* seg = segment_at(id, frame);
    if (seg == nullptr) continue;
    const BoundingBox box = seg->box_at(frame);
    if (hidden.contains(id.label)) {
      RgbImage block(box.w, box.h);
      std::fill(block.pixels.begin(), block.pixels.end(), std::uint8_t{128});
      paste(image, block, box.x, box.y);
    } else {
      paste(image, render_identity(spec_, id, box.w, box.h), box.x, box.y);
    }
  }

  if (spec_.noise.sensor_noise > 0.0) {
    Rng rng(mix_seed({spec_.seed, static_cast<std::uint64_t>(index), 0x5e750}));
    std::uniform_real_distribution<double> offset(-spec_.noise.sensor_noise, spec_.noise.sensor_noise);
    for (auto& v : image.pixels) {
      v = static_cast<std::uint8_t>(std::clamp(std::lround(v + offset(rng)), 0L, 255L));
    }
  }
  return image;
}

GroundTruth compute_ground_truth(const ScenarioSpec& spec) {
  GroundTruth truth;
  truth.frames.resize(static_cast<std::size_t>(spec.duration_frames));
  for (int f = 0; f < spec.duration_frames; ++f) {
    const auto hidden = occluded_at(spec, f);
    for (const auto& id : spec.identities) {
      if (const IdentitySegment* seg = segment_at(id, f)) {
        truth.frames[static_cast<std::size_t>(f)].push_back({id.label, seg->box_at(f), !hidden.contains(id.label)});
      }
    }
  }
  return truth;
}

GeneratedScenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  return {std::make_shared<ScenarioVideo>(spec), std::make_shared<GroundTruth>(compute_ground_truth(spec))};
}

PrecisionRecall evaluate(const Timeline& timeline, const GroundTruth& truth, const std::string& query_label,
                         double iou_threshold) {
  if (!truth.has_label(query_label)) throw Error(ErrorKind::UnknownLabel, "label '" + query_label + "' not in truth");
  PrecisionRecall pr;
  pr.iou_threshold = iou_threshold;
  std::int64_t visible = 0;
  for (std::int64_t f = 0; f < truth.frame_count(); ++f) {
    const TruthEntry* e = truth.find(f, query_label);
    if (e != nullptr && e->visible) ++visible;
  }
  for (const auto& segment : timeline.segments) {
    for (std::int64_t f = segment.start_frame; f <= segment.end_frame; ++f) {
      if (f < 0 || f >= truth.frame_count()) {
        throw Error(ErrorKind::OutOfRange, "timeline frame " + std::to_string(f) + " beyond ground truth");
      }
      const BoundingBox& reported = segment.boxes[static_cast<std::size_t>(f - segment.start_frame)];
      const TruthEntry* e = truth.find(f, query_label);
      if (e != nullptr && e->visible && iou(reported, e->box) >= iou_threshold) {
        ++pr.tp;
      } else {
        ++pr.fp;
      }
    }
  }
  pr.fn = visible - pr.tp;
  pr.precision = pr.tp + pr.fp > 0 ? static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fp) : 1.0;
  pr.recall = pr.tp + pr.fn > 0 ? static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fn) : 1.0;
  return pr;
}

}  // namespace facetrack
