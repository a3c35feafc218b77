#include "facetrack/engine.hpp"

#include <array>
#include <numeric>

namespace facetrack {

namespace {

constexpr std::array<std::string_view, 9> kEventNames = {
    "Bootstrap", "Tracked", "DistanceJump", "VerifyPass", "VerifyFail", "DetectSweep", "Reappear", "Skip", "EndOfVideo",
};

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

std::string_view to_string(EventKind kind) { return kEventNames[static_cast<std::size_t>(kind)]; }

EventKind event_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<EventKind>(i);
  }
  throw Error(ErrorKind::SchemaError, "unknown event kind '" + std::string(name) + "'");
}

std::optional<BoundingBox> Timeline::box_at(std::int64_t frame) const {
  for (const auto& s : segments) {
    if (frame >= s.start_frame && frame <= s.end_frame) return s.boxes[static_cast<std::size_t>(frame - s.start_frame)];
  }
  return std::nullopt;
}

void Timeline::validate() const {
  std::int64_t previous_end = -1;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const std::string where = "segments[" + std::to_string(i) + "]";
    if (s.start_frame > s.end_frame) throw Error(ErrorKind::SchemaError, where + ": start after end");
    if (static_cast<std::int64_t>(s.boxes.size()) != s.end_frame - s.start_frame + 1) {
      throw Error(ErrorKind::SchemaError, where + ": box count does not match frame range");
    }
    if (s.start_frame <= previous_end) throw Error(ErrorKind::SchemaError, where + ": overlaps or precedes previous");
    for (const auto& b : s.boxes) {
      if (!b.valid()) throw Error(ErrorKind::SchemaError, where + ": degenerate box " + to_string(b));
    }
    previous_end = s.end_frame;
  }
}

BootstrapResult bootstrap(const VideoSource& video, std::int64_t query_frame, const BoundingBox& user_box,
                          const EngineBackends& backends, const EngineConfig& config) {
  config.validate();
  if (query_frame < 0 || query_frame + config.bootstrap_frames >= video.frame_count()) {
    throw Error(ErrorKind::VideoTooShort, "query frame " + std::to_string(query_frame) + " needs " +
                                              std::to_string(config.bootstrap_frames) + " frames after it, video has " +
                                              std::to_string(video.frame_count()));
  }

  BootstrapResult result;
  Frame frame = video.read_frame(query_frame);
  const Detection located = localize_query(backends.detector, frame, user_box, config.search_region_scale);
  result.tracker = init_track(frame, located.box, backends.tracker.grid);
  result.boxes.push_back(result.tracker.last_box);
  result.events.push_back({.frame = query_frame, .kind = EventKind::Bootstrap, .box = result.tracker.last_box,
                           .score = located.score});

  std::vector<Embedding> embeddings;
  for (int i = 0; i < config.bootstrap_frames; ++i) {
    const BoundingBox current = result.boxes.back();
    embeddings.push_back(embed(backends.embedder, preprocess_face(frame, current, backends.mean_image)));
    result.query.source_frames.push_back(frame.index);

    frame = video.read_frame(frame.index + 1);
    TrackStep step = track_one_frame(result.tracker, frame, backends.tracker.search_radius, backends.tracker.options);
    result.events.push_back({.frame = frame.index, .kind = EventKind::Tracked, .box = step.box,
                             .confidence = step.confidence, .distance = center_distance(current, step.box, current)});
    result.tracker = std::move(step.state);
    result.boxes.push_back(step.box);
  }

  const auto query = build_query(embeddings);
  result.query.embedding = query.embedding;
  for (const auto& e : embeddings) result.scores.push_back(cosine_similarity(e, result.query.embedding));
  result.resume_frame = frame.index;
  return result;
}

namespace {

/// The tracking loop proper. Modes mirror the three activities: follow the
/// face, check it against the query, or sweep a frame for it.
class LongTermTracker {
 public:
  LongTermTracker(const VideoSource& video, const EngineBackends& backends, const EngineConfig& config)
      : video_(video), backends_(backends), config_(config) {}

  RunResult run(std::int64_t query_frame, const BoundingBox& user_box);

 private:
  enum class Mode { Tracking, Verifying, Detecting, Done };

  void step_tracking();
  void step_verifying();
  void step_detecting();
  void finish_at_end_of_video();

  Verification check(const BoundingBox& box);
  void emit(EngineEvent event) { trace_.push_back(std::move(event)); }
  void open_segment(std::int64_t start, const BoundingBox& box, double score);
  /// Closes the open segment, dropping frames after the last confirmed one.
  void close_segment_at_confirmation();
  void close_segment();

  const VideoSource& video_;
  const EngineBackends& backends_;
  const EngineConfig& config_;

  Mode mode_ = Mode::Tracking;
  QueryProfile query_;
  TrackerState tracker_;
  Frame frame_;               // frame at index f
  BoundingBox box_;           // face at frame f
  BoundingBox anchor_;        // last box before the current check
  std::int64_t confirmed_ = 0;
  int since_verify_ = 0;
  std::optional<BoundingBox> sweep_region_;

  bool segment_open_ = false;
  TimelineSegment segment_;
  std::vector<double> segment_scores_;

  std::vector<TimelineSegment> segments_;
  std::vector<EngineEvent> trace_;
};

RunResult LongTermTracker::run(std::int64_t query_frame, const BoundingBox& user_box) {
  BootstrapResult boot = bootstrap(video_, query_frame, user_box, backends_, config_);
  trace_ = std::move(boot.events);
  query_ = boot.query;
  tracker_ = std::move(boot.tracker);

  segment_open_ = true;
  segment_ = {query_frame, boot.resume_frame, boot.boxes, 0.0};
  segment_scores_ = boot.scores;
  confirmed_ = boot.resume_frame;
  box_ = boot.boxes.back();
  frame_ = video_.read_frame(boot.resume_frame);

  while (mode_ != Mode::Done) {
    switch (mode_) {
      case Mode::Tracking: step_tracking(); break;
      case Mode::Verifying: step_verifying(); break;
      case Mode::Detecting: step_detecting(); break;
      case Mode::Done: break;
    }
  }

  RunResult result;
  result.timeline.segments = std::move(segments_);
  result.timeline.config = config_;
  result.timeline.query_frame = query_frame;
  result.trace = std::move(trace_);
  result.query = std::move(query_);
  return result;
}

void LongTermTracker::step_tracking() {
  const std::int64_t next_index = frame_.index + 1;
  if (!video_.has_frame(next_index)) {
    finish_at_end_of_video();
    return;
  }
  Frame next = video_.read_frame(next_index);
  TrackStep step = track_one_frame(tracker_, next, backends_.tracker.search_radius, backends_.tracker.options);
  const double distance = center_distance(box_, step.box, box_);
  emit({.frame = next_index, .kind = EventKind::Tracked, .box = step.box, .confidence = step.confidence,
        .distance = distance});

  anchor_ = box_;
  box_ = step.box;
  tracker_ = std::move(step.state);
  frame_ = std::move(next);
  segment_.boxes.push_back(box_);
  segment_.end_frame = frame_.index;
  ++since_verify_;

  if (distance > config_.distance_threshold) {
    emit({.frame = frame_.index, .kind = EventKind::DistanceJump, .box = box_, .distance = distance});
    mode_ = Mode::Verifying;
  } else if (config_.periodic_verify_interval && since_verify_ >= *config_.periodic_verify_interval) {
    anchor_ = box_;
    mode_ = Mode::Verifying;
  }
}

Verification LongTermTracker::check(const BoundingBox& box) {
  const Embedding e = embed(backends_.embedder, preprocess_face(frame_, box, backends_.mean_image));
  return verify(e, query_, config_.similarity_threshold);
}

void LongTermTracker::step_verifying() {
  const Verification v = check(box_);
  since_verify_ = 0;
  if (v.accepted) {
    emit({.frame = frame_.index, .kind = EventKind::VerifyPass, .box = box_, .score = v.score});
    confirmed_ = frame_.index;
    segment_scores_.push_back(v.score);
    mode_ = Mode::Tracking;
    return;
  }
  emit({.frame = frame_.index, .kind = EventKind::VerifyFail, .box = box_, .score = v.score});
  close_segment_at_confirmation();
  const BoundingBox region =
      clamp_to(scale_about_center(anchor_, config_.search_region_scale), frame_.width(), frame_.height());
  sweep_region_ = region.valid() ? std::optional(region) : std::nullopt;
  mode_ = Mode::Detecting;
}

void LongTermTracker::step_detecting() {
  const auto faces = detect_all_faces(backends_.detector, frame_, sweep_region_);
  emit({.frame = frame_.index, .kind = EventKind::DetectSweep, .region = sweep_region_,
        .detections = static_cast<int>(faces.size())});
  for (const auto& face : faces) {
    const Verification v = check(face.box);
    if (!v.accepted) continue;
    tracker_ = init_track(frame_, face.box, backends_.tracker.grid);
    box_ = tracker_.last_box;
    emit({.frame = frame_.index, .kind = EventKind::Reappear, .box = box_, .score = v.score});
    open_segment(frame_.index, box_, v.score);
    confirmed_ = frame_.index;
    since_verify_ = 0;
    mode_ = Mode::Tracking;
    return;
  }

  const std::int64_t target = frame_.index + config_.skip_frames;
  emit({.frame = frame_.index, .kind = EventKind::Skip, .target = target});
  sweep_region_.reset();
  if (!video_.has_frame(target)) {
    emit({.frame = video_.frame_count(), .kind = EventKind::EndOfVideo});
    mode_ = Mode::Done;
    return;
  }
  frame_ = video_.read_frame(target);
}

void LongTermTracker::finish_at_end_of_video() {
  // Frames tracked since the last confirmation get one closing check so the
  // timeline never ends on an unverified tail.
  if (segment_open_ && confirmed_ < frame_.index) {
    const Verification v = check(box_);
    if (v.accepted) {
      emit({.frame = frame_.index, .kind = EventKind::VerifyPass, .box = box_, .score = v.score});
      confirmed_ = frame_.index;
      segment_scores_.push_back(v.score);
    } else {
      emit({.frame = frame_.index, .kind = EventKind::VerifyFail, .box = box_, .score = v.score});
    }
  }
  close_segment_at_confirmation();
  emit({.frame = video_.frame_count(), .kind = EventKind::EndOfVideo});
  mode_ = Mode::Done;
}

void LongTermTracker::open_segment(std::int64_t start, const BoundingBox& box, double score) {
  segment_open_ = true;
  segment_ = {start, start, {box}, 0.0};
  segment_scores_ = {score};
}

void LongTermTracker::close_segment_at_confirmation() {
  if (!segment_open_) return;
  if (segment_.end_frame > confirmed_) {
    segment_.end_frame = confirmed_;
    segment_.boxes.resize(static_cast<std::size_t>(confirmed_ - segment_.start_frame + 1));
  }
  close_segment();
}

void LongTermTracker::close_segment() {
  segment_.mean_verification_score = mean_of(segment_scores_);
  segments_.push_back(std::move(segment_));
  segment_ = {};
  segment_scores_.clear();
  segment_open_ = false;
}

}  // namespace

RunResult run(const VideoSource& video, std::int64_t query_frame, const BoundingBox& user_box,
              const EngineBackends& backends, const EngineConfig& config) {
  return LongTermTracker(video, backends, config).run(query_frame, user_box);
}

void draw_box(RgbImage& image, const BoundingBox& box) {
  const BoundingBox b = clamp_to(box, image.width, image.height);
  if (!b.valid()) return;
  auto paint = [&](int x, int y) {
    std::uint8_t* p = image.at(x, y);
    p[0] = 255;
    p[1] = 255;
    p[2] = 0;
  };
  for (int x = b.x; x < b.x + b.w; ++x) {
    paint(x, b.y);
    paint(x, b.y + b.h - 1);
  }
  for (int y = b.y; y < b.y + b.h; ++y) {
    paint(b.x, y);
    paint(b.x + b.w - 1, y);
  }
}

std::size_t annotate(const VideoSource& video, const Timeline& timeline, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::size_t written = 0;
  for (const auto& segment : timeline.segments) {
    for (std::int64_t f = segment.start_frame; f <= segment.end_frame; ++f) {
      Frame frame = video.read_frame(f);
      draw_box(frame.image, segment.boxes[static_cast<std::size_t>(f - segment.start_frame)]);
      write_ppm(out_dir / frame_file_name(f), frame.image);
      ++written;
    }
  }
  return written;
}

}  // namespace facetrack
