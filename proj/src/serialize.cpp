#include "facetrack/serialize.hpp"

#include <algorithm>
#include <sstream>

namespace facetrack {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& path, const std::string& what) {
  throw Error(kind, path + ": " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& path, ErrorKind kind) {
  if (!obj.is_object()) fail(kind, path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(kind, path + "." + key, "missing");
  return *it;
}

std::int64_t as_int(const Json& j, const std::string& path, ErrorKind kind) {
  if (!j.is_number_integer()) fail(kind, path, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t as_u64(const Json& j, const std::string& path, ErrorKind kind) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(kind, path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

double as_double(const Json& j, const std::string& path, ErrorKind kind) {
  if (!j.is_number()) fail(kind, path, "expected a number");
  return j.get<double>();
}

std::string as_string(const Json& j, const std::string& path, ErrorKind kind) {
  if (!j.is_string()) fail(kind, path, "expected a string");
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& path, ErrorKind kind) {
  if (!j.is_array()) fail(kind, path, "expected an array");
  return j;
}

BoundingBox box_from(const Json& j, const std::string& path, ErrorKind kind) {
  if (!j.is_array() || j.size() != 4) fail(kind, path, "expected [x, y, w, h]");
  BoundingBox b;
  b.x = static_cast<int>(as_int(j[0], path + "[0]", kind));
  b.y = static_cast<int>(as_int(j[1], path + "[1]", kind));
  b.w = static_cast<int>(as_int(j[2], path + "[2]", kind));
  b.h = static_cast<int>(as_int(j[3], path + "[3]", kind));
  return b;
}

}  // namespace

void require_keys_subset(const Json& j, std::initializer_list<const char*> allowed, const std::string& path,
                         ErrorKind kind) {
  if (!j.is_object()) fail(kind, path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) fail(kind, path.empty() ? key : path + "." + key, "unknown key '" + key + "'");
  }
}

Json box_to_json(const BoundingBox& box) { return Json::array({box.x, box.y, box.w, box.h}); }

BoundingBox box_from_json(const Json& j, const std::string& path) { return box_from(j, path, ErrorKind::SchemaError); }

// ---------------------------------------------------------------------------

Json config_to_json(const EngineConfig& c) {
  Json j;
  j["similarity_threshold"] = c.similarity_threshold;
  j["distance_threshold"] = c.distance_threshold;
  j["skip_frames"] = c.skip_frames;
  j["bootstrap_frames"] = c.bootstrap_frames;
  j["frame_rate"] = c.frame_rate;
  j["search_region_scale"] = c.search_region_scale;
  j["periodic_verify_interval"] = c.periodic_verify_interval ? Json(*c.periodic_verify_interval) : Json(nullptr);
  return j;
}

EngineConfig config_from_json(const Json& j, const std::string& path) {
  constexpr auto kind = ErrorKind::InvalidConfig;
  require_keys_subset(j,
                      {"similarity_threshold", "distance_threshold", "skip_frames", "bootstrap_frames", "frame_rate",
                       "search_region_scale", "periodic_verify_interval"},
                      path, kind);
  EngineConfig c;
  auto key = [&](const char* k) { return path.empty() ? std::string(k) : path + "." + k; };
  if (j.contains("similarity_threshold")) c.similarity_threshold = as_double(j["similarity_threshold"], key("similarity_threshold"), kind);
  if (j.contains("distance_threshold")) c.distance_threshold = as_double(j["distance_threshold"], key("distance_threshold"), kind);
  if (j.contains("skip_frames")) c.skip_frames = static_cast<int>(as_int(j["skip_frames"], key("skip_frames"), kind));
  if (j.contains("bootstrap_frames")) c.bootstrap_frames = static_cast<int>(as_int(j["bootstrap_frames"], key("bootstrap_frames"), kind));
  if (j.contains("frame_rate")) c.frame_rate = as_double(j["frame_rate"], key("frame_rate"), kind);
  if (j.contains("search_region_scale")) c.search_region_scale = as_double(j["search_region_scale"], key("search_region_scale"), kind);
  if (j.contains("periodic_verify_interval") && !j["periodic_verify_interval"].is_null()) {
    c.periodic_verify_interval =
        static_cast<int>(as_int(j["periodic_verify_interval"], key("periodic_verify_interval"), kind));
  }
  return c;
}

// ---------------------------------------------------------------------------

Json timeline_to_json(const Timeline& t) {
  Json segments = Json::array();
  for (const auto& s : t.segments) {
    Json boxes = Json::array();
    for (const auto& b : s.boxes) boxes.push_back(box_to_json(b));
    segments.push_back({{"start", s.start_frame}, {"end", s.end_frame}, {"boxes", boxes},
                        {"mean_score", s.mean_verification_score}});
  }
  return {{"query_frame", t.query_frame}, {"config", config_to_json(t.config)}, {"segments", segments}};
}

Timeline timeline_from_json(const Json& j) {
  constexpr auto kind = ErrorKind::SchemaError;
  require_keys_subset(j, {"query_frame", "config", "segments"}, "", kind);
  Timeline t;
  t.query_frame = as_int(require(j, "query_frame", "", kind), "query_frame", kind);
  try {
    t.config = config_from_json(require(j, "config", "", kind), "config");
  } catch (const Error& e) {
    throw Error(kind, e.detail());
  }
  const Json& segments = as_array(require(j, "segments", "", kind), "segments", kind);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string path = "segments[" + std::to_string(i) + "]";
    const Json& s = segments[i];
    require_keys_subset(s, {"start", "end", "boxes", "mean_score"}, path, kind);
    TimelineSegment seg;
    seg.start_frame = as_int(require(s, "start", path, kind), path + ".start", kind);
    seg.end_frame = as_int(require(s, "end", path, kind), path + ".end", kind);
    seg.mean_verification_score = as_double(require(s, "mean_score", path, kind), path + ".mean_score", kind);
    const Json& boxes = as_array(require(s, "boxes", path, kind), path + ".boxes", kind);
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      seg.boxes.push_back(box_from(boxes[b], path + ".boxes[" + std::to_string(b) + "]", kind));
    }
    t.segments.push_back(std::move(seg));
  }
  t.validate();
  return t;
}

std::string encode_timeline(const Timeline& timeline) { return timeline_to_json(timeline).dump(2) + "\n"; }

Timeline decode_timeline(const std::string& text) {
  try {
    return timeline_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("timeline: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json event_to_json(const EngineEvent& e) {
  Json j;
  j["frame"] = e.frame;
  j["kind"] = std::string(to_string(e.kind));
  if (e.box) j["box"] = box_to_json(*e.box);
  if (e.score) j["score"] = *e.score;
  if (e.confidence) j["confidence"] = *e.confidence;
  if (e.distance) j["distance"] = *e.distance;
  if (e.region) j["region"] = box_to_json(*e.region);
  if (e.detections) j["detections"] = *e.detections;
  if (e.target) j["target"] = *e.target;
  return j;
}

EngineEvent event_from_json(const Json& j) {
  constexpr auto kind = ErrorKind::SchemaError;
  require_keys_subset(j, {"frame", "kind", "box", "score", "confidence", "distance", "region", "detections", "target"},
                      "event", kind);
  EngineEvent e;
  e.frame = as_int(require(j, "frame", "event", kind), "event.frame", kind);
  e.kind = event_kind_from_string(as_string(require(j, "kind", "event", kind), "event.kind", kind));
  if (j.contains("box")) e.box = box_from(j["box"], "event.box", kind);
  if (j.contains("score")) e.score = as_double(j["score"], "event.score", kind);
  if (j.contains("confidence")) e.confidence = as_double(j["confidence"], "event.confidence", kind);
  if (j.contains("distance")) e.distance = as_double(j["distance"], "event.distance", kind);
  if (j.contains("region")) e.region = box_from(j["region"], "event.region", kind);
  if (j.contains("detections")) e.detections = static_cast<int>(as_int(j["detections"], "event.detections", kind));
  if (j.contains("target")) e.target = as_int(j["target"], "event.target", kind);
  return e;
}

std::string encode_trace(const std::vector<EngineEvent>& trace) {
  std::string out;
  for (const auto& e : trace) out += event_to_json(e).dump() + "\n";
  return out;
}

std::vector<EngineEvent> decode_trace(const std::string& text) {
  std::vector<EngineEvent> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(event_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::SchemaError, "trace line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view scenario_event_name(ScenarioEventKind k) {
  switch (k) {
    case ScenarioEventKind::HardCut: return "HardCut";
    case ScenarioEventKind::OcclusionStart: return "OcclusionStart";
    case ScenarioEventKind::OcclusionEnd: return "OcclusionEnd";
  }
  return "HardCut";
}

}  // namespace

Json scenario_to_json(const ScenarioSpec& spec) {
  Json identities = Json::array();
  for (const auto& id : spec.identities) {
    Json segments = Json::array();
    for (const auto& s : id.segments) {
      segments.push_back({{"start", s.start}, {"end", s.end}, {"start_box", box_to_json(s.start_box)},
                          {"velocity", Json::array({s.velocity_x, s.velocity_y})}});
    }
    identities.push_back({{"label", id.label}, {"segments", segments}, {"appearance_seed", id.appearance_seed}});
  }
  Json events = Json::array();
  for (const auto& e : spec.events) {
    Json ej{{"frame", e.frame}, {"kind", std::string(scenario_event_name(e.kind))}};
    if (e.kind != ScenarioEventKind::HardCut) ej["label"] = e.label;
    events.push_back(ej);
  }
  return {{"duration_frames", spec.duration_frames},
          {"dimensions", Json::array({spec.width, spec.height})},
          {"frame_rate", spec.frame_rate},
          {"identities", identities},
          {"events", events},
          {"noise",
           {{"detector_miss", spec.noise.detector_miss},
            {"detector_false_positive", spec.noise.detector_false_positive},
            {"detector_jitter", spec.noise.detector_jitter},
            {"embed_sigma", spec.noise.embed_sigma},
            {"sensor_noise", spec.noise.sensor_noise}}},
          {"seed", spec.seed}};
}

ScenarioSpec scenario_from_json(const Json& j) {
  constexpr auto kind = ErrorKind::InvalidSpec;
  require_keys_subset(j, {"duration_frames", "dimensions", "frame_rate", "identities", "events", "noise", "seed"}, "",
                      kind);
  ScenarioSpec spec;
  spec.duration_frames = static_cast<int>(as_int(require(j, "duration_frames", "", kind), "duration_frames", kind));
  const Json& dims = require(j, "dimensions", "", kind);
  if (!dims.is_array() || dims.size() != 2) fail(kind, "dimensions", "expected [width, height]");
  spec.width = static_cast<int>(as_int(dims[0], "dimensions[0]", kind));
  spec.height = static_cast<int>(as_int(dims[1], "dimensions[1]", kind));
  if (j.contains("frame_rate")) spec.frame_rate = as_double(j["frame_rate"], "frame_rate", kind);
  if (j.contains("seed")) spec.seed = as_u64(j["seed"], "seed", kind);

  const Json& identities = as_array(require(j, "identities", "", kind), "identities", kind);
  for (std::size_t i = 0; i < identities.size(); ++i) {
    const std::string path = "identities[" + std::to_string(i) + "]";
    const Json& ij = identities[i];
    require_keys_subset(ij, {"label", "segments", "appearance_seed"}, path, kind);
    IdentitySpec id;
    id.label = as_string(require(ij, "label", path, kind), path + ".label", kind);
    if (ij.contains("appearance_seed")) id.appearance_seed = as_u64(ij["appearance_seed"], path + ".appearance_seed", kind);
    const Json& segments = as_array(require(ij, "segments", path, kind), path + ".segments", kind);
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const std::string sp = path + ".segments[" + std::to_string(s) + "]";
      const Json& sj = segments[s];
      require_keys_subset(sj, {"start", "end", "start_box", "velocity"}, sp, kind);
      IdentitySegment seg;
      seg.start = static_cast<int>(as_int(require(sj, "start", sp, kind), sp + ".start", kind));
      seg.end = static_cast<int>(as_int(require(sj, "end", sp, kind), sp + ".end", kind));
      seg.start_box = box_from(require(sj, "start_box", sp, kind), sp + ".start_box", kind);
      if (sj.contains("velocity")) {
        const Json& v = sj["velocity"];
        if (!v.is_array() || v.size() != 2) fail(kind, sp + ".velocity", "expected [vx, vy]");
        seg.velocity_x = as_double(v[0], sp + ".velocity[0]", kind);
        seg.velocity_y = as_double(v[1], sp + ".velocity[1]", kind);
      }
      id.segments.push_back(seg);
    }
    spec.identities.push_back(std::move(id));
  }

  if (j.contains("events")) {
    const Json& events = as_array(j["events"], "events", kind);
    for (std::size_t k = 0; k < events.size(); ++k) {
      const std::string path = "events[" + std::to_string(k) + "]";
      const Json& ej = events[k];
      require_keys_subset(ej, {"frame", "kind", "label"}, path, kind);
      ScenarioEvent e;
      e.frame = static_cast<int>(as_int(require(ej, "frame", path, kind), path + ".frame", kind));
      const std::string name = as_string(require(ej, "kind", path, kind), path + ".kind", kind);
      if (name == "HardCut") {
        e.kind = ScenarioEventKind::HardCut;
      } else if (name == "OcclusionStart") {
        e.kind = ScenarioEventKind::OcclusionStart;
      } else if (name == "OcclusionEnd") {
        e.kind = ScenarioEventKind::OcclusionEnd;
      } else {
        fail(kind, path + ".kind", "unknown event kind '" + name + "'");
      }
      if (e.kind != ScenarioEventKind::HardCut) e.label = as_string(require(ej, "label", path, kind), path + ".label", kind);
      spec.events.push_back(std::move(e));
    }
  }

  if (j.contains("noise")) {
    const Json& n = j["noise"];
    require_keys_subset(n, {"detector_miss", "detector_false_positive", "detector_jitter", "embed_sigma", "sensor_noise"},
                        "noise", kind);
    if (n.contains("detector_miss")) spec.noise.detector_miss = as_double(n["detector_miss"], "noise.detector_miss", kind);
    if (n.contains("detector_false_positive")) {
      spec.noise.detector_false_positive = as_double(n["detector_false_positive"], "noise.detector_false_positive", kind);
    }
    if (n.contains("detector_jitter")) {
      spec.noise.detector_jitter = static_cast<int>(as_int(n["detector_jitter"], "noise.detector_jitter", kind));
    }
    if (n.contains("embed_sigma")) spec.noise.embed_sigma = as_double(n["embed_sigma"], "noise.embed_sigma", kind);
    if (n.contains("sensor_noise")) spec.noise.sensor_noise = as_double(n["sensor_noise"], "noise.sensor_noise", kind);
  }
  spec.validate();
  return spec;
}

std::string encode_scenario(const ScenarioSpec& spec) { return scenario_to_json(spec).dump(2) + "\n"; }

ScenarioSpec decode_scenario(const std::string& text) {
  try {
    return scenario_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, std::string("scenario: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Json truth_to_json(const GroundTruth& truth) {
  Json frames = Json::object();
  for (std::size_t f = 0; f < truth.frames.size(); ++f) {
    Json entries = Json::array();
    for (const auto& e : truth.frames[f]) {
      entries.push_back({{"label", e.label}, {"box", box_to_json(e.box)}, {"visible", e.visible}});
    }
    frames[std::to_string(f)] = entries;
  }
  return {{"frames", frames}};
}

GroundTruth truth_from_json(const Json& j) {
  constexpr auto kind = ErrorKind::SchemaError;
  require_keys_subset(j, {"frames"}, "", kind);
  const Json& frames = require(j, "frames", "", kind);
  if (!frames.is_object()) fail(kind, "frames", "expected an object keyed by frame index");
  GroundTruth truth;
  for (const auto& [key, entries] : frames.items()) {
    const std::string path = "frames." + key;
    std::size_t consumed = 0;
    long long index = -1;
    try {
      index = std::stoll(key, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != key.size() || index < 0) fail(kind, path, "frame keys must be non-negative integers");
    if (truth.frames.size() <= static_cast<std::size_t>(index)) truth.frames.resize(static_cast<std::size_t>(index) + 1);
    auto& slot = truth.frames[static_cast<std::size_t>(index)];
    const Json& list = as_array(entries, path, kind);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ep = path + "[" + std::to_string(i) + "]";
      require_keys_subset(list[i], {"label", "box", "visible"}, ep, kind);
      TruthEntry e;
      e.label = as_string(require(list[i], "label", ep, kind), ep + ".label", kind);
      e.box = box_from(require(list[i], "box", ep, kind), ep + ".box", kind);
      const Json& visible = require(list[i], "visible", ep, kind);
      if (!visible.is_boolean()) fail(kind, ep + ".visible", "expected a boolean");
      e.visible = visible.get<bool>();
      const bool duplicate = std::any_of(slot.begin(), slot.end(), [&](const TruthEntry& o) { return o.label == e.label; });
      if (duplicate) fail(kind, ep, "label '" + e.label + "' listed twice");
      slot.push_back(std::move(e));
    }
  }
  return truth;
}

std::string encode_truth(const GroundTruth& truth) { return truth_to_json(truth).dump() + "\n"; }

GroundTruth decode_truth(const std::string& text) {
  try {
    return truth_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("truth: ") + e.what());
  }
}

Json metrics_to_json(const PrecisionRecall& pr) {
  return {{"precision", pr.precision}, {"recall", pr.recall}, {"tp", pr.tp},
          {"fp", pr.fp},               {"fn", pr.fn},         {"iou_threshold", pr.iou_threshold}};
}

}  // namespace facetrack
