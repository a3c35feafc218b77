#include "facetrack/run_config.hpp"

#include "facetrack/bench.hpp"
#include "facetrack/video_io.hpp"

namespace facetrack {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, path + ": " + what);
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

fs::path resolve(const Json& params, const char* key, const fs::path& fallback) {
  return params.contains(key) ? fs::path(text(params[key], key)) : fallback;
}

std::optional<ScenarioSpec> load_scenario_if_present(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  return decode_scenario(read_file(path));
}

ScenarioSpec require_scenario(const fs::path& path, const char* who) {
  auto spec = load_scenario_if_present(path);
  if (!spec) bad(who, "needs a scenario file, none at " + path.string());
  return *spec;
}

}  // namespace

RunConfigFile parse_run_config(const Json& j) {
  require_keys_subset(j,
                      {"similarity_threshold", "distance_threshold", "skip_frames", "bootstrap_frames", "frame_rate",
                       "search_region_scale", "periodic_verify_interval", "detector", "embedder", "detector_params",
                       "embedder_params", "tracker", "mean_image", "seed"},
                      "", ErrorKind::InvalidConfig);
  RunConfigFile c;
  Json engine = Json::object();
  for (const char* k : {"similarity_threshold", "distance_threshold", "skip_frames", "bootstrap_frames", "frame_rate",
                        "search_region_scale", "periodic_verify_interval"}) {
    if (j.contains(k)) engine[k] = j[k];
  }
  c.engine = config_from_json(engine, "");

  if (j.contains("detector")) c.detector = text(j["detector"], "detector");
  if (c.detector != "synthetic" && c.detector != "template" && c.detector != "external") {
    bad("detector", "must be synthetic, template or external, not '" + c.detector + "'");
  }
  if (j.contains("embedder")) c.embedder = text(j["embedder"], "embedder");
  if (c.embedder != "synthetic" && c.embedder != "external") {
    bad("embedder", "must be synthetic or external, not '" + c.embedder + "'");
  }

  if (j.contains("detector_params")) c.detector_params = j["detector_params"];
  if (c.detector == "synthetic") {
    require_keys_subset(c.detector_params, {"truth", "scenario", "miss_rate", "false_positive_rate", "jitter"},
                        "detector_params", ErrorKind::InvalidConfig);
  } else if (c.detector == "template") {
    require_keys_subset(c.detector_params, {"templates", "scenario", "ncc_threshold", "nms_iou", "scales"},
                        "detector_params", ErrorKind::InvalidConfig);
  } else {
    require_keys_subset(c.detector_params, {"command"}, "detector_params", ErrorKind::InvalidConfig);
  }

  if (j.contains("embedder_params")) c.embedder_params = j["embedder_params"];
  if (c.embedder == "synthetic") {
    require_keys_subset(c.embedder_params, {"scenario", "dim", "sigma", "recognition_threshold"}, "embedder_params",
                        ErrorKind::InvalidConfig);
  } else {
    require_keys_subset(c.embedder_params, {"command", "dim"}, "embedder_params", ErrorKind::InvalidConfig);
  }

  if (j.contains("tracker")) {
    const Json& t = j["tracker"];
    require_keys_subset(t, {"grid_rows", "grid_cols", "search_radius", "reliability_ema", "refresh_threshold"}, "tracker",
                        ErrorKind::InvalidConfig);
    if (t.contains("grid_rows")) c.tracker.grid.rows = integer(t["grid_rows"], "tracker.grid_rows");
    if (t.contains("grid_cols")) c.tracker.grid.cols = integer(t["grid_cols"], "tracker.grid_cols");
    if (t.contains("search_radius")) c.tracker.search_radius = integer(t["search_radius"], "tracker.search_radius");
    if (t.contains("reliability_ema")) c.tracker.options.reliability_ema = number(t["reliability_ema"], "tracker.reliability_ema");
    if (t.contains("refresh_threshold")) {
      c.tracker.options.refresh_threshold = number(t["refresh_threshold"], "tracker.refresh_threshold");
    }
    if (c.tracker.grid.rows < 1 || c.tracker.grid.cols < 1) bad("tracker", "grid must be at least 1x1");
    if (c.tracker.search_radius < 0) bad("tracker.search_radius", "must be >= 0");
  }
  if (j.contains("mean_image") && !j["mean_image"].is_null()) c.mean_image = text(j["mean_image"], "mean_image");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0) bad("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.engine.validate();
  return c;
}

RunConfigFile load_run_config(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

Backends make_backends(const RunConfigFile& config, const fs::path& video_dir, const fs::path& scratch_dir) {
  Backends b;
  b.tracker = config.tracker;
  if (config.mean_image) b.mean_image = decode_pfm(read_file(*config.mean_image));

  const Json& dp = config.detector_params;
  if (config.detector == "synthetic") {
    const auto scenario = load_scenario_if_present(resolve(dp, "scenario", video_dir / "scenario.json"));
    SyntheticDetectorParams params;
    params.seed = config.seed;
    if (scenario) {
      params.miss_rate = scenario->noise.detector_miss;
      params.false_positive_rate = scenario->noise.detector_false_positive;
      params.jitter = scenario->noise.detector_jitter;
    }
    if (dp.contains("miss_rate")) params.miss_rate = number(dp["miss_rate"], "detector_params.miss_rate");
    if (dp.contains("false_positive_rate")) {
      params.false_positive_rate = number(dp["false_positive_rate"], "detector_params.false_positive_rate");
    }
    if (dp.contains("jitter")) params.jitter = integer(dp["jitter"], "detector_params.jitter");
    auto truth = std::make_shared<GroundTruth>(decode_truth(read_file(resolve(dp, "truth", video_dir / "truth.json"))));
    b.detector = std::make_unique<SyntheticDetector>(std::move(truth), params);
  } else if (config.detector == "template") {
    std::vector<RgbImage> gallery;
    if (dp.contains("templates")) {
      if (!dp["templates"].is_array()) bad("detector_params.templates", "expected a list of PPM paths");
      for (const auto& p : dp["templates"]) gallery.push_back(read_ppm(text(p, "detector_params.templates[]")));
    } else {
      const auto spec = require_scenario(resolve(dp, "scenario", video_dir / "scenario.json"), "template detector");
      for (const auto& id : spec.identities) {
        if (id.segments.empty()) continue;
        const auto& box = id.segments.front().start_box;
        gallery.push_back(render_identity(spec, id, box.w, box.h));
      }
    }
    TemplateDetectorParams params;
    if (dp.contains("ncc_threshold")) params.ncc_threshold = number(dp["ncc_threshold"], "detector_params.ncc_threshold");
    if (dp.contains("nms_iou")) params.nms_iou = number(dp["nms_iou"], "detector_params.nms_iou");
    if (dp.contains("scales")) {
      params.scales.clear();
      for (const auto& s : dp["scales"]) params.scales.push_back(number(s, "detector_params.scales[]"));
    }
    b.detector = std::make_unique<TemplateDetector>(std::move(gallery), params);
  } else {
    if (!dp.contains("command")) bad("detector_params.command", "missing");
    b.detector = std::make_unique<ExternalDetector>(text(dp["command"], "detector_params.command"),
                                                    scratch_dir / "detector");
  }

  const Json& ep = config.embedder_params;
  if (config.embedder == "synthetic") {
    const auto spec = require_scenario(resolve(ep, "scenario", video_dir / "scenario.json"), "synthetic embedder");
    SyntheticEmbedderParams params;
    params.seed = config.seed;
    params.sigma = spec.noise.embed_sigma;
    if (ep.contains("dim")) {
      const int dim = integer(ep["dim"], "embedder_params.dim");
      if (dim < 1) bad("embedder_params.dim", "must be >= 1");
      params.dim = static_cast<std::size_t>(dim);
    }
    if (ep.contains("sigma")) params.sigma = number(ep["sigma"], "embedder_params.sigma");
    if (ep.contains("recognition_threshold")) {
      params.recognition_threshold = number(ep["recognition_threshold"], "embedder_params.recognition_threshold");
    }
    b.embedder = std::make_unique<SyntheticEmbedder>(identity_gallery(spec), params, b.mean_image);
  } else {
    if (!ep.contains("command")) bad("embedder_params.command", "missing");
    std::size_t dim = 4096;
    if (ep.contains("dim")) dim = static_cast<std::size_t>(integer(ep["dim"], "embedder_params.dim"));
    b.embedder = std::make_unique<ExternalEmbedder>(text(ep["command"], "embedder_params.command"), dim,
                                                    scratch_dir / "embedder");
  }
  return b;
}

}  // namespace facetrack
