#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "facetrack/detect.hpp"
#include "facetrack/engine.hpp"
#include "facetrack/serialize.hpp"
#include "facetrack/verify.hpp"

namespace facetrack {

/// Configuration file accepted by `facetrack track`: every EngineConfig
/// field at top level, plus backend selection and parameters.
struct RunConfigFile {
  EngineConfig engine;
  std::string detector = "synthetic";  // synthetic | template | external
  std::string embedder = "synthetic";  // synthetic | external
  Json detector_params = Json::object();
  Json embedder_params = Json::object();
  TrackerParams tracker;
  std::optional<std::string> mean_image;  // path to a 224x224 colour PFM
  std::uint64_t seed = 0;
};

/// Strict: unknown keys anywhere raise InvalidConfig naming the key.
RunConfigFile parse_run_config(const Json& j);
RunConfigFile load_run_config(const std::filesystem::path& path);

/// Owning bundle of constructed backends.
struct Backends {
  std::unique_ptr<DetectorBackend> detector;
  std::unique_ptr<EmbedderBackend> embedder;
  std::optional<FaceChip> mean_image;
  TrackerParams tracker;

  EngineBackends view() const { return {*detector, *embedder, tracker, mean_image ? &*mean_image : nullptr}; }
};

/// Builds the configured backends. Synthetic backends read scenario.json and
/// truth.json from `video_dir` unless their params name other files.
Backends make_backends(const RunConfigFile& config, const std::filesystem::path& video_dir,
                       const std::filesystem::path& scratch_dir);

}  // namespace facetrack
