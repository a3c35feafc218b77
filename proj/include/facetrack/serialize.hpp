#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "facetrack/bench.hpp"
#include "facetrack/engine.hpp"
#include "facetrack/scenario.hpp"

namespace facetrack {

using Json = nlohmann::json;

// All decoders are strict: unknown keys and wrong types are rejected with an
// error naming the offending path. Timeline, trace and ground truth raise
// SchemaError; scenario specs raise InvalidSpec; engine configs raise
// InvalidConfig.

Json box_to_json(const BoundingBox& box);
BoundingBox box_from_json(const Json& j, const std::string& path);

Json config_to_json(const EngineConfig& config);
EngineConfig config_from_json(const Json& j, const std::string& path = "config");

Json timeline_to_json(const Timeline& timeline);
Timeline timeline_from_json(const Json& j);
std::string encode_timeline(const Timeline& timeline);
Timeline decode_timeline(const std::string& text);

Json event_to_json(const EngineEvent& event);
EngineEvent event_from_json(const Json& j);
/// One JSON object per line, each terminated by '\n'.
std::string encode_trace(const std::vector<EngineEvent>& trace);
std::vector<EngineEvent> decode_trace(const std::string& text);

Json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const Json& j);
std::string encode_scenario(const ScenarioSpec& spec);
ScenarioSpec decode_scenario(const std::string& text);

Json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& j);
std::string encode_truth(const GroundTruth& truth);
GroundTruth decode_truth(const std::string& text);

Json metrics_to_json(const PrecisionRecall& pr);

/// Throws `kind` naming the first key of `j` not in `allowed`.
void require_keys_subset(const Json& j, std::initializer_list<const char*> allowed, const std::string& path,
                         ErrorKind kind);

}  // namespace facetrack
