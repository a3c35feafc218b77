// facetrack: long-term face tracking from a single query box.
//
//   facetrack gen   --spec scenario.json --out DIR
//   facetrack track --video DIR --query-frame N --query-box x,y,w,h --config run.json --out timeline.json
//                   [--trace trace.jsonl] [--annotate DIR] [--query-out query.emb] [--skip-frames N] [--seed N]
//   facetrack eval  --timeline timeline.json --truth truth.json --label NAME [--iou 0.5]
//
// Exit codes: 0 success, 1 I/O or configuration error, 2 bootstrap failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>

#include "facetrack/bench.hpp"
#include "facetrack/engine.hpp"
#include "facetrack/run_config.hpp"
#include "facetrack/serialize.hpp"
#include "facetrack/video_io.hpp"

namespace fs = std::filesystem;
using namespace facetrack;

namespace {

BoundingBox parse_box(const std::string& text) {
  std::istringstream in(text);
  BoundingBox b;
  char c1 = 0, c2 = 0, c3 = 0;
  if (!(in >> b.x >> c1 >> b.y >> c2 >> b.w >> c3 >> b.h) || c1 != ',' || c2 != ',' || c3 != ',' || !in.eof()) {
    throw Error(ErrorKind::InvalidConfig, "--query-box must look like x,y,w,h, got '" + text + "'");
  }
  if (!b.valid()) throw Error(ErrorKind::InvalidConfig, "--query-box needs positive width and height");
  return b;
}

struct TrackArgs {
  std::string video;
  std::int64_t query_frame = 0;
  std::string query_box;
  std::string config;
  std::string out;
  std::string trace;
  std::string annotate_dir;
  std::string query_out;
  std::optional<int> skip_frames;
  std::optional<std::uint64_t> seed;
};

int cmd_track(const TrackArgs& args) {
  const BoundingBox user_box = parse_box(args.query_box);
  const ImageSequenceVideo video = open_sequence(args.video);

  Json raw = Json::object();
  if (!args.config.empty()) {
    try {
      raw = Json::parse(read_file(args.config));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, args.config + ": " + e.what());
    }
  }
  RunConfigFile config = parse_run_config(raw);
  if (!raw.contains("frame_rate")) config.engine.frame_rate = video.frame_rate();
  if (const char* env = std::getenv("DVT_SEED")) {
    const std::string text = env;
    std::size_t used = 0;
    try {
      config.seed = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-') {
      throw Error(ErrorKind::InvalidConfig, "DVT_SEED is not a non-negative integer: '" + text + "'");
    }
  }
  if (args.seed) config.seed = *args.seed;
  if (args.skip_frames) config.engine.skip_frames = *args.skip_frames;
  config.engine.validate();

  const fs::path scratch = fs::temp_directory_path() / ("facetrack-" + std::to_string(::getpid()));
  const Backends backends = make_backends(config, args.video, scratch);
  const RunResult result = run(video, args.query_frame, user_box, backends.view(), config.engine);

  write_file(args.out, encode_timeline(result.timeline));
  if (!args.trace.empty()) write_file(args.trace, encode_trace(result.trace));
  if (!args.query_out.empty()) write_embedding(args.query_out, result.query.embedding);
  if (!args.annotate_dir.empty()) annotate(video, result.timeline, args.annotate_dir);

  std::error_code ignored;
  fs::remove_all(scratch, ignored);
  return 0;
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir) {
  const ScenarioSpec spec = decode_scenario(read_file(spec_path));
  const GeneratedScenario scenario = generate_scenario(spec);
  write_sequence(*scenario.video, out_dir);
  write_file(fs::path(out_dir) / "truth.json", encode_truth(*scenario.truth));
  write_file(fs::path(out_dir) / "scenario.json", encode_scenario(spec));
  return 0;
}

int cmd_eval(const std::string& timeline_path, const std::string& truth_path, const std::string& label, double iou) {
  const Timeline timeline = decode_timeline(read_file(timeline_path));
  const GroundTruth truth = decode_truth(read_file(truth_path));
  std::cout << metrics_to_json(evaluate(timeline, truth, label, iou)).dump() << "\n";
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::NoFaceInSelection:
    case ErrorKind::VideoTooShort:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-term face tracking from a single query box"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "Track the queried face through a video");
  track_cmd->add_option("--video", track.video, "Directory of frame_NNNNNN.ppm files and meta.json")->required();
  track_cmd->add_option("--query-frame", track.query_frame, "Frame holding the query face")->required();
  track_cmd->add_option("--query-box", track.query_box, "Query face as x,y,w,h")->required();
  track_cmd->add_option("--config", track.config, "Run configuration JSON");
  track_cmd->add_option("--out", track.out, "Timeline JSON to write")->required();
  track_cmd->add_option("--trace", track.trace, "Engine event trace (JSONL) to write");
  track_cmd->add_option("--annotate", track.annotate_dir, "Directory for frames with the tracked box drawn");
  track_cmd->add_option("--query-out", track.query_out, "Binary file for the averaged query embedding");
  track_cmd->add_option("--skip-frames", track.skip_frames, "Frames skipped after a failed sweep (default 60)");
  track_cmd->add_option("--seed", track.seed, "Seed for synthetic backends (overrides DVT_SEED and the config)");

  std::string spec_path;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Render a synthetic scenario");
  gen_cmd->add_option("--spec", spec_path, "Scenario spec JSON")->required();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  std::string timeline_path;
  std::string truth_path;
  std::string label;
  double iou_threshold = 0.5;
  auto* eval_cmd = app.add_subcommand("eval", "Frame-level precision and recall of a timeline");
  eval_cmd->add_option("--timeline", timeline_path, "Timeline JSON")->required();
  eval_cmd->add_option("--truth", truth_path, "Ground truth JSON")->required();
  eval_cmd->add_option("--label", label, "Identity label of the query")->required();
  eval_cmd->add_option("--iou", iou_threshold, "IoU needed for a correct frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*track_cmd) return cmd_track(track);
    if (*gen_cmd) return cmd_gen(spec_path, gen_out);
    if (*eval_cmd) return cmd_eval(timeline_path, truth_path, label, iou_threshold);
  } catch (const Error& e) {
    std::cerr << "facetrack: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "facetrack: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
