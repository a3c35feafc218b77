#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "facetrack/serialize.hpp"
#include "facetrack/video_io.hpp"
#include "test_support.hpp"

using namespace facetrack;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome cli(const TempDir& dir, const std::string& args, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + " " + FACETRACK_CLI + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = read_file(out);
  o.err = read_file(err);
  return o;
}

std::string p(const fs::path& path) { return path.string(); }

void write_spec(const fs::path& path, const ScenarioSpec& spec) { write_file(path, encode_scenario(spec)); }

}  // namespace

TEST_CASE("gen writes frames, meta and truth") {
  TempDir dir("cli-gen");
  write_spec(dir / "spec.json", single_identity_spec(100));
  const auto o = cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "video"));
  REQUIRE(o.code == 0);
  int frames = 0;
  for (const auto& e : fs::directory_iterator(dir / "video")) {
    if (e.path().extension() == ".ppm") ++frames;
  }
  CHECK(frames == 100);
  CHECK(fs::exists(dir / "video" / "meta.json"));
  CHECK(fs::exists(dir / "video" / "truth.json"));
  CHECK(open_sequence(dir / "video").frame_count() == 100);

  REQUIRE(cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "again")).code == 0);
  for (const auto& e : fs::directory_iterator(dir / "video")) {
    CHECK(read_file(e.path()) == read_file(dir / "again" / e.path().filename()));
  }
}

TEST_CASE("gen rejects an out of range segment") {
  TempDir dir("cli-bad");
  ScenarioSpec spec = single_identity_spec(100);
  spec.identities[0].segments[0].end = 150;
  write_spec(dir / "spec.json", spec);
  const auto o = cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "video"));
  CHECK(o.code == 1);
  CHECK(o.err.find("InvalidSpec") != std::string::npos);
  CHECK(o.err.find("'A'") != std::string::npos);
}

TEST_CASE("track, trace, annotate and eval") {
  TempDir dir("cli-track");
  write_spec(dir / "spec.json", hard_cut_spec());
  REQUIRE(cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "video")).code == 0);
  write_file(dir / "run.json", R"({"seed": 4})");

  const auto o = cli(dir, "track --video " + p(dir / "video") + " --query-frame 10 --query-box 30,30,40,40 --config " +
                              p(dir / "run.json") + " --out " + p(dir / "timeline.json") + " --trace " +
                              p(dir / "trace.jsonl") + " --annotate " + p(dir / "ann") + " --query-out " +
                              p(dir / "query.emb"));
  REQUIRE(o.code == 0);
  const Timeline t = decode_timeline(read_file(dir / "timeline.json"));
  CHECK_NOTHROW(t.validate());
  CHECK(t.query_frame == 10);
  CHECK(t.config.frame_rate == 29.0);
  REQUIRE(t.segments.size() == 2);
  CHECK(t.segments[1].start_frame == 220);
  CHECK_FALSE(decode_trace(read_file(dir / "trace.jsonl")).empty());
  CHECK(decode_embedding(read_file(dir / "query.emb")).dim() == 4096);

  std::size_t annotated = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "ann")) ++annotated;
  std::size_t expected = 0;
  for (const auto& s : t.segments) expected += s.boxes.size();
  CHECK(annotated == expected);

  const auto e = cli(dir, "eval --timeline " + p(dir / "timeline.json") + " --truth " + p(dir / "video" / "truth.json") +
                              " --label A");
  REQUIRE(e.code == 0);
  const Json m = Json::parse(e.out);
  CHECK(m["precision"] == 1.0);
  CHECK(m["iou_threshold"] == 0.5);
  CHECK(m["tp"].get<int>() + m["fn"].get<int>() == 200);
  for (const char* k : {"precision", "recall", "tp", "fp", "fn", "iou_threshold"}) CHECK(m.contains(k));

  const auto unknown = cli(dir, "eval --timeline " + p(dir / "timeline.json") + " --truth " +
                                    p(dir / "video" / "truth.json") + " --label Zed");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("UnknownLabel") != std::string::npos);
}

TEST_CASE("skip frames flag overrides the config") {
  TempDir dir("cli-skip");
  write_spec(dir / "spec.json", hard_cut_spec());
  REQUIRE(cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "video")).code == 0);
  REQUIRE(cli(dir, "track --video " + p(dir / "video") + " --query-frame 10 --query-box 30,30,40,40 --out " +
                       p(dir / "t.json") + " --trace " + p(dir / "tr.jsonl") + " --skip-frames 50")
              .code == 0);
  CHECK(decode_timeline(read_file(dir / "t.json")).config.skip_frames == 50);
  bool saw = false;
  for (const auto& ev : decode_trace(read_file(dir / "tr.jsonl"))) {
    if (ev.kind == EventKind::Skip) {
      CHECK(*ev.target == ev.frame + 50);
      saw = true;
    }
  }
  CHECK(saw);
}

TEST_CASE("track error mapping") {
  TempDir dir("cli-err");
  write_spec(dir / "spec.json", single_identity_spec(40));
  REQUIRE(cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "video")).code == 0);
  const std::string base = "track --video " + p(dir / "video") + " --out " + p(dir / "t.json");

  const auto background = cli(dir, base + " --query-frame 5 --query-box 100,100,20,20");
  CHECK(background.code == 2);
  CHECK(background.err.find("NoFaceInSelection") != std::string::npos);

  const auto too_late = cli(dir, base + " --query-frame 37 --query-box 30,30,40,40");
  CHECK(too_late.code == 2);
  CHECK(too_late.err.find("VideoTooShort") != std::string::npos);

  write_file(dir / "bad.json", R"({"similarity": 0.7})");
  const auto bad = cli(dir, base + " --query-frame 5 --query-box 30,30,40,40 --config " + p(dir / "bad.json"));
  CHECK(bad.code == 1);
  CHECK(bad.err.find("similarity") != std::string::npos);

  const auto missing = cli(dir, "track --video " + p(dir / "nowhere") + " --query-frame 5 --query-box 30,30,40,40 --out " +
                                    p(dir / "t.json"));
  CHECK(missing.code == 1);

  CHECK(cli(dir, base + " --query-frame 5 --query-box 30,30,40").code == 1);
  CHECK(cli(dir, "track --video " + p(dir / "video")).code == 1);
}

TEST_CASE("seed precedence: flag, then environment, then file") {
  TempDir dir("cli-seed");
  ScenarioSpec spec = hard_cut_spec();
  spec.noise.embed_sigma = 0.9;
  write_spec(dir / "spec.json", spec);
  REQUIRE(cli(dir, "gen --spec " + p(dir / "spec.json") + " --out " + p(dir / "video")).code == 0);
  write_file(dir / "seed1.json", R"({"seed": 1})");
  write_file(dir / "seed2.json", R"({"seed": 2})");
  const std::string base = "track --video " + p(dir / "video") + " --query-frame 10 --query-box 30,30,40,40 ";
  auto query = [&](const std::string& args, const std::string& env, const std::string& name) {
    REQUIRE(cli(dir, base + args + " --out " + p(dir / "t.json") + " --query-out " + p(dir / name), env).code == 0);
    return read_file(dir / name);
  };
  const std::string file1 = query("--config " + p(dir / "seed1.json"), "", "a");
  const std::string file2 = query("--config " + p(dir / "seed2.json"), "", "b");
  CHECK(file1 != file2);
  CHECK(query("--config " + p(dir / "seed2.json"), "DVT_SEED=1", "c") == file1);
  CHECK(query("--config " + p(dir / "seed2.json") + " --seed 2", "DVT_SEED=1", "d") == file2);
  CHECK(query("--seed 1", "DVT_SEED=2", "e") == file1);

  const auto bad_env = cli(dir, base + "--out " + p(dir / "t.json"), "DVT_SEED=abc");
  CHECK(bad_env.code == 1);
  CHECK(bad_env.err.find("DVT_SEED") != std::string::npos);
}
