#include <doctest.h>

#include <map>
#include <random>

#include "facetrack/bench.hpp"
#include "test_support.hpp"

using namespace facetrack;
using namespace testing_support;

namespace {

ScenarioSpec hundred_frames() {
  ScenarioSpec s;
  s.duration_frames = 100;
  s.width = 128;
  s.height = 128;
  s.seed = 8;
  s.identities.push_back(identity("A", 3, {segment(0, 99, {10, 10, 32, 32})}));
  return s;
}

/// Timeline with one segment per run of consecutive frames in `boxes`.
Timeline timeline_from(const std::map<std::int64_t, BoundingBox>& boxes) {
  Timeline t;
  for (const auto& [f, b] : boxes) {
    if (!t.segments.empty() && t.segments.back().end_frame + 1 == f) {
      t.segments.back().end_frame = f;
      t.segments.back().boxes.push_back(b);
    } else {
      t.segments.push_back({f, f, {b}, 1.0});
    }
  }
  return t;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("static identity appears at the same box in every frame") {
  const GroundTruth truth = compute_ground_truth(hundred_frames());
  REQUIRE(truth.frame_count() == 100);
  for (int f = 0; f < 100; ++f) {
    const TruthEntry* e = truth.find(f, "A");
    REQUIRE(e != nullptr);
    CHECK(e->box == BoundingBox{10, 10, 32, 32});
    CHECK(e->visible);
  }
}

TEST_CASE("linear motion") {
  auto spec = hundred_frames();
  spec.identities[0].segments[0].velocity_x = 1.0;
  CHECK(compute_ground_truth(spec).find(50, "A")->box == BoundingBox{60, 10, 32, 32});
  CHECK(spec.identities[0].segments[0].box_at(50) == BoundingBox{60, 10, 32, 32});
}

TEST_CASE("generation is deterministic and the seed only changes texture") {
  const auto spec = hundred_frames();
  const auto a = generate_scenario(spec);
  const auto b = generate_scenario(spec);
  for (int f = 0; f < 100; f += 7) CHECK(a.video->read_frame(f).image == b.video->read_frame(f).image);

  auto other = spec;
  other.seed = 9;
  const auto c = generate_scenario(other);
  CHECK(*c.truth == *a.truth);
  CHECK_FALSE(c.video->read_frame(0).image == a.video->read_frame(0).image);
}

TEST_CASE("occlusion hides the identity and hard cuts change the background") {
  auto spec = hundred_frames();
  spec.events = {{20, ScenarioEventKind::OcclusionStart, "A"}, {30, ScenarioEventKind::OcclusionEnd, "A"},
                 {50, ScenarioEventKind::HardCut, ""}};
  const auto g = generate_scenario(spec);
  CHECK(g.truth->find(19, "A")->visible);
  CHECK_FALSE(g.truth->find(20, "A")->visible);
  CHECK_FALSE(g.truth->find(29, "A")->visible);
  CHECK(g.truth->find(30, "A")->visible);

  const RgbImage occluded = g.video->read_frame(25).image;
  for (int y = 10; y < 42; ++y) {
    for (int x = 10; x < 42; ++x) CHECK(occluded.at(x, y)[0] == 128);
  }
  CHECK(crop(g.video->read_frame(49).image, {80, 80, 40, 40}) == crop(g.video->read_frame(48).image, {80, 80, 40, 40}));
  CHECK_FALSE(crop(g.video->read_frame(50).image, {80, 80, 40, 40}) ==
              crop(g.video->read_frame(49).image, {80, 80, 40, 40}));
}

TEST_CASE("identity textures differ by label") {
  auto spec = hundred_frames();
  spec.identities.push_back(identity("B", 4, {segment(0, 99, {70, 70, 32, 32})}));
  CHECK_FALSE(render_identity(spec, spec.identities[0], 32, 32) == render_identity(spec, spec.identities[1], 32, 32));
  const auto gallery = identity_gallery(spec);
  REQUIRE(gallery.size() == 2);
  CHECK(gallery[0].label == "A");
  CHECK(gallery[0].appearance.width == 224);
}

TEST_CASE("spec validation names the problem") {
  auto spec = hundred_frames();
  spec.identities[0].segments[0].end = 100;
  try {
    spec.validate();
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidSpec);
    CHECK(std::string(e.what()).find("'A'") != std::string::npos);
  }

  spec = hundred_frames();
  spec.identities[0].segments[0].velocity_x = 3.0;  // leaves the frame
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::InvalidSpec);

  spec = hundred_frames();
  spec.identities[0].segments.push_back(segment(50, 60, {10, 10, 32, 32}));
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::InvalidSpec);

  spec = hundred_frames();
  spec.events.push_back({5, ScenarioEventKind::OcclusionStart, "Nobody"});
  CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::InvalidSpec);

  spec = hundred_frames();
  spec.noise.detector_miss = 1.5;
  CHECK(kind_of([&] { generate_scenario(spec); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("evaluate examples") {
  const GroundTruth truth = compute_ground_truth(hundred_frames());
  std::map<std::int64_t, BoundingBox> perfect;
  for (int f = 0; f < 100; ++f) perfect[f] = truth.find(f, "A")->box;
  const auto p = evaluate(timeline_from(perfect), truth, "A");
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.tp == 100);

  const auto e = evaluate(Timeline{}, truth, "A");
  CHECK(e.precision == 1.0);
  CHECK(e.recall == 0.0);
  CHECK(e.fn == 100);

  CHECK(kind_of([&] { evaluate(Timeline{}, truth, "Q"); }) == ErrorKind::UnknownLabel);
}

TEST_CASE("eighty hits, five false frames, twenty misses") {
  auto spec = hundred_frames();
  spec.duration_frames = 110;
  spec.identities[0].segments[0].end = 99;
  const GroundTruth truth = compute_ground_truth(spec);
  std::map<std::int64_t, BoundingBox> boxes;
  for (int f = 0; f < 80; ++f) boxes[f] = truth.find(f, "A")->box;
  for (int f = 100; f < 105; ++f) boxes[f] = {10, 10, 32, 32};
  const auto pr = evaluate(timeline_from(boxes), truth, "A");
  CHECK(pr.tp == 80);
  CHECK(pr.fp == 5);
  CHECK(pr.fn == 20);
  CHECK(pr.precision == doctest::Approx(80.0 / 85.0).epsilon(1e-12));
  CHECK(pr.recall == doctest::Approx(0.80).epsilon(1e-12));
}

TEST_CASE("evaluate is monotone and accounts for every visible frame") {
  auto spec = hundred_frames();
  spec.events = {{40, ScenarioEventKind::OcclusionStart, "A"}, {60, ScenarioEventKind::OcclusionEnd, "A"}};
  const GroundTruth truth = compute_ground_truth(spec);
  std::int64_t visible = 0;
  for (int f = 0; f < 100; ++f) visible += truth.find(f, "A")->visible ? 1 : 0;

  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> frame(0, 99), coin(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::int64_t, BoundingBox> boxes;
    for (int k = 0; k < 30; ++k) {
      const int f = frame(rng);
      boxes[f] = coin(rng) ? truth.find(f, "A")->box : BoundingBox{80, 80, 20, 20};
    }
    const auto before = evaluate(timeline_from(boxes), truth, "A");
    CHECK(before.tp + before.fn == visible);

    int f = frame(rng);
    while (boxes.count(f)) f = (f + 1) % 100;
    auto with_correct = boxes;
    with_correct[f] = truth.find(f, "A")->box;
    const auto after = evaluate(timeline_from(with_correct), truth, "A");
    if (truth.find(f, "A")->visible) {
      CHECK(after.precision >= before.precision);
      CHECK(after.recall >= before.recall);
    }
    auto with_wrong = boxes;
    with_wrong[f] = {80, 80, 20, 20};
    CHECK(evaluate(timeline_from(with_wrong), truth, "A").recall <= before.recall);
  }
}

TEST_CASE("evaluate rejects frames beyond the truth") {
  const GroundTruth truth = compute_ground_truth(hundred_frames());
  Timeline t;
  t.segments.push_back({99, 100, {{10, 10, 32, 32}, {10, 10, 32, 32}}, 1.0});
  CHECK(kind_of([&] { evaluate(t, truth, "A"); }) == ErrorKind::OutOfRange);
}
