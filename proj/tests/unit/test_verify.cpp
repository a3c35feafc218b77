#include <doctest.h>

#include <cmath>
#include <random>

#include "facetrack/bench.hpp"
#include "facetrack/verify.hpp"
#include "test_support.hpp"

using namespace facetrack;
using namespace testing_support;

namespace {

Embedding vec(std::initializer_list<double> v) { return {std::vector<double>(v)}; }

ScenarioSpec gallery_spec() {
  ScenarioSpec s;
  s.duration_frames = 10;
  s.width = 128;
  s.height = 128;
  s.seed = 21;
  s.identities.push_back(identity("A", 1, {segment(0, 9, {10, 10, 40, 40})}));
  s.identities.push_back(identity("B", 2, {segment(0, 9, {70, 70, 40, 40})}));
  return s;
}

}  // namespace

TEST_CASE("preprocess of a 224 crop keeps pixel values") {
  const RgbImage img = noise_image(224, 224, 8);
  const FaceChip chip = preprocess_face(img, {0, 0, 224, 224});
  for (std::size_t i = 0; i < FaceChip::kValues; ++i) REQUIRE(chip.values[i] == static_cast<float>(img.pixels[i]));

  const FaceChip zero_mean;
  CHECK(preprocess_face(img, {0, 0, 224, 224}, &zero_mean) == chip);
}

TEST_CASE("preprocess of a uniform 448 crop is uniform") {
  const RgbImage img = flat_image(448, 448, 10, 20, 30);
  const FaceChip chip = preprocess_face(img, {0, 0, 448, 448});
  for (std::size_t i = 0; i < FaceChip::kValues; i += 3) {
    REQUIRE(chip.values[i] == 10.0f);
    REQUIRE(chip.values[i + 1] == 20.0f);
    REQUIRE(chip.values[i + 2] == 30.0f);
  }
}

TEST_CASE("subtracting the chip itself leaves zeros") {
  const RgbImage img = noise_image(60, 50, 3);
  const FaceChip chip = preprocess_face(img, {5, 5, 40, 40});
  const FaceChip diff = preprocess_face(img, {5, 5, 40, 40}, &chip);
  for (float v : diff.values) REQUIRE(v == 0.0f);
}

TEST_CASE("preprocess rejects boxes outside the image") {
  CHECK_THROWS_AS(preprocess_face(noise_image(20, 20, 1), {30, 30, 5, 5}), Error);
}

TEST_CASE("build_query examples") {
  const Embedding v = vec({0.3, -1.25, 7.0, 1e-3});
  const std::vector<Embedding> five(5, v);
  CHECK(build_query(five).embedding == v);
  const std::vector<Embedding> two{vec({1, 0}), vec({0, 1})};
  CHECK(build_query(two).embedding == vec({0.5, 0.5}));
  CHECK(build_query(std::vector<Embedding>{v}).embedding == v);

  CHECK_THROWS_AS(build_query(std::vector<Embedding>{}), Error);
  try {
    build_query(std::vector<Embedding>{vec({1, 2}), vec({1, 2, 3})});
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("build_query matches a summation oracle on noisy scenario embeddings") {
  const auto spec = gallery_spec();
  const auto g = generate_scenario(spec);
  const SyntheticEmbedder emb(identity_gallery(spec), {4096, 0.8, 17, 0.5});
  std::vector<Embedding> samples;
  for (int f = 0; f < 5; ++f) {
    samples.push_back(emb.embed(preprocess_face(g.video->read_frame(f), g.truth->find(f, "A")->box)));
  }
  const Embedding mean = build_query(samples).embedding;

  double err = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < mean.dim(); ++i) {
    long double sum = 0.0L;
    for (const auto& s : samples) sum += s.values[i];
    const double oracle = static_cast<double>(sum / 5.0L);
    err += (mean.values[i] - oracle) * (mean.values[i] - oracle);
    norm += oracle * oracle;
  }
  CHECK(std::sqrt(err / norm) <= 1e-12);
}

TEST_CASE("cosine examples") {
  CHECK(cosine_similarity(vec({3, 4}), vec({3, 4})) == doctest::Approx(1.0));
  CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK(cosine_similarity(vec({1, 2, 3}), vec({2, 4, 6})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity(vec({1, 0}), vec({-1, 0})) == -1.0);

  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;
  };
  CHECK(kind_of([] { cosine_similarity(vec({0, 0}), vec({1, 0})); }) == ErrorKind::ZeroVector);
  CHECK(kind_of([] { cosine_similarity(vec({1, 0}), vec({1, 0, 0})); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("cosine properties on random pairs") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 500; ++i) {
    Embedding a, b;
    for (int k = 0; k < 16; ++k) {
      a.values.push_back(n(rng));
      b.values.push_back(n(rng));
    }
    const double c = cosine_similarity(a, b);
    CHECK(c == doctest::Approx(cosine_similarity(b, a)).epsilon(1e-12));
    CHECK(std::abs(c) <= 1.0);
    Embedding scaled = a;
    const double alpha = scale(rng);
    for (auto& v : scaled.values) v *= alpha;
    CHECK(cosine_similarity(scaled, b) == doctest::Approx(c).epsilon(1e-9));
    CHECK(cosine_similarity(scaled, a) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("verify examples") {
  QueryProfile q;
  q.embedding = vec({0.6, 0.8});
  const auto same = verify(q.embedding, q, 0.70);
  CHECK(same.accepted);
  CHECK(same.score == doctest::Approx(1.0));
  const auto ortho = verify(vec({0.8, -0.6}), q, 0.70);
  CHECK_FALSE(ortho.accepted);
  CHECK(ortho.score == doctest::Approx(0.0).epsilon(1e-12));

  // cos = 0.5 exactly for (1, 0) vs (1, sqrt 3) is not representable; use an exact pair instead
  QueryProfile axis;
  axis.embedding = vec({1, 0});
  const auto boundary = verify(vec({3, 4}), axis, 0.6);
  CHECK(boundary.score == 0.6);
  CHECK_FALSE(boundary.accepted);
  CHECK(verify(vec({3, 4}), axis, 0.5999999).accepted);
  CHECK(verify(vec({300, 400}), axis, 0.5999999).accepted);
}

TEST_CASE("synthetic embedder returns canonical vectors") {
  const auto spec = gallery_spec();
  const auto g = generate_scenario(spec);
  const SyntheticEmbedder emb(identity_gallery(spec), {4096, 0.0, 5, 0.5});
  const Frame f = g.video->read_frame(3);
  const FaceChip chip_a = preprocess_face(f, g.truth->find(3, "A")->box);
  const FaceChip chip_b = preprocess_face(f, g.truth->find(3, "B")->box);

  CHECK(emb.recognize(chip_a) == std::optional<std::string>("A"));
  CHECK(emb.recognize(chip_b) == std::optional<std::string>("B"));
  CHECK(emb.embed(chip_a) == emb.canonical_vector("A"));
  CHECK(emb.embed(chip_a) == emb.embed(chip_a));
  CHECK(cosine_similarity(emb.embed(chip_a), emb.embed(chip_b)) ==
        doctest::Approx(cosine_similarity(emb.canonical_vector("A"), emb.canonical_vector("B"))));
  CHECK(std::abs(cosine_similarity(emb.canonical_vector("A"), emb.canonical_vector("B"))) < 1e-12);

  const FaceChip background = preprocess_face(f, {60, 5, 40, 40});
  CHECK_FALSE(emb.recognize(background).has_value());
  CHECK(emb.embed(background) == emb.background_vector());
  CHECK_THROWS_AS(emb.canonical_vector("Z"), Error);
}

TEST_CASE("synthetic embedder noise is seeded and unit norm") {
  const auto spec = gallery_spec();
  const auto g = generate_scenario(spec);
  const SyntheticEmbedder a(identity_gallery(spec), {256, 0.5, 5, 0.5});
  const SyntheticEmbedder b(identity_gallery(spec), {256, 0.5, 5, 0.5});
  const FaceChip chip = preprocess_face(g.video->read_frame(0), g.truth->find(0, "A")->box);
  const Embedding e = a.embed(chip);
  CHECK(e == b.embed(chip));
  double n2 = 0.0;
  for (double v : e.values) n2 += v * v;
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
  const double c = cosine_similarity(e, a.canonical_vector("A"));
  CHECK(c < 1.0);
  CHECK(c > 0.7);
}

TEST_CASE("embed wraps backend problems") {
  struct Wrong final : EmbedderBackend {
    std::string name() const override { return "wrong"; }
    std::size_t dim() const override { return 4; }
    Embedding embed(const FaceChip&) const override { return vec({1, 2}); }
  };
  struct Zero final : EmbedderBackend {
    std::string name() const override { return "zero"; }
    std::size_t dim() const override { return 2; }
    Embedding embed(const FaceChip&) const override { return vec({0, 0}); }
  };
  CHECK_THROWS_AS(facetrack::embed(Wrong{}, FaceChip{}), Error);
  CHECK_THROWS_AS(facetrack::embed(Zero{}, FaceChip{}), Error);
}

TEST_CASE("embedding file round trip") {
  const Embedding e = vec({1.5, -0.25, 3e-300, 42.0});
  const std::string bytes = encode_embedding(e);
  REQUIRE(bytes.size() == 4 + 4 * 8);
  CHECK(static_cast<unsigned char>(bytes[0]) == 4);
  CHECK(bytes[1] == 0);
  CHECK(decode_embedding(bytes) == e);
  CHECK(encode_embedding(decode_embedding(bytes)) == bytes);
  CHECK_THROWS_AS(decode_embedding(bytes.substr(0, 10)), Error);
}

TEST_CASE("pfm chip round trip") {
  FaceChip chip;
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> d(-128.0f, 128.0f);
  for (auto& v : chip.values) v = d(rng);
  const std::string bytes = encode_pfm(chip);
  CHECK(bytes.substr(0, 3) == "PF\n");
  CHECK(decode_pfm(bytes) == chip);
}

TEST_CASE("embedder protocol and external process") {
  CHECK(encode_embed_request("/x/c.pfm") == R"({"chip":"/x/c.pfm"})");
  CHECK(decode_embed_response(R"({"embedding": [1, 0.5]})") == vec({1, 0.5}));
  CHECK_THROWS_AS(decode_embed_response(R"({"error": "x"})"), Error);

  TempDir dir("extemb");
  const ExternalEmbedder emb(R"(while read -r line; do echo '{"embedding": [0.0, 3.0, 4.0]}'; done)", 3, dir / "s");
  const Embedding e = facetrack::embed(emb, FaceChip{});
  CHECK(e == vec({0.0, 3.0, 4.0}));

  const ExternalEmbedder wrong_dim(R"(while read -r line; do echo '{"embedding": [1.0]}'; done)", 3, dir / "s2");
  CHECK_THROWS_AS(facetrack::embed(wrong_dim, FaceChip{}), Error);
}
