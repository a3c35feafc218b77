#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facetrack/core.hpp"
#include "facetrack/subprocess.hpp"

namespace facetrack {

/// 224 x 224 x 3 interleaved, mean-subtracted real channels.
struct FaceChip {
  static constexpr int kSize = 224;
  static constexpr std::size_t kValues = static_cast<std::size_t>(kSize) * kSize * 3;

  std::vector<float> values = std::vector<float>(kValues, 0.0f);

  friend bool operator==(const FaceChip&, const FaceChip&) = default;
};

/// Crop, bilinear resize to 224 x 224, convert to real and subtract
/// `mean_image` (zero when absent). Throws EmptyCrop.
FaceChip preprocess_face(const Frame& frame, const BoundingBox& box, const FaceChip* mean_image = nullptr);
FaceChip preprocess_face(const RgbImage& image, const BoundingBox& box, const FaceChip* mean_image = nullptr);

class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Embedding embed(const FaceChip& chip) const = 0;
};

/// Runs the backend and checks its contract: dimension and nonzero norm.
/// Any backend failure surfaces as BackendFailure.
Embedding embed(const EmbedderBackend& backend, const FaceChip& chip);

struct QueryProfile {
  Embedding embedding;
  std::vector<std::int64_t> source_frames;
  std::optional<std::string> identity_label;
};

/// Componentwise mean. Throws DimensionMismatch on an empty list or mixed
/// dimensions. source_frames is left for the caller to fill.
QueryProfile build_query(std::span<const Embedding> embeddings);

/// dot(a, b) / (|a| |b|) clamped to [-1, 1]. Throws ZeroVector and
/// DimensionMismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

struct Verification {
  bool accepted = false;
  double score = 0.0;
};

/// Accepts iff the cosine score is strictly greater than `threshold`.
Verification verify(const Embedding& candidate, const QueryProfile& query, double threshold);

struct SyntheticEmbedderParams {
  std::size_t dim = 4096;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  /// Minimum correlation between a chip and a gallery face for the chip to
  /// be recognised as that identity.
  double recognition_threshold = 0.5;
};

struct LabeledFace {
  std::string label;
  RgbImage appearance;
};

/// Stand-in for a face-recognition network. Each gallery identity owns a
/// canonical unit vector; one further vector represents "no known face".
/// A chip maps to the canonical vector of the best-correlated gallery face
/// (or the background vector), plus Gaussian noise of norm ~sigma seeded by
/// the chip content, renormalised.
class SyntheticEmbedder final : public EmbedderBackend {
 public:
  SyntheticEmbedder(std::vector<LabeledFace> gallery, SyntheticEmbedderParams params,
                    std::optional<FaceChip> mean_image = std::nullopt);

  std::string name() const override { return "synthetic"; }
  std::size_t dim() const override { return params_.dim; }
  Embedding embed(const FaceChip& chip) const override;

  /// Label of the gallery face the chip is recognised as, if any.
  std::optional<std::string> recognize(const FaceChip& chip) const;
  const Embedding& canonical_vector(const std::string& label) const;
  const Embedding& background_vector() const { return canonical_.back(); }

 private:
  std::optional<std::size_t> best_match(const FaceChip& chip) const;

  SyntheticEmbedderParams params_;
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> gallery_;  // zero-mean, unit-norm chips
  std::vector<Embedding> canonical_;         // one per label, then background
};

std::string encode_embed_request(const std::string& chip_path);
Embedding decode_embed_response(const std::string& line);

/// Child process speaking one JSON line per chip; chips are exchanged as
/// PFM files in a scratch directory.
class ExternalEmbedder final : public EmbedderBackend {
 public:
  ExternalEmbedder(const std::string& command, std::size_t dim, std::filesystem::path scratch_dir);

  std::string name() const override { return "external"; }
  std::size_t dim() const override { return dim_; }
  Embedding embed(const FaceChip& chip) const override;

 private:
  std::unique_ptr<LineProcess> process_;
  std::size_t dim_;
  std::filesystem::path scratch_dir_;
  mutable std::uint64_t counter_ = 0;
};

// Embedding cache file: little-endian u32 dim followed by dim f64 values.
std::string encode_embedding(const Embedding& embedding);
Embedding decode_embedding(const std::string& bytes);
void write_embedding(const std::filesystem::path& path, const Embedding& embedding);
Embedding read_embedding(const std::filesystem::path& path);

// Chips and mean images as colour PFM ("PF", little-endian, bottom row first).
std::string encode_pfm(const FaceChip& chip);
FaceChip decode_pfm(const std::string& bytes);

}  // namespace facetrack
