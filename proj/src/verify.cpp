#include "facetrack/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "facetrack/ncc.hpp"
#include "facetrack/random.hpp"
#include "facetrack/video_io.hpp"

namespace facetrack {

FaceChip preprocess_face(const RgbImage& image, const BoundingBox& box, const FaceChip* mean_image) {
  const RgbImage face = crop(image, box);
  FaceChip chip;
  chip.values = resize_bilinear_rgb(face, FaceChip::kSize, FaceChip::kSize);
  if (mean_image != nullptr) {
    for (std::size_t i = 0; i < FaceChip::kValues; ++i) chip.values[i] -= mean_image->values[i];
  }
  return chip;
}

FaceChip preprocess_face(const Frame& frame, const BoundingBox& box, const FaceChip* mean_image) {
  return preprocess_face(frame.image, box, mean_image);
}

Embedding embed(const EmbedderBackend& backend, const FaceChip& chip) {
  Embedding e;
  try {
    e = backend.embed(chip);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::BackendFailure) throw;
    throw Error(ErrorKind::BackendFailure, backend.name() + ": " + err.what());
  } catch (const std::exception& ex) {
    throw Error(ErrorKind::BackendFailure, backend.name() + ": " + ex.what());
  }
  if (e.dim() != backend.dim()) {
    throw Error(ErrorKind::BackendFailure, backend.name() + " returned " + std::to_string(e.dim()) +
                                               " values, expected " + std::to_string(backend.dim()));
  }
  if (std::all_of(e.values.begin(), e.values.end(), [](double v) { return v == 0.0; })) {
    throw Error(ErrorKind::BackendFailure, backend.name() + " returned an all-zero embedding");
  }
  return e;
}

QueryProfile build_query(std::span<const Embedding> embeddings) {
  if (embeddings.empty()) throw Error(ErrorKind::DimensionMismatch, "cannot average zero embeddings");
  const std::size_t dim = embeddings.front().dim();
  QueryProfile query;
  query.embedding.values.assign(dim, 0.0);
  auto& mean = query.embedding.values;
  // Running mean: identical inputs give back exactly that input.
  double count = 0.0;
  for (const auto& e : embeddings) {
    if (e.dim() != dim) {
      throw Error(ErrorKind::DimensionMismatch, "embedding of dim " + std::to_string(e.dim()) + " among dim " +
                                                    std::to_string(dim));
    }
    count += 1.0;
    for (std::size_t i = 0; i < dim; ++i) mean[i] += (e.values[i] - mean[i]) / count;
  }
  return query;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Verification verify(const Embedding& candidate, const QueryProfile& query, double threshold) {
  const double score = cosine_similarity(candidate, query.embedding);
  return {score > threshold, score};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> normalized_chip(const FaceChip& chip) {
  std::vector<double> v(chip.values.begin(), chip.values.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double sq = 0.0;
  for (double& x : v) {
    x -= mean;
    sq += x * x;
  }
  if (sq <= 1e-12) return {};
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

void normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

}  // namespace

SyntheticEmbedder::SyntheticEmbedder(std::vector<LabeledFace> gallery, SyntheticEmbedderParams params,
                                     std::optional<FaceChip> mean_image)
    : params_(params) {
  if (params_.dim == 0) throw Error(ErrorKind::InvalidConfig, "embedding dim must be positive");
  for (auto& face : gallery) {
    const FaceChip chip = preprocess_face(face.appearance, {0, 0, face.appearance.width, face.appearance.height},
                                          mean_image ? &*mean_image : nullptr);
    labels_.push_back(face.label);
    gallery_.push_back(normalized_chip(chip));
  }

  // Gaussian directions, Gram-Schmidt orthogonalised while the dimension
  // allows it; in high dimension random directions are nearly orthogonal anyway.
  Rng rng(mix_seed({params_.seed, 0xca9011ca1}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t count = labels_.size() + 1;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> v(params_.dim);
    for (double& x : v) x = normal(rng);
    if (count <= params_.dim) {
      for (const auto& prev : canonical_) {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * prev.values[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * prev.values[i];
      }
    }
    normalize(v);
    canonical_.push_back({std::move(v)});
  }
}

std::optional<std::size_t> SyntheticEmbedder::best_match(const FaceChip& chip) const {
  const auto probe = normalized_chip(chip);
  if (probe.empty()) return std::nullopt;
  std::optional<std::size_t> best;
  double best_score = params_.recognition_threshold;
  for (std::size_t k = 0; k < gallery_.size(); ++k) {
    if (gallery_[k].empty()) continue;
    double dot = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) dot += probe[i] * gallery_[k][i];
    if (dot >= best_score) {
      best_score = dot;
      best = k;
    }
  }
  return best;
}

std::optional<std::string> SyntheticEmbedder::recognize(const FaceChip& chip) const {
  if (auto k = best_match(chip)) return labels_[*k];
  return std::nullopt;
}

const Embedding& SyntheticEmbedder::canonical_vector(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw Error(ErrorKind::UnknownLabel, "no gallery identity '" + label + "'");
  return canonical_[static_cast<std::size_t>(it - labels_.begin())];
}

Embedding SyntheticEmbedder::embed(const FaceChip& chip) const {
  const auto match = best_match(chip);
  Embedding out = match ? canonical_[*match] : canonical_.back();
  if (params_.sigma > 0.0) {
    const std::uint64_t content = fnv1a(std::as_bytes(std::span(chip.values)));
    Rng rng(mix_seed({params_.seed, content}));
    std::normal_distribution<double> normal(0.0, params_.sigma / std::sqrt(static_cast<double>(params_.dim)));
    for (double& x : out.values) x += normal(rng);
    normalize(out.values);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string encode_embed_request(const std::string& chip_path) {
  nlohmann::json j;
  j["chip"] = chip_path;
  return j.dump();
}

Embedding decode_embed_response(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("error")) throw Error(ErrorKind::BackendFailure, "embedder reported: " + j["error"].dump());
    return {j.at("embedding").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BackendFailure, std::string("malformed embedder response: ") + e.what());
  }
}

ExternalEmbedder::ExternalEmbedder(const std::string& command, std::size_t dim, std::filesystem::path scratch_dir)
    : process_(std::make_unique<LineProcess>(command)), dim_(dim), scratch_dir_(std::move(scratch_dir)) {
  std::filesystem::create_directories(scratch_dir_);
}

Embedding ExternalEmbedder::embed(const FaceChip& chip) const {
  // Requests are serialized by the process, the counter only names files.
  const auto path = scratch_dir_ / ("chip_" + std::to_string(counter_++ % 16) + ".pfm");
  write_file(path, encode_pfm(chip));
  return decode_embed_response(process_->request(encode_embed_request(path.string())));
}

// ---------------------------------------------------------------------------

namespace {

void put_le(std::string& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < bytes; ++i) value |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return value;
}

}  // namespace

std::string encode_embedding(const Embedding& embedding) {
  std::string out;
  out.reserve(4 + 8 * embedding.dim());
  put_le(out, static_cast<std::uint32_t>(embedding.dim()), 4);
  for (double v : embedding.values) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

Embedding decode_embedding(const std::string& bytes) {
  if (bytes.size() < 4) throw Error(ErrorKind::DecodeError, "embedding file shorter than its header");
  const auto dim = static_cast<std::size_t>(get_le(bytes, 0, 4));
  if (bytes.size() != 4 + 8 * dim) {
    throw Error(ErrorKind::DecodeError, "embedding file of " + std::to_string(bytes.size()) + " bytes for dim " +
                                            std::to_string(dim));
  }
  Embedding e;
  e.values.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) e.values[i] = std::bit_cast<double>(get_le(bytes, 4 + 8 * i, 8));
  return e;
}

void write_embedding(const std::filesystem::path& path, const Embedding& embedding) {
  write_file(path, encode_embedding(embedding));
}

Embedding read_embedding(const std::filesystem::path& path) { return decode_embedding(read_file(path)); }

std::string encode_pfm(const FaceChip& chip) {
  std::string out = "PF\n" + std::to_string(FaceChip::kSize) + " " + std::to_string(FaceChip::kSize) + "\n-1.0\n";
  out.reserve(out.size() + FaceChip::kValues * 4);
  const std::size_t row = static_cast<std::size_t>(FaceChip::kSize) * 3;
  for (int y = FaceChip::kSize - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) put_le(out, std::bit_cast<std::uint32_t>(chip.values[y * row + i]), 4);
  }
  return out;
}

FaceChip decode_pfm(const std::string& bytes) {
  std::istringstream header(bytes);
  std::string magic;
  int w = 0;
  int h = 0;
  double scale = 0.0;
  header >> magic >> w >> h >> scale;
  if (!header || magic != "PF") throw Error(ErrorKind::DecodeError, "not a colour PFM");
  if (w != FaceChip::kSize || h != FaceChip::kSize) {
    throw Error(ErrorKind::DecodeError, "PFM must be " + std::to_string(FaceChip::kSize) + "x" +
                                            std::to_string(FaceChip::kSize));
  }
  if (scale >= 0) throw Error(ErrorKind::DecodeError, "only little-endian PFM is supported");
  const auto start = static_cast<std::size_t>(header.tellg()) + 1;
  if (bytes.size() < start + FaceChip::kValues * 4) throw Error(ErrorKind::DecodeError, "truncated PFM raster");
  FaceChip chip;
  const std::size_t row = static_cast<std::size_t>(FaceChip::kSize) * 3;
  std::size_t pos = start;
  for (int y = FaceChip::kSize - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i, pos += 4) {
      chip.values[y * row + i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, pos, 4)));
    }
  }
  return chip;
}

}  // namespace facetrack
