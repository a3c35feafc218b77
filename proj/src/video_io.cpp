#include "facetrack/video_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace facetrack {

namespace fs = std::filesystem;

Frame VideoSource::read_frame(std::int64_t index) const {
  if (!has_frame(index)) {
    throw Error(ErrorKind::OutOfRange,
                "frame " + std::to_string(index) + " outside [0, " + std::to_string(frame_count()) + ")");
  }
  Frame frame;
  frame.index = index;
  frame.timestamp_s = static_cast<double>(index) / frame_rate();
  frame.image = decode(index);
  return frame;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::string& bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) token.push_back(bytes[pos++]);
  return !token.empty();
}

int parse_positive(const std::string& token, const char* what) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      token.size() > 9) {
    throw Error(ErrorKind::DecodeError, std::string("bad PPM ") + what + " '" + token + "'");
  }
  return std::stoi(token);
}

}  // namespace

RgbImage decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  std::string token;
  if (!next_token(bytes, pos, token) || token != "P6") throw Error(ErrorKind::DecodeError, "not a binary PPM (P6)");
  next_token(bytes, pos, token);
  const int width = parse_positive(token, "width");
  next_token(bytes, pos, token);
  const int height = parse_positive(token, "height");
  next_token(bytes, pos, token);
  const int maxval = parse_positive(token, "maxval");
  if (maxval != 255) throw Error(ErrorKind::DecodeError, "unsupported PPM maxval " + std::to_string(maxval));
  if (width < 1 || height < 1) throw Error(ErrorKind::DecodeError, "empty PPM image");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorKind::DecodeError, "truncated PPM header");
  }
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < expected) throw Error(ErrorKind::DecodeError, "truncated PPM raster");
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + expected));
  return RgbImage(width, height, std::move(pixels));
}

std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

RgbImage read_ppm(const fs::path& path) { return decode_ppm(read_file(path)); }

void write_ppm(const fs::path& path, const RgbImage& image) { write_file(path, encode_ppm(image)); }

VideoMeta read_meta(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingMeta, "no meta.json at " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MissingMeta, path.string() + ": " + e.what());
  }
  VideoMeta meta;
  try {
    meta.frame_rate = j.at("frame_rate").get<double>();
    meta.width = j.at("width").get<int>();
    meta.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MissingMeta, path.string() + ": " + e.what());
  }
  if (!(meta.frame_rate > 0) || meta.width < 1 || meta.height < 1) {
    throw Error(ErrorKind::MissingMeta, path.string() + ": frame_rate, width and height must be positive");
  }
  return meta;
}

void write_meta(const fs::path& path, const VideoMeta& meta) {
  const nlohmann::json j = {{"frame_rate", meta.frame_rate}, {"width", meta.width}, {"height", meta.height}};
  write_file(path, j.dump() + "\n");
}

std::string frame_file_name(std::int64_t index) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06lld.ppm", static_cast<long long>(index));
  return name;
}

ImageSequenceVideo::ImageSequenceVideo(fs::path directory) : directory_(std::move(directory)) {
  if (!fs::is_directory(directory_)) throw Error(ErrorKind::IoError, directory_.string() + " is not a directory");
  meta_ = read_meta(directory_ / "meta.json");

  static const std::regex pattern(R"(frame_(\d{6})\.(ppm|png))");
  std::map<std::int64_t, fs::path> indexed;
  for (const auto& entry : fs::directory_iterator(directory_)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const std::int64_t index = std::stoll(m[1].str());
    if (!indexed.emplace(index, entry.path()).second) {
      throw Error(ErrorKind::NonContiguousIndices, "frame " + std::to_string(index) + " appears twice");
    }
  }
  if (indexed.empty()) throw Error(ErrorKind::NonContiguousIndices, directory_.string() + " holds no frames");
  std::int64_t expected = 0;
  for (auto& [index, path] : indexed) {
    if (index != expected) {
      throw Error(ErrorKind::NonContiguousIndices, "expected frame " + std::to_string(expected) + ", found " +
                                                       std::to_string(index));
    }
    files_.push_back(std::move(path));
    ++expected;
  }
}

RgbImage ImageSequenceVideo::decode(std::int64_t index) const {
  const fs::path& path = files_[static_cast<std::size_t>(index)];
  if (path.extension() != ".ppm") {
    throw Error(ErrorKind::DecodeError, "frame " + std::to_string(index) + ": only PPM frames are supported");
  }
  try {
    RgbImage image = read_ppm(path);
    if (image.width != meta_.width || image.height != meta_.height) {
      throw Error(ErrorKind::DecodeError, "dimensions differ from meta.json");
    }
    return image;
  } catch (const Error& e) {
    throw Error(ErrorKind::DecodeError, "frame " + std::to_string(index) + ": " + e.detail());
  }
}

MemoryVideo::MemoryVideo(std::vector<RgbImage> frames, double frame_rate)
    : frames_(std::move(frames)), frame_rate_(frame_rate) {
  for (const auto& f : frames_) {
    if (f.width != frames_.front().width || f.height != frames_.front().height) {
      throw Error(ErrorKind::DecodeError, "frames of a video must share dimensions");
    }
  }
}

ImageSequenceVideo open_sequence(const fs::path& directory) { return ImageSequenceVideo(directory); }

void write_sequence(const VideoSource& video, const fs::path& directory) {
  fs::create_directories(directory);
  for (std::int64_t i = 0; i < video.frame_count(); ++i) {
    write_ppm(directory / frame_file_name(i), video.read_frame(i).image);
  }
  write_meta(directory / "meta.json", {video.frame_rate(), video.width(), video.height()});
}

}  // namespace facetrack
