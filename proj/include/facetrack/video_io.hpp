#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facetrack/core.hpp"

namespace facetrack {

/// Random-access frame source. Implementations must return identical pixels
/// for repeated reads of one index and be safe to read from several threads.
class VideoSource {
 public:
  virtual ~VideoSource() = default;

  virtual std::int64_t frame_count() const = 0;
  virtual double frame_rate() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;

  /// Throws OutOfRange when index is outside [0, frame_count).
  Frame read_frame(std::int64_t index) const;

  bool has_frame(std::int64_t index) const { return index >= 0 && index < frame_count(); }

 protected:
  virtual RgbImage decode(std::int64_t index) const = 0;
};

struct VideoMeta {
  double frame_rate = 0.0;
  int width = 0;
  int height = 0;
};

/// A directory of frame_NNNNNN.ppm files plus meta.json.
class ImageSequenceVideo final : public VideoSource {
 public:
  explicit ImageSequenceVideo(std::filesystem::path directory);

  std::int64_t frame_count() const override { return static_cast<std::int64_t>(files_.size()); }
  double frame_rate() const override { return meta_.frame_rate; }
  int width() const override { return meta_.width; }
  int height() const override { return meta_.height; }
  const std::filesystem::path& directory() const { return directory_; }

 protected:
  RgbImage decode(std::int64_t index) const override;

 private:
  std::filesystem::path directory_;
  VideoMeta meta_;
  std::vector<std::filesystem::path> files_;
};

/// Frames held in memory; mostly useful for tests.
class MemoryVideo final : public VideoSource {
 public:
  MemoryVideo(std::vector<RgbImage> frames, double frame_rate);

  std::int64_t frame_count() const override { return static_cast<std::int64_t>(frames_.size()); }
  double frame_rate() const override { return frame_rate_; }
  int width() const override { return frames_.empty() ? 0 : frames_.front().width; }
  int height() const override { return frames_.empty() ? 0 : frames_.front().height; }

 protected:
  RgbImage decode(std::int64_t index) const override { return frames_[static_cast<std::size_t>(index)]; }

 private:
  std::vector<RgbImage> frames_;
  double frame_rate_;
};

ImageSequenceVideo open_sequence(const std::filesystem::path& directory);

std::string frame_file_name(std::int64_t index);

/// Binary P6, maxval 255. Comments in the header are accepted on read.
RgbImage decode_ppm(const std::string& bytes);
std::string encode_ppm(const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

VideoMeta read_meta(const std::filesystem::path& path);
void write_meta(const std::filesystem::path& path, const VideoMeta& meta);

/// Writes every frame of `video` plus meta.json into `directory`.
void write_sequence(const VideoSource& video, const std::filesystem::path& directory);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace facetrack
