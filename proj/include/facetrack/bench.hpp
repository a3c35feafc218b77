#pragma once

#include <memory>
#include <string>

#include "facetrack/engine.hpp"
#include "facetrack/scenario.hpp"
#include "facetrack/verify.hpp"
#include "facetrack/video_io.hpp"

namespace facetrack {

/// Renders a ScenarioSpec frame by frame on demand. Identities are drawn as
/// an 8 x 8 grid of seeded colour cells stretched over their box, on a
/// background of 8 px seeded cells that is re-drawn after every hard cut.
class ScenarioVideo final : public VideoSource {
 public:
  explicit ScenarioVideo(ScenarioSpec spec);

  std::int64_t frame_count() const override { return spec_.duration_frames; }
  double frame_rate() const override { return spec_.frame_rate; }
  int width() const override { return spec_.width; }
  int height() const override { return spec_.height; }
  const ScenarioSpec& spec() const { return spec_; }

 protected:
  RgbImage decode(std::int64_t index) const override;

 private:
  ScenarioSpec spec_;
};

struct GeneratedScenario {
  std::shared_ptr<ScenarioVideo> video;
  std::shared_ptr<GroundTruth> truth;
};

/// Validates the spec and builds the video and its ground truth.
GeneratedScenario generate_scenario(const ScenarioSpec& spec);

GroundTruth compute_ground_truth(const ScenarioSpec& spec);

/// Appearance of one identity rendered into a width x height image, the same
/// pattern that ScenarioVideo stretches over the identity's box.
RgbImage render_identity(const ScenarioSpec& spec, const IdentitySpec& identity, int width, int height);

/// Gallery of every identity at face-chip resolution, for SyntheticEmbedder.
std::vector<LabeledFace> identity_gallery(const ScenarioSpec& spec);

struct PrecisionRecall {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double precision = 1.0;
  double recall = 1.0;
  double iou_threshold = 0.5;

  friend bool operator==(const PrecisionRecall&, const PrecisionRecall&) = default;
};

/// Frame-level scoring. A reported box is a true positive when the query
/// identity is visible there with IoU >= iou_threshold, otherwise a false
/// positive; fn counts visible frames without a true positive. Empty
/// denominators give 1.0. Throws UnknownLabel.
PrecisionRecall evaluate(const Timeline& timeline, const GroundTruth& truth, const std::string& query_label,
                         double iou_threshold = 0.5);

}  // namespace facetrack
