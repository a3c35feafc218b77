#include "facetrack/detect.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "facetrack/ncc.hpp"
#include "facetrack/random.hpp"
#include "facetrack/video_io.hpp"

namespace facetrack {

namespace {

void sort_by_score(std::vector<Detection>& detections) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
}

}  // namespace

std::vector<Detection> detect_all_faces(const DetectorBackend& backend, const Frame& frame,
                                        const std::optional<BoundingBox>& region) {
  std::optional<BoundingBox> search;
  if (region) {
    search = clamp_to(*region, frame.width(), frame.height());
    if (!search->valid()) {
      throw Error(ErrorKind::OutOfRange, "search region " + to_string(*region) + " lies outside the frame");
    }
  }

  std::vector<Detection> raw;
  try {
    raw = backend.detect(frame, backend.capabilities().supports_region_restriction ? search : std::nullopt);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::BackendFailure, backend.name() + ": " + e.what());
  }

  std::vector<Detection> out;
  out.reserve(raw.size());
  for (Detection d : raw) {
    d.box = clamp_to(d.box, frame.width(), frame.height());
    if (!d.box.valid()) continue;
    d.score = std::clamp(d.score, 0.0, 1.0);
    if (search && !search->contains_point(d.box.center_x(), d.box.center_y())) continue;
    out.push_back(d);
  }
  sort_by_score(out);
  return out;
}

Detection localize_query(const DetectorBackend& backend, const Frame& frame, const BoundingBox& user_box,
                         double search_region_scale) {
  const BoundingBox region = clamp_to(scale_about_center(user_box, search_region_scale), frame.width(), frame.height());
  if (!region.valid()) {
    throw Error(ErrorKind::NoFaceInSelection, "selection " + to_string(user_box) + " lies outside the frame");
  }
  const auto detections = detect_all_faces(backend, frame, region);
  const Detection* best = nullptr;
  double best_iou = 0.0;
  for (const auto& d : detections) {
    const double overlap = iou(d.box, user_box);
    if (overlap > best_iou) {
      best_iou = overlap;
      best = &d;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorKind::NoFaceInSelection, "no face overlaps " + to_string(user_box) + " in frame " +
                                                  std::to_string(frame.index));
  }
  return *best;
}

std::vector<Detection> non_max_suppression(std::vector<Detection> detections, double iou_threshold) {
  sort_by_score(detections);
  std::vector<Detection> kept;
  for (const auto& d : detections) {
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const Detection& k) { return iou(k.box, d.box) > iou_threshold; });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

// ---------------------------------------------------------------------------

SyntheticDetector::SyntheticDetector(std::shared_ptr<const GroundTruth> truth, SyntheticDetectorParams params)
    : truth_(std::move(truth)), params_(params) {}

std::vector<Detection> SyntheticDetector::detect(const Frame& frame, const std::optional<BoundingBox>& region) const {
  std::vector<Detection> out;
  if (frame.index < 0 || frame.index >= truth_->frame_count()) return out;

  const auto frame_key = static_cast<std::uint64_t>(frame.index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& entry : truth_->frames[static_cast<std::size_t>(frame.index)]) {
    if (!entry.visible) continue;
    Rng rng(mix_seed({params_.seed, frame_key, fnv1a(entry.label)}));
    if (params_.miss_rate > 0.0 && unit(rng) < params_.miss_rate) continue;
    BoundingBox box = entry.box;
    if (params_.jitter > 0) {
      std::uniform_int_distribution<int> offset(-params_.jitter, params_.jitter);
      box.x += offset(rng);
      box.y += offset(rng);
    }
    out.push_back({box, 1.0});
  }
  if (params_.false_positive_rate > 0.0) {
    Rng rng(mix_seed({params_.seed, frame_key, 0xfa15e}));
    if (unit(rng) < params_.false_positive_rate) {
      const int side = std::min({std::uniform_int_distribution<int>(24, 48)(rng), frame.width(), frame.height()});
      const int x = std::uniform_int_distribution<int>(0, frame.width() - side)(rng);
      const int y = std::uniform_int_distribution<int>(0, frame.height() - side)(rng);
      const double score = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
      out.push_back({{x, y, side, side}, score});
    }
  }
  if (region) {
    std::erase_if(out, [&](const Detection& d) { return !region->contains_point(d.box.center_x(), d.box.center_y()); });
  }
  sort_by_score(out);
  return out;
}

// ---------------------------------------------------------------------------

TemplateDetector::TemplateDetector(std::vector<RgbImage> gallery, TemplateDetectorParams params)
    : params_(std::move(params)) {
  for (const auto& image : gallery) gallery_.push_back(to_gray(image));
}

std::vector<Detection> TemplateDetector::detect(const Frame& frame, const std::optional<BoundingBox>&) const {
  const GrayImage gray = to_gray(frame.image);
  const int fw = gray.width;
  const int fh = gray.height;

  // Integral images of intensity and squared intensity, (fw+1) x (fh+1).
  const auto stride = static_cast<std::size_t>(fw + 1);
  std::vector<double> sum(stride * (fh + 1), 0.0);
  std::vector<double> sum_sq(stride * (fh + 1), 0.0);
  for (int y = 0; y < fh; ++y) {
    double row = 0.0;
    double row_sq = 0.0;
    for (int x = 0; x < fw; ++x) {
      const double v = gray(x, y);
      row += v;
      row_sq += v * v;
      sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row;
      sum_sq[(y + 1) * stride + x + 1] = sum_sq[y * stride + x + 1] + row_sq;
    }
  }
  auto window = [&](const std::vector<double>& table, int x, int y, int w, int h) {
    return table[(y + h) * stride + x + w] - table[y * stride + x + w] - table[(y + h) * stride + x] +
           table[y * stride + x];
  };

  std::vector<Detection> candidates;
  for (const auto& source : gallery_) {
    for (double scale : params_.scales) {
      const int tw = static_cast<int>(std::lround(source.width * scale));
      const int th = static_cast<int>(std::lround(source.height * scale));
      if (tw < 4 || th < 4 || tw > fw || th > fh) continue;
      const NccTemplate tpl(resize_bilinear(source, tw, th), {0, 0, tw, th});
      if (tpl.norm() <= 1e-9) continue;
      const double n = static_cast<double>(tw) * th;
      const auto& centered = tpl.centered();
      for (int y = 0; y + th <= fh; ++y) {
        for (int x = 0; x + tw <= fw; ++x) {
          const double s = window(sum, x, y, tw, th);
          const double var_sum = window(sum_sq, x, y, tw, th) - s * s / n;
          if (var_sum <= 1e-6) continue;
          double cross = 0.0;
          for (int row = 0; row < th; ++row) {
            const float* src = gray.values.data() + static_cast<std::size_t>(y + row) * fw + x;
            const float* t = centered.data() + static_cast<std::size_t>(row) * tw;
            for (int col = 0; col < tw; ++col) cross += static_cast<double>(src[col]) * t[col];
          }
          const double score = cross / (std::sqrt(var_sum) * tpl.norm());
          if (score >= params_.ncc_threshold) candidates.push_back({{x, y, tw, th}, std::min(score, 1.0)});
        }
      }
    }
  }
  return non_max_suppression(std::move(candidates), params_.nms_iou);
}

// ---------------------------------------------------------------------------

std::string encode_detect_request(const std::string& frame_path, const std::optional<BoundingBox>& region) {
  nlohmann::json j;
  j["frame"] = frame_path;
  j["region"] = region ? nlohmann::json::array({region->x, region->y, region->w, region->h}) : nlohmann::json(nullptr);
  return j.dump();
}

std::vector<Detection> decode_detect_response(const std::string& line) {
  std::vector<Detection> out;
  try {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("error")) throw Error(ErrorKind::BackendFailure, "detector reported: " + j["error"].dump());
    for (const auto& d : j.at("detections")) {
      const auto& b = d.at("box");
      if (!b.is_array() || b.size() != 4) throw Error(ErrorKind::BackendFailure, "box must be [x,y,w,h]");
      out.push_back({{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()}, d.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BackendFailure, std::string("malformed detector response: ") + e.what());
  }
  return out;
}

ExternalDetector::ExternalDetector(const std::string& command, std::filesystem::path scratch_dir)
    : process_(std::make_unique<LineProcess>(command)), scratch_dir_(std::move(scratch_dir)) {
  std::filesystem::create_directories(scratch_dir_);
}

std::vector<Detection> ExternalDetector::detect(const Frame& frame, const std::optional<BoundingBox>& region) const {
  const auto path = scratch_dir_ / frame_file_name(frame.index);
  write_ppm(path, frame.image);
  return decode_detect_response(process_->request(encode_detect_request(path.string(), region)));
}

}  // namespace facetrack
