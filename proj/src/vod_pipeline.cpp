#include "uavmem/vod_pipeline.hpp"

#include <algorithm>
#include <map>

#include "uavmem/error.hpp"

namespace uavmem {

std::vector<GeoDetection> geolocate_detections(std::span<const Detection> detections,
                                               const CameraState& cam) {
  validate(cam);
  std::vector<GeoDetection> out;
  out.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    GeoDetection g;
    g.detection = detections[i];
    g.boosted_confidence = detections[i].confidence;
    g.source_index = i;
    const PixelOffset p = to_offset(detections[i].center_col(), detections[i].center_row(), cam);
    GroundTrace t;
    switch (locate_ground(p, cam, t)) {
      case GroundStatus::Ok:
        g.position = offset_to_gps(rotate_to_north({t.x_m, t.y_m, t.d_m}, cam.heading_deg),
                                   camera_position(cam));
        g.slant_distance_m = t.d_m;
        g.status = LocateStatus::Located;
        break;
      case GroundStatus::AboveHorizon:
        g.status = LocateStatus::AboveHorizon;
        break;
      case GroundStatus::BehindCamera:
        g.status = LocateStatus::BehindCamera;
        break;
    }
    out.push_back(std::move(g));
  }
  return out;
}

double boost_confidence(double confidence, double map_value) {
  return std::min(1.0, confidence + std::max(0.0, map_value));
}

std::vector<GeoDetection> suppress_and_threshold(std::span<const GeoDetection> boosted,
                                                 const VodConfig& config, FrameCounts& counts) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < boosted.size(); ++i) by_class[boosted[i].detection.class_id].push_back(i);

  std::vector<std::size_t> survivors;
  for (const auto& [cls, idx] : by_class) {
    std::vector<Detection> boxes;
    std::vector<double> scores;
    boxes.reserve(idx.size());
    scores.reserve(idx.size());
    for (std::size_t i : idx) {
      boxes.push_back(boosted[i].detection);
      scores.push_back(boosted[i].boosted_confidence);
    }
    const auto kept = nms_indices(boxes, scores, config.nms_iou);
    counts.suppressed += idx.size() - kept.size();
    for (std::size_t k : kept) survivors.push_back(idx[k]);
  }
  // Output order: descending boosted confidence, ties by input order.
  std::stable_sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
    if (boosted[a].boosted_confidence != boosted[b].boosted_confidence) {
      return boosted[a].boosted_confidence > boosted[b].boosted_confidence;
    }
    return a < b;
  });

  std::vector<GeoDetection> out;
  for (std::size_t i : survivors) {
    if (boosted[i].boosted_confidence >= config.conf_threshold) {
      out.push_back(boosted[i]);
    } else {
      ++counts.below_threshold;
    }
  }
  return out;
}

VodPipeline::VodPipeline(MapSpec spec, VodConfig config, SizeModel size_model,
                         std::optional<GeoPoint> origin)
    : spec_(spec), config_(config), size_model_(std::move(size_model)), origin_(origin) {
  spec_.validate();
}

MemoryMap& VodPipeline::map_for(int class_id, const GeoPoint& center) {
  auto it = maps_.find(class_id);
  if (it == maps_.end()) {
    it = maps_.emplace(class_id, MemoryMap(spec_, *origin_, center, class_id)).first;
  }
  return it->second;
}

VodPipeline::Prepared VodPipeline::prepare(std::int64_t frame_id, const CameraState& cam,
                                           std::span<const Detection> detections) {
  if (last_frame_ && frame_id < *last_frame_) {
    throw Error(ErrorCode::OutOfOrderFrame, "frame " + std::to_string(frame_id) +
                                                " arrived after frame " + std::to_string(*last_frame_));
  }
  validate(cam);
  last_frame_ = frame_id;
  const GeoPoint uav = camera_position(cam);
  if (!origin_) origin_ = uav;

  Prepared p;
  p.frame_id = frame_id;
  p.cam = cam;
  p.input = detections.size();

  auto located = geolocate_detections(detections, cam);
  if (size_model_.empty()) {
    p.kept = std::move(located);
  } else {
    SizeFilterResult f = filter(located, size_model_);
    p.kept = std::move(f.kept);
    p.filtered_by_size = f.discarded.size();
  }

  for (const GeoDetection& d : p.kept) {
    if (d.located()) map_for(d.detection.class_id, uav);
  }
  for (auto& [cls, map] : maps_) map.recenter(uav);
  return p;
}

FrameResult VodPipeline::complete(Prepared prepared, const BoostSource& source) {
  FrameResult r;
  r.frame_id = prepared.frame_id;
  r.counts.input = prepared.input;
  r.counts.filtered_by_size = prepared.filtered_by_size;

  for (GeoDetection& d : prepared.kept) {
    d.boosted_confidence = d.detection.confidence;
    if (!d.located()) continue;
    ++r.counts.located;
    if (config_.boost) {
      d.boosted_confidence = boost_confidence(d.detection.confidence,
                                              source(d.detection.class_id, *d.position));
      if (d.detection.confidence < config_.conf_threshold &&
          d.boosted_confidence >= config_.conf_threshold) {
        ++r.counts.boosted_above_threshold;
      }
    }
  }

  // The map is updated with the detector's original confidences.
  for (const GeoDetection& d : prepared.kept) {
    if (d.located()) maps_.at(d.detection.class_id).splat(*d.position, d.detection.confidence);
  }
  for (auto& [cls, map] : maps_) map.end_frame();

  r.final_detections = suppress_and_threshold(prepared.kept, config_, r.counts);
  r.boosted = std::move(prepared.kept);
  return r;
}

BoostSource VodPipeline::own_maps() const {
  return [this](int class_id, const GeoPoint& position) {
    const auto it = maps_.find(class_id);
    return it == maps_.end() ? 0.0 : it->second.query(position);
  };
}

FrameResult VodPipeline::process_frame(std::int64_t frame_id, const CameraState& cam,
                                       std::span<const Detection> detections) {
  Prepared p = prepare(frame_id, cam, detections);
  return complete(std::move(p), own_maps());
}

}  // namespace uavmem
