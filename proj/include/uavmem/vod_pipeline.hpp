#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "uavmem/camera_geometry.hpp"
#include "uavmem/detection.hpp"
#include "uavmem/memory_map.hpp"
#include "uavmem/size_filter.hpp"

namespace uavmem {

struct VodConfig {
  double conf_threshold = 0.5;
  double nms_iou = 0.5;
  bool boost = true;

  friend bool operator==(const VodConfig&, const VodConfig&) = default;
};

struct FrameCounts {
  std::size_t input = 0;
  std::size_t located = 0;
  std::size_t filtered_by_size = 0;
  std::size_t boosted_above_threshold = 0;
  std::size_t suppressed = 0;
  std::size_t below_threshold = 0;
};

struct FrameResult {
  std::int64_t frame_id = 0;
  std::vector<GeoDetection> boosted;          // pre-NMS, after size filtering
  std::vector<GeoDetection> final_detections;  // post-NMS, post-threshold
  FrameCounts counts;
};

/// Box centers to GPS. Boxes whose center is at/above the horizon or behind
/// the camera keep their status and get no position.
std::vector<GeoDetection> geolocate_detections(std::span<const Detection> detections,
                                               const CameraState& cam);

/// Value of p_{t-1} used to boost a detection of `class_id` at `position`.
using BoostSource = std::function<double(int class_id, const GeoPoint& position)>;

/// Per-stream video-object-detection post-processing. One instance per
/// stream; frames must arrive in nondecreasing frame_id order.
class VodPipeline {
 public:
  /// A default-constructed SizeModel disables size filtering. When `origin`
  /// is empty the first frame's camera position anchors the maps.
  VodPipeline(MapSpec spec, VodConfig config, SizeModel size_model = {},
              std::optional<GeoPoint> origin = std::nullopt);

  FrameResult process_frame(std::int64_t frame_id, const CameraState& cam,
                            std::span<const Detection> detections);

  /// Split form of process_frame for cooperative boosting: `prepare` runs
  /// geolocation, size filtering and recentering; `complete` boosts from
  /// `source`, splats, ends the frame and runs NMS + thresholding.
  struct Prepared {
    std::int64_t frame_id = 0;
    CameraState cam;
    std::size_t input = 0;
    std::vector<GeoDetection> kept;
    std::size_t filtered_by_size = 0;
  };
  Prepared prepare(std::int64_t frame_id, const CameraState& cam,
                   std::span<const Detection> detections);
  FrameResult complete(Prepared prepared, const BoostSource& source);

  /// Boost source reading this pipeline's own maps.
  BoostSource own_maps() const;

  const std::map<int, MemoryMap>& maps() const { return maps_; }
  const MapSpec& spec() const { return spec_; }
  const VodConfig& config() const { return config_; }
  std::optional<GeoPoint> origin() const { return origin_; }

 private:
  MemoryMap& map_for(int class_id, const GeoPoint& center);

  MapSpec spec_;
  VodConfig config_;
  SizeModel size_model_;
  std::optional<GeoPoint> origin_;
  std::optional<std::int64_t> last_frame_;
  std::map<int, MemoryMap> maps_;
};

/// Boosted confidence c + p, clamped to 1.
double boost_confidence(double confidence, double map_value);

/// NMS per class on boosted confidences, then thresholding.
std::vector<GeoDetection> suppress_and_threshold(std::span<const GeoDetection> boosted,
                                                 const VodConfig& config, FrameCounts& counts);

}  // namespace uavmem
