#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "json.hpp"
#include "uavmem/anomaly.hpp"
#include "uavmem/camera_geometry.hpp"
#include "uavmem/detection.hpp"
#include "uavmem/fusion.hpp"
#include "uavmem/geodesy.hpp"
#include "uavmem/io.hpp"
#include "uavmem/size_filter.hpp"

namespace uavmem {

/// Camera pose at a frame; poses between waypoints are interpolated
/// linearly (heading along the shorter arc) and held beyond the ends.
struct UavWaypoint {
  std::int64_t frame = 0;
  GeoPoint position;
  double altitude_m = 60.0;
  double gimbal_pitch_deg = 45.0;
  double heading_deg = 0.0;
};

/// Synthetic detector. Every visible object yields `cluster_size` candidate
/// boxes, each dropped independently with `miss_prob`, jittered, and scored
/// uniformly in [conf_lo, conf_hi]. False positives are square boxes of
/// uniformly random diameter at uniformly random positions on the ground.
struct DetectorModel {
  double miss_prob = 0.0;
  double conf_lo = 0.6;
  double conf_hi = 0.9;
  int cluster_size = 1;
  double jitter_px = 0.0;
  double size_jitter_rel = 0.0;
  double fp_per_frame = 0.0;
  double fp_conf_lo = 0.5;
  double fp_conf_hi = 0.6;
  double fp_diameter_lo_px = 8.0;
  double fp_diameter_hi_px = 200.0;
  int fp_class_id = 0;
};

/// Replaces the true-detection part of the detector model for one object
/// (or all when object < 0) over an inclusive frame range.
struct DetectorOverride {
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  int object = -1;
  double miss_prob = 1.0;
  double conf_lo = 0.0;
  double conf_hi = 0.0;
};

struct UavSpec {
  std::vector<UavWaypoint> path;
  double focal_px = 2600.0;
  int image_width_px = 3840;
  int image_height_px = 2160;
  std::int64_t ts_offset_us = 0;
  DetectorModel detector;
  std::vector<DetectorOverride> overrides;
};

struct ObjectWaypoint {
  std::int64_t frame = 0;
  GeoPoint position;
};

struct SimObject {
  int class_id = 0;
  double diameter_m = 1.0;
  std::vector<ObjectWaypoint> path;
};

struct Hotspot {
  GeoPoint position;
  double radius_m = 1.0;
  double score = 1.0;
};

/// Per-frame anomaly heatmaps; disabled when width or height is 0. Cells
/// whose ground point lies within a hotspot radius get its score; each
/// other cell is independently set to U[0,1] with probability
/// `speckle_fraction`.
struct HeatmapModel {
  int width = 0;
  int height = 0;
  double speckle_fraction = 0.0;
  std::vector<Hotspot> hotspots;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::int64_t duration_frames = 100;
  double fps = 30.0;
  std::vector<UavSpec> uavs;
  std::vector<SimObject> objects;
  HeatmapModel heatmap;
};

struct SimFrame {
  std::int64_t frame_id = 0;
  std::int64_t ts_us = 0;
  CameraState cam;
  std::vector<Detection> detections;
  std::vector<GroundTruthObject> ground_truth;  // object_id = index in Scenario::objects
  FrameHeatmap heatmap;
};

using SimStream = std::vector<SimFrame>;

/// One stream per UAV, frames 0..duration-1. Randomness is drawn from
/// generators keyed by (seed, uav, frame, purpose), so streams and
/// purposes never perturb each other.
std::vector<SimStream> simulate(const Scenario& scenario);

CameraState camera_at(const UavSpec& uav, std::int64_t frame);
GeoPoint object_position(const SimObject& object, std::int64_t frame);

/// Ground-truth box: a square of side diameter / slant * focal centred on
/// the object's projection, clipped to the image. Empty when the object's
/// centre is not in the frame.
std::optional<Detection> render_object(const SimObject& object, const GeoPoint& position,
                                       const CameraState& cam);

/// Generator for one (seed, stream, frame, purpose) substream.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::int64_t frame, std::uint64_t purpose);
/// Uniform in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);
double uniform(std::mt19937_64& rng, double lo, double hi);
double normal(std::mt19937_64& rng, double mean, double sd);

/// Training points from ground-truth boxes: slant distance and box diagonal.
std::vector<SizePoint> ground_truth_size_points(const std::vector<SimStream>& streams);

std::vector<StreamFrame> to_stream_frames(const SimStream& stream);
std::vector<TelemetryRecord> telemetry_of(const SimStream& stream);
std::vector<DetectionFrame> detections_of(const SimStream& stream);
std::vector<GroundTruthFrame> ground_truth_of(const SimStream& stream);

nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

// Built-in scenarios.
/// Stationary objects, low-confidence clustered detections, random-size
/// false positives.
Scenario boosting_scenario(std::uint64_t seed);
/// A single frame over many randomly placed objects of varied physical
/// size; its ground truth serves as size-model training data.
Scenario size_survey_scenario(std::uint64_t seed);
/// Three objects while the camera turns 45 degrees over five frames with
/// heavy dropout during the turn.
Scenario heading_rotation_scenario(std::uint64_t seed);
/// One object leaves the view for `gap_frames` and comes back to the same place.
Scenario reid_scenario(std::uint64_t seed, std::int64_t gap_frames);
/// Two UAVs over one object; the second sees it with low confidence and
/// loses most of it during an occlusion window.
Scenario fusion_scenario(std::uint64_t seed);
struct FusionWindow {
  std::int64_t first_frame = 100;
  std::int64_t last_frame = 159;
};
inline constexpr FusionWindow kFusionOcclusion{};
/// Rotating camera over a persistent hotspot (noise_only = false) or over
/// sparse per-frame speckle only (noise_only = true).
Scenario anomaly_scenario(std::uint64_t seed, bool noise_only);

}  // namespace uavmem
