#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "uavmem/anomaly.hpp"
#include "uavmem/camera_geometry.hpp"
#include "uavmem/detection.hpp"
#include "uavmem/fusion.hpp"
#include "uavmem/tracking.hpp"
#include "uavmem/vod_pipeline.hpp"

namespace uavmem {

// All readers throw Io when the file cannot be opened and InvalidInput on
// malformed lines, naming the file and line number.

struct TelemetryRecord {
  std::int64_t frame_id = 0;
  std::int64_t ts_us = 0;
  CameraState cam;
};

struct DetectionFrame {
  std::int64_t frame_id = 0;
  std::vector<Detection> detections;
};

struct GroundTruthObject {
  std::int64_t object_id = 0;
  Detection box;  // confidence 1
  GeoPoint position;
};

struct GroundTruthFrame {
  std::int64_t frame_id = 0;
  std::vector<GroundTruthObject> objects;
};

/// One row of a MOT-style track file.
struct TrackRow {
  std::int64_t frame_id = 0;
  std::int64_t track_id = 0;
  Detection box;
  GeoPoint position;
};

struct HeatmapRecord {
  std::int64_t frame_id = 0;
  std::string path;  // resolved against the index file's directory
  int width = 0;
  int height = 0;
};

std::vector<TelemetryRecord> read_telemetry(const std::filesystem::path& path);
void write_telemetry(const std::filesystem::path& path, const std::vector<TelemetryRecord>& records);

std::vector<DetectionFrame> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, const std::vector<DetectionFrame>& frames);

std::vector<GroundTruthFrame> read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthFrame>& frames);

/// One JSON object per frame result (counts, pre-NMS boosted list, final list).
nlohmann::json to_json(const FrameResult& result);
/// Final detections with their boosted confidence, as DetectionFrames.
std::vector<DetectionFrame> read_final_detections(const std::filesystem::path& path);

/// FeatureCollection of located final detections.
nlohmann::json detections_geojson(const std::vector<FrameResult>& results);
/// FeatureCollection with one LineString per track.
nlohmann::json tracks_geojson(const std::vector<Track>& tracks);

/// Rows of every tracked final detection; conf is the boosted confidence.
std::vector<TrackRow> track_rows(const StreamOutput& output);

void write_track_rows(const std::filesystem::path& path, const std::vector<TrackRow>& rows);
std::vector<TrackRow> read_track_rows(const std::filesystem::path& path);

/// JSON Lines of {"frame_id","file","w","h"}; each file holds raw
/// little-endian float32 values, row-major.
std::vector<HeatmapRecord> read_heatmap_index(const std::filesystem::path& path);
void write_heatmap_index(const std::filesystem::path& path, const std::vector<HeatmapRecord>& records);
FrameHeatmap read_heatmap(const std::filesystem::path& path, int width, int height);
void write_heatmap(const std::filesystem::path& path, const FrameHeatmap& heatmap);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace uavmem
