#include "uavmem/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "uavmem/error.hpp"

namespace uavmem {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void for_each_record(const fs::path& path, const std::function<void(const json&)>& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

Detection box_from(const json& a) {
  if (!a.is_array() || a.size() < 6) throw Error(ErrorCode::InvalidInput, "detection needs 6 fields");
  Detection d{a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>(),
              a[4].get<int>(), a[5].get<double>()};
  if (!d.valid()) throw Error(ErrorCode::InvalidInput, "invalid detection box");
  return d;
}

json box_json(const Detection& d) { return json::array({d.x1, d.y1, d.x2, d.y2, d.class_id, d.confidence}); }

json geo_detection_json(const GeoDetection& g) {
  json j = {{"box", json::array({g.detection.x1, g.detection.y1, g.detection.x2, g.detection.y2})},
            {"class_id", g.detection.class_id},
            {"conf", g.detection.confidence},
            {"boosted", g.boosted_confidence}};
  if (g.position) {
    j["lat"] = g.position->latitude;
    j["lon"] = g.position->longitude;
  } else {
    j["status"] = g.status == LocateStatus::AboveHorizon ? "above_horizon" : "behind_camera";
  }
  return j;
}

}  // namespace

std::vector<TelemetryRecord> read_telemetry(const fs::path& path) {
  std::vector<TelemetryRecord> out;
  for_each_record(path, [&](const json& j) {
    static constexpr const char* required[] = {"frame_id", "lat", "lon", "alt_m", "gimbal_pitch_deg",
                                               "heading_deg", "focal_px", "img_w", "img_h"};
    for (const char* key : required)
      if (!j.contains(key)) throw Error(ErrorCode::MissingMetadata, std::string("missing ") + key);
    TelemetryRecord r;
    r.frame_id = j.at("frame_id").get<std::int64_t>();
    r.ts_us = j.value("ts_us", std::int64_t{0});
    r.cam = {j.at("lat").get<double>(),         j.at("lon").get<double>(),
             j.at("alt_m").get<double>(),       j.at("gimbal_pitch_deg").get<double>(),
             j.at("heading_deg").get<double>(), j.at("focal_px").get<double>(),
             j.at("img_w").get<int>(),          j.at("img_h").get<int>()};
    out.push_back(r);
  });
  return out;
}

void write_telemetry(const fs::path& path, const std::vector<TelemetryRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    out << json{{"frame_id", r.frame_id},
                {"ts_us", r.ts_us},
                {"lat", r.cam.latitude},
                {"lon", r.cam.longitude},
                {"alt_m", r.cam.altitude_m},
                {"gimbal_pitch_deg", r.cam.gimbal_pitch_deg},
                {"heading_deg", r.cam.heading_deg},
                {"focal_px", r.cam.focal_px},
                {"img_w", r.cam.image_width_px},
                {"img_h", r.cam.image_height_px}}
               .dump()
        << '\n';
  }
}

std::vector<DetectionFrame> read_detections(const fs::path& path) {
  std::vector<DetectionFrame> out;
  for_each_record(path, [&](const json& j) {
    DetectionFrame f;
    f.frame_id = j.at("frame_id").get<std::int64_t>();
    for (const auto& a : j.at("dets")) f.detections.push_back(box_from(a));
    out.push_back(std::move(f));
  });
  return out;
}

void write_detections(const fs::path& path, const std::vector<DetectionFrame>& frames) {
  auto out = open_out(path);
  for (const auto& f : frames) {
    json dets = json::array();
    for (const auto& d : f.detections) dets.push_back(box_json(d));
    out << json{{"frame_id", f.frame_id}, {"dets", dets}}.dump() << '\n';
  }
}

std::vector<GroundTruthFrame> read_ground_truth(const fs::path& path) {
  std::vector<GroundTruthFrame> out;
  for_each_record(path, [&](const json& j) {
    GroundTruthFrame f;
    f.frame_id = j.at("frame_id").get<std::int64_t>();
    for (const auto& o : j.at("objects")) {
      GroundTruthObject g;
      g.object_id = o.at("id").get<std::int64_t>();
      const auto& b = o.at("box");
      g.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>(),
               o.at("class_id").get<int>(), 1.0};
      g.position = {o.at("lat").get<double>(), o.at("lon").get<double>()};
      f.objects.push_back(g);
    }
    out.push_back(std::move(f));
  });
  return out;
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruthFrame>& frames) {
  auto out = open_out(path);
  for (const auto& f : frames) {
    json objs = json::array();
    for (const auto& g : f.objects)
      objs.push_back({{"id", g.object_id},
                      {"class_id", g.box.class_id},
                      {"box", json::array({g.box.x1, g.box.y1, g.box.x2, g.box.y2})},
                      {"lat", g.position.latitude},
                      {"lon", g.position.longitude}});
    out << json{{"frame_id", f.frame_id}, {"objects", objs}}.dump() << '\n';
  }
}

json to_json(const FrameResult& r) {
  json boosted = json::array();
  for (const auto& g : r.boosted) boosted.push_back(geo_detection_json(g));
  json final_dets = json::array();
  for (const auto& g : r.final_detections) final_dets.push_back(geo_detection_json(g));
  return {{"frame_id", r.frame_id},
          {"counts",
           {{"input", r.counts.input},
            {"located", r.counts.located},
            {"filtered_by_size", r.counts.filtered_by_size},
            {"boosted_above_threshold", r.counts.boosted_above_threshold},
            {"suppressed", r.counts.suppressed},
            {"below_threshold", r.counts.below_threshold}}},
          {"boosted", boosted},
          {"final", final_dets}};
}

std::vector<DetectionFrame> read_final_detections(const fs::path& path) {
  std::vector<DetectionFrame> out;
  for_each_record(path, [&](const json& j) {
    DetectionFrame f;
    f.frame_id = j.at("frame_id").get<std::int64_t>();
    for (const auto& g : j.at("final")) {
      const auto& b = g.at("box");
      f.detections.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                              b.at(3).get<double>(), g.at("class_id").get<int>(), g.at("boosted").get<double>()});
    }
    out.push_back(std::move(f));
  });
  return out;
}

json detections_geojson(const std::vector<FrameResult>& results) {
  json features = json::array();
  for (const auto& r : results) {
    for (const auto& g : r.final_detections) {
      if (!g.position) continue;
      features.push_back(
          {{"type", "Feature"},
           {"geometry", {{"type", "Point"}, {"coordinates", {g.position->longitude, g.position->latitude}}}},
           {"properties",
            {{"frame_id", r.frame_id},
             {"class_id", g.detection.class_id},
             {"conf", g.detection.confidence},
             {"boosted", g.boosted_confidence}}}});
    }
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json tracks_geojson(const std::vector<Track>& tracks) {
  json features = json::array();
  for (const auto& t : tracks) {
    json coords = json::array();
    json frames = json::array();
    for (const auto& [frame, p] : t.history) {
      coords.push_back({p.longitude, p.latitude});
      frames.push_back(frame);
    }
    // A single fix is still a valid (degenerate) line.
    if (coords.size() == 1) coords.push_back(coords[0]);
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties", {{"track_id", t.track_id}, {"class_id", t.class_id}, {"frames", frames}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

std::vector<TrackRow> track_rows(const StreamOutput& output) {
  std::vector<TrackRow> rows;
  for (std::size_t i = 0; i < output.results.size(); ++i) {
    const FrameResult& r = output.results[i];
    for (std::size_t k = 0; k < r.final_detections.size(); ++k) {
      const std::int64_t id = output.track_ids[i][k];
      if (id < 0) continue;
      const GeoDetection& g = r.final_detections[k];
      Detection box = g.detection;
      box.confidence = g.boosted_confidence;
      rows.push_back({r.frame_id, id, box, g.position.value_or(GeoPoint{})});
    }
  }
  return rows;
}

void write_track_rows(const fs::path& path, const std::vector<TrackRow>& rows) {
  auto out = open_out(path);
  out << "frame_id,track_id,x1,y1,x2,y2,conf,class_id,lat,lon\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.frame_id << ',' << r.track_id << ',' << r.box.x1 << ',' << r.box.y1 << ',' << r.box.x2 << ','
        << r.box.y2 << ',' << r.box.confidence << ',' << r.box.class_id << ',' << r.position.latitude << ','
        << r.position.longitude << '\n';
  }
}

std::vector<TrackRow> read_track_rows(const fs::path& path) {
  auto in = open_in(path);
  std::vector<TrackRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    TrackRow r;
    if (!(ss >> r.frame_id >> r.track_id >> r.box.x1 >> r.box.y1 >> r.box.x2 >> r.box.y2 >> r.box.confidence >>
          r.box.class_id >> r.position.latitude >> r.position.longitude))
      throw Error(ErrorCode::InvalidInput, path.string() + ":" + std::to_string(lineno) + ": malformed row");
    rows.push_back(r);
  }
  return rows;
}

std::vector<HeatmapRecord> read_heatmap_index(const fs::path& path) {
  std::vector<HeatmapRecord> out;
  for_each_record(path, [&](const json& j) {
    HeatmapRecord r;
    r.frame_id = j.at("frame_id").get<std::int64_t>();
    r.path = (path.parent_path() / j.at("file").get<std::string>()).string();
    r.width = j.at("w").get<int>();
    r.height = j.at("h").get<int>();
    out.push_back(r);
  });
  return out;
}

void write_heatmap_index(const fs::path& path, const std::vector<HeatmapRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records)
    out << json{{"frame_id", r.frame_id}, {"file", r.path}, {"w", r.width}, {"h", r.height}}.dump() << '\n';
}

FrameHeatmap read_heatmap(const fs::path& path, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidInput, "heatmap dimensions must be positive");
  static_assert(std::endian::native == std::endian::little, "raw float32 I/O assumes little-endian");
  auto in = open_in(path, std::ios::binary);
  FrameHeatmap hm{width, height, std::vector<float>(static_cast<std::size_t>(width) * height)};
  in.read(reinterpret_cast<char*>(hm.values.data()),
          static_cast<std::streamsize>(hm.values.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(hm.values.size() * sizeof(float)))
    throw Error(ErrorCode::InvalidInput, path.string() + ": heatmap file too short");
  hm.validate();
  return hm;
}

void write_heatmap(const fs::path& path, const FrameHeatmap& hm) {
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(hm.values.data()),
            static_cast<std::streamsize>(hm.values.size() * sizeof(float)));
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace uavmem
