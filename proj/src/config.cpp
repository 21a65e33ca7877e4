#include "uavmem/config.hpp"

#include <fstream>

#include "uavmem/error.hpp"

namespace uavmem {

nlohmann::json to_json(const MapSpec& s) {
  return {{"edge_size_m", s.edge_size_m},
          {"cell_size_m", s.cell_size_m},
          {"splat_radius_m", s.splat_radius_m},
          {"forgetting_factor", s.forgetting_factor},
          {"splat_scale_s0", s.splat_scale_s0}};
}

MapSpec map_spec_from_json(const nlohmann::json& j, const MapSpec& d) {
  MapSpec s;
  s.edge_size_m = j.value("edge_size_m", d.edge_size_m);
  s.cell_size_m = j.value("cell_size_m", d.cell_size_m);
  s.splat_radius_m = j.value("splat_radius_m", d.splat_radius_m);
  s.forgetting_factor = j.value("forgetting_factor", d.forgetting_factor);
  s.splat_scale_s0 = j.value("splat_scale_s0", d.splat_scale_s0);
  return s;
}

nlohmann::json to_json(const Config& c) {
  return {
      {"map", to_json(c.map)},
      {"vod", {{"conf_threshold", c.vod.conf_threshold}, {"nms_iou", c.vod.nms_iou}, {"boost", c.vod.boost}}},
      {"tracker",
       {{"conf_threshold", c.tracker.conf_threshold},
        {"max_dist_m", c.tracker.max_dist_m},
        {"birth_threshold", c.tracker.birth_threshold},
        {"reid_horizon_frames", c.tracker.reid_horizon_frames},
        {"reid_dist_m", c.tracker.reid_dist_m}}},
      {"anomaly",
       {{"map", to_json(c.anomaly.map)},
        {"max_range_m", c.anomaly.max_range_m},
        {"extraction_threshold", c.anomaly.extraction_threshold},
        {"min_area_m2", c.anomaly.min_area_m2}}},
      {"fusion",
       {{"pairing_tolerance_ms", c.fusion.pairing_tolerance_ms},
        {"mode", c.fusion.mode == MergeMode::Max ? "max" : "mean"}}},
      {"size_model",
       {{"length_scale_m", c.size_model.length_scale_m},
        {"amplitude_px", c.size_model.amplitude_px},
        {"noise_std_px", c.size_model.noise_std_px},
        {"band_k", c.size_model.band_k},
        {"window_m", c.size_model.window_m},
        {"lambda_max", c.size_model.lambda_max},
        {"max_points", c.size_model.max_points},
        {"min_points", c.size_model.min_points},
        {"table_size", c.size_model.table_size}}},
      {"seed", c.seed},
  };
}

Config config_from_json(const nlohmann::json& j) {
  Config c;
  const nlohmann::json empty = nlohmann::json::object();
  const auto section = [&](const char* key) -> const nlohmann::json& {
    const auto it = j.find(key);
    return it == j.end() ? empty : *it;
  };
  try {
    c.map = map_spec_from_json(section("map"));

    const auto& v = section("vod");
    c.vod.conf_threshold = v.value("conf_threshold", c.vod.conf_threshold);
    c.vod.nms_iou = v.value("nms_iou", c.vod.nms_iou);
    c.vod.boost = v.value("boost", c.vod.boost);

    const auto& t = section("tracker");
    c.tracker.conf_threshold = t.value("conf_threshold", c.tracker.conf_threshold);
    c.tracker.max_dist_m = t.value("max_dist_m", c.tracker.max_dist_m);
    c.tracker.birth_threshold = t.value("birth_threshold", c.tracker.birth_threshold);
    c.tracker.reid_horizon_frames = t.value("reid_horizon_frames", c.tracker.reid_horizon_frames);
    c.tracker.reid_dist_m = t.value("reid_dist_m", c.tracker.reid_dist_m);

    const auto& a = section("anomaly");
    if (a.contains("map")) c.anomaly.map = map_spec_from_json(a.at("map"), c.anomaly.map);
    c.anomaly.max_range_m = a.value("max_range_m", c.anomaly.max_range_m);
    c.anomaly.extraction_threshold = a.value("extraction_threshold", c.anomaly.extraction_threshold);
    c.anomaly.min_area_m2 = a.value("min_area_m2", c.anomaly.min_area_m2);

    const auto& f = section("fusion");
    c.fusion.pairing_tolerance_ms = f.value("pairing_tolerance_ms", c.fusion.pairing_tolerance_ms);
    const std::string mode = f.value("mode", std::string("mean"));
    if (mode != "mean" && mode != "max") throw Error(ErrorCode::InvalidInput, "fusion.mode must be mean or max");
    c.fusion.mode = mode == "max" ? MergeMode::Max : MergeMode::Mean;

    const auto& s = section("size_model");
    c.size_model.length_scale_m = s.value("length_scale_m", c.size_model.length_scale_m);
    c.size_model.amplitude_px = s.value("amplitude_px", c.size_model.amplitude_px);
    c.size_model.noise_std_px = s.value("noise_std_px", c.size_model.noise_std_px);
    c.size_model.band_k = s.value("band_k", c.size_model.band_k);
    c.size_model.window_m = s.value("window_m", c.size_model.window_m);
    c.size_model.lambda_max = s.value("lambda_max", c.size_model.lambda_max);
    c.size_model.max_points = s.value("max_points", c.size_model.max_points);
    c.size_model.min_points = s.value("min_points", c.size_model.min_points);
    c.size_model.table_size = s.value("table_size", c.size_model.table_size);

    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad config: ") + e.what());
  }
  c.map.validate();
  c.anomaly.map.validate();
  return c;
}

Config load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace uavmem
