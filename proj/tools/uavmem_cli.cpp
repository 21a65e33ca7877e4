#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "uavmem/anomaly.hpp"
#include "uavmem/bench.hpp"
#include "uavmem/camera_geometry.hpp"
#include "uavmem/config.hpp"
#include "uavmem/error.hpp"
#include "uavmem/fusion.hpp"
#include "uavmem/geodesy.hpp"
#include "uavmem/io.hpp"
#include "uavmem/memory_map.hpp"
#include "uavmem/metrics.hpp"
#include "uavmem/simulator.hpp"
#include "uavmem/size_filter.hpp"
#include "uavmem/vod_pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uavmem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string log_level = "warn";

  Config load() const {
    Config c = load_config(config_path);
    if (seed) c.seed = *seed;
    return c;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

void emit(const std::string& out, const json& j) {
  if (out.empty() || out == "-") {
    print_json(j);
  } else {
    write_json(out, j);
  }
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
  std::istringstream in(text);
  double a = 0, b = 0;
  char comma = 0;
  if (!(in >> a >> comma >> b) || comma != ',' || !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidInput, std::string(what) + " must be two comma-separated numbers, got '" + text + "'");
  }
  return {a, b};
}

std::pair<std::string, std::string> split_stream(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos) {
    throw Error(ErrorCode::InvalidInput, "--stream expects TELEMETRY,DETECTIONS, got '" + text + "'");
  }
  return {text.substr(0, comma), text.substr(comma + 1)};
}

SizeModel load_size_model(const std::string& path) { return path.empty() ? SizeModel{} : read_size_model(path); }

/// Telemetry frames joined with detections by frame_id, in telemetry order.
std::vector<StreamFrame> load_stream(const std::string& telemetry_path, const std::string& detections_path) {
  const auto telemetry = read_telemetry(telemetry_path);
  std::map<std::int64_t, std::vector<Detection>> dets;
  for (auto& f : read_detections(detections_path)) {
    auto& slot = dets[f.frame_id];
    slot.insert(slot.end(), f.detections.begin(), f.detections.end());
  }
  std::vector<StreamFrame> frames;
  for (const TelemetryRecord& t : telemetry) {
    StreamFrame f{t.frame_id, t.ts_us, t.cam, {}};
    if (const auto it = dets.find(t.frame_id); it != dets.end()) {
      f.detections = std::move(it->second);
      dets.erase(it);
    }
    frames.push_back(std::move(f));
  }
  if (!dets.empty()) {
    throw Error(ErrorCode::MissingMetadata,
                detections_path + ": frame " + std::to_string(dets.begin()->first) + " has no telemetry record");
  }
  return frames;
}

// ---- geolocate ----

struct GeolocateArgs {
  double lat = 0, lon = 0, alt = 0, pitch = 0, heading = 0, focal = 0;
  int width = 0, height = 0;
  std::string pixel, offset, target, move;
};

json geolocate(const GeolocateArgs& a) {
  const CameraState cam{a.lat, a.lon, a.alt, a.pitch, a.heading, a.focal, a.width, a.height};
  validate(cam);
  json out;
  out["horizon"] = {{"gamma_deg", horizon_dip_deg(cam.altitude_m)},
                    {"distance_m", horizon_distance_m(cam.altitude_m)},
                    {"o_raw_px", horizon_row_offset_raw(cam)},
                    {"o_px", horizon_row_offset(cam)},
                    {"row_px", cam.image_height_px / 2.0 + horizon_row_offset(cam)}};

  std::optional<PixelOffset> pixel;
  if (!a.pixel.empty()) {
    const auto [col, row] = parse_pair(a.pixel, "--pixel");
    pixel = to_offset(col, row, cam);
  } else if (!a.offset.empty()) {
    const auto [u, v] = parse_pair(a.offset, "--offset");
    pixel = PixelOffset{u, v};
  }
  if (pixel) {
    const GroundTrace t = trace_pixel_to_ground(*pixel, cam);
    const NorthOffset n = rotate_to_north({t.x_m, t.y_m, t.d_m}, cam.heading_deg);
    const GeoPoint g = offset_to_gps(n, camera_position(cam));
    double col = 0, row = 0;
    to_absolute(*pixel, cam, col, row);
    out["pixel_to_gps"] = {{"col", col},         {"row", row},          {"u", pixel->u},
                           {"v", pixel->v},      {"alpha_deg", t.alpha_deg}, {"depression_deg", t.depression_deg},
                           {"y_m", t.y_m},       {"d_m", t.d_m},        {"w_px", t.w_px},
                           {"x_m", t.x_m},       {"east_m", n.east_m},  {"north_m", n.north_m},
                           {"lat", g.latitude},  {"lon", g.longitude}};
  }
  if (!a.target.empty()) {
    const auto [lat, lon] = parse_pair(a.target, "--target");
    const GpsProjection p = gps_to_pixel({lat, lon}, cam);
    json j = {{"slant_d_m", p.slant_d_m}};
    j["status"] = p.status == ProjectionStatus::InFrame      ? "in_frame"
                  : p.status == ProjectionStatus::OutOfFrame ? "out_of_frame"
                                                             : "behind_camera";
    if (p.status != ProjectionStatus::BehindCamera) {
      double col = 0, row = 0;
      to_absolute(p.pixel, cam, col, row);
      j.update({{"u", p.pixel.u}, {"v", p.pixel.v}, {"col", col}, {"row", row}});
    }
    out["gps_to_pixel"] = j;
  }
  if (!a.move.empty()) {
    const auto [east, north] = parse_pair(a.move, "--move");
    const GeoPoint from = camera_position(cam);
    const GeoPoint g = offset_to_gps({east, north}, from);
    out["offset_to_gps"] = {{"east_m", east},
                            {"north_m", north},
                            {"lat", g.latitude},
                            {"lon", g.longitude},
                            {"delta_lat_deg", g.latitude - from.latitude},
                            {"delta_lon_deg", g.longitude - from.longitude}};
  }
  return out;
}

// ---- simulate ----

struct SimulateArgs {
  std::string preset, scenario, out_dir;
  std::int64_t gap = 50;
  bool noise_only = false;
};

Scenario preset_scenario(const std::string& name, std::uint64_t seed, const SimulateArgs& a) {
  if (name == "boosting") return boosting_scenario(seed);
  if (name == "size_survey") return size_survey_scenario(seed);
  if (name == "heading_rotation") return heading_rotation_scenario(seed);
  if (name == "reid") return reid_scenario(seed, a.gap);
  if (name == "fusion") return fusion_scenario(seed);
  if (name == "anomaly") return anomaly_scenario(seed, a.noise_only);
  throw Error(ErrorCode::InvalidInput, "unknown preset '" + name + "'");
}

void simulate_cmd(const SimulateArgs& a, const Globals& g) {
  const Config cfg = g.load();
  Scenario s;
  if (!a.scenario.empty()) {
    std::ifstream in(a.scenario);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + a.scenario);
    try {
      s = scenario_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, a.scenario + ": " + e.what());
    }
    if (g.seed) s.seed = *g.seed;
  } else {
    s = preset_scenario(a.preset, cfg.seed, a);
  }
  const auto streams = simulate(s);
  fs::create_directories(a.out_dir);
  const fs::path root(a.out_dir);
  write_json(root / "scenario.json", to_json(s));
  write_size_points_csv((root / "size_points.csv").string(), ground_truth_size_points(streams));
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const fs::path dir = root / ("uav" + std::to_string(i));
    fs::create_directories(dir);
    write_telemetry(dir / "telemetry.jsonl", telemetry_of(streams[i]));
    write_detections(dir / "detections.jsonl", detections_of(streams[i]));
    write_ground_truth(dir / "ground_truth.jsonl", ground_truth_of(streams[i]));
    std::vector<HeatmapRecord> index;
    for (const SimFrame& f : streams[i]) {
      if (f.heatmap.width == 0 || f.heatmap.height == 0) continue;
      char name[32];
      std::snprintf(name, sizeof name, "%06lld.bin", static_cast<long long>(f.frame_id));
      const std::string rel = (fs::path("heatmaps") / name).string();
      if (index.empty()) fs::create_directories(dir / "heatmaps");
      write_heatmap(dir / rel, f.heatmap);
      index.push_back({f.frame_id, rel, f.heatmap.width, f.heatmap.height});
    }
    if (!index.empty()) write_heatmap_index(dir / "heatmaps.jsonl", index);
    spdlog::info("uav{}: {} frames written to {}", i, streams[i].size(), dir.string());
  }
}

// ---- vod / track / fuse ----

struct VodArgs {
  std::string telemetry, detections, size_model, out, geojson, dump_maps;
  bool no_boost = false;
};

void vod_cmd(const VodArgs& a, const Globals& g) {
  Config cfg = g.load();
  if (a.no_boost) cfg.vod.boost = false;
  const auto frames = load_stream(a.telemetry, a.detections);
  std::optional<GeoPoint> origin;
  if (!frames.empty()) origin = camera_position(frames.front().cam);
  VodPipeline pipeline(cfg.map, cfg.vod, load_size_model(a.size_model), origin);
  std::ofstream out(a.out);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + a.out + " for writing");
  std::vector<FrameResult> results;
  std::size_t kept = 0;
  for (const StreamFrame& f : frames) {
    FrameResult r = pipeline.process_frame(f.frame_id, f.cam, f.detections);
    out << to_json(r).dump() << '\n';
    kept += r.final_detections.size();
    results.push_back(std::move(r));
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + a.out);
  if (!a.geojson.empty()) write_json(a.geojson, detections_geojson(results));
  if (!a.dump_maps.empty()) {
    fs::create_directories(a.dump_maps);
    for (const auto& [cls, map] : pipeline.maps())
      write_map_file((fs::path(a.dump_maps) / ("class_" + std::to_string(cls) + ".map")).string(), map);
  }
  spdlog::info("{} frames, {} final detections", frames.size(), kept);
}

CooperativeOptions options_of(const Config& cfg) {
  CooperativeOptions o;
  o.spec = cfg.map;
  o.vod = cfg.vod;
  o.tracker = cfg.tracker;
  o.fusion = cfg.fusion;
  return o;
}

void write_tracks(const StreamOutput& out, const std::string& csv, const std::string& geojson) {
  write_track_rows(csv, track_rows(out));
  if (!geojson.empty()) write_json(geojson, tracks_geojson(out.tracks));
}

struct TrackArgs {
  std::string telemetry, detections, size_model, out, geojson;
  bool no_boost = false;
};

void track_cmd(const TrackArgs& a, const Globals& g) {
  Config cfg = g.load();
  if (a.no_boost) cfg.vod.boost = false;
  const std::vector<std::vector<StreamFrame>> streams{load_stream(a.telemetry, a.detections)};
  const std::vector<SizeModel> models{load_size_model(a.size_model)};
  const auto outputs = run_cooperative(streams, options_of(cfg), models);
  if (outputs.front().results.empty()) throw Error(ErrorCode::InvalidInput, a.telemetry + ": no frames");
  write_tracks(outputs.front(), a.out, a.geojson);
  spdlog::info("{} tracks", outputs.front().tracks.size());
}

struct FuseArgs {
  std::vector<std::string> streams, size_models;
  std::string out_dir;
  bool independent = false;
};

void fuse_cmd(const FuseArgs& a, const Globals& g) {
  const Config cfg = g.load();
  std::vector<std::vector<StreamFrame>> streams;
  for (const std::string& s : a.streams) {
    const auto [tel, dets] = split_stream(s);
    streams.push_back(load_stream(tel, dets));
  }
  if (!a.size_models.empty() && a.size_models.size() != streams.size()) {
    throw Error(ErrorCode::InvalidInput, "give one --size-model per --stream or none");
  }
  std::vector<SizeModel> models;
  for (const std::string& p : a.size_models) models.push_back(load_size_model(p));
  CooperativeOptions opt = options_of(cfg);
  opt.cooperative = !a.independent;
  const auto outputs = run_cooperative(streams, opt, models);
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const fs::path base = fs::path(a.out_dir) / ("stream" + std::to_string(i));
    std::ofstream out(base.string() + ".jsonl");
    if (!out) throw Error(ErrorCode::Io, "cannot open " + base.string() + ".jsonl for writing");
    for (const FrameResult& r : outputs[i].results) out << to_json(r).dump() << '\n';
    write_json(base.string() + "_detections.geojson", detections_geojson(outputs[i].results));
    write_tracks(outputs[i], base.string() + "_tracks.csv", base.string() + "_tracks.geojson");
  }
}

// ---- anomaly ----

struct AnomalyArgs {
  std::string telemetry, heatmaps, out, dump_map;
};

void anomaly_cmd(const AnomalyArgs& a, const Globals& g) {
  const Config cfg = g.load();
  std::map<std::int64_t, CameraState> cams;
  for (const TelemetryRecord& t : read_telemetry(a.telemetry)) cams[t.frame_id] = t.cam;
  const auto index = read_heatmap_index(a.heatmaps);
  json features = json::array();
  std::optional<AnomalyAggregator> agg;
  for (const HeatmapRecord& rec : index) {
    const auto cam = cams.find(rec.frame_id);
    if (cam == cams.end()) {
      throw Error(ErrorCode::MissingMetadata,
                  a.heatmaps + ": frame " + std::to_string(rec.frame_id) + " has no telemetry record");
    }
    if (!agg) agg.emplace(cfg.anomaly, camera_position(cam->second));
    agg->step(read_heatmap(rec.path, rec.width, rec.height), cam->second);
    int region_id = 0;
    for (const AnomalyRegion& r : agg->regions()) {
      json ring = json::array();
      for (const GeoPoint& p : r.polygon) ring.push_back({p.longitude, p.latitude});
      if (!ring.empty()) ring.push_back(ring.front());
      features.push_back({{"type", "Feature"},
                          {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                          {"properties",
                           {{"frame_id", rec.frame_id},
                            {"region", region_id++},
                            {"peak", r.peak},
                            {"area_m2", r.area_m2},
                            {"cells", r.cells.size()}}}});
    }
  }
  write_json(a.out, {{"type", "FeatureCollection"}, {"features", features}});
  if (!a.dump_map.empty() && agg) write_map_file(a.dump_map, agg->map());
}

// ---- fit-size-model / eval / dump-map / bench ----

void fit_cmd(const std::string& points, const std::string& out, const Globals& g) {
  const Config cfg = g.load();
  const auto pts = read_size_points_csv(points);
  write_size_model(out, SizeModel::fit(pts, cfg.size_model));
  spdlog::info("fitted on {} points", pts.size());
}

struct EvalArgs {
  std::string mode = "detection", predictions, tracks, ground_truth, out;
  double conf_threshold = 0.5;
  std::optional<std::int64_t> first_frame, last_frame;
};

/// VOD output (records with "final") or a raw detection file ("dets").
std::vector<DetectionFrame> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return line.find("\"final\"") != std::string::npos ? read_final_detections(path) : read_detections(path);
  }
  return {};
}

template <typename Frame>
std::vector<Frame> in_window(std::vector<Frame> frames, const EvalArgs& a) {
  std::erase_if(frames, [&](const Frame& f) {
    return (a.first_frame && f.frame_id < *a.first_frame) || (a.last_frame && f.frame_id > *a.last_frame);
  });
  return frames;
}

void eval_cmd(const EvalArgs& a) {
  const auto truth = in_window(read_ground_truth(a.ground_truth), a);
  json report;
  if (a.mode == "detection") {
    if (a.predictions.empty()) throw Error(ErrorCode::InvalidInput, "detection mode needs --predictions");
    const DetectionReport r = evaluate_detections(in_window(read_predictions(a.predictions), a), truth, a.conf_threshold);
    report = {{"mode", "detection"},        {"conf_threshold", a.conf_threshold},
              {"true_positives", r.true_positives}, {"false_positives", r.false_positives},
              {"ground_truth", r.ground_truth},     {"precision", r.precision},
              {"recall", r.recall},                 {"f1", r.f1},
              {"ap50", r.ap50},                     {"average_recall", r.average_recall}};
  } else if (a.mode == "tracking") {
    if (a.tracks.empty()) throw Error(ErrorCode::InvalidInput, "tracking mode needs --tracks");
    const TrackingReport r =
evaluate_tracking(read_track_rows(a.tracks), truth);
    report = {{"mode", "tracking"},       {"matches", r.matches},           {"ground_truth", r.ground_truth},
              {"recall", r.recall},       {"id_switches", r.id_switches},   {"fragmentations", r.fragmentations}};
  } else {
    throw Error(ErrorCode::InvalidInput, "--mode must be detection or tracking");
  }
  emit(a.out, report);
}

void dump_map_cmd(const std::string& path, const std::string& format, const std::string& out_path, double min_value) {
  const MemoryMap map = read_map_file(path);
  const double half = map.spec().cell_size_m / 2.0;
  if (format == "csv") {
    std::ofstream out(out_path);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + out_path + " for writing");
    out << "row,col,lat,lon,value\n" << std::setprecision(17);
    for (int r = 0; r < map.size(); ++r)
      for (int c = 0; c < map.size(); ++c) {
        const float v = map.at(r, c);
        if (v <= min_value) continue;
        const GeoPoint p = map.cell_center({r, c});
        out << r << ',' << c << ',' << p.latitude << ',' << p.longitude << ',' << v << '\n';
      }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + out_path);
  } else if (format == "geojson") {
    json features = json::array();
    for (int r = 0; r < map.size(); ++r)
      for (int c = 0; c < map.size(); ++c) {
        const float v = map.at(r, c);
        if (v <= min_value) continue;
        const GeoPoint center = map.cell_center({r, c});
        json ring = json::array();
        for (const auto& [e, n] : {std::pair{-half, -half}, {half, -half}, {half, half}, {-half, half}, {-half, -half}}) {
          const GeoPoint p = offset_to_gps({e, n}, center);
          ring.push_back({p.longitude, p.latitude});
        }
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                            {"properties", {{"row", r}, {"col", c}, {"value", v}}}});
      }
    write_json(out_path, {{"type", "FeatureCollection"},
                          {"properties", {{"class_id", map.class_id()}, {"n", map.size()}}},
                          {"features", features}});
  } else {
    throw Error(ErrorCode::InvalidInput, "--format must be csv or geojson");
  }
}

json bench_json(const BenchResult& r) {
  return {{"name", r.name}, {"frames", r.frames}, {"seconds", r.seconds}, {"fps", r.fps()}};
}

int exit_code(ErrorCode code) { return code == ErrorCode::Io ? 2 : 1; }

int report_error(std::string_view kind, std::string_view message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV detection memory maps: geolocation, confidence boosting, tracking and anomaly aggregation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  std::function<void()> run;

  GeolocateArgs geo;
  auto* geo_cmd = app.add_subcommand("geolocate", "pixel <-> GPS conversion with all intermediate quantities");
  geo_cmd->add_option("--lat", geo.lat, "UAV latitude, deg");
  geo_cmd->add_option("--lon", geo.lon, "UAV longitude, deg");
  geo_cmd->add_option("--alt", geo.alt, "altitude above ground, m")->required();
  geo_cmd->add_option("--pitch", geo.pitch, "gimbal pitch, deg below horizontal")->required();
  geo_cmd->add_option("--heading", geo.heading, "heading, deg clockwise from north");
  geo_cmd->add_option("--focal", geo.focal, "focal length, px")->required();
  geo_cmd->add_option("--width", geo.width, "image width, px")->required();
  geo_cmd->add_option("--height", geo.height, "image height, px")->required();
  auto* px = geo_cmd->add_option("--pixel", geo.pixel, "absolute pixel COL,ROW");
  geo_cmd->add_option("--offset", geo.offset, "pixel offset U,V from the image center (V down)")->excludes(px);
  geo_cmd->add_option("--target", geo.target, "ground point LAT,LON to project into the image");
  geo_cmd->add_option("--move", geo.move, "EAST,NORTH offset in meters from the UAV to convert to GPS");
  geo_cmd->callback([&] { run = [&] { print_json(geolocate(geo)); }; });

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic telemetry, detections, ground truth and heatmaps");
  auto* preset = sim_cmd->add_option("--preset", sim.preset, "built-in scenario")
                     ->check(CLI::IsMember({"boosting", "size_survey", "heading_rotation", "reid", "fusion", "anomaly"}));
  sim_cmd->add_option("--scenario", sim.scenario, "scenario JSON file")->excludes(preset);
  sim_cmd->add_option("--gap", sim.gap, "frames out of view for the reid preset");
  sim_cmd->add_flag("--noise-only", sim.noise_only, "anomaly preset without the hot spot");
  sim_cmd->add_option("--out-dir", sim.out_dir, "output directory")->required();
  sim_cmd->callback([&] {
    if (sim.preset.empty() && sim.scenario.empty()) throw CLI::RequiredError("--preset or --scenario");
    run = [&] { simulate_cmd(sim, g); };
  });

  VodArgs vod;
  auto* vod_cmd_ = app.add_subcommand("vod", "memory-map confidence boosting, size filtering and NMS");
  vod_cmd_->add_option("--telemetry", vod.telemetry, "telemetry JSONL")->required();
  vod_cmd_->add_option("--detections", vod.detections, "pre-NMS detections JSONL")->required();
  vod_cmd_->add_option("--size-model", vod.size_model, "fitted size model JSON (omit to skip size filtering)");
  vod_cmd_->add_option("--out", vod.out, "per-frame results JSONL")->required();
  vod_cmd_->add_option("--geojson", vod.geojson, "final detections as GeoJSON points");
  vod_cmd_->add_option("--dump-maps", vod.dump_maps, "directory for the final memory maps");
  vod_cmd_->add_flag("--no-boost", vod.no_boost, "disable confidence boosting");
  vod_cmd_->callback([&] { run = [&] { vod_cmd(vod, g); }; });

  TrackArgs trk;
  auto* trk_cmd = app.add_subcommand("track", "GPS-space tracking of boosted detections");
  trk_cmd->add_option("--telemetry", trk.telemetry, "telemetry JSONL")->required();
  trk_cmd->add_option("--detections", trk.detections, "pre-NMS detections JSONL")->required();
  trk_cmd->add_option("--size-model", trk.size_model, "fitted size model JSON");
  trk_cmd->add_option("--out", trk.out, "track CSV")->required();
  trk_cmd->add_option("--geojson", trk.geojson, "tracks as GeoJSON line strings");
  trk_cmd->add_flag("--no-boost", trk.no_boost, "disable confidence boosting");
  trk_cmd->callback([&] { run = [&] { track_cmd(trk, g); }; });

  AnomalyArgs an;
  auto* an_cmd = app.add_subcommand("anomaly", "aggregate anomaly heatmaps and extract regions");
  an_cmd->add_option("--telemetry", an.telemetry, "telemetry JSONL")->required();
  an_cmd->add_option("--heatmaps", an.heatmaps, "heatmap index JSONL")->required();
  an_cmd->add_option("--out", an.out, "regions per frame as GeoJSON")->required();
  an_cmd->add_option("--dump-map", an.dump_map, "write the final anomaly map");
  an_cmd->callback([&] { run = [&] { anomaly_cmd(an, g); }; });

  FuseArgs fu;
  auto* fu_cmd = app.add_subcommand("fuse", "cooperative boosting and tracking over several UAV streams");
  fu_cmd->add_option("--stream", fu.streams, "TELEMETRY,DETECTIONS (repeat per UAV)")->required();
  fu_cmd->add_option("--size-model", fu.size_models, "size model per stream, in --stream order");
  fu_cmd->add_option("--out-dir", fu.out_dir, "output directory")->required();
  fu_cmd->add_flag("--independent", fu.independent, "boost every stream from its own maps only");
  fu_cmd->callback([&] { run = [&] { fuse_cmd(fu, g); }; });

  std::string points, model_out;
  auto* fit = app.add_subcommand("fit-size-model", "fit the distance-to-size model from training points");
  fit->add_option("--points", points, "CSV class_id,distance_m,diameter_px")->required();
  fit->add_option("--out", model_out, "model JSON")->required();
  fit->callback([&] { run = [&] { fit_cmd(points, model_out, g); }; });

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "detection or tracking metrics against ground truth");
  ev_cmd->add_option("--mode", ev.mode, "detection or tracking")->check(CLI::IsMember({"detection", "tracking"}));
  ev_cmd->add_option("--predictions", ev.predictions, "vod output or detection JSONL");
  ev_cmd->add_option("--tracks", ev.tracks, "track CSV");
  ev_cmd->add_option("--ground-truth", ev.ground_truth, "ground truth JSONL")->required();
  ev_cmd->add_option("--conf-threshold", ev.conf_threshold, "confidence threshold for precision/recall");
  ev_cmd->add_option("--first-frame", ev.first_frame, "first ground-truth frame to score");
  ev_cmd->add_option("--last-frame", ev.last_frame, "last ground-truth frame to score");
  ev_cmd->add_option("--out", ev.out, "report JSON (default stdout)");
  ev_cmd->callback([&] { run = [&] { eval_cmd(ev); }; });

  std::string map_in, map_format = "csv", map_out;
  double min_value = 0.0;
  auto* dm = app.add_subcommand("dump-map", "memory map file to a CSV or GeoJSON heat grid");
  dm->add_option("--map", map_in, "map file")->required();
  dm->add_option("--format", map_format, "csv or geojson")->check(CLI::IsMember({"csv", "geojson"}));
  dm->add_option("--out", map_out, "output file")->required();
  dm->add_option("--min-value", min_value, "skip cells at or below this value");
  dm->callback([&] { run = [&] { dump_map_cmd(map_in, map_format, map_out, min_value); }; });

  std::size_t bench_frames = 200, bench_dets = 2000;
  int bench_cells = 600, hm_w = 480, hm_h = 270;
  double min_fps = 0.0;
  auto* bench = app.add_subcommand("bench", "single-threaded throughput of vod and anomaly steps");
  bench->add_option("--frames", bench_frames, "frames per benchmark");
  bench->add_option("--detections", bench_dets, "pre-NMS boxes per frame");
  bench->add_option("--map-cells", bench_cells, "map cells per edge");
  bench->add_option("--heatmap-width", hm_w, "heatmap width");
  bench->add_option("--heatmap-height", hm_h, "heatmap height");
  bench->add_option("--min-fps", min_fps, "exit 1 if any benchmark is slower");
  bench->callback([&] {
    run = [&] {
      const std::uint64_t seed = g.load().seed;
      const BenchResult v = bench_vod(bench_dets, bench_cells, bench_frames, seed);
      const BenchResult a = bench_anomaly(hm_w, hm_h, bench_frames, seed);
      print_json(json::array({bench_json(v), bench_json(a)}));
      if (v.fps() < min_fps || a.fps() < min_fps) {
        throw Error(ErrorCode::InvalidInput, "throughput below --min-fps");
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 1);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), exit_code(e.code()));
  }

  auto logger = spdlog::stderr_color_mt("uavmem");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    run();
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), exit_code(e.code()));
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("Io", e.what(), 2);
  } catch (const std::bad_alloc&) {
    return report_error("OutOfMemory", "allocation failed", 2);
  } catch (const std::exception& e) {
    return report_error("InvalidInput", e.what(), 1);
  }
  return 0;
}
