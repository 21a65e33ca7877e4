#include "uavmem/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uavmem/error.hpp"

namespace uavmem {
using nlohmann::json;

namespace {

enum Purpose : std::uint64_t { kDetector = 1, kFalsePositive = 2, kHeatmap = 3, kLayout = 4 };

template <typename Waypoint>
std::pair<const Waypoint*, double> bracket(const std::vector<Waypoint>& path, std::int64_t frame) {
  if (path.empty()) throw Error(ErrorCode::InvalidInput, "empty waypoint path");
  if (frame <= path.front().frame) return {&path.front(), 0.0};
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (frame <= path[i].frame) {
      const auto& a = path[i - 1];
      const double t = double(frame - a.frame) / double(path[i].frame - a.frame);
      return {&a, t};
    }
  }
  return {&path.back(), 0.0};
}

double lerp(double a, double b, double t) { return t == 0.0 ? a : a + (b - a) * t; }

double lerp_heading(double a, double b, double t) {
  double diff = std::fmod(b - a, 360.0);
  if (diff > 180.0) diff -= 360.0;
  if (diff < -180.0) diff += 360.0;
  double h = std::fmod(a + diff * t, 360.0);
  return h < 0.0 ? h + 360.0 : h;
}

Detection clip(Detection d, const CameraState& cam) {
  d.x1 = std::clamp(d.x1, 0.0, double(cam.image_width_px));
  d.x2 = std::clamp(d.x2, 0.0, double(cam.image_width_px));
  d.y1 = std::clamp(d.y1, 0.0, double(cam.image_height_px));
  d.y2 = std::clamp(d.y2, 0.0, double(cam.image_height_px));
  return d;
}

void check(const Scenario& s) {
  if (!(s.fps > 0.0)) throw Error(ErrorCode::InvalidInput, "fps must be positive");
  if (s.duration_frames < 0) throw Error(ErrorCode::InvalidInput, "duration must be non-negative");
  for (const auto& u : s.uavs) {
    if (u.path.empty()) throw Error(ErrorCode::InvalidInput, "UAV without waypoints");
    if (u.detector.cluster_size < 0) throw Error(ErrorCode::InvalidInput, "negative cluster size");
  }
  for (const auto& o : s.objects) {
    if (o.path.empty()) throw Error(ErrorCode::InvalidInput, "object without waypoints");
    if (!(o.diameter_m > 0.0)) throw Error(ErrorCode::InvalidInput, "object diameter must be positive");
  }
}

void emit_true_boxes(const Detection& gt, const DetectorModel& model, double miss, double lo, double hi,
                     const CameraState& cam, std::mt19937_64& rng, std::vector<Detection>& out) {
  const double w = gt.width(), h = gt.height();
  for (int k = 0; k < model.cluster_size; ++k) {
    const bool missed = uniform01(rng) < miss;
    const double dx = normal(rng, 0.0, model.jitter_px);
    const double dy = normal(rng, 0.0, model.jitter_px);
    const double grow = normal(rng, 0.0, model.size_jitter_rel);
    const double conf = uniform(rng, lo, hi);
    if (missed) continue;
    Detection d{gt.x1 + dx - 0.5 * grow * w, gt.y1 + dy - 0.5 * grow * h, gt.x2 + dx + 0.5 * grow * w,
                gt.y2 + dy + 0.5 * grow * h, gt.class_id, conf};
    d = clip(d, cam);
    if (d.valid()) out.push_back(d);
  }
}

void emit_false_positives(const DetectorModel& model, const CameraState& cam, std::mt19937_64& rng,
                          std::vector<Detection>& out) {
  const double whole = std::floor(model.fp_per_frame);
  int count = static_cast<int>(whole);
  if (uniform01(rng) < model.fp_per_frame - whole) ++count;
  const double top = std::max(0.0, cam.image_height_px / 2.0 + horizon_row_offset(cam) + 1.0);
  for (int i = 0; i < count; ++i) {
    const double row = uniform(rng, top, cam.image_height_px);
    const double col = uniform(rng, 0.0, cam.image_width_px);
    const double half = 0.5 * uniform(rng, model.fp_diameter_lo_px, model.fp_diameter_hi_px) / std::numbers::sqrt2;
    const double conf = uniform(rng, model.fp_conf_lo, model.fp_conf_hi);
    const Detection d = clip({col - half, row - half, col + half, row + half, model.fp_class_id, conf}, cam);
    if (d.valid()) out.push_back(d);
  }
}

FrameHeatmap render_heatmap(const HeatmapModel& model, const CameraState& cam, std::mt19937_64& rng) {
  FrameHeatmap hm{model.width, model.height,
                  std::vector<float>(static_cast<std::size_t>(model.width) * model.height, 0.0f)};
  for (float& v : hm.values) {
    const bool hit = uniform01(rng) < model.speckle_fraction;
    const double value = uniform01(rng);
    if (hit) v = static_cast<float>(value);
  }
  const double sx = double(cam.image_width_px) / model.width;
  const double sy = double(cam.image_height_px) / model.height;
  const GeoPoint here = camera_position(cam);
  for (const Hotspot& spot : model.hotspots) {
    const GpsProjection p = gps_to_pixel(spot.position, cam);
    if (p.status == ProjectionStatus::BehindCamera) continue;
    double col = 0.0, row = 0.0;
    to_absolute(p.pixel, cam, col, row);
    // Generous pixel window; exact membership is decided on the ground.
    const double reach = 3.0 * spot.radius_m * cam.focal_px / p.slant_d_m + std::max(sx, sy);
    const NorthOffset target = gps_to_offset(spot.position, here);
    const int c0 = std::max(0, int(std::floor((col - reach) / sx)));
    const int c1 = std::min(model.width - 1, int(std::ceil((col + reach) / sx)));
    const int r0 = std::max(0, int(std::floor((row - reach) / sy)));
    const int r1 = std::min(model.height - 1, int(std::ceil((row + reach) / sy)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        GroundTrace t;
        if (locate_ground(to_offset((c + 0.5) * sx, (r + 0.5) * sy, cam), cam, t) != GroundStatus::Ok) continue;
        const NorthOffset g = rotate_to_north({t.x_m, t.y_m, t.d_m}, cam.heading_deg);
        if (std::hypot(g.east_m - target.east_m, g.north_m - target.north_m) <= spot.radius_m) {
          float& v = hm.values[static_cast<std::size_t>(r) * model.width + c];
          v = std::max(v, static_cast<float>(spot.score));
        }
      }
    }
  }
  return hm;
}

}  // namespace

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::int64_t frame, std::uint64_t purpose) {
  const auto f = static_cast<std::uint64_t>(frame);
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32),
                    std::uint32_t(f),    std::uint32_t(f >> 32),    std::uint32_t(purpose)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double normal(std::mt19937_64& rng, double mean, double sd) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  if (sd == 0.0) return mean;
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CameraState camera_at(const UavSpec& uav, std::int64_t frame) {
  const auto [a, t] = bracket(uav.path, frame);
  const UavWaypoint& b = t == 0.0 ? *a : *(a + 1);
  return {lerp(a->position.latitude, b.position.latitude, t),
          lerp(a->position.longitude, b.position.longitude, t),
          lerp(a->altitude_m, b.altitude_m, t),
          lerp(a->gimbal_pitch_deg, b.gimbal_pitch_deg, t),
          lerp_heading(a->heading_deg, b.heading_deg, t),
          uav.focal_px,
          uav.image_width_px,
          uav.image_height_px};
}

GeoPoint object_position(const SimObject& object, std::int64_t frame) {
  const auto [a, t] = bracket(object.path, frame);
  const ObjectWaypoint& b = t == 0.0 ? *a : *(a + 1);
  return {lerp(a->position.latitude, b.position.latitude, t), lerp(a->position.longitude, b.position.longitude, t)};
}

std::optional<Detection> render_object(const SimObject& object, const GeoPoint& position, const CameraState& cam) {
  const GpsProjection p = gps_to_pixel(position, cam);
  if (p.status != ProjectionStatus::InFrame) return std::nullopt;
  double col = 0.0, row = 0.0;
  to_absolute(p.pixel, cam, col, row);
  const double half = 0.5 * object.diameter_m / p.slant_d_m * cam.focal_px;
  const Detection d = clip({col - half, row - half, col + half, row + half, object.class_id, 1.0}, cam);
  if (!d.valid()) return std::nullopt;
  return d;
}

std::vector<SimStream> simulate(const Scenario& s) {
  check(s);
  std::vector<SimStream> streams(s.uavs.size());
  for (std::size_t u = 0; u < s.uavs.size(); ++u) {
    const UavSpec& uav = s.uavs[u];
    SimStream& stream = streams[u];
    stream.reserve(static_cast<std::size_t>(s.duration_frames));
    for (std::int64_t f = 0; f < s.duration_frames; ++f) {
      SimFrame fr;
      fr.frame_id = f;
      fr.ts_us = std::llround(double(f) * 1e6 / s.fps) + uav.ts_offset_us;
      fr.cam = camera_at(uav, f);
      validate(fr.cam);

      auto rng = substream(s.seed, u, f, kDetector);
      for (std::size_t i = 0; i < s.objects.size(); ++i) {
        const GeoPoint pos = object_position(s.objects[i], f);
        const auto gt = render_object(s.objects[i], pos, fr.cam);
        if (!gt) continue;
        fr.ground_truth.push_back({static_cast<std::int64_t>(i), *gt, pos});
        double miss = uav.detector.miss_prob, lo = uav.detector.conf_lo, hi = uav.detector.conf_hi;
        for (const DetectorOverride& o : uav.overrides) {
          if (f >= o.first_frame && f <= o.last_frame && (o.object < 0 || o.object == int(i))) {
            miss = o.miss_prob;
            lo = o.conf_lo;
            hi = o.conf_hi;
          }
        }
        emit_true_boxes(*gt, uav.detector, miss, lo, hi, fr.cam, rng, fr.detections);
      }
      auto fp_rng = substream(s.seed, u, f, kFalsePositive);
      emit_false_positives(uav.detector, fr.cam, fp_rng, fr.detections);

      if (s.heatmap.width > 0 && s.heatmap.height > 0) {
        auto hm_rng = substream(s.seed, u, f, kHeatmap);
        fr.heatmap = render_heatmap(s.heatmap, fr.cam, hm_rng);
      }
      stream.push_back(std::move(fr));
    }
  }
  return streams;
}

std::vector<SizePoint> ground_truth_size_points(const std::vector<SimStream>& streams) {
  std::vector<SizePoint> points;
  for (const SimStream& stream : streams) {
    for (const SimFrame& f : stream) {
      for (const GroundTruthObject& g : f.ground_truth) {
        const GpsProjection p = gps_to_pixel(g.position, f.cam);
        points.push_back({p.slant_d_m, g.box.diameter(), g.box.class_id});
      }
    }
  }
  return points;
}

std::vector<StreamFrame> to_stream_frames(const SimStream& stream) {
  std::vector<StreamFrame> out;
  out.reserve(stream.size());
  for (const SimFrame& f : stream) out.push_back({f.frame_id, f.ts_us, f.cam, f.detections});
  return out;
}

std::vector<TelemetryRecord> telemetry_of(const SimStream& stream) {
  std::vector<TelemetryRecord> out;
  for (const SimFrame& f : stream) out.push_back({f.frame_id, f.ts_us, f.cam});
  return out;
}

std::vector<DetectionFrame> detections_of(const SimStream& stream) {
  std::vector<DetectionFrame> out;
  for (const SimFrame& f : stream) out.push_back({f.frame_id, f.detections});
  return out;
}

std::vector<GroundTruthFrame> ground_truth_of(const SimStream& stream) {
  std::vector<GroundTruthFrame> out;
  for (const SimFrame& f : stream) out.push_back({f.frame_id, f.ground_truth});
  return out;
}

// ---- JSON ----

namespace {

json point_json(const GeoPoint& p) { return json::array({p.latitude, p.longitude}); }
GeoPoint point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json detector_json(const DetectorModel& d) {
  return {{"miss_prob", d.miss_prob},
          {"conf_lo", d.conf_lo},
          {"conf_hi", d.conf_hi},
          {"cluster_size", d.cluster_size},
          {"jitter_px", d.jitter_px},
          {"size_jitter_rel", d.size_jitter_rel},
          {"fp_per_frame", d.fp_per_frame},
          {"fp_conf_lo", d.fp_conf_lo},
          {"fp_conf_hi", d.fp_conf_hi},
          {"fp_diameter_lo_px", d.fp_diameter_lo_px},
          {"fp_diameter_hi_px", d.fp_diameter_hi_px},
          {"fp_class_id", d.fp_class_id}};
}

DetectorModel detector_from(const json& j) {
  DetectorModel d;
  d.miss_prob = j.value("miss_prob", d.miss_prob);
  d.conf_lo = j.value("conf_lo", d.conf_lo);
  d.conf_hi = j.value("conf_hi", d.conf_hi);
  d.cluster_size = j.value("cluster_size", d.cluster_size);
  d.jitter_px = j.value("jitter_px", d.jitter_px);
  d.size_jitter_rel = j.value("size_jitter_rel", d.size_jitter_rel);
  d.fp_per_frame = j.value("fp_per_frame", d.fp_per_frame);
  d.fp_conf_lo = j.value("fp_conf_lo", d.fp_conf_lo);
  d.fp_conf_hi = j.value("fp_conf_hi", d.fp_conf_hi);
  d.fp_diameter_lo_px = j.value("fp_diameter_lo_px", d.fp_diameter_lo_px);
  d.fp_diameter_hi_px = j.value("fp_diameter_hi_px", d.fp_diameter_hi_px);
  d.fp_class_id = j.value("fp_class_id", d.fp_class_id);
  return d;
}

}  // namespace

json to_json(const Scenario& s) {
  json uavs = json::array();
  for (const UavSpec& u : s.uavs) {
    json path = json::array();
    for (const UavWaypoint& w : u.path)
      path.push_back({{"frame", w.frame},
                      {"position", point_json(w.position)},
                      {"alt_m", w.altitude_m},
                      {"gimbal_pitch_deg", w.gimbal_pitch_deg},
                      {"heading_deg", w.heading_deg}});
    json overrides = json::array();
    for (const DetectorOverride& o : u.overrides)
      overrides.push_back({{"first_frame", o.first_frame},
                           {"last_frame", o.last_frame},
                           {"object", o.object},
                           {"miss_prob", o.miss_prob},
                           {"conf_lo", o.conf_lo},
                           {"conf_hi", o.conf_hi}});
    uavs.push_back({{"path", path},
                    {"focal_px", u.focal_px},
                    {"img_w", u.image_width_px},
                    {"img_h", u.image_height_px},
                    {"ts_offset_us", u.ts_offset_us},
                    {"detector", detector_json(u.detector)},
                    {"overrides", overrides}});
  }
  json objects = json::array();
  for (const SimObject& o : s.objects) {
    json path = json::array();
    for (const ObjectWaypoint& w : o.path) path.push_back({{"frame", w.frame}, {"position", point_json(w.position)}});
    objects.push_back({{"class_id", o.class_id}, {"diameter_m", o.diameter_m}, {"path", path}});
  }
  json spots = json::array();
  for (const Hotspot& h : s.heatmap.hotspots)
    spots.push_back({{"position", point_json(h.position)}, {"radius_m", h.radius_m}, {"score", h.score}});
  return {{"seed", s.seed},
          {"duration_frames", s.duration_frames},
          {"fps", s.fps},
          {"uavs", uavs},
          {"objects", objects},
          {"heatmap",
           {{"width", s.heatmap.width},
            {"height", s.heatmap.height},
            {"speckle_fraction", s.heatmap.speckle_fraction},
            {"hotspots", spots}}}};
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    s.seed = j.value("seed", s.seed);
    s.duration_frames = j.value("duration_frames", s.duration_frames);
    s.fps = j.value("fps", s.fps);
    for (const auto& u : j.at("uavs")) {
      UavSpec spec;
      for (const auto& w : u.at("path"))
        spec.path.push_back({w.at("frame").get<std::int64_t>(), point_from(w.at("position")), w.value("alt_m", 60.0),
                             w.value("gimbal_pitch_deg", 45.0), w.value("heading_deg", 0.0)});
      spec.focal_px = u.value("focal_px", spec.focal_px);
      spec.image_width_px = u.value("img_w", spec.image_width_px);
      spec.image_height_px = u.value("img_h", spec.image_height_px);
      spec.ts_offset_us = u.value("ts_offset_us", spec.ts_offset_us);
      if (u.contains("detector")) spec.detector = detector_from(u.at("detector"));
      if (u.contains("overrides")) {
        for (const auto& o : u.at("overrides"))
          spec.overrides.push_back({o.at("first_frame").get<std::int64_t>(), o.at("last_frame").get<std::int64_t>(),
                                    o.value("object", -1), o.value("miss_prob", 1.0), o.value("conf_lo", 0.0),
                                    o.value("conf_hi", 0.0)});
      }
      s.uavs.push_back(std::move(spec));
    }
    if (j.contains("objects")) {
      for (const auto& o : j.at("objects")) {
        SimObject obj;
        obj.class_id = o.value("class_id", 0);
        obj.diameter_m = o.value("diameter_m", 1.0);
        for (const auto& w : o.at("path"))
          obj.path.push_back({w.at("frame").get<std::int64_t>(), point_from(w.at("position"))});
        s.objects.push_back(std::move(obj));
      }
    }
    if (j.contains("heatmap")) {
      const auto& h = j.at("heatmap");
      s.heatmap.width = h.value("width", 0);
      s.heatmap.height = h.value("height", 0);
      s.heatmap.speckle_fraction = h.value("speckle_fraction", 0.0);
      if (h.contains("hotspots")) {
        for (const auto& spot : h.at("hotspots"))
          s.heatmap.hotspots.push_back(
              {point_from(spot.at("position")), spot.value("radius_m", 1.0), spot.value("score", 1.0)});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad scenario: ") + e.what());
  }
  check(s);
  return s;
}

// ---- built-in scenarios ----

namespace {

const GeoPoint kSite{47.3667, 8.5500};

GeoPoint at(double east_m, double north_m) { return offset_to_gps({east_m, north_m}, kSite); }

SimObject stationary(int class_id, double diameter_m, double east_m, double north_m) {
  return {class_id, diameter_m, {{0, at(east_m, north_m)}}};
}

UavSpec hovering(double east_m, double north_m, double alt_m, double pitch_deg, double heading_deg) {
  UavSpec u;
  u.path.push_back({0, at(east_m, north_m), alt_m, pitch_deg, heading_deg});
  return u;
}

}  // namespace

Scenario boosting_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = 300;
  UavSpec uav = hovering(0, 0, 60.0, 45.0, 0.0);
  uav.detector = {.miss_prob = 0.10,
                  .conf_lo = 0.25,
                  .conf_hi = 0.45,
                  .cluster_size = 5,
                  .jitter_px = 1.0,
                  .size_jitter_rel = 0.03,
                  .fp_per_frame = 2.0,
                  .fp_conf_lo = 0.5,
                  .fp_conf_hi = 0.6,
                  .fp_diameter_lo_px = 8.0,
                  .fp_diameter_hi_px = 200.0};
  s.uavs.push_back(uav);
  const double diameters[] = {0.8, 0.9, 1.0, 1.1, 1.2, 0.95, 1.05, 0.85};
  int i = 0;
  for (double north : {45.0, 65.0, 85.0, 105.0}) {
    for (double east : {-20.0, 20.0}) s.objects.push_back(stationary(0, diameters[i++], east, north));
  }
  return s;
}

Scenario size_survey_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = 1;
  s.uavs.push_back(hovering(0, 0, 60.0, 45.0, 0.0));
  auto rng = substream(seed, 0, 0, kLayout);
  for (int i = 0; i < 400; ++i) {
    const double north = uniform(rng, 20.0, 160.0);
    const double east = uniform(rng, -0.6, 0.6) * north;
    const double diameter = uniform(rng, 0.8, 1.2);
    s.objects.push_back(stationary(0, diameter, east, north));
  }
  return s;
}

Scenario heading_rotation_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = 40;
  UavSpec uav;
  uav.path = {{0, kSite, 60.0, 45.0, 0.0}, {15, kSite, 60.0, 45.0, 0.0}, {20, kSite, 60.0, 45.0, 45.0}};
  uav.detector = {.miss_prob = 0.0, .conf_lo = 0.7, .conf_hi = 0.9, .cluster_size = 1, .jitter_px = 1.0};
  uav.overrides.push_back({16, 20, -1, 0.6, 0.7, 0.9});
  s.uavs.push_back(uav);
  for (double bearing : {15.0, 20.0, 25.0}) {
    const double b = bearing * std::numbers::pi / 180.0;
    s.objects.push_back(stationary(0, 1.0, 80.0 * std::sin(b), 80.0 * std::cos(b)));
  }
  return s;
}

Scenario reid_scenario(std::uint64_t seed, std::int64_t gap_frames) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = 200 + gap_frames;
  UavSpec uav = hovering(0, 0, 60.0, 45.0, 0.0);
  uav.detector = {.miss_prob = 0.0, .conf_lo = 0.7, .conf_hi = 0.9, .cluster_size = 1, .jitter_px = 1.0};
  s.uavs.push_back(uav);
  const GeoPoint home = at(0.0, 70.0);
  const GeoPoint away = at(200.0, 70.0);  // far outside the field of view
  s.objects.push_back({0, 1.0, {{0, home}, {99, home}, {100, away}, {99 + gap_frames, away}, {100 + gap_frames, home}}});
  return s;
}

Scenario fusion_scenario(std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = 260;
  UavSpec a = hovering(-15.0, 0.0, 60.0, 45.0, 0.0);
  a.detector = {.miss_prob = 0.05, .conf_lo = 0.7, .conf_hi = 0.9, .cluster_size = 3, .jitter_px = 1.0};
  UavSpec b = hovering(15.0, 0.0, 60.0, 45.0, 0.0);
  b.ts_offset_us = 7000;
  b.detector = {.miss_prob = 0.0, .conf_lo = 0.10, .conf_hi = 0.15, .cluster_size = 1, .jitter_px = 1.0};
  b.overrides.push_back({kFusionOcclusion.first_frame, kFusionOcclusion.last_frame, -1, 0.0, 0.08, 0.12});
  s.uavs = {a, b};
  s.objects.push_back(stationary(0, 1.0, 0.0, 80.0));
  return s;
}

Scenario anomaly_scenario(std::uint64_t seed, bool noise_only) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = 100;
  UavSpec uav;
  uav.path = {{0, kSite, 60.0, 70.0, 0.0},
              {25, kSite, 60.0, 70.0, 20.0},
              {50, kSite, 60.0, 70.0, 0.0},
              {75, kSite, 60.0, 70.0, 340.0},
              {100, kSite, 60.0, 70.0, 0.0}};
  uav.detector.cluster_size = 0;
  s.uavs.push_back(uav);
  s.heatmap.width = 480;
  s.heatmap.height = 270;
  if (noise_only) {
    s.heatmap.speckle_fraction = 0.02;
  } else {
    s.heatmap.hotspots.push_back({at(0.0, 25.0), 1.0, 1.0});
  }
  return s;
}

}  // namespace uavmem
