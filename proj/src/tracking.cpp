#include "uavmem/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace uavmem {

namespace {

struct Pair {
  double dist;
  std::int64_t track_id;
  std::size_t track_pos;
  std::size_t det;
};

bool pair_less(const Pair& a, const Pair& b) {
  return std::tie(a.dist, a.track_id, a.det) < std::tie(b.dist, b.track_id, b.det);
}

}  // namespace

double ground_distance_m(const GeoPoint& a, const GeoPoint& b) {
  const NorthOffset o = gps_to_offset(a, b);
  return std::hypot(o.east_m, o.north_m);
}

GpsTracker::GpsTracker(TrackerConfig config, std::shared_ptr<TrackIdSource> ids)
    : config_(config), ids_(ids ? std::move(ids) : std::make_shared<TrackIdSource>()) {}

bool GpsTracker::eligible(const GeoDetection& d) const {
  return d.located() && d.boosted_confidence >= config_.conf_threshold;
}

bool GpsTracker::alive(const Track& t) const {
  return t.state == TrackState::Active || t.age_frames <= config_.reid_horizon_frames;
}

void GpsTracker::update(Track& t, std::int64_t frame_id, const GeoDetection& d) {
  t.last_position = *d.position;
  t.last_box = d.detection;
  t.last_confidence = d.boosted_confidence;
  t.last_seen_frame = frame_id;
  t.state = TrackState::Active;
  t.age_frames = 0;
  t.history.emplace_back(frame_id, *d.position);
}

AssociateResult GpsTracker::associate(std::int64_t frame_id, std::span<const GeoDetection> detections) {
  last_frame_ = frame_id;
  std::vector<Pair> pairs;
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    const Track& t = tracks_[ti];
    if (!alive(t)) continue;
    for (std::size_t di = 0; di < detections.size(); ++di) {
      const GeoDetection& d = detections[di];
      if (!eligible(d) || d.detection.class_id != t.class_id) continue;
      const double dist = ground_distance_m(*d.position, t.last_position);
      if (dist <= config_.max_dist_m) pairs.push_back({dist, t.track_id, ti, di});
    }
  }
  std::sort(pairs.begin(), pairs.end(), pair_less);

  std::vector<bool> track_used(tracks_.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  AssociateResult out;
  for (const Pair& p : pairs) {
    if (track_used[p.track_pos] || det_used[p.det]) continue;
    track_used[p.track_pos] = true;
    det_used[p.det] = true;
    update(tracks_[p.track_pos], frame_id, detections[p.det]);
    out.matched.push_back({p.track_id, p.det});
  }
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    if (track_used[ti]) continue;
    tracks_[ti].state = TrackState::Lost;
    ++tracks_[ti].age_frames;
  }
  for (std::size_t di = 0; di < detections.size(); ++di) {
    if (!det_used[di] && eligible(detections[di]) &&
        detections[di].boosted_confidence >= config_.birth_threshold) {
      out.births.push_back(di);
    }
  }
  return out;
}

std::vector<Assignment> GpsTracker::reidentify(std::int64_t frame_id,
                                               std::span<const GeoDetection> detections,
                                               std::span<const std::size_t> births,
                                               std::span<const ForeignTrack> foreign) {
  std::vector<Assignment> out;
  std::vector<Pair> pairs;
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    const Track& t = tracks_[ti];
    // Tracks matched this frame are Active with age 0.
    if (t.state != TrackState::Lost || !alive(t)) continue;
    for (std::size_t di : births) {
      const GeoDetection& d = detections[di];
      if (d.detection.class_id != t.class_id) continue;
      const double dist = ground_distance_m(*d.position, t.last_position);
      if (dist <= config_.reid_dist_m) pairs.push_back({dist, t.track_id, ti, di});
    }
  }
  std::sort(pairs.begin(), pairs.end(), pair_less);

  std::vector<bool> track_used(tracks_.size(), false);
  std::vector<std::size_t> remaining;
  std::vector<bool> det_used(detections.size(), false);
  for (const Pair& p : pairs) {
    if (track_used[p.track_pos] || det_used[p.det]) continue;
    track_used[p.track_pos] = true;
    det_used[p.det] = true;
    update(tracks_[p.track_pos], frame_id, detections[p.det]);
    out.push_back({p.track_id, p.det});
  }
  for (std::size_t di : births) {
    if (!det_used[di]) remaining.push_back(di);
  }

  // Adopt ids of nearby tracks owned by other streams.
  std::vector<Pair> foreign_pairs;
  for (std::size_t fi = 0; fi < foreign.size(); ++fi) {
    const ForeignTrack& f = foreign[fi];
    if (frame_id - f.last_seen_frame > config_.reid_horizon_frames) continue;
    const bool owned = std::any_of(tracks_.begin(), tracks_.end(),
                                   [&](const Track& t) { return t.track_id == f.track_id; });
    if (owned) continue;
    for (std::size_t di : remaining) {
      const GeoDetection& d = detections[di];
      if (d.detection.class_id != f.class_id) continue;
      const double dist = ground_distance_m(*d.position, f.position);
      if (dist <= config_.reid_dist_m) foreign_pairs.push_back({dist, f.track_id, fi, di});
    }
  }
  std::sort(foreign_pairs.begin(), foreign_pairs.end(), pair_less);
  std::vector<bool> foreign_used(foreign.size(), false);
  for (const Pair& p : foreign_pairs) {
    if (foreign_used[p.track_pos] || det_used[p.det]) continue;
    foreign_used[p.track_pos] = true;
    det_used[p.det] = true;
    Track t;
    t.track_id = p.track_id;
    t.class_id = detections[p.det].detection.class_id;
    update(t, frame_id, detections[p.det]);
    tracks_.push_back(std::move(t));
    out.push_back({p.track_id, p.det});
  }

  for (std::size_t di : remaining) {
    if (det_used[di]) continue;
    Track t;
    t.track_id = ids_->next();
    t.class_id = detections[di].detection.class_id;
    update(t, frame_id, detections[di]);
    out.push_back({t.track_id, di});
    tracks_.push_back(std::move(t));
  }
  return out;
}

std::vector<Assignment> GpsTracker::step(std::int64_t frame_id, std::span<const GeoDetection> detections,
                                         std::span<const ForeignTrack> foreign) {
  AssociateResult a = associate(frame_id, detections);
  std::vector<Assignment> all = std::move(a.matched);
  const auto reid = reidentify(frame_id, detections, a.births, foreign);
  all.insert(all.end(), reid.begin(), reid.end());
  std::sort(all.begin(), all.end(),
            [](const Assignment& x, const Assignment& y) { return x.detection_index < y.detection_index; });
  return all;
}

std::vector<ForeignTrack> GpsTracker::published(std::int64_t frame_id) const {
  std::vector<ForeignTrack> out;
  for (const Track& t : tracks_) {
    if (frame_id - t.last_seen_frame <= config_.reid_horizon_frames) {
      out.push_back({t.track_id, t.class_id, t.last_position, t.last_seen_frame});
    }
  }
  return out;
}

std::vector<Assignment> PixelTracker::step(std::int64_t, std::span<const Detection> detections) {
  std::vector<Pair> pairs;
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    for (std::size_t di = 0; di < detections.size(); ++di) {
      const Detection& d = detections[di];
      if (d.confidence < config_.conf_threshold || d.class_id != tracks_[ti].class_id) continue;
      const double dist = std::hypot(d.center_col() - tracks_[ti].col, d.center_row() - tracks_[ti].row);
      if (dist <= config_.max_dist_px) pairs.push_back({dist, tracks_[ti].id, ti, di});
    }
  }
  std::sort(pairs.begin(), pairs.end(), pair_less);
  std::vector<bool> tu(tracks_.size(), false), du(detections.size(), false);
  std::vector<Assignment> out;
  for (const Pair& p : pairs) {
    if (tu[p.track_pos] || du[p.det]) continue;
    tu[p.track_pos] = du[p.det] = true;
    State& s = tracks_[p.track_pos];
    s.col = detections[p.det].center_col();
    s.row = detections[p.det].center_row();
    s.age = 0;
    out.push_back({s.id, p.det});
  }
  for (std::size_t ti = 0; ti < tracks_.size(); ++ti) {
    if (!tu[ti]) ++tracks_[ti].age;
  }
  std::erase_if(tracks_, [&](const State& s) { return s.age > config_.max_age_frames; });
  for (std::size_t di = 0; di < detections.size(); ++di) {
    const Detection& d = detections[di];
    if (du[di] || d.confidence < config_.conf_threshold) continue;
    tracks_.push_back({next_id_, d.class_id, d.center_col(), d.center_row(), 0});
    out.push_back({next_id_++, di});
  }
  std::sort(out.begin(), out.end(),
            [](const Assignment& x, const Assignment& y) { return x.detection_index < y.detection_index; });
  return out;
}

}  // namespace uavmem
