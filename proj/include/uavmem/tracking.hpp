#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "uavmem/detection.hpp"

namespace uavmem {

struct TrackerConfig {
  double conf_threshold = 0.5;
  double max_dist_m = 5.0;
  double birth_threshold = 0.6;
  int reid_horizon_frames = 900;
  double reid_dist_m = 10.0;

  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

enum class TrackState { Active, Lost };

struct Track {
  std::int64_t track_id = 0;
  int class_id = 0;
  GeoPoint last_position;
  Detection last_box;
  double last_confidence = 0.0;
  std::int64_t last_seen_frame = 0;
  TrackState state = TrackState::Active;
  int age_frames = 0;  // frames since last match; 0 while Active
  std::vector<std::pair<std::int64_t, GeoPoint>> history;
};

/// Ground distance between two nearby points, meters.
double ground_distance_m(const GeoPoint& a, const GeoPoint& b);

/// Monotonic id source, shareable between streams so ids stay unique.
class TrackIdSource {
 public:
  std::int64_t next() { return ++last_; }

 private:
  std::int64_t last_ = 0;
};

/// Last known state of tracks owned by other streams (cooperative mode).
struct ForeignTrack {
  std::int64_t track_id = 0;
  int class_id = 0;
  GeoPoint position;
  std::int64_t last_seen_frame = 0;
};

struct Assignment {
  std::int64_t track_id = 0;
  std::size_t detection_index = 0;
};

struct AssociateResult {
  std::vector<Assignment> matched;
  /// Candidate indices above the birth threshold that matched no track, in
  /// ascending index order.
  std::vector<std::size_t> births;
};

/// GPS-space tracker: each track takes the closest boosted detection above
/// the confidence threshold, and lost tracks are re-identified by position
/// within a time horizon.
class GpsTracker {
 public:
  explicit GpsTracker(TrackerConfig config, std::shared_ptr<TrackIdSource> ids = nullptr);

  /// associate followed by reidentify; returns all assignments of the frame
  /// sorted by detection index.
  std::vector<Assignment> step(std::int64_t frame_id, std::span<const GeoDetection> detections,
                               std::span<const ForeignTrack> foreign = {});

  /// Globally greedy matching by ascending distance (ties: lower track id,
  /// then lower detection index). Unmatched tracks become/stay Lost.
  AssociateResult associate(std::int64_t frame_id, std::span<const GeoDetection> detections);

  /// Merges pending births into lost tracks (or foreign tracks) within
  /// reid_dist_m; remaining births start new tracks.
  std::vector<Assignment> reidentify(std::int64_t frame_id, std::span<const GeoDetection> detections,
                                     std::span<const std::size_t> births,
                                     std::span<const ForeignTrack> foreign = {});

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return config_; }

  /// Tracks seen within the reid horizon, as visible to other streams.
  std::vector<ForeignTrack> published(std::int64_t frame_id) const;

 private:
  bool eligible(const GeoDetection& d) const;
  bool alive(const Track& t) const;
  void update(Track& t, std::int64_t frame_id, const GeoDetection& d);

  TrackerConfig config_;
  std::shared_ptr<TrackIdSource> ids_;
  std::vector<Track> tracks_;
  std::int64_t last_frame_ = -1;
};

/// Image-space nearest-pixel tracker used as a comparison baseline.
struct PixelTrackerConfig {
  double conf_threshold = 0.5;
  double max_dist_px = 50.0;
  int max_age_frames = 30;
};

class PixelTracker {
 public:
  explicit PixelTracker(PixelTrackerConfig config) : config_(config) {}

  std::vector<Assignment> step(std::int64_t frame_id, std::span<const Detection> detections);

 private:
  struct State {
    std::int64_t id;
    int class_id;
    double col, row;
    int age;
  };
  PixelTrackerConfig config_;
  std::vector<State> tracks_;
  std::int64_t next_id_ = 1;
};

}  // namespace uavmem
