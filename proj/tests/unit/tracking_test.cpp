#include <algorithm>
#include <functional>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "uavmem/geodesy.hpp"
#include "uavmem/tracking.hpp"

namespace uavmem {
namespace {

const GeoPoint kHome{-33.9, 151.2};

GeoDetection det_at(double east, double north, double conf = 0.8, int class_id = 0) {
  GeoDetection g;
  g.detection = {0, 0, 10, 10, class_id, conf};
  g.boosted_confidence = conf;
  g.position = offset_to_gps({east, north}, kHome);
  return g;
}

std::int64_t id_of(const std::vector<Assignment>& a, std::size_t det) {
  for (const auto& x : a)
    if (x.detection_index == det) return x.track_id;
  return -1;
}

TEST(GpsTracker, BirthNeedsBirthThreshold) {
  GpsTracker t(TrackerConfig{});
  const std::vector<GeoDetection> dets = {det_at(0, 0, 0.55), det_at(20, 0, 0.65), det_at(40, 0, 0.3)};
  const auto a = t.step(0, dets);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].detection_index, 1u);
  EXPECT_EQ(t.tracks().size(), 1u);
}

TEST(GpsTracker, TakesNearestCandidate) {
  GpsTracker t(TrackerConfig{});
  const std::vector<GeoDetection> first = {det_at(0, 0)};
  const auto id = t.step(0, first).front().track_id;
  const std::vector<GeoDetection> next = {det_at(0, 10), det_at(1, 0)};
  const auto a = t.step(1, next);
  EXPECT_EQ(id_of(a, 1), id);
  // The far candidate starts its own track.
  EXPECT_NE(id_of(a, 0), id);
  EXPECT_NE(id_of(a, 0), -1);
}

TEST(GpsTracker, NoCandidateMakesTrackLost) {
  GpsTracker t(TrackerConfig{});
  const std::vector<GeoDetection> first = {det_at(0, 0)};
  t.step(0, first);
  const std::vector<GeoDetection> far = {det_at(0, 5.5, 0.55)};
  t.step(1, far);
  ASSERT_EQ(t.tracks().size(), 1u);
  EXPECT_EQ(t.tracks()[0].state, TrackState::Lost);
  EXPECT_EQ(t.tracks()[0].age_frames, 1);
}

TEST(GpsTracker, LostTrackStillMatchable) {
  GpsTracker t(TrackerConfig{});
  const std::vector<GeoDetection> d = {det_at(0, 0)};
  const auto id = t.step(0, d).front().track_id;
  t.step(1, {});
  t.step(2, {});
  const std::vector<GeoDetection> back = {det_at(0, 3, 0.52)};
  const auto a = t.step(3, back);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].track_id, id);
  EXPECT_EQ(t.tracks()[0].state, TrackState::Active);
}

TEST(GpsTracker, ReidWithinHorizonNewIdBeyond) {
  TrackerConfig cfg;
  cfg.reid_horizon_frames = 100;
  for (const auto& [gap, same] : std::vector<std::pair<int, bool>>{{50, true}, {100, true}, {101, false}}) {
    GpsTracker t(cfg);
    const std::vector<GeoDetection> d = {det_at(0, 0)};
    const auto id = t.step(0, d).front().track_id;
    for (int f = 1; f < gap; ++f) t.step(f, {});
    // Returns 8 m away: beyond the association gate, inside the reid radius.
    const std::vector<GeoDetection> back = {det_at(8, 0)};
    const auto a = t.step(gap, back);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].track_id == id, same) << "gap " << gap;
  }
}

TEST(GpsTracker, AdoptsForeignTrackId) {
  auto ids = std::make_shared<TrackIdSource>();
  GpsTracker a(TrackerConfig{}, ids), b(TrackerConfig{}, ids);
  const std::vector<GeoDetection> d = {det_at(0, 0)};
  const auto id = a.step(0, d).front().track_id;
  const auto foreign = a.published(0);
  const std::vector<GeoDetection> near = {det_at(4, 4)};
  const auto got = b.step(0, near, foreign);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].track_id, id);
  // A fresh object elsewhere gets a new id from the shared source.
  const std::vector<GeoDetection> other = {det_at(4, 4), det_at(100, 0)};
  const auto more = b.step(1, other, foreign);
  EXPECT_EQ(id_of(more, 0), id);
  EXPECT_EQ(id_of(more, 1), id + 1);
}

TEST(GpsTracker, StationaryObjectKeepsId) {
  GpsTracker t(TrackerConfig{});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> jitter(0.0, 0.3);
  std::int64_t id = -1;
  for (int f = 0; f < 300; ++f) {
    const std::vector<GeoDetection> d = {det_at(jitter(rng), jitter(rng))};
    const auto a = t.step(f, d);
    ASSERT_EQ(a.size(), 1u);
    if (id < 0) id = a[0].track_id;
    ASSERT_EQ(a[0].track_id, id);
  }
}

/// Enumerates every one-to-one matching of gated pairs and keeps those with
/// no blocking pair: a track and a detection that are both free or both
/// matched farther apart than they are to each other.
std::vector<std::vector<std::pair<int, int>>> stable_matchings(const std::vector<std::vector<double>>& dist,
                                                               double gate) {
  const int nt = int(dist.size()), nd = nt ? int(dist[0].size()) : 0;
  std::vector<std::vector<std::pair<int, int>>> out;
  std::vector<int> track_to(nt, -1);
  std::vector<bool> used(nd, false);
  std::function<void(int)> rec = [&](int ti) {
    if (ti == nt) {
      std::vector<double> tcost(nt, std::numeric_limits<double>::infinity());
      std::vector<double> dcost(nd, std::numeric_limits<double>::infinity());
      for (int t = 0; t < nt; ++t)
        if (track_to[t] >= 0) tcost[t] = dcost[track_to[t]] = dist[t][track_to[t]];
      for (int t = 0; t < nt; ++t)
        for (int d = 0; d < nd; ++d)
          if (dist[t][d] <= gate && dist[t][d] < tcost[t] && dist[t][d] < dcost[d]) return;
      std::vector<std::pair<int, int>> m;
      for (int t = 0; t < nt; ++t)
        if (track_to[t] >= 0) m.emplace_back(t, track_to[t]);
      out.push_back(m);
      return;
    }
    rec(ti + 1);
    for (int d = 0; d < nd; ++d) {
      if (used[d] || dist[ti][d] > gate) continue;
      used[d] = true;
      track_to[ti] = d;
      rec(ti + 1);
      track_to[ti] = -1;
      used[d] = false;
    }
  };
  rec(0);
  return out;
}

TEST(GpsTracker, AssociationMatchesEnumerationOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(-6.0, 6.0);
  int contested = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int nt = 1 + int(rng() % 4), nd = 1 + int(rng() % 5);
    GpsTracker t(TrackerConfig{});
    std::vector<GeoDetection> seeds;
    std::vector<NorthOffset> track_pos;
    for (int i = 0; i < nt; ++i) {
      // Births in one frame never merge, so crowded tracks are fine.
      track_pos.push_back({pos(rng), pos(rng)});
      seeds.push_back(det_at(track_pos.back().east_m, track_pos.back().north_m));
    }
    t.step(0, seeds);
    ASSERT_EQ(int(t.tracks().size()), nt);
    std::vector<GeoDetection> dets;
    std::vector<std::vector<double>> dist(nt, std::vector<double>(nd));
    for (int d = 0; d < nd; ++d) {
      dets.push_back(det_at(pos(rng), pos(rng)));
      for (int k = 0; k < nt; ++k) dist[k][d] = ground_distance_m(t.tracks()[k].last_position, *dets.back().position);
    }
    const auto got = t.associate(1, dets);
    std::vector<std::pair<int, int>> pairs;
    for (const auto& a : got.matched) pairs.emplace_back(int(a.track_id - 1), int(a.detection_index));
    std::sort(pairs.begin(), pairs.end());
    const auto stable = stable_matchings(dist, TrackerConfig{}.max_dist_m);
    ASSERT_EQ(stable.size(), 1u) << "trial " << trial;
    ASSERT_EQ(pairs, stable.front()) << "trial " << trial;
    contested += nt > 1 && nd > 1;
  }
  EXPECT_GT(contested, 200);
}

TEST(GpsTracker, NeverAssignsOneDetectionTwice) {
  GpsTracker t(TrackerConfig{});
  const std::vector<GeoDetection> two = {det_at(0, 0), det_at(3, 0)};
  t.step(0, two);
  const std::vector<GeoDetection> one = {det_at(1.5, 0)};
  const auto a = t.step(1, one);
  EXPECT_EQ(a.size(), 1u);
}

TEST(GpsTracker, IgnoresUnlocatedDetections) {
  GpsTracker t(TrackerConfig{});
  GeoDetection sky = det_at(0, 0);
  sky.position.reset();
  sky.status = LocateStatus::AboveHorizon;
  const std::vector<GeoDetection> d = {sky};
  EXPECT_TRUE(t.step(0, d).empty());
}

TEST(PixelTracker, FollowsSmallMotionLosesLargeJump) {
  PixelTracker p(PixelTrackerConfig{});
  const std::vector<Detection> a = {{100, 100, 120, 120, 0, 0.9}};
  const auto id = p.step(0, a).front().track_id;
  const std::vector<Detection> b = {{130, 100, 150, 120, 0, 0.9}};
  EXPECT_EQ(p.step(1, b).front().track_id, id);
  const std::vector<Detection> c = {{400, 100, 420, 120, 0, 0.9}};
  EXPECT_NE(p.step(2, c).front().track_id, id);
}

}  // namespace
}  // namespace uavmem
