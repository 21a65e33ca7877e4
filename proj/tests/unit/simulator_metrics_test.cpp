#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uavmem/geodesy.hpp"
#include "uavmem/metrics.hpp"
#include "uavmem/simulator.hpp"

namespace uavmem {
namespace {

const GeoPoint kSite{47.3667, 8.55};

Scenario grid_scenario(std::uint64_t seed, DetectorModel det, int frames = 20) {
  Scenario s;
  s.seed = seed;
  s.duration_frames = frames;
  UavSpec uav;
  uav.path = {{0, kSite, 60.0, 45.0, 10.0}, {frames - 1, offset_to_gps({5.0, 10.0}, kSite), 60.0, 45.0, 20.0}};
  uav.detector = det;
  s.uavs = {uav};
  for (int i = 0; i < 6; ++i) {
    SimObject o;
    o.class_id = i % 2;
    o.diameter_m = 1.0 + 0.2 * i;
    o.path = {{0, offset_to_gps({-15.0 + 6.0 * i, 60.0 + 4.0 * i}, kSite)}};
    s.objects.push_back(o);
  }
  return s;
}

TEST(Substream, UniformAndNormal) {
  auto a = substream(1, 0, 5, 1), b = substream(1, 0, 5, 1), c = substream(1, 0, 5, 2);
  const double x = uniform01(a);
  EXPECT_EQ(x, uniform01(b));
  EXPECT_NE(x, uniform01(c));
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = uniform01(a);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double n = normal(b, 2.0, 3.0);
    sum += n;
    sq += (n - 2.0) * (n - 2.0);
  }
  EXPECT_NEAR(sum / 20000, 2.0, 0.1);
  EXPECT_NEAR(std::sqrt(sq / 20000), 3.0, 0.1);
  EXPECT_EQ(normal(a, 4.5, 0.0), 4.5);
}

TEST(Simulator, NoiselessDetectorReproducesGroundTruth) {
  DetectorModel det;
  det.conf_lo = det.conf_hi = 0.8;
  const auto streams = simulate(grid_scenario(3, det));
  std::size_t boxes = 0;
  for (const SimFrame& f : streams[0]) {
    ASSERT_EQ(f.detections.size(), f.ground_truth.size());
    for (std::size_t i = 0; i < f.detections.size(); ++i) {
      const Detection& d = f.detections[i];
      const Detection& g = f.ground_truth[i].box;
      EXPECT_EQ(d.x1, g.x1);
      EXPECT_EQ(d.y1, g.y1);
      EXPECT_EQ(d.x2, g.x2);
      EXPECT_EQ(d.y2, g.y2);
      EXPECT_EQ(d.class_id, g.class_id);
      EXPECT_EQ(d.confidence, 0.8);
      ++boxes;
    }
  }
  EXPECT_EQ(boxes, 6u * 20u);
}

TEST(Simulator, CertainMissGivesNoDetections) {
  DetectorModel det;
  det.miss_prob = 1.0;
  det.cluster_size = 4;
  const auto streams = simulate(grid_scenario(4, det));
  for (const SimFrame& f : streams[0]) {
    EXPECT_TRUE(f.detections.empty());
    EXPECT_EQ(f.ground_truth.size(), 6u);
  }
}

TEST(Simulator, GroundTruthBoxCentreGeolocatesToObject) {
  const auto streams = simulate(grid_scenario(5, DetectorModel{}));
  for (const SimFrame& f : streams[0])
    for (const GroundTruthObject& g : f.ground_truth) {
      const Detection d{g.box.x1, g.box.y1, g.box.x2, g.box.y2, 0, 1.0};
      const auto located = geolocate_detections(std::span<const Detection>(&d, 1), f.cam);
      ASSERT_TRUE(located[0].located());
      EXPECT_LT(ground_distance_m(*located[0].position, g.position), 0.5);
    }
}

TEST(Simulator, SeededRunsAreReproducible) {
  DetectorModel det;
  det.miss_prob = 0.2;
  det.cluster_size = 3;
  det.jitter_px = 2.0;
  det.size_jitter_rel = 0.05;
  det.fp_per_frame = 3;
  const auto dump = [](const std::vector<SimStream>& s) {
    std::string out;
    for (const auto& d : detections_of(s[0])) {
      for (const auto& b : d.detections) out += nlohmann::json({b.x1, b.y1, b.x2, b.y2, b.confidence}).dump();
      out += '\n';
    }
    return out;
  };
  const std::string a = dump(simulate(grid_scenario(9, det)));
  EXPECT_EQ(a, dump(simulate(grid_scenario(9, det))));
  EXPECT_NE(a, dump(simulate(grid_scenario(10, det))));
}

TEST(Simulator, ScenarioJsonRoundTrip) {
  const Scenario s = fusion_scenario(11);
  const Scenario back = scenario_from_json(to_json(s));
  EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
}

TEST(Simulator, StreamFramesCarryTimestamps) {
  Scenario s = fusion_scenario(1);
  s.duration_frames = 4;
  const auto streams = simulate(s);
  ASSERT_EQ(streams.size(), 2u);
  const auto b = to_stream_frames(streams[1]);
  EXPECT_EQ(b[1].ts_us - streams[0][1].ts_us, s.uavs[1].ts_offset_us);
}

std::vector<GroundTruthFrame> truth_frames(int frames, int objects) {
  std::vector<GroundTruthFrame> out;
  for (int f = 0; f < frames; ++f) {
    GroundTruthFrame g{f, {}};
    for (int o = 0; o < objects; ++o)
      g.objects.push_back({o, {100.0 * o, 10.0 + f, 100.0 * o + 40, 50.0 + f, 0, 1.0}, {}});
    out.push_back(g);
  }
  return out;
}

TEST(Metrics, PerfectPredictions) {
  const auto truth = truth_frames(10, 4);
  std::vector<DetectionFrame> preds;
  std::vector<TrackRow> rows;
  for (const auto& g : truth) {
    DetectionFrame d{g.frame_id, {}};
    for (const auto& o : g.objects) {
      Detection b = o.box;
      b.confidence = 0.9;
      d.detections.push_back(b);
      rows.push_back({g.frame_id, 100 + o.object_id, b, {}});
    }
    preds.push_back(d);
  }
  const DetectionReport r = evaluate_detections(preds, truth);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.ap50, 1.0);
  EXPECT_EQ(r.average_recall, 1.0);
  const TrackingReport t = evaluate_tracking(rows, truth);
  EXPECT_EQ(t.recall, 1.0);
  EXPECT_EQ(t.id_switches, 0u);
  EXPECT_EQ(t.fragmentations, 0u);
}

TEST(Metrics, HalfDetectedAndThresholded) {
  const auto truth = truth_frames(6, 4);
  std::vector<DetectionFrame> preds;
  for (const auto& g : truth) {
    DetectionFrame d{g.frame_id, {}};
    for (int o = 0; o < 2; ++o) {
      Detection b = g.objects[o].box;
      b.confidence = 0.9;
      d.detections.push_back(b);
    }
    Detection low = g.objects[2].box;
    low.confidence = 0.3;
    d.detections.push_back(low);
    d.detections.push_back({900, 900, 950, 950, 0, 0.95});
    preds.push_back(d);
  }
  const DetectionReport r = evaluate_detections(preds, truth);
  EXPECT_EQ(r.recall, 0.5);
  EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.true_positives, 12u);
  EXPECT_EQ(r.false_positives, 6u);
  EXPECT_NEAR(r.ap50, oracle::brute_force_ap(preds, truth, 0.5), 1e-12);
}

TEST(Metrics, SwitchesAndFragmentations) {
  const auto truth = truth_frames(6, 1);
  std::vector<TrackRow> rows;
  const std::int64_t ids[] = {1, 1, -1, 1, 2, 2};  // -1: missed
  for (int f = 0; f < 6; ++f)
    if (ids[f] >= 0) rows.push_back({f, ids[f], truth[f].objects[0].box, {}});
  const TrackingReport t = evaluate_tracking(rows, truth);
  EXPECT_EQ(t.matches, 5u);
  EXPECT_EQ(t.id_switches, 1u);
  EXPECT_EQ(t.fragmentations, 1u);
  const TrackingReport window = evaluate_tracking(rows, truth, 3, 5);
  EXPECT_EQ(window.ground_truth, 3u);
  EXPECT_EQ(window.fragmentations, 0u);
  EXPECT_EQ(window.id_switches, 1u);
}

TEST(Metrics, ApMatchesBruteForceOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 150; ++t) {
    std::vector<GroundTruthFrame> truth;
    std::vector<DetectionFrame> preds;
    for (int f = 0; f < 1 + int(rng() % 4); ++f) {
      GroundTruthFrame g{f, {}};
      DetectionFrame d{f, {}};
      for (int o = 0; o < int(rng() % 6); ++o) {
        const double x = 200 * u(rng), y = 200 * u(rng), s = 10 + 30 * u(rng);
        const int cls = int(rng() % 2);
        g.objects.push_back({o, {x, y, x + s, y + s, cls, 1.0}, {}});
      }
      for (int p = 0; p < int(rng() % 8); ++p) {
        double x, y, s;
        int cls = int(rng() % 2);
        if (!g.objects.empty() && u(rng) < 0.7) {
          const Detection& b = g.objects[rng() % g.objects.size()].box;
          x = b.x1 + 8 * (u(rng) - 0.5);
          y = b.y1 + 8 * (u(rng) - 0.5);
          s = b.width() * (0.8 + 0.4 * u(rng));
          cls = b.class_id;
        } else {
          x = 200 * u(rng), y = 200 * u(rng), s = 10 + 30 * u(rng);
        }
        // Quantised confidences produce ties.
        d.detections.push_back({x, y, x + s, y + s, cls, std::round(10 * u(rng)) / 10});
      }
      truth.push_back(g);
      preds.push_back(d);
    }
    for (double iou : {0.5, 0.75})
      ASSERT_NEAR(average_precision(preds, truth, iou), double(oracle::brute_force_ap(preds, truth, iou)), 1e-9)
          << t;
  }
}

}  // namespace
}  // namespace uavmem
