#include "uavmem/bench.hpp"

#include <chrono>
#include <cmath>

#include "uavmem/anomaly.hpp"
#include "uavmem/simulator.hpp"
#include "uavmem/vod_pipeline.hpp"

namespace uavmem {

namespace {

const GeoPoint kBenchSite{47.3667, 8.5500};

CameraState bench_camera(double heading_deg) {
  return {kBenchSite.latitude, kBenchSite.longitude, 60.0, 45.0, heading_deg, 2600.0, 3840, 2160};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

BenchResult bench_vod(std::size_t detections, int map_cells, std::size_t frames, std::uint64_t seed) {
  const std::vector<SimStream> survey = simulate(size_survey_scenario(seed));
  const SizeModel sizes = SizeModel::fit(ground_truth_size_points(survey), SizeModelParams{});

  MapSpec spec;
  spec.edge_size_m = map_cells * spec.cell_size_m;

  // A handful of distinct frames, replayed.
  constexpr std::size_t kVariants = 8;
  constexpr std::size_t kPerObject = 20;
  std::vector<std::vector<Detection>> variants(kVariants);
  for (std::size_t v = 0; v < kVariants; ++v) {
    auto rng = substream(seed, 99, static_cast<std::int64_t>(v), 7);
    auto& dets = variants[v];
    while (dets.size() < detections) {
      const double col = uniform(rng, 100.0, 3740.0);
      const double row = uniform(rng, 100.0, 2060.0);
      const double half = uniform(rng, 10.0, 25.0);
      const int cls = static_cast<int>(rng() % 3);
      for (std::size_t k = 0; k < kPerObject && dets.size() < detections; ++k) {
        const double dx = normal(rng, 0.0, 2.0), dy = normal(rng, 0.0, 2.0);
        dets.push_back({col - half + dx, row - half + dy, col + half + dx, row + half + dy, cls,
                        uniform(rng, 0.1, 0.6)});
      }
    }
  }

  VodPipeline pipeline(spec, VodConfig{}, sizes);
  const auto start = std::chrono::steady_clock::now();
  std::size_t kept = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    const CameraState cam = bench_camera(std::fmod(double(f), 360.0));
    kept += pipeline.process_frame(static_cast<std::int64_t>(f), cam, variants[f % kVariants]).final_detections.size();
  }
  BenchResult r{"vod_process_frame", frames, seconds_since(start)};
  // Keep the optimizer honest.
  if (kept == static_cast<std::size_t>(-1)) r.frames = 0;
  return r;
}

BenchResult bench_anomaly(int width, int height, std::size_t frames, std::uint64_t seed) {
  constexpr std::size_t kVariants = 8;
  std::vector<FrameHeatmap> heatmaps;
  for (std::size_t v = 0; v < kVariants; ++v) {
    auto rng = substream(seed, 98, static_cast<std::int64_t>(v), 7);
    FrameHeatmap hm{width, height, std::vector<float>(static_cast<std::size_t>(width) * height)};
    for (float& x : hm.values) x = static_cast<float>(uniform01(rng));
    heatmaps.push_back(std::move(hm));
  }
  AnomalyAggregator aggregator(AnomalyConfig{}, kBenchSite);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t f = 0; f < frames; ++f) {
    aggregator.step(heatmaps[f % kVariants], bench_camera(std::fmod(double(f), 360.0)));
  }
  return {"anomaly_projection", frames, seconds_since(start)};
}

}  // namespace uavmem
