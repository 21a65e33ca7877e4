#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace uavmem {

struct BenchResult {
  std::string name;
  std::size_t frames = 0;
  double seconds = 0.0;
  double fps() const { return seconds > 0.0 ? double(frames) / seconds : 0.0; }
};

/// VodPipeline::process_frame on synthetic frames of `detections` pre-NMS
/// boxes, clustered twenty to an object, with a size model and maps of
/// `map_cells` cells per edge.
BenchResult bench_vod(std::size_t detections = 2000, int map_cells = 600, std::size_t frames = 200,
                      std::uint64_t seed = 1);

/// AnomalyAggregator::step on random heatmaps of the given resolution.
BenchResult bench_anomaly(int width = 480, int height = 270, std::size_t frames = 200, std::uint64_t seed = 1);

}  // namespace uavmem
