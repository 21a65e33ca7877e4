#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavmem/camera_geometry.hpp"
#include "uavmem/memory_map.hpp"

namespace uavmem {

/// Per-frame anomaly scores, row-major, possibly at lower resolution than
/// the camera image. Cell (r, c) samples the image at its center pixel.
struct FrameHeatmap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  /// Throws InvalidInput on bad dimensions or negative/non-finite values.
  void validate() const;
};

struct AnomalyConfig {
  MapSpec map{300.0, 2.0, 0.0, 0.9, 1.0};
  double max_range_m = 500.0;
  double extraction_threshold = 0.5;
  double min_area_m2 = 4.0;

  friend bool operator==(const AnomalyConfig&, const AnomalyConfig&) = default;
};

struct ProjectionStats {
  std::size_t projected = 0;
  std::size_t above_horizon = 0;
  std::size_t behind_camera = 0;
  std::size_t out_of_range = 0;
  std::size_t outside_map = 0;
};

/// Per-frame projected contributions: mean normalized score per map cell.
struct FrameContribution {
  std::vector<float> sum;
  std::vector<std::uint32_t> count;
};

/// Projects every heatmap cell below the horizon (and within max_range_m
/// of ground distance) into `grid`'s cells. Scores are min-max normalized
/// over the projected cells first. `out` is resized to the grid.
ProjectionStats project_heatmap(const FrameHeatmap& hm, const CameraState& cam, const MemoryMap& grid,
                                double max_range_m, FrameContribution& out);

struct AnomalyRegion {
  std::vector<GeoPoint> polygon;  // closed outer boundary of the cell union
  double peak = 0.0;
  double area_m2 = 0.0;
  std::vector<GridCell> cells;
};

/// 4-connected components of cells >= threshold, dropping components
/// smaller than min_area_m2. Ordered by first cell in row-major order.
std::vector<AnomalyRegion> extract_regions(const MemoryMap& map, double threshold, double min_area_m2);

/// GPS-space aggregation of anomaly heatmaps with forgetting.
class AnomalyAggregator {
 public:
  AnomalyAggregator(AnomalyConfig config, const GeoPoint& origin);

  /// recenter, project, add per-cell mean contributions, clamp to 1, decay.
  ProjectionStats step(const FrameHeatmap& hm, const CameraState& cam);

  const MemoryMap& map() const { return map_; }
  std::vector<AnomalyRegion> regions() const;
  const AnomalyConfig& config() const { return config_; }

 private:
  AnomalyConfig config_;
  MemoryMap map_;
  FrameContribution scratch_;
};

}  // namespace uavmem
