#include "uavmem/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>

#include "uavmem/error.hpp"

namespace uavmem {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void FrameHeatmap::validate() const {
  if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::InvalidInput, "heatmap dimensions do not match its data");
  }
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0f) throw Error(ErrorCode::InvalidInput, "heatmap values must be finite and >= 0");
  }
}

ProjectionStats project_heatmap(const FrameHeatmap& hm, const CameraState& cam, const MemoryMap& grid,
                                double max_range_m, FrameContribution& out) {
  hm.validate();
  validate(cam);
  const std::size_t cells = static_cast<std::size_t>(grid.size()) * grid.size();
  out.sum.assign(cells, 0.0f);
  out.count.assign(cells, 0u);

  ProjectionStats stats;
  const double sx = double(cam.image_width_px) / hm.width;
  const double sy = double(cam.image_height_px) / hm.height;

  // Per-row geometry: forward distance, slant distance and x-scale are shared
  // by all cells of a heatmap row.
  struct RowGeom {
    int row;
    double y;
    double x_per_u;
  };
  std::vector<RowGeom> rows;
  rows.reserve(hm.height);
  for (int r = 0; r < hm.height; ++r) {
    const double v = (r + 0.5) * sy - cam.image_height_px / 2.0;
    GroundTrace t;
    switch (locate_ground({0.0, v}, cam, t)) {
      case GroundStatus::AboveHorizon:
        stats.above_horizon += hm.width;
        continue;
      case GroundStatus::BehindCamera:
        stats.behind_camera += hm.width;
        continue;
      case GroundStatus::Ok:
        break;
    }
    if (t.y_m > max_range_m) {
      stats.out_of_range += hm.width;
      continue;
    }
    rows.push_back({r, t.y_m, t.d_m / t.w_px});
  }

  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (const RowGeom& g : rows) {
    const float* src = hm.values.data() + static_cast<std::size_t>(g.row) * hm.width;
    const auto [mn, mx] = std::minmax_element(src, src + hm.width);
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  if (rows.empty() || !(hi > lo)) {
    stats.projected += rows.size() * hm.width;
    return stats;
  }
  const float inv_range = 1.0f / (hi - lo);

  // Camera frame -> north frame -> map frame, composed as one affine map.
  // The GPS round trip of offset_to_gps / gps_to_offset is linear in the
  // offset, so it reduces to per-axis scale factors.
  const double th = cam.heading_deg * kDegToRad;
  const double c = std::cos(th), s = std::sin(th);
  const GeoPoint uav = camera_position(cam);
  const LocalFrame uav_frame(uav);
  const NorthOffset uav_in_map = grid.frame().to_offset(uav);
  const NorthOffset unit_e = grid.frame().to_offset(uav_frame.to_gps({1.0, 0.0}));
  const NorthOffset unit_n = grid.frame().to_offset(uav_frame.to_gps({0.0, 1.0}));
  const double ke = unit_e.east_m - uav_in_map.east_m;
  const double kn = unit_n.north_m - uav_in_map.north_m;
  const double cell = grid.spec().cell_size_m;

  for (const RowGeom& g : rows) {
    const float* src = hm.values.data() + static_cast<std::size_t>(g.row) * hm.width;
    for (int col = 0; col < hm.width; ++col) {
      const double u = (col + 0.5) * sx - cam.image_width_px / 2.0;
      const double x = u * g.x_per_u;
      const double east = uav_in_map.east_m + (x * c + g.y * s) * ke;
      const double north = uav_in_map.north_m + (-x * s + g.y * c) * kn;
      const CellIndex ci{std::llround(east / cell), std::llround(north / cell)};
      const auto gc = grid.grid_cell(ci);
      ++stats.projected;
      if (!gc) {
        ++stats.outside_map;
        continue;
      }
      const std::size_t idx = static_cast<std::size_t>(gc->row) * grid.size() + gc->col;
      out.sum[idx] += (src[col] - lo) * inv_range;
      ++out.count[idx];
    }
  }
  return stats;
}

namespace {

// Traces the outer boundary of a set of cells as a closed loop of cell
// corners (row, col in corner coordinates), counter-clockwise in map view.
std::vector<std::pair<int, int>> outer_boundary(const std::vector<GridCell>& cells, int n) {
  std::vector<char> in(static_cast<std::size_t>(n) * n, 0);
  for (const GridCell& g : cells) in[static_cast<std::size_t>(g.row) * n + g.col] = 1;
  const auto inside = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < n && c < n && in[static_cast<std::size_t>(r) * n + c];
  };
  // Directed edges with the region on the left; corner (r, c) is the
  // top-left corner of cell (r, c).
  std::multimap<std::pair<int, int>, std::pair<int, int>> edges;
  for (const GridCell& g : cells) {
    const int r = g.row, c = g.col;
    if (!inside(r - 1, c)) edges.insert({{r, c + 1}, {r, c}});          // top, heading west
    if (!inside(r, c - 1)) edges.insert({{r, c}, {r + 1, c}});          // left, heading south
    if (!inside(r + 1, c)) edges.insert({{r + 1, c}, {r + 1, c + 1}});  // bottom, heading east
    if (!inside(r, c + 1)) edges.insert({{r + 1, c + 1}, {r, c + 1}});  // right, heading north
  }
  std::vector<std::vector<std::pair<int, int>>> loops;
  while (!edges.empty()) {
    auto it = edges.begin();
    const auto start = it->first;
    std::vector<std::pair<int, int>> loop{start};
    auto cur = it->second;
    edges.erase(it);
    while (cur != start) {
      loop.push_back(cur);
      auto next = edges.find(cur);
      if (next == edges.end()) break;
      cur = next->second;
      edges.erase(next);
    }
    loop.push_back(start);
    loops.push_back(std::move(loop));
  }
  // The outer boundary encloses the most area (shoelace).
  const auto area = [](const std::vector<std::pair<int, int>>& l) {
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < l.size(); ++i) {
      a += double(l[i].second) * l[i + 1].first - double(l[i + 1].second) * l[i].first;
    }
    return std::abs(a);
  };
  return *std::max_element(loops.begin(), loops.end(),
                           [&](const auto& a, const auto& b) { return area(a) < area(b); });
}

}  // namespace

std::vector<AnomalyRegion> extract_regions(const MemoryMap& map, double threshold, double min_area_m2) {
  const int n = map.size();
  const double cell_area = map.spec().cell_size_m * map.spec().cell_size_m;
  std::vector<int> label(static_cast<std::size_t>(n) * n, -1);
  std::vector<AnomalyRegion> out;
  std::queue<GridCell> frontier;
  int next_label = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      if (label[idx] >= 0 || map.at(r, c) < threshold) continue;
      AnomalyRegion region;
      label[idx] = next_label;
      frontier.push({r, c});
      while (!frontier.empty()) {
        const GridCell g = frontier.front();
        frontier.pop();
        region.cells.push_back(g);
        region.peak = std::max(region.peak, double(map.at(g.row, g.col)));
        const GridCell nb[4] = {{g.row - 1, g.col}, {g.row + 1, g.col}, {g.row, g.col - 1}, {g.row, g.col + 1}};
        for (const GridCell& q : nb) {
          if (q.row < 0 || q.col < 0 || q.row >= n || q.col >= n) continue;
          const std::size_t qi = static_cast<std::size_t>(q.row) * n + q.col;
          if (label[qi] >= 0 || map.at(q.row, q.col) < threshold) continue;
          label[qi] = next_label;
          frontier.push(q);
        }
      }
      ++next_label;
      region.area_m2 = region.cells.size() * cell_area;
      if (region.area_m2 + 1e-9 < min_area_m2) continue;

      // Corner (r, c) sits half a cell north-west of cell (r, c)'s center.
      const double half = 0.5 * map.spec().cell_size_m;
      for (const auto& [cr, cc] : outer_boundary(region.cells, n)) {
        const CellIndex ci = map.cell_index({cr, cc});
        region.polygon.push_back(map.frame().to_gps(
            {ci.east * map.spec().cell_size_m - half, ci.north * map.spec().cell_size_m + half}));
      }
      out.push_back(std::move(region));
    }
  }
  return out;
}

AnomalyAggregator::AnomalyAggregator(AnomalyConfig config, const GeoPoint& origin)
    : config_(config), map_(config.map, origin, 0) {}

ProjectionStats AnomalyAggregator::step(const FrameHeatmap& hm, const CameraState& cam) {
  map_.recenter(camera_position(cam));
  const ProjectionStats stats = project_heatmap(hm, cam, map_, config_.max_range_m, scratch_);
  const int n = map_.size();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      if (scratch_.count[idx] > 0) map_.at(r, c) += scratch_.sum[idx] / float(scratch_.count[idx]);
    }
  }
  map_.end_frame();
  return stats;
}

std::vector<AnomalyRegion> AnomalyAggregator::regions() const {
  return extract_regions(map_, config_.extraction_threshold, config_.min_area_m2);
}

}  // namespace uavmem
