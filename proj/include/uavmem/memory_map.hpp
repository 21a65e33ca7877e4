#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavmem/geodesy.hpp"

namespace uavmem {

struct MapSpec {
  double edge_size_m = 300.0;
  double cell_size_m = 0.5;
  double splat_radius_m = 6.0;
  double forgetting_factor = 0.9;
  double splat_scale_s0 = 0.2;

  /// Throws InvalidSpec.
  void validate() const;
  int cells_per_edge() const;
  int splat_radius_cells() const;

  friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

/// Integer cell coordinates in a map's local metric frame: the cell with
/// index (east, north) is centered at (east * cell, north * cell) meters
/// from the frame origin.
struct CellIndex {
  std::int64_t east = 0;
  std::int64_t north = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct GridCell {
  int row = 0;
  int col = 0;
};

enum class SplatStatus { Applied, OutsideWindow };

/// UAV-centric, north-oriented square grid of per-cell likelihoods for one
/// class. Row 0 is the northernmost row, column 0 the westernmost.
///
/// A frame is: recenter -> query/boost -> splat* -> end_frame. Values may
/// exceed 1 between splat and end_frame; end_frame clamps to 1 and decays.
class MemoryMap {
 public:
  static constexpr int kFormatVersion = 1;

  /// The metric frame is anchored at `center`.
  MemoryMap(const MapSpec& spec, const GeoPoint& center, int class_id);
  /// The metric frame is anchored at `origin`, the window at `center`.
  /// Maps sharing an origin have aligned cells.
  MemoryMap(const MapSpec& spec, const GeoPoint& origin, const GeoPoint& center, int class_id);

  const MapSpec& spec() const { return spec_; }
  int class_id() const { return class_id_; }
  int size() const { return n_; }
  const GeoPoint& origin() const { return frame_.origin(); }
  const LocalFrame& frame() const { return frame_; }
  CellIndex center_cell() const { return center_; }
  GeoPoint center() const;

  std::span<const float> values() const { return values_; }
  float at(int row, int col) const { return values_[static_cast<std::size_t>(row) * n_ + col]; }
  float& at(int row, int col) { return values_[static_cast<std::size_t>(row) * n_ + col]; }

  CellIndex nearest_cell(const GeoPoint& p) const;
  CellIndex nearest_cell(const NorthOffset& local) const;
  std::optional<GridCell> grid_cell(const CellIndex& c) const;
  CellIndex cell_index(const GridCell& g) const;
  GeoPoint cell_center(const GridCell& g) const;

  /// Shifts the window so its center is the cell nearest `uav`. Shifted-in
  /// cells are zero.
  void recenter(const GeoPoint& uav);

  void begin_frame() { frame_open_ = true; }
  SplatStatus splat(const GeoPoint& position, double confidence);
  SplatStatus splat_at(const CellIndex& cell, double confidence);
  /// Clamp to 1, then scale by the forgetting factor. Throws DoubleEndFrame
  /// when no frame is open.
  void end_frame();

  /// Clamped value of the nearest cell, 0 outside the window.
  double query(const GeoPoint& position) const;
  double query(const CellIndex& cell) const;

  /// Raw value at a cell index, nullopt outside the window.
  std::optional<float> value_at(const CellIndex& cell) const;

  std::vector<std::uint8_t> serialize() const;
  static MemoryMap deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const MemoryMap& a, const MemoryMap& b);

 private:
  void build_kernel();

  MapSpec spec_;
  LocalFrame frame_;
  int class_id_;
  int n_;
  CellIndex center_;
  std::vector<float> values_;
  int kernel_radius_ = 0;
  std::vector<float> kernel_;  // (2R+1)^2 weights, row-major
  bool frame_open_ = true;
};

void write_map_file(const std::string& path, const MemoryMap& map);
MemoryMap read_map_file(const std::string& path);

}  // namespace uavmem
