#include "uavmem/memory_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "uavmem/error.hpp"

namespace uavmem {

namespace {

constexpr double kEps = 1e-9;

std::int64_t round_index(double meters, double cell) {
  return static_cast<std::int64_t>(std::llround(meters / cell));
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void MapSpec::validate() const {
  if (!(edge_size_m > 0.0) || !(cell_size_m > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "edge and cell size must be positive");
  }
  const double ratio = edge_size_m / cell_size_m;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio) || std::round(ratio) < 1.0) {
    throw Error(ErrorCode::InvalidSpec, "edge size must be an integer multiple of cell size");
  }
  if (!(splat_radius_m >= 0.0) || !(splat_radius_m < edge_size_m / 2.0)) {
    throw Error(ErrorCode::InvalidSpec, "splat radius must lie in [0, edge/2)");
  }
  if (!(forgetting_factor > 0.0 && forgetting_factor <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "forgetting factor must lie in (0, 1]");
  }
  if (!(splat_scale_s0 > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "splat scale must be positive");
  }
}

int MapSpec::cells_per_edge() const {
  return static_cast<int>(std::lround(edge_size_m / cell_size_m));
}

int MapSpec::splat_radius_cells() const {
  return static_cast<int>(std::floor(splat_radius_m / cell_size_m + kEps));
}

MemoryMap::MemoryMap(const MapSpec& spec, const GeoPoint& center, int class_id)
    : MemoryMap(spec, center, center, class_id) {}

MemoryMap::MemoryMap(const MapSpec& spec, const GeoPoint& origin, const GeoPoint& center,
                     int class_id)
    : spec_(spec), frame_(origin), class_id_(class_id) {
  spec_.validate();
  n_ = spec_.cells_per_edge();
  values_.assign(static_cast<std::size_t>(n_) * n_, 0.0f);
  center_ = nearest_cell(center);
  build_kernel();
}

void MemoryMap::build_kernel() {
  kernel_radius_ = spec_.splat_radius_cells();
  const int k = 2 * kernel_radius_ + 1;
  kernel_.assign(static_cast<std::size_t>(k) * k, 0.0f);
  // sigma = r / 3: the kernel is ~e^-9 at the truncation radius.
  const double sigma = spec_.splat_radius_m / 3.0;
  for (int dy = -kernel_radius_; dy <= kernel_radius_; ++dy) {
    for (int dx = -kernel_radius_; dx <= kernel_radius_; ++dx) {
      const double dist = spec_.cell_size_m * std::hypot(double(dx), double(dy));
      const double w = sigma > 0.0 ? std::exp(-(dist / sigma) * (dist / sigma)) : 1.0;
      kernel_[static_cast<std::size_t>(dy + kernel_radius_) * k + (dx + kernel_radius_)] =
          static_cast<float>(w);
    }
  }
}

GeoPoint MemoryMap::center() const {
  return frame_.to_gps({center_.east * spec_.cell_size_m, center_.north * spec_.cell_size_m});
}

CellIndex MemoryMap::nearest_cell(const GeoPoint& p) const {
  return nearest_cell(frame_.to_offset(p));
}

CellIndex MemoryMap::nearest_cell(const NorthOffset& local) const {
  return {round_index(local.east_m, spec_.cell_size_m),
          round_index(local.north_m, spec_.cell_size_m)};
}

std::optional<GridCell> MemoryMap::grid_cell(const CellIndex& c) const {
  const std::int64_t half = n_ / 2;
  const std::int64_t col = c.east - (center_.east - half);
  const std::int64_t row = (center_.north - half + n_ - 1) - c.north;
  if (col < 0 || col >= n_ || row < 0 || row >= n_) return std::nullopt;
  return GridCell{static_cast<int>(row), static_cast<int>(col)};
}

CellIndex MemoryMap::cell_index(const GridCell& g) const {
  const std::int64_t half = n_ / 2;
  return {center_.east - half + g.col, center_.north - half + n_ - 1 - g.row};
}

GeoPoint MemoryMap::cell_center(const GridCell& g) const {
  const CellIndex c = cell_index(g);
  return frame_.to_gps({c.east * spec_.cell_size_m, c.north * spec_.cell_size_m});
}

void MemoryMap::recenter(const GeoPoint& uav) {
  frame_open_ = true;
  const CellIndex next = nearest_cell(uav);
  const std::int64_t de = next.east - center_.east;
  const std::int64_t dn = next.north - center_.north;
  if (de == 0 && dn == 0) return;

  std::vector<float> shifted(values_.size(), 0.0f);
  if (std::abs(de) < n_ && std::abs(dn) < n_) {
    // New (row, col) holds old (row - dn, col + de).
    const int row_shift = static_cast<int>(dn);
    const int col_shift = static_cast<int>(de);
    const int col_lo = std::max(0, -col_shift);
    const int col_hi = std::min(n_, n_ - col_shift);
    for (int row = 0; row < n_; ++row) {
      const int src_row = row - row_shift;
      if (src_row < 0 || src_row >= n_ || col_lo >= col_hi) continue;
      std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(src_row) * n_ + col_lo + col_shift,
                  col_hi - col_lo,
                  shifted.begin() + static_cast<std::ptrdiff_t>(row) * n_ + col_lo);
    }
  }
  values_ = std::move(shifted);
  center_ = next;
}

SplatStatus MemoryMap::splat(const GeoPoint& position, double confidence) {
  return splat_at(nearest_cell(position), confidence);
}

SplatStatus MemoryMap::splat_at(const CellIndex& cell, double confidence) {
  frame_open_ = true;
  const auto g = grid_cell(cell);
  if (!g) return SplatStatus::OutsideWindow;
  const float s = static_cast<float>(spec_.splat_scale_s0 * confidence);
  if (s == 0.0f) return SplatStatus::Applied;

  const int r = kernel_radius_;
  const int k = 2 * r + 1;
  const int row_lo = std::max(0, g->row - r);
  const int row_hi = std::min(n_ - 1, g->row + r);
  const int col_lo = std::max(0, g->col - r);
  const int col_hi = std::min(n_ - 1, g->col + r);
  for (int row = row_lo; row <= row_hi; ++row) {
    const float* kr = kernel_.data() + static_cast<std::size_t>(row - g->row + r) * k + (r - g->col);
    float* out = values_.data() + static_cast<std::size_t>(row) * n_;
    for (int col = col_lo; col <= col_hi; ++col) {
      out[col] += s * kr[col];
    }
  }
  return SplatStatus::Applied;
}

void MemoryMap::end_frame() {
  if (!frame_open_) {
    throw Error(ErrorCode::DoubleEndFrame, "end_frame called twice without a new frame");
  }
  const float phi = static_cast<float>(spec_.forgetting_factor);
  for (float& v : values_) {
    v = std::min(v, 1.0f) * phi;
  }
  frame_open_ = false;
}

double MemoryMap::query(const GeoPoint& position) const { return query(nearest_cell(position)); }

double MemoryMap::query(const CellIndex& cell) const {
  const auto v = value_at(cell);
  return v ? std::min(*v, 1.0f) : 0.0;
}

std::optional<float> MemoryMap::value_at(const CellIndex& cell) const {
  const auto g = grid_cell(cell);
  if (!g) return std::nullopt;
  return at(g->row, g->col);
}

bool operator==(const MemoryMap& a, const MemoryMap& b) {
  return a.spec_ == b.spec_ && a.frame_.origin() == b.frame_.origin() &&
         a.class_id_ == b.class_id_ && a.center_ == b.center_ && a.values_ == b.values_;
}

std::vector<std::uint8_t> MemoryMap::serialize() const {
  const GeoPoint c = center();
  const nlohmann::json header = {
      {"format_version", kFormatVersion},
      {"edge_size_m", spec_.edge_size_m},
      {"cell_size_m", spec_.cell_size_m},
      {"splat_radius_m", spec_.splat_radius_m},
      {"forgetting_factor", spec_.forgetting_factor},
      {"splat_scale_s0", spec_.splat_scale_s0},
      {"center_lat", c.latitude},
      {"center_lon", c.longitude},
      {"origin_lat", origin().latitude},
      {"origin_lon", origin().longitude},
      {"center_cell_east", center_.east},
      {"center_cell_north", center_.north},
      {"class_id", class_id_},
      {"n", n_},
  };
  const std::string line = header.dump() + "\n";
  std::vector<std::uint8_t> out(line.begin(), line.end());
  out.reserve(out.size() + values_.size() * 4);
  for (float v : values_) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(v));
    std::uint8_t b[4];
    std::memcpy(b, &bits, 4);
    out.insert(out.end(), b, b + 4);
  }
  return out;
}

MemoryMap MemoryMap::deserialize(std::span<const std::uint8_t> bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw Error(ErrorCode::InvalidInput, "map file has no header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.begin(), nl);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad map header: ") + e.what());
  }
  if (h.value("format_version", -1) != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported map format version");
  }
  try {
    MapSpec spec;
    spec.edge_size_m = h.at("edge_size_m").get<double>();
    spec.cell_size_m = h.at("cell_size_m").get<double>();
    spec.splat_radius_m = h.at("splat_radius_m").get<double>();
    spec.forgetting_factor = h.at("forgetting_factor").get<double>();
    spec.splat_scale_s0 = h.at("splat_scale_s0").get<double>();
    const GeoPoint origin{h.at("origin_lat").get<double>(), h.at("origin_lon").get<double>()};
    MemoryMap map(spec, origin, origin, h.at("class_id").get<int>());
    map.center_ = {h.at("center_cell_east").get<std::int64_t>(),
                   h.at("center_cell_north").get<std::int64_t>()};
    if (h.at("n").get<int>() != map.n_) {
      throw Error(ErrorCode::InvalidInput, "map header n does not match spec");
    }
    const std::size_t payload = static_cast<std::size_t>(std::distance(nl + 1, bytes.end()));
    if (payload != map.values_.size() * 4) {
      throw Error(ErrorCode::InvalidInput, "map payload size mismatch");
    }
    auto it = nl + 1;
    for (float& v : map.values_) {
      std::uint32_t bits;
      std::memcpy(&bits, &*it, 4);
      v = std::bit_cast<float>(to_le(bits));
      it += 4;
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad map header: ") + e.what());
  }
}

void write_map_file(const std::string& path, const MemoryMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  const auto bytes = map.serialize();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path);
}

MemoryMap read_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return MemoryMap::deserialize(bytes);
}

}  // namespace uavmem
