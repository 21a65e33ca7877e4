#include "uavmem/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "uavmem/error.hpp"

namespace uavmem {

MemoryMap merge(std::span<const MemoryMap> maps, const GeoPoint& target_center, const MapSpec& spec,
                MergeMode mode) {
  if (maps.empty()) return MemoryMap(spec, target_center, 0);
  const int class_id = maps.front().class_id();
  bool same_origin = true;
  for (const MemoryMap& m : maps) {
    if (m.class_id() != class_id) throw Error(ErrorCode::SpecMismatch, "merged maps differ in class");
    if (m.spec().cell_size_m != spec.cell_size_m) {
      throw Error(ErrorCode::SpecMismatch, "merged maps differ in cell size");
    }
    if (ground_distance_m(m.center(), target_center) > 2.0 * spec.edge_size_m) {
      throw Error(ErrorCode::SpecMismatch, "map center too far from merge target");
    }
    same_origin = same_origin && m.origin() == maps.front().origin();
  }

  MemoryMap out(spec, same_origin ? maps.front().origin() : target_center, target_center, class_id);
  const int n = out.size();
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const std::size_t k = maps.size();
  std::vector<float> samples(cells * k);
  std::vector<std::uint8_t> count(cells, 0);
  if (k > 255) throw Error(ErrorCode::InvalidInput, "too many maps to merge");

  for (const MemoryMap& m : maps) {
    if (same_origin) {
      // Aligned grids: a constant row/column shift maps output to input.
      const CellIndex out00 = out.cell_index({0, 0});
      const CellIndex in00 = m.cell_index({0, 0});
      const std::int64_t dc = out00.east - in00.east;
      const std::int64_t dr = in00.north - out00.north;
      const int mn = m.size();
      for (int r = 0; r < n; ++r) {
        const std::int64_t ir = r + dr;
        if (ir < 0 || ir >= mn) continue;
        const int c_lo = static_cast<int>(std::max<std::int64_t>(0, -dc));
        const int c_hi = static_cast<int>(std::min<std::int64_t>(n, mn - dc));
        for (int c = c_lo; c < c_hi; ++c) {
          const std::size_t idx = static_cast<std::size_t>(r) * n + c;
          samples[idx * k + count[idx]++] = m.at(static_cast<int>(ir), static_cast<int>(c + dc));
        }
      }
    } else {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const auto v = m.value_at(m.nearest_cell(out.cell_center({r, c})));
          if (!v) continue;
          const std::size_t idx = static_cast<std::size_t>(r) * n + c;
          samples[idx * k + count[idx]++] = *v;
        }
      }
    }
  }

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      const std::size_t cnt = count[idx];
      if (cnt == 0) continue;
      float* first = samples.data() + idx * k;
      if (mode == MergeMode::Max) {
        out.at(r, c) = *std::max_element(first, first + cnt);
        continue;
      }
      // Sorting makes the sum independent of input order.
      std::sort(first, first + cnt);
      double sum = 0.0;
      for (std::size_t i = 0; i < cnt; ++i) sum += first[i];
      out.at(r, c) = static_cast<float>(sum / double(cnt));
    }
  }
  return out;
}

namespace {

std::size_t nearest_frame(const std::vector<StreamFrame>& frames, std::int64_t ts) {
  const auto it = std::lower_bound(frames.begin(), frames.end(), ts,
                                   [](const StreamFrame& f, std::int64_t t) { return f.ts_us < t; });
  if (it == frames.begin()) return 0;
  if (it == frames.end()) return frames.size() - 1;
  const auto prev = it - 1;
  return static_cast<std::size_t>((ts - prev->ts_us <= it->ts_us - ts ? prev : it) - frames.begin());
}

}  // namespace

std::vector<StreamOutput> run_cooperative(std::span<const std::vector<StreamFrame>> streams,
                                          const CooperativeOptions& options,
                                          std::span<const SizeModel> size_models) {
  const std::size_t count = streams.size();
  std::vector<StreamOutput> outputs(count);
  if (count == 0 || streams.front().empty()) return outputs;
  for (const auto& s : streams) {
    if (s.empty()) throw Error(ErrorCode::MissingMetadata, "cooperative stream has no frames");
  }

  const GeoPoint origin = camera_position(streams.front().front().cam);
  auto ids = std::make_shared<TrackIdSource>();
  std::vector<VodPipeline> pipelines;
  std::vector<GpsTracker> trackers;
  for (std::size_t s = 0; s < count; ++s) {
    pipelines.emplace_back(options.spec, options.vod, s < size_models.size() ? size_models[s] : SizeModel{},
                           origin);
    trackers.emplace_back(options.tracker, ids);
  }
  std::vector<std::optional<std::size_t>> last(count);
  const auto tolerance_us = static_cast<std::int64_t>(std::llround(options.fusion.pairing_tolerance_ms * 1000.0));

  for (const StreamFrame& base : streams.front()) {
    std::vector<std::optional<VodPipeline::Prepared>> prepared(count);
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t j = nearest_frame(streams[s], base.ts_us);
      const StreamFrame& f = streams[s][j];
      if (std::llabs(f.ts_us - base.ts_us) > tolerance_us) {
        throw Error(ErrorCode::ClockSkew, "no frame of stream " + std::to_string(s) +
                                              " within tolerance of t=" + std::to_string(base.ts_us) + "us");
      }
      if (last[s] && *last[s] == j) continue;
      last[s] = j;
      prepared[s] = pipelines[s].prepare(f.frame_id, f.cam, f.detections);
    }

    // Joint maps are built from every stream's state before this step's
    // splats.
    std::vector<std::map<int, MemoryMap>> joint(count);
    if (options.cooperative) {
      std::map<int, std::vector<MemoryMap>> by_class;
      for (const VodPipeline& p : pipelines) {
        for (const auto& [cls, m] : p.maps()) by_class[cls].push_back(m);
      }
      for (std::size_t s = 0; s < count; ++s) {
        if (!prepared[s]) continue;
        const GeoPoint center = camera_position(prepared[s]->cam);
        for (const auto& [cls, maps] : by_class) {
          joint[s].emplace(cls, merge(maps, center, options.spec, options.fusion.mode));
        }
      }
    }

    for (std::size_t s = 0; s < count; ++s) {
      if (!prepared[s]) continue;
      BoostSource source = pipelines[s].own_maps();
      if (options.cooperative) {
        const auto* maps = &joint[s];
        source = [maps](int cls, const GeoPoint& p) {
          const auto it = maps->find(cls);
          return it == maps->end() ? 0.0 : it->second.query(p);
        };
      }
      const std::int64_t frame_id = prepared[s]->frame_id;
      FrameResult r = pipelines[s].complete(std::move(*prepared[s]), source);

      std::vector<ForeignTrack> foreign;
      if (options.cooperative) {
        for (std::size_t o = 0; o < count; ++o) {
          if (o == s) continue;
          const auto pub = trackers[o].published(frame_id);
          foreign.insert(foreign.end(), pub.begin(), pub.end());
        }
      }
      std::vector<std::int64_t> assigned(r.final_detections.size(), -1);
      for (const Assignment& a : trackers[s].step(frame_id, r.final_detections, foreign)) {
        assigned[a.detection_index] = a.track_id;
      }
      outputs[s].results.push_back(std::move(r));
      outputs[s].track_ids.push_back(std::move(assigned));
    }
  }
  for (std::size_t s = 0; s < count; ++s) outputs[s].tracks = trackers[s].tracks();
  return outputs;
}

}  // namespace uavmem
