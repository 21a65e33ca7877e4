#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "uavmem/memory_map.hpp"
#include "uavmem/tracking.hpp"
#include "uavmem/vod_pipeline.hpp"

namespace uavmem {

enum class MergeMode { Mean, Max };

struct FusionConfig {
  double pairing_tolerance_ms = 50.0;
  MergeMode mode = MergeMode::Mean;

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// Joint map centered at `target_center`. Each cell is the mean (or max) of
/// the maps whose window covers it; uncovered cells are 0. Output cells are
/// aligned with the inputs when all inputs share an origin; otherwise the
/// output is anchored at `target_center` and inputs are sampled at the
/// nearest cell. Throws SpecMismatch on differing class or cell size, or
/// centers farther than 2 * edge from the target.
MemoryMap merge(std::span<const MemoryMap> maps, const GeoPoint& target_center, const MapSpec& spec,
                MergeMode mode = MergeMode::Mean);

/// One time-stamped frame of a stream.
struct StreamFrame {
  std::int64_t frame_id = 0;
  std::int64_t ts_us = 0;
  CameraState cam;
  std::vector<Detection> detections;
};

struct StreamOutput {
  std::vector<FrameResult> results;
  /// Track assignment per result, indexed like FrameResult::final_detections.
  std::vector<std::vector<std::int64_t>> track_ids;
  std::vector<Track> tracks;
};

struct CooperativeOptions {
  MapSpec spec;
  VodConfig vod;
  TrackerConfig tracker;
  FusionConfig fusion;
  /// false: every stream boosts from its own maps only.
  bool cooperative = true;
};

/// Runs several streams in lockstep. Frames are paired to the first
/// stream's timestamps (nearest within the tolerance, else ClockSkew). Each
/// stream boosts against the merge of all streams' maps from the previous
/// step and splats into its own map. Track ids come from one shared source;
/// new tracks adopt the id of another stream's track at the same place.
std::vector<StreamOutput> run_cooperative(std::span<const std::vector<StreamFrame>> streams,
                                          const CooperativeOptions& options,
                                          std::span<const SizeModel> size_models = {});

}  // namespace uavmem
