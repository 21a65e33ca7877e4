#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "uavmem/anomaly.hpp"
#include "uavmem/fusion.hpp"
#include "uavmem/memory_map.hpp"
#include "uavmem/size_filter.hpp"
#include "uavmem/tracking.hpp"
#include "uavmem/vod_pipeline.hpp"

namespace uavmem {

/// Everything tunable, loaded from one JSON document. Missing keys keep
/// their defaults.
struct Config {
  MapSpec map;
  VodConfig vod;
  TrackerConfig tracker;
  AnomalyConfig anomaly;
  FusionConfig fusion;
  SizeModelParams size_model;
  std::uint64_t seed = 0;

  friend bool operator==(const Config&, const Config&) = default;
};

nlohmann::json to_json(const Config& config);
Config config_from_json(const nlohmann::json& j);
/// Empty path -> defaults.
Config load_config(const std::string& path);

nlohmann::json to_json(const MapSpec& spec);
MapSpec map_spec_from_json(const nlohmann::json& j, const MapSpec& defaults = {});

}  // namespace uavmem
