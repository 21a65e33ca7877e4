#pragma once

#include "uavmem/camera_geometry.hpp"

namespace uavmem {

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Offset in a local east/north tangent frame, meters.
struct NorthOffset {
  double east_m = 0.0;
  double north_m = 0.0;
};

inline constexpr double kWgs84SemiMajorM = 6378137.0;
inline constexpr double kWgs84SemiMinorM = 6356752.314;
inline constexpr double kMaxAbsLatitudeDeg = 89.9;

/// Geocentric radius of the WGS-84 ellipsoid at the given latitude.
double earth_radius_m(double latitude_deg);

/// Wraps a longitude into [-180, 180).
double normalize_longitude(double lon_deg);

/// Rotates a camera-frame ground offset (x right, y forward) by the camera
/// heading (clockwise from north) into east/north.
NorthOffset rotate_to_north(const GroundOffset& offset, double heading_deg);

/// Inverse rotation, north frame -> camera frame. Leaves slant_d_m at 0.
GroundOffset rotate_to_camera(const NorthOffset& offset, double heading_deg);

/// Small-offset equirectangular mapping around `uav`. Throws PoleProximity
/// for |lat| > 89.9 deg.
GeoPoint offset_to_gps(const NorthOffset& offset, const GeoPoint& uav);
NorthOffset gps_to_offset(const GeoPoint& obj, const GeoPoint& uav);

/// Precomputed scale factors of offset_to_gps / gps_to_offset for one
/// reference point. Used by per-pixel hot loops.
class LocalFrame {
 public:
  explicit LocalFrame(const GeoPoint& origin);

  const GeoPoint& origin() const { return origin_; }
  GeoPoint to_gps(const NorthOffset& o) const;
  NorthOffset to_offset(const GeoPoint& p) const;

 private:
  GeoPoint origin_;
  double m_per_deg_lat_;
  double m_per_deg_lon_;
};

GeoPoint camera_position(const CameraState& cam);

GeoPoint pixel_to_gps(const PixelOffset& pixel, const CameraState& cam);

enum class ProjectionStatus { InFrame, OutOfFrame, BehindCamera };

struct GpsProjection {
  PixelOffset pixel;
  ProjectionStatus status = ProjectionStatus::InFrame;
  double slant_d_m = 0.0;
};

/// Never throws for BehindCamera; reports it in the status instead.
GpsProjection gps_to_pixel(const GeoPoint& point, const CameraState& cam);

}  // namespace uavmem
