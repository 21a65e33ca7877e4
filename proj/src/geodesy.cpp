#include "uavmem/geodesy.hpp"

#include <cmath>
#include <numbers>

#include "uavmem/error.hpp"

namespace uavmem {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_pole(double lat) {
  if (std::abs(lat) > kMaxAbsLatitudeDeg) {
    throw Error(ErrorCode::PoleProximity, "latitude too close to a pole");
  }
}

}  // namespace

double earth_radius_m(double latitude_deg) {
  const double phi = latitude_deg * kDegToRad;
  const double a = kWgs84SemiMajorM;
  const double b = kWgs84SemiMinorM;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double num = (a * a * c) * (a * a * c) + (b * b * s) * (b * b * s);
  const double den = (a * c) * (a * c) + (b * s) * (b * s);
  return std::sqrt(num / den);
}

double normalize_longitude(double lon_deg) {
  double lon = std::fmod(lon_deg + 180.0, 360.0);
  if (lon < 0.0) lon += 360.0;
  return lon - 180.0;
}

NorthOffset rotate_to_north(const GroundOffset& offset, double heading_deg) {
  const double t = heading_deg * kDegToRad;
  const double c = std::cos(t);
  const double s = std::sin(t);
  return {offset.x_m * c + offset.y_m * s, -offset.x_m * s + offset.y_m * c};
}

GroundOffset rotate_to_camera(const NorthOffset& offset, double heading_deg) {
  const double t = heading_deg * kDegToRad;
  const double c = std::cos(t);
  const double s = std::sin(t);
  return {offset.east_m * c - offset.north_m * s, offset.east_m * s + offset.north_m * c, 0.0};
}

LocalFrame::LocalFrame(const GeoPoint& origin) : origin_(origin) {
  check_pole(origin.latitude);
  const double r = earth_radius_m(origin.latitude);
  m_per_deg_lat_ = r * kDegToRad;
  m_per_deg_lon_ = r * kDegToRad * std::cos(origin.latitude * kDegToRad);
}

GeoPoint LocalFrame::to_gps(const NorthOffset& o) const {
  return {origin_.latitude + o.north_m / m_per_deg_lat_,
          normalize_longitude(origin_.longitude + o.east_m / m_per_deg_lon_)};
}

NorthOffset LocalFrame::to_offset(const GeoPoint& p) const {
  const double dlon = normalize_longitude(p.longitude - origin_.longitude);
  return {dlon * m_per_deg_lon_, (p.latitude - origin_.latitude) * m_per_deg_lat_};
}

GeoPoint offset_to_gps(const NorthOffset& offset, const GeoPoint& uav) {
  check_pole(uav.latitude);
  const double r = earth_radius_m(uav.latitude);
  const double lat = uav.latitude + offset.north_m / r * kRadToDeg;
  const double lon = uav.longitude +
                     offset.east_m / r * kRadToDeg / std::cos(uav.latitude * kDegToRad);
  return {lat, normalize_longitude(lon)};
}

NorthOffset gps_to_offset(const GeoPoint& obj, const GeoPoint& uav) {
  check_pole(uav.latitude);
  const double r = earth_radius_m(uav.latitude);
  const double dlat = obj.latitude - uav.latitude;
  const double dlon = normalize_longitude(obj.longitude - uav.longitude);
  return {dlon * kDegToRad * r * std::cos(uav.latitude * kDegToRad), dlat * kDegToRad * r};
}

GeoPoint camera_position(const CameraState& cam) { return {cam.latitude, cam.longitude}; }

GeoPoint pixel_to_gps(const PixelOffset& pixel, const CameraState& cam) {
  const GroundOffset g = pixel_to_ground(pixel, cam);
  return offset_to_gps(rotate_to_north(g, cam.heading_deg), camera_position(cam));
}

GpsProjection gps_to_pixel(const GeoPoint& point, const CameraState& cam) {
  const NorthOffset n = gps_to_offset(point, camera_position(cam));
  GroundOffset g = rotate_to_camera(n, cam.heading_deg);
  GpsProjection out;
  if (!(g.y_m > 0.0)) {
    out.status = ProjectionStatus::BehindCamera;
    return out;
  }
  const ProjectedPixel p = ground_to_pixel(g, cam);
  out.pixel = p.pixel;
  out.slant_d_m = std::hypot(cam.altitude_m, g.y_m);
  out.status = p.in_frame ? ProjectionStatus::InFrame : ProjectionStatus::OutOfFrame;
  return out;
}

}  // namespace uavmem
