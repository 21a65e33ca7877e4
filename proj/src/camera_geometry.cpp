#include "uavmem/camera_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uavmem/error.hpp"

namespace uavmem {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
// Slack for rays that land on the nadir up to rounding.
constexpr double kNadirSlack = 1e-12;

}  // namespace

void validate(const CameraState& cam) {
  if (!(cam.altitude_m > 0.0) || !std::isfinite(cam.altitude_m)) {
    throw Error(ErrorCode::InvalidCamera, "altitude must be positive");
  }
  if (!(cam.focal_px > 0.0) || !std::isfinite(cam.focal_px)) {
    throw Error(ErrorCode::InvalidCamera, "focal length must be positive");
  }
  if (!(cam.gimbal_pitch_deg > 0.0 && cam.gimbal_pitch_deg <= 90.0)) {
    throw Error(ErrorCode::InvalidCamera, "gimbal pitch must lie in (0, 90] degrees");
  }
  if (cam.image_width_px <= 0 || cam.image_height_px <= 0) {
    throw Error(ErrorCode::InvalidCamera, "image dimensions must be positive");
  }
}

PixelOffset to_offset(double col, double row, const CameraState& cam) {
  return {col - cam.image_width_px / 2.0, row - cam.image_height_px / 2.0};
}

void to_absolute(const PixelOffset& p, const CameraState& cam, double& col, double& row) {
  col = p.u + cam.image_width_px / 2.0;
  row = p.v + cam.image_height_px / 2.0;
}

GroundStatus locate_ground(const PixelOffset& pixel, const CameraState& cam, GroundTrace& out) {
  const double h = cam.altitude_m;
  const double f = cam.focal_px;
  const double beta = cam.gimbal_pitch_deg * kDegToRad;

  // alpha is measured upward, v downward.
  const double alpha = std::atan(-pixel.v / f);
  const double depression = beta - alpha;
  if (depression <= horizon_dip_deg(h) * kDegToRad) return GroundStatus::AboveHorizon;
  if (depression > kHalfPi + kNadirSlack) return GroundStatus::BehindCamera;

  out.alpha_deg = alpha * kRadToDeg;
  out.depression_deg = depression * kRadToDeg;
  out.y_m = std::max(0.0, std::tan(kHalfPi - depression) * h);
  out.d_m = std::hypot(h, out.y_m);
  out.w_px = std::hypot(f, pixel.v);
  out.x_m = pixel.u / out.w_px * out.d_m;
  return GroundStatus::Ok;
}

GroundTrace trace_pixel_to_ground(const PixelOffset& pixel, const CameraState& cam) {
  validate(cam);
  GroundTrace t;
  switch (locate_ground(pixel, cam, t)) {
    case GroundStatus::AboveHorizon:
      throw Error(ErrorCode::HorizonViolation, "pixel lies at or above the horizon row");
    case GroundStatus::BehindCamera:
      throw Error(ErrorCode::BehindCamera, "pixel ray points behind the UAV");
    case GroundStatus::Ok:
      break;
  }
  return t;
}

GroundOffset pixel_to_ground(const PixelOffset& pixel, const CameraState& cam) {
  const GroundTrace t = trace_pixel_to_ground(pixel, cam);
  return {t.x_m, t.y_m, t.d_m};
}

ProjectedPixel ground_to_pixel(const GroundOffset& offset, const CameraState& cam) {
  validate(cam);
  if (!(offset.y_m > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "ground point is not in front of the camera");
  }
  const double h = cam.altitude_m;
  const double f = cam.focal_px;
  const double beta = cam.gimbal_pitch_deg * kDegToRad;

  const double depression = std::atan2(h, offset.y_m);
  ProjectedPixel out;
  out.pixel.v = f * std::tan(depression - beta);
  const double w = std::hypot(f, out.pixel.v);
  const double d = std::hypot(h, offset.y_m);
  out.pixel.u = offset.x_m * w / d;

  out.in_frame = std::abs(out.pixel.u) <= cam.image_width_px / 2.0 &&
                 std::abs(out.pixel.v) <= cam.image_height_px / 2.0 &&
                 depression > horizon_dip_deg(h) * kDegToRad;
  return out;
}

double horizon_distance_m(double altitude_m) {
  if (!(altitude_m > 0.0)) {
    throw Error(ErrorCode::InvalidCamera, "altitude must be positive");
  }
  return 3570.0 * std::sqrt(altitude_m);
}

double horizon_dip_deg(double altitude_m) {
  const double l = horizon_distance_m(altitude_m);
  return std::asin(std::min(1.0, altitude_m / l)) * kRadToDeg;
}

double horizon_row_offset_raw(const CameraState& cam) {
  validate(cam);
  const double gamma = horizon_dip_deg(cam.altitude_m) * kDegToRad;
  const double beta = cam.gimbal_pitch_deg * kDegToRad;
  const double diff = gamma - beta;
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return std::tan(std::abs(diff)) * cam.focal_px * sign;
}

double horizon_row_offset(const CameraState& cam) {
  const double half = cam.image_height_px / 2.0;
  return std::clamp(horizon_row_offset_raw(cam), -half, half);
}

}  // namespace uavmem
