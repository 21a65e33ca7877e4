#pragma once

// Pixel <-> ground-plane geometry for a gimballed UAV camera with zero roll
// over flat ground.
//
// Pixel offsets are measured from the image center: u grows to the right,
// v grows downward. Absolute pixel positions use a top-left origin
// (col, row) and convert via u = col - width/2, v = row - height/2.

namespace uavmem {

struct CameraState {
  double latitude = 0.0;        // degrees
  double longitude = 0.0;       // degrees
  double altitude_m = 0.0;      // above (flat) ground
  double gimbal_pitch_deg = 0.0;  // 0 = horizontal, 90 = nadir
  double heading_deg = 0.0;     // clockwise from north
  double focal_px = 0.0;
  int image_width_px = 0;
  int image_height_px = 0;
};

struct PixelOffset {
  double u = 0.0;
  double v = 0.0;
};

struct GroundOffset {
  double x_m = 0.0;      // lateral, positive to the right of the optical axis
  double y_m = 0.0;      // forward
  double slant_d_m = 0.0;
};

/// Throws InvalidCamera unless altitude and focal length are positive, the
/// pitch lies in (0, 90] and the image has positive size.
void validate(const CameraState& cam);

PixelOffset to_offset(double col, double row, const CameraState& cam);
void to_absolute(const PixelOffset& p, const CameraState& cam, double& col, double& row);

/// Intermediate quantities of the pixel -> ground computation, exposed for
/// auditing. alpha_deg is the angle of the viewing ray above the optical
/// axis (arctan of the upward pixel offset over f).
struct GroundTrace {
  double alpha_deg = 0.0;
  double depression_deg = 0.0;
  double y_m = 0.0;
  double d_m = 0.0;
  double w_px = 0.0;
  double x_m = 0.0;
};

enum class GroundStatus { Ok, AboveHorizon, BehindCamera };

/// Non-throwing core of pixel_to_ground; `out` is filled only on Ok. The
/// camera is assumed valid.
GroundStatus locate_ground(const PixelOffset& pixel, const CameraState& cam, GroundTrace& out);

GroundTrace trace_pixel_to_ground(const PixelOffset& pixel, const CameraState& cam);

/// Throws HorizonViolation for pixels at or above the horizon row and
/// BehindCamera when the ray points behind the nadir.
GroundOffset pixel_to_ground(const PixelOffset& pixel, const CameraState& cam);

struct ProjectedPixel {
  PixelOffset pixel;
  bool in_frame = true;
};

/// Exact inverse of pixel_to_ground. Only x_m and y_m of the offset are used.
/// Throws BehindCamera when y_m <= 0.
ProjectedPixel ground_to_pixel(const GroundOffset& offset, const CameraState& cam);

/// 3.57 km * sqrt(h) rule, returned in meters.
double horizon_distance_m(double altitude_m);

/// Angle below horizontal at which the horizon is seen, in degrees.
double horizon_dip_deg(double altitude_m);

/// Signed row offset of the horizon from the image center (negative = above
/// center), before truncation to the image.
double horizon_row_offset_raw(const CameraState& cam);

/// Same, truncated to [-height/2, height/2].
double horizon_row_offset(const CameraState& cam);

}  // namespace uavmem
