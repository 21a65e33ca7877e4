#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "uavmem/geodesy.hpp"

namespace uavmem {

/// Axis-aligned box in absolute pixels, top-left origin.
struct Detection {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  int class_id = 0;
  double confidence = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double center_col() const { return 0.5 * (x1 + x2); }
  double center_row() const { return 0.5 * (y1 + y2); }
  /// Box diagonal.
  double diameter() const;
  bool valid() const;

  friend bool operator==(const Detection&, const Detection&) = default;
};

double iou(const Detection& a, const Detection& b);

enum class LocateStatus { Located, AboveHorizon, BehindCamera };

struct GeoDetection {
  Detection detection;           // confidence is the detector's original value
  double boosted_confidence = 0.0;
  LocateStatus status = LocateStatus::Located;
  std::optional<GeoPoint> position;  // present iff status == Located
  double slant_distance_m = 0.0;
  std::size_t source_index = 0;  // index in the frame's input list

  bool located() const { return status == LocateStatus::Located; }
};

/// Greedy non-maximum suppression. Boxes are visited in descending score
/// order (ties: lower index first); a box is dropped if its IoU with an
/// already kept box exceeds the threshold. Returns kept indices in visit
/// order. Class is not considered; callers invoke it per class.
std::vector<std::size_t> nms_indices(std::span<const Detection> boxes,
                                     std::span<const double> scores, double iou_threshold);

/// Convenience overload scoring by Detection::confidence.
std::vector<Detection> nms(std::span<const Detection> boxes, double iou_threshold);

}  // namespace uavmem
