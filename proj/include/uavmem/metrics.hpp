#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "uavmem/io.hpp"

namespace uavmem {

/// Same-class pairs with IoU >= threshold, taken greedily in descending IoU
/// order (ties: lower prediction index, then lower truth index). Returns
/// (prediction, truth) index pairs.
std::vector<std::pair<std::size_t, std::size_t>> match_by_iou(std::span<const Detection> predictions,
                                                              std::span<const Detection> truths,
                                                              double iou_threshold);

/// Predictions visited by descending confidence (ties: lower index); each
/// takes the unmatched same-class truth of highest IoU >= threshold. Returns
/// per-prediction truth index or -1.
std::vector<long> match_by_confidence(std::span<const Detection> predictions, std::span<const Detection> truths,
                                      double iou_threshold);

struct DetectionReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t ground_truth = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap50 = 0.0;
  /// Mean recall over IoU 0.50:0.05:0.95 with the 100 most confident
  /// predictions per frame.
  double average_recall = 0.0;
};

/// Frames are paired by frame_id. Precision/recall/F1 count predictions
/// with confidence >= conf_threshold matched by match_by_iou at IoU 0.5.
/// AP50 is the all-point interpolated area under the precision-recall
/// curve of all predictions, matched by match_by_confidence.
DetectionReport evaluate_detections(std::span<const DetectionFrame> predictions,
                                    std::span<const GroundTruthFrame> truth, double conf_threshold = 0.5);

/// All-point interpolated AP at one IoU threshold.
double average_precision(std::span<const DetectionFrame> predictions, std::span<const GroundTruthFrame> truth,
                         double iou_threshold);

struct TrackingReport {
  std::size_t matches = 0;
  std::size_t ground_truth = 0;
  double recall = 0.0;
  /// A truth object matched to a different track id than at its previous match.
  std::size_t id_switches = 0;
  /// A truth object matched again after frames where it was present but unmatched.
  std::size_t fragmentations = 0;
};

/// Per frame, rows are matched to truth with match_by_iou at IoU 0.5.
/// Truth frames outside [first_frame, last_frame] are ignored.
TrackingReport evaluate_tracking(std::span<const TrackRow> rows, std::span<const GroundTruthFrame> truth,
                                 std::int64_t first_frame = std::numeric_limits<std::int64_t>::min(),
                                 std::int64_t last_frame = std::numeric_limits<std::int64_t>::max());

}  // namespace uavmem
