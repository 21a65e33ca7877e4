#include "uavmem/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uavmem {

double Detection::diameter() const { return std::hypot(width(), height()); }

bool Detection::valid() const {
  return x2 > x1 && y2 > y1 && confidence >= 0.0 && confidence <= 1.0 && class_id >= 0 &&
         std::isfinite(x1) && std::isfinite(x2) && std::isfinite(y1) && std::isfinite(y2);
}

double iou(const Detection& a, const Detection& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> nms_indices(std::span<const Detection> boxes,
                                     std::span<const double> scores, double iou_threshold) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const Detection& cand = boxes[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(cand, boxes[k]) > iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<Detection> nms(std::span<const Detection> boxes, double iou_threshold) {
  std::vector<double> scores(boxes.size());
  std::transform(boxes.begin(), boxes.end(), scores.begin(),
                 [](const Detection& d) { return d.confidence; });
  std::vector<Detection> out;
  for (std::size_t i : nms_indices(boxes, scores, iou_threshold)) out.push_back(boxes[i]);
  return out;
}

}  // namespace uavmem
