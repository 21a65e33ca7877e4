#include "uavmem/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <unordered_map>

namespace uavmem {

std::vector<std::pair<std::size_t, std::size_t>> match_by_iou(std::span<const Detection> predictions,
                                                              std::span<const Detection> truths,
                                                              double iou_threshold) {
  struct Candidate {
    double iou;
    std::size_t pred, truth;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (predictions[p].class_id != truths[t].class_id) continue;
      const double v = iou(predictions[p], truths[t]);
      if (v >= iou_threshold) candidates.push_back({v, p, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.pred, a.truth) < std::tie(b.pred, b.truth);
  });
  std::vector<bool> pred_used(predictions.size()), truth_used(truths.size());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const Candidate& c : candidates) {
    if (pred_used[c.pred] || truth_used[c.truth]) continue;
    pred_used[c.pred] = truth_used[c.truth] = true;
    out.emplace_back(c.pred, c.truth);
  }
  return out;
}

std::vector<long> match_by_confidence(std::span<const Detection> predictions, std::span<const Detection> truths,
                                      double iou_threshold) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });
  std::vector<long> out(predictions.size(), -1);
  std::vector<bool> used(truths.size());
  for (std::size_t p : order) {
    double best = iou_threshold;
    long best_t = -1;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (used[t] || truths[t].class_id != predictions[p].class_id) continue;
      const double v = iou(predictions[p], truths[t]);
      if (v > best || (best_t < 0 && v >= best)) {
        best = v;
        best_t = static_cast<long>(t);
      }
    }
    if (best_t >= 0) {
      used[static_cast<std::size_t>(best_t)] = true;
      out[p] = best_t;
    }
  }
  return out;
}

namespace {

std::vector<Detection> boxes_of(const GroundTruthFrame& f) {
  std::vector<Detection> out;
  out.reserve(f.objects.size());
  for (const auto& o : f.objects) out.push_back(o.box);
  return out;
}

struct Paired {
  const std::vector<Detection>* predictions;
  std::vector<Detection> truths;
};

/// Every frame that has predictions or truth, in frame_id order.
std::vector<Paired> pair_frames(std::span<const DetectionFrame> predictions, std::span<const GroundTruthFrame> truth,
                                std::size_t& total_truth) {
  static const std::vector<Detection> none;
  std::map<std::int64_t, Paired> frames;
  total_truth = 0;
  for (const auto& g : truth) {
    auto& p = frames.try_emplace(g.frame_id, Paired{&none, {}}).first->second;
    const auto boxes = boxes_of(g);
    p.truths.insert(p.truths.end(), boxes.begin(), boxes.end());
    total_truth += boxes.size();
  }
  for (const auto& f : predictions) {
    auto& p = frames.try_emplace(f.frame_id, Paired{&none, {}}).first->second;
    p.predictions = &f.detections;
  }
  std::vector<Paired> out;
  out.reserve(frames.size());
  for (auto& [id, p] : frames) out.push_back(std::move(p));
  return out;
}

double all_point_ap(std::vector<std::pair<double, bool>> scored, std::size_t total_truth) {
  if (total_truth == 0) return 0.0;
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  // One curve point per distinct confidence, so tied predictions enter
  // together and their order does not matter.
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].second) ++tp;
    if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) continue;
    precision.push_back(double(tp) / double(i + 1));
    recall.push_back(double(tp) / double(total_truth));
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

double average_precision(std::span<const DetectionFrame> predictions, std::span<const GroundTruthFrame> truth,
                         double iou_threshold) {
  std::size_t total = 0;
  const auto frames = pair_frames(predictions, truth, total);
  std::vector<std::pair<double, bool>> scored;
  for (const Paired& f : frames) {
    const auto matched = match_by_confidence(*f.predictions, f.truths, iou_threshold);
    for (std::size_t i = 0; i < matched.size(); ++i) scored.emplace_back((*f.predictions)[i].confidence, matched[i] >= 0);
  }
  return all_point_ap(std::move(scored), total);
}

DetectionReport evaluate_detections(std::span<const DetectionFrame> predictions,
                                    std::span<const GroundTruthFrame> truth, double conf_threshold) {
  DetectionReport r;
  const auto frames = pair_frames(predictions, truth, r.ground_truth);
  for (const Paired& f : frames) {
    std::vector<Detection> kept;
    for (const Detection& d : *f.predictions)
      if (d.confidence >= conf_threshold) kept.push_back(d);
    const std::size_t tp = match_by_iou(kept, f.truths, 0.5).size();
    r.true_positives += tp;
    r.false_positives += kept.size() - tp;
  }
  const std::size_t emitted = r.true_positives + r.false_positives;
  r.precision = emitted ? double(r.true_positives) / double(emitted) : 0.0;
  r.recall = r.ground_truth ? double(r.true_positives) / double(r.ground_truth) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.ap50 = average_precision(predictions, truth, 0.5);

  if (r.ground_truth > 0) {
    double sum = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double thr = 0.5 + 0.05 * k;
      std::size_t tp = 0;
      for (const Paired& f : frames) {
        std::vector<Detection> top = *f.predictions;
        std::stable_sort(top.begin(), top.end(),
                         [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
        if (top.size() > 100) top.resize(100);
        for (long m : match_by_confidence(top, f.truths, thr)) tp += m >= 0;
      }
      sum += double(tp) / double(r.ground_truth);
    }
    r.average_recall = sum / 10.0;
  }
  return r;
}

TrackingReport evaluate_tracking(std::span<const TrackRow> rows, std::span<const GroundTruthFrame> truth,
                                 std::int64_t first_frame, std::int64_t last_frame) {
  std::map<std::int64_t, std::vector<const TrackRow*>> by_frame;
  for (const TrackRow& r : rows) by_frame[r.frame_id].push_back(&r);

  std::vector<const GroundTruthFrame*> frames;
  for (const auto& g : truth)
    if (g.frame_id >= first_frame && g.frame_id <= last_frame) frames.push_back(&g);
  std::stable_sort(frames.begin(), frames.end(), [](auto* a, auto* b) { return a->frame_id < b->frame_id; });

  struct History {
    std::optional<std::int64_t> last_track;
    bool missed_since = false;
  };
  std::unordered_map<std::int64_t, History> objects;
  TrackingReport r;
  for (const GroundTruthFrame* g : frames) {
    std::vector<Detection> preds;
    std::vector<std::int64_t> ids;
    if (auto it = by_frame.find(g->frame_id); it != by_frame.end()) {
      for (const TrackRow* row : it->second) {
        preds.push_back(row->box);
        ids.push_back(row->track_id);
      }
    }
    const auto truths = boxes_of(*g);
    std::vector<std::optional<std::int64_t>> assigned(truths.size());
    for (const auto& [p, t] : match_by_iou(preds, truths, 0.5)) assigned[t] = ids[p];

    r.ground_truth += truths.size();
    for (std::size_t t = 0; t < truths.size(); ++t) {
      History& h = objects[g->objects[t].object_id];
      if (!assigned[t]) {
        if (h.last_track) h.missed_since = true;
        continue;
      }
      ++r.matches;
      if (h.last_track && *h.last_track != *assigned[t]) ++r.id_switches;
      if (h.missed_since) ++r.fragmentations;
      h.last_track = assigned[t];
      h.missed_since = false;
    }
  }
  r.recall = r.ground_truth ? double(r.matches) / double(r.ground_truth) : 0.0;
  return r;
}

}  // namespace uavmem
