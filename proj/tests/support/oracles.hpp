#pragma once

// Independent reference implementations for the tests. Deliberately naive:
// different algorithms from the library where possible, long double where
// it matters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "uavmem/detection.hpp"
#include "uavmem/memory_map.hpp"
#include "uavmem/metrics.hpp"

namespace oracle {

inline long double box_iou(const uavmem::Detection& a, const uavmem::Detection& b) {
  const long double iw = std::max<long double>(0, std::min<long double>(a.x2, b.x2) - std::max<long double>(a.x1, b.x1));
  const long double ih = std::max<long double>(0, std::min<long double>(a.y2, b.y2) - std::max<long double>(a.y1, b.y1));
  const long double inter = iw * ih;
  const long double uni = (long double)(a.x2 - a.x1) * (a.y2 - a.y1) + (long double)(b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0 ? inter / uni : 0;
}

/// Repeatedly take the best remaining box and delete everything it overlaps.
inline std::vector<std::size_t> nms(const std::vector<uavmem::Detection>& boxes, const std::vector<double>& scores,
                                    double threshold) {
  std::vector<std::size_t> remaining(boxes.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::size_t> kept;
  while (!remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i) {
      const std::size_t a = remaining[i], b = remaining[best];
      if (scores[a] > scores[b] || (scores[a] == scores[b] && a < b)) best = i;
    }
    const std::size_t chosen = remaining[best];
    kept.push_back(chosen);
    std::vector<std::size_t> next;
    for (std::size_t i : remaining) {
      if (i != chosen && box_iou(boxes[i], boxes[chosen]) <= threshold) next.push_back(i);
    }
    remaining = std::move(next);
  }
  return kept;
}

/// Connected components by union-find. Each component: sorted (row, col)
/// cells and its peak value. Components ordered by their first cell.
struct Component {
  std::vector<std::pair<int, int>> cells;
  double peak = 0.0;
};

inline std::vector<Component> components(const uavmem::MemoryMap& map, double threshold, double min_area_m2) {
  const int n = map.size();
  std::vector<int> parent(static_cast<std::size_t>(n) * n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto on = [&](int r, int c) { return map.at(r, c) >= threshold; };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!on(r, c)) continue;
      if (r + 1 < n && on(r + 1, c)) parent[find(r * n + c)] = find((r + 1) * n + c);
      if (c + 1 < n && on(r, c + 1)) parent[find(r * n + c)] = find(r * n + c + 1);
    }
  }
  std::vector<int> root_order;
  std::vector<Component> by_root(parent.size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!on(r, c)) continue;
      const int root = find(r * n + c);
      if (by_root[root].cells.empty()) root_order.push_back(root);
      by_root[root].cells.emplace_back(r, c);
      by_root[root].peak = std::max(by_root[root].peak, double(map.at(r, c)));
    }
  }
  const double cell_area = map.spec().cell_size_m * map.spec().cell_size_m;
  std::vector<Component> out;
  for (int root : root_order) {
    if (by_root[root].cells.size() * cell_area + 1e-9 < min_area_m2) continue;
    out.push_back(std::move(by_root[root]));
  }
  return out;
}

/// Solves A x = b by Gauss-Jordan elimination with partial pivoting.
inline std::vector<long double> solve(std::vector<std::vector<long double>> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

struct GpPosterior {
  long double mean;
  long double variance;
};

/// Posterior of a zero-mean-after-centering GP with a squared-exponential
/// kernel, computed by direct solves.
inline GpPosterior gp_posterior(const std::vector<double>& x, const std::vector<double>& y, double length_scale,
                                double amplitude, double noise_sd, double prior_mean, double at) {
  const std::size_t n = x.size();
  auto k = [&](long double a, long double b) {
    const long double d = (a - b) / length_scale;
    return (long double)amplitude * amplitude * std::exp(-0.5L * d * d);
  };
  std::vector<std::vector<long double>> kk(n, std::vector<long double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) kk[i][j] = k(x[i], x[j]) + (i == j ? (long double)noise_sd * noise_sd : 0);
  std::vector<long double> centered(n), ks(n);
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = y[i] - (long double)prior_mean;
    ks[i] = k(at, x[i]);
  }
  const auto alpha = solve(kk, centered);
  const auto v = solve(kk, ks);
  long double mean = prior_mean, quad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += ks[i] * alpha[i];
    quad += ks[i] * v[i];
  }
  return {mean, k(at, at) - quad + (long double)noise_sd * noise_sd};
}

/// Output cell value of a mean merge: average of every input map whose
/// window contains the nearest cell to the output cell's center.
inline float merged_cell(const std::vector<uavmem::MemoryMap>& maps, const uavmem::MemoryMap& out, int row, int col) {
  const uavmem::GeoPoint center = out.cell_center({row, col});
  long double sum = 0;
  int count = 0;
  for (const auto& m : maps) {
    const uavmem::CellIndex idx = m.origin() == out.origin() ? out.cell_index({row, col}) : m.nearest_cell(center);
    if (const auto v = m.value_at(idx)) {
      sum += *v;
      ++count;
    }
  }
  return count ? static_cast<float>(sum / count) : 0.0f;
}

/// AP from scratch at every distinct confidence level: re-match the
/// thresholded prediction set per frame, then integrate the monotone
/// precision envelope over recall.
inline long double brute_force_ap(const std::vector<uavmem::DetectionFrame>& preds,
                                  const std::vector<uavmem::GroundTruthFrame>& truth, double iou_threshold) {
  std::size_t total = 0;
  for (const auto& g : truth) total += g.objects.size();
  if (total == 0) return 0;
  std::set<double, std::greater<>> levels;
  for (const auto& f : preds)
    for (const auto& d : f.detections) levels.insert(d.confidence);
  std::vector<std::pair<long double, long double>> curve;  // (recall, precision)
  for (double level : levels) {
    std::size_t tp = 0, emitted = 0;
    for (const auto& f : preds) {
      std::vector<uavmem::Detection> kept;
      for (const auto& d : f.detections)
        if (d.confidence >= level) kept.push_back(d);
      std::vector<uavmem::Detection> gts;
      for (const auto& g : truth)
        if (g.frame_id == f.frame_id)
          for (const auto& o : g.objects) gts.push_back(o.box);
      // Confidence-ordered greedy matching, written out longhand.
      std::vector<std::size_t> order(kept.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return kept[a].confidence > kept[b].confidence; });
      std::vector<bool> used(gts.size());
      for (std::size_t p : order) {
        long double best = -1;
        std::size_t best_t = 0;
        for (std::size_t t = 0; t < gts.size(); ++t) {
          if (used[t] || gts[t].class_id != kept[p].class_id) continue;
          const long double v = uavmem::iou(kept[p], gts[t]);
          if (v >= iou_threshold && v > best) {
            best = v;
            best_t = t;
          }
        }
        if (best >= 0) {
          used[best_t] = true;
          ++tp;
        }
      }
      emitted += kept.size();
    }
    curve.emplace_back((long double)tp / total, emitted ? (long double)tp / emitted : 0);
  }
  long double ap = 0, prev = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    long double best_precision = 0;
    for (std::size_t j = i; j < curve.size(); ++j) best_precision = std::max(best_precision, curve[j].second);
    ap += (curve[i].first - prev) * best_precision;
    prev = curve[i].first;
  }
  return ap;
}

}  // namespace oracle
