#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "uavmem/detection.hpp"

namespace uavmem {

struct SizePoint {
  double distance_m = 0.0;
  double diameter_px = 0.0;
  int class_id = 0;
};

struct SizeModelParams {
  double length_scale_m = 20.0;
  /// Kernel amplitude in pixels; <= 0 selects the training targets' standard
  /// deviation (at least 1 px).
  double amplitude_px = 0.0;
  double noise_std_px = 2.0;
  double band_k = 1.5;
  double window_m = 5.0;
  double lambda_max = 5.0;
  std::size_t max_points = 2000;
  std::size_t min_points = 10;
  int table_size = 512;

  friend bool operator==(const SizeModelParams&, const SizeModelParams&) = default;
};

struct SizeBand {
  double min_px = 0.0;
  double max_px = 0.0;
  bool pass_through = false;

  bool contains(double diameter_px) const {
    return pass_through || (diameter_px >= min_px && diameter_px <= max_px);
  }
};

/// Gaussian-process regression of box diameter over slant distance for one
/// class (squared-exponential kernel, constant prior mean equal to the
/// training mean), plus the accepted band derived from it.
class ClassSizeModel {
 public:
  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;  // predictive, includes observation noise
  };

  /// Throws InsufficientData or SingularKernel.
  static ClassSizeModel fit(std::vector<SizePoint> points, const SizeModelParams& params);

  Posterior predict(double distance_m) const;

  /// Evaluated on a dense grid precomputed at fit time, linearly
  /// interpolated. Pass-through outside [min_d / 2, 2 * max_d].
  SizeBand accepted_band(double distance_m) const;

  /// Band scale factor at a distance (for diagnostics).
  double band_scale(double distance_m) const;

  std::span<const SizePoint> points() const { return points_; }
  double min_distance() const { return min_d_; }
  double max_distance() const { return max_d_; }
  double range_lo() const { return min_d_ / 2.0; }
  double range_hi() const { return max_d_ * 2.0; }

 private:
  void build_table();
  double kernel(double a, double b) const;
  double interpolate(const std::vector<double>& table, double x) const;

  SizeModelParams params_;
  std::vector<SizePoint> points_;
  double prior_mean_ = 0.0;
  double amplitude2_ = 1.0;
  double min_d_ = 0.0;
  double max_d_ = 0.0;
  Eigen::VectorXd inputs_;
  Eigen::VectorXd weights_;  // K^-1 (y - mean)
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double table_lo_ = 0.0;
  double table_step_ = 1.0;
  std::vector<double> table_mean_;
  std::vector<double> table_sd_;
  std::vector<double> table_scale_;
};

class SizeModel {
 public:
  SizeModel() = default;
  explicit SizeModel(SizeModelParams params) : params_(params) {}

  /// Fits one model per class present in `points`.
  static SizeModel fit(std::span<const SizePoint> points, const SizeModelParams& params);

  const SizeModelParams& params() const { return params_; }
  bool has_class(int class_id) const { return classes_.contains(class_id); }
  const ClassSizeModel& at(int class_id) const { return classes_.at(class_id); }
  const std::map<int, ClassSizeModel>& classes() const { return classes_; }
  bool empty() const { return classes_.empty(); }

  /// Pass-through for unknown classes.
  SizeBand accepted_band(int class_id, double distance_m) const;

  nlohmann::json to_json() const;
  static SizeModel from_json(const nlohmann::json& j);

 private:
  SizeModelParams params_;
  std::map<int, ClassSizeModel> classes_;
};

enum class DiscardReason { TooSmall, TooLarge };

struct Discarded {
  GeoDetection detection;
  DiscardReason reason = DiscardReason::TooLarge;
  SizeBand band;
};

struct SizeFilterResult {
  std::vector<GeoDetection> kept;
  std::vector<Discarded> discarded;
};

/// Keeps a detection iff its diameter lies inside the band for its class and
/// slant distance. Detections without a location pass through.
SizeFilterResult filter(std::span<const GeoDetection> detections, const SizeModel& model);

std::vector<SizePoint> read_size_points_csv(const std::string& path);
void write_size_points_csv(const std::string& path, std::span<const SizePoint> points);
SizeModel read_size_model(const std::string& path);
void write_size_model(const std::string& path, const SizeModel& model);

}  // namespace uavmem
