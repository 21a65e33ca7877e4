#include "uavmem/size_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "uavmem/error.hpp"

namespace uavmem {

namespace {

std::vector<SizePoint> subsample_by_distance(std::vector<SizePoint> pts, std::size_t cap) {
  std::stable_sort(pts.begin(), pts.end(), [](const SizePoint& a, const SizePoint& b) {
    return a.distance_m < b.distance_m;
  });
  if (cap == 0 || pts.size() <= cap) return pts;
  std::vector<SizePoint> out;
  out.reserve(cap);
  const double step = double(pts.size() - 1) / double(cap - 1);
  for (std::size_t i = 0; i < cap; ++i) {
    out.push_back(pts[static_cast<std::size_t>(std::llround(i * step))]);
  }
  return out;
}

}  // namespace

double ClassSizeModel::kernel(double a, double b) const {
  const double d = (a - b) / params_.length_scale_m;
  return amplitude2_ * std::exp(-0.5 * d * d);
}

ClassSizeModel ClassSizeModel::fit(std::vector<SizePoint> points, const SizeModelParams& params) {
  if (points.size() < std::max<std::size_t>(params.min_points, 1)) {
    throw Error(ErrorCode::InsufficientData, "too few size points to fit a class model");
  }
  for (const SizePoint& p : points) {
    if (!(p.distance_m > 0.0) || !(p.diameter_px > 0.0) || !std::isfinite(p.distance_m) ||
        !std::isfinite(p.diameter_px)) {
      throw Error(ErrorCode::InvalidInput, "size points must be positive and finite");
    }
  }
  if (!(params.length_scale_m > 0.0) || !(params.noise_std_px >= 0.0) || params.table_size < 2) {
    throw Error(ErrorCode::InvalidInput, "invalid size model hyperparameters");
  }

  ClassSizeModel m;
  m.params_ = params;
  m.points_ = subsample_by_distance(std::move(points), params.max_points);
  const auto n = static_cast<Eigen::Index>(m.points_.size());

  m.inputs_.resize(n);
  Eigen::VectorXd targets(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.inputs_[i] = m.points_[i].distance_m;
    targets[i] = m.points_[i].diameter_px;
  }
  m.prior_mean_ = targets.mean();
  const double var = (targets.array() - m.prior_mean_).square().mean();
  const double amp = params.amplitude_px > 0.0 ? params.amplitude_px : std::max(1.0, std::sqrt(var));
  m.amplitude2_ = amp * amp;
  m.min_d_ = m.points_.front().distance_m;
  m.max_d_ = m.points_.back().distance_m;

  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = m.kernel(m.inputs_[i], m.inputs_[j]);
    }
  }
  const double noise2 = params.noise_std_px * params.noise_std_px;
  k.diagonal().array() += noise2;

  double jitter = 0.0;
  for (int attempt = 0;; ++attempt) {
    m.llt_.compute(k);
    if (m.llt_.info() == Eigen::Success) break;
    if (attempt == 6) throw Error(ErrorCode::SingularKernel, "kernel matrix is not positive definite");
    const double next = jitter == 0.0 ? 1e-10 * m.amplitude2_ : jitter * 10.0;
    k.diagonal().array() += next - jitter;
    jitter = next;
  }
  const Eigen::VectorXd centered = (targets.array() - m.prior_mean_).matrix();
  m.weights_ = m.llt_.solve(centered);
  m.build_table();
  return m;
}

ClassSizeModel::Posterior ClassSizeModel::predict(double distance_m) const {
  const auto n = inputs_.size();
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks[i] = kernel(distance_m, inputs_[i]);
  Posterior p;
  p.mean = prior_mean_ + ks.dot(weights_);
  const Eigen::VectorXd v = llt_.matrixL().solve(ks);
  p.variance = std::max(0.0, amplitude2_ + params_.noise_std_px * params_.noise_std_px - v.squaredNorm());
  return p;
}

void ClassSizeModel::build_table() {
  const int g = params_.table_size;
  table_lo_ = range_lo();
  table_step_ = (range_hi() - range_lo()) / (g - 1);
  if (!(table_step_ > 0.0)) table_step_ = 1.0;

  const auto n = inputs_.size();
  Eigen::MatrixXd ks(n, g);
  for (int c = 0; c < g; ++c) {
    const double x = table_lo_ + c * table_step_;
    for (Eigen::Index i = 0; i < n; ++i) ks(i, c) = kernel(x, inputs_[i]);
  }
  const Eigen::VectorXd means = (ks.transpose() * weights_).array() + prior_mean_;
  llt_.matrixL().solveInPlace(ks);
  const Eigen::VectorXd reduce = ks.colwise().squaredNorm().transpose();
  const double prior_var = amplitude2_ + params_.noise_std_px * params_.noise_std_px;

  table_mean_.resize(g);
  table_sd_.resize(g);
  for (int c = 0; c < g; ++c) {
    table_mean_[c] = means[c];
    table_sd_[c] = std::sqrt(std::max(0.0, prior_var - reduce[c]));
  }

  std::vector<double> sd_prefix(g + 1, 0.0);
  std::partial_sum(table_sd_.begin(), table_sd_.end(), sd_prefix.begin() + 1);

  table_scale_.assign(g, 1.0);
  const auto by_distance = [](const SizePoint& p, double d) { return p.distance_m < d; };
  for (int c = 0; c < g; ++c) {
    const double x = table_lo_ + c * table_step_;
    const double lo = x - params_.window_m;
    const double hi = x + params_.window_m;
    const auto first = std::lower_bound(points_.begin(), points_.end(), lo, by_distance);
    const auto last = std::upper_bound(points_.begin(), points_.end(), hi,
                                       [](double d, const SizePoint& p) { return d < p.distance_m; });
    if (std::distance(first, last) < 2) continue;
    const auto [mn, mx] = std::minmax_element(
        first, last, [](const SizePoint& a, const SizePoint& b) { return a.diameter_px < b.diameter_px; });
    const double spread = mx->diameter_px - mn->diameter_px;

    const int node_lo = std::max(0, static_cast<int>(std::ceil((lo - table_lo_) / table_step_)));
    const int node_hi = std::min(g - 1, static_cast<int>(std::floor((hi - table_lo_) / table_step_)));
    double avg_sd = table_sd_[c];
    if (node_hi >= node_lo) {
      avg_sd = (sd_prefix[node_hi + 1] - sd_prefix[node_lo]) / (node_hi - node_lo + 1);
    }
    if (avg_sd > 0.0) {
      table_scale_[c] = std::clamp(spread / (2.0 * avg_sd), 1.0, std::max(1.0, params_.lambda_max));
    }
  }
}

double ClassSizeModel::interpolate(const std::vector<double>& table, double x) const {
  const double pos = (x - table_lo_) / table_step_;
  const int last = static_cast<int>(table.size()) - 1;
  const int i = std::clamp(static_cast<int>(std::floor(pos)), 0, last - 1);
  const double t = std::clamp(pos - i, 0.0, 1.0);
  return table[i] + t * (table[i + 1] - table[i]);
}

double ClassSizeModel::band_scale(double distance_m) const {
  return interpolate(table_scale_, distance_m);
}

SizeBand ClassSizeModel::accepted_band(double distance_m) const {
  if (!std::isfinite(distance_m) || distance_m < range_lo() || distance_m > range_hi()) {
    return {0.0, std::numeric_limits<double>::infinity(), true};
  }
  const double mean = interpolate(table_mean_, distance_m);
  const double half = params_.band_k * interpolate(table_sd_, distance_m) * band_scale(distance_m);
  return {std::max(1.0, mean - half), mean + half, false};
}

SizeModel SizeModel::fit(std::span<const SizePoint> points, const SizeModelParams& params) {
  std::map<int, std::vector<SizePoint>> by_class;
  for (const SizePoint& p : points) by_class[p.class_id].push_back(p);
  SizeModel model(params);
  for (auto& [cls, pts] : by_class) {
    model.classes_.emplace(cls, ClassSizeModel::fit(std::move(pts), params));
  }
  return model;
}

SizeBand SizeModel::accepted_band(int class_id, double distance_m) const {
  const auto it = classes_.find(class_id);
  if (it == classes_.end()) return {0.0, std::numeric_limits<double>::infinity(), true};
  return it->second.accepted_band(distance_m);
}

nlohmann::json SizeModel::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [cls, m] : classes_) {
    nlohmann::json pts = nlohmann::json::array();
    for (const SizePoint& p : m.points()) pts.push_back({p.distance_m, p.diameter_px});
    classes.push_back({{"class_id", cls}, {"points", pts}});
  }
  return {
      {"params",
       {{"length_scale_m", params_.length_scale_m},
        {"amplitude_px", params_.amplitude_px},
        {"noise_std_px", params_.noise_std_px},
        {"band_k", params_.band_k},
        {"window_m", params_.window_m},
        {"lambda_max", params_.lambda_max},
        {"max_points", params_.max_points},
        {"min_points", params_.min_points},
        {"table_size", params_.table_size}}},
      {"classes", classes},
  };
}

SizeModel SizeModel::from_json(const nlohmann::json& j) {
  try {
    SizeModelParams p;
    const auto& jp = j.at("params");
    p.length_scale_m = jp.value("length_scale_m", p.length_scale_m);
    p.amplitude_px = jp.value("amplitude_px", p.amplitude_px);
    p.noise_std_px = jp.value("noise_std_px", p.noise_std_px);
    p.band_k = jp.value("band_k", p.band_k);
    p.window_m = jp.value("window_m", p.window_m);
    p.lambda_max = jp.value("lambda_max", p.lambda_max);
    p.max_points = jp.value("max_points", p.max_points);
    p.min_points = jp.value("min_points", p.min_points);
    p.table_size = jp.value("table_size", p.table_size);
    std::vector<SizePoint> pts;
    for (const auto& c : j.at("classes")) {
      const int cls = c.at("class_id").get<int>();
      for (const auto& pt : c.at("points")) {
        pts.push_back({pt.at(0).get<double>(), pt.at(1).get<double>(), cls});
      }
    }
    return fit(pts, p);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad size model: ") + e.what());
  }
}

SizeFilterResult filter(std::span<const GeoDetection> detections, const SizeModel& model) {
  SizeFilterResult out;
  for (const GeoDetection& d : detections) {
    if (!d.located()) {
      out.kept.push_back(d);
      continue;
    }
    const SizeBand band = model.accepted_band(d.detection.class_id, d.slant_distance_m);
    const double diam = d.detection.diameter();
    if (band.contains(diam)) {
      out.kept.push_back(d);
    } else {
      out.discarded.push_back({d, diam < band.min_px ? DiscardReason::TooSmall : DiscardReason::TooLarge, band});
    }
  }
  return out;
}

std::vector<SizePoint> read_size_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "empty size points file");
  if (line.rfind("class_id,distance_m,diameter_px", 0) != 0) {
    throw Error(ErrorCode::InvalidInput, "size points CSV must start with header class_id,distance_m,diameter_px");
  }
  std::vector<SizePoint> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    SizePoint p;
    char c1 = 0, c2 = 0;
    if (!(ss >> p.class_id >> c1 >> p.distance_m >> c2 >> p.diameter_px) || c1 != ',' || c2 != ',') {
      throw Error(ErrorCode::InvalidInput, "malformed size point at line " + std::to_string(lineno));
    }
    pts.push_back(p);
  }
  return pts;
}

void write_size_points_csv(const std::string& path, std::span<const SizePoint> points) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out << "class_id,distance_m,diameter_px\n";
  out.precision(17);
  for (const SizePoint& p : points) out << p.class_id << ',' << p.distance_m << ',' << p.diameter_px << '\n';
}

SizeModel read_size_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad size model JSON: ") + e.what());
  }
  return SizeModel::from_json(j);
}

void write_size_model(const std::string& path, const SizeModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out << model.to_json().dump(1) << '\n';
}

}  // namespace uavmem
