#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uavmem/error.hpp"
#include "uavmem/size_filter.hpp"

namespace uavmem {
namespace {

std::vector<SizePoint> linear_points(std::size_t n, double a, double b, double noise, std::uint64_t seed,
                                     double lo = 20.0, double hi = 150.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::normal_distribution<double> eps(0.0, noise);
  std::vector<SizePoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = dist(rng);
    pts.push_back({d, a * d + b + (noise > 0.0 ? eps(rng) : 0.0), 0});
  }
  return pts;
}

GeoDetection sized(double diameter_px, double distance_m, int class_id = 0) {
  const double side = diameter_px / std::sqrt(2.0);
  GeoDetection g;
  g.detection = {100.0, 100.0, 100.0 + side, 100.0 + side, class_id, 0.7};
  g.slant_distance_m = distance_m;
  g.position = GeoPoint{0.0, 0.0};
  return g;
}

TEST(SizeModel, ConstantDataRecoversConstant) {
  std::vector<SizePoint> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({20.0 + 2.0 * i, 40.0, 0});
  const auto m = ClassSizeModel::fit(pts, SizeModelParams{});
  for (double d : {25.0, 60.0, 100.0, 130.0}) {
    const auto p = m.predict(d);
    EXPECT_NEAR(p.mean, 40.0, 1e-9);
    // Dense data: posterior variance approaches the observation noise.
    EXPECT_NEAR(std::sqrt(p.variance), 2.0, 0.1);
  }
}

TEST(SizeModel, ConstantDataBandIsNoiseWidth) {
  std::vector<SizePoint> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({20.0 + 2.0 * i, 40.0, 0});
  const auto m = ClassSizeModel::fit(pts, SizeModelParams{});
  const SizeBand band = m.accepted_band(80.0);
  ASSERT_FALSE(band.pass_through);
  const double sd = std::sqrt(m.predict(80.0).variance);
  EXPECT_NEAR(band.min_px, 40.0 - 1.5 * sd, 0.05);
  EXPECT_NEAR(band.max_px, 40.0 + 1.5 * sd, 0.05);
  EXPECT_DOUBLE_EQ(m.band_scale(80.0), 1.0);
}

TEST(SizeModel, LinearDataWithinTwoPercent) {
  const auto pts = linear_points(200, -0.3, 80.0, 0.0, 7);
  const auto m = ClassSizeModel::fit(pts, SizeModelParams{});
  for (double d = 25.0; d <= 145.0; d += 5.0) {
    const double want = -0.3 * d + 80.0;
    EXPECT_NEAR(m.predict(d).mean, want, 0.02 * want) << "d=" << d;
  }
}

TEST(SizeModel, MatchesDirectPosteriorOnTwentyPoints) {
  const auto pts = linear_points(20, -0.2, 60.0, 1.0, 11);
  SizeModelParams params;
  params.amplitude_px = 8.0;
  const auto m = ClassSizeModel::fit(pts, params);
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    xs.push_back(p.distance_m);
    ys.push_back(p.diameter_px);
  }
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  for (double at : {15.0, 42.0, 77.7, 120.0, 200.0}) {
    const auto want = oracle::gp_posterior(xs, ys, 20.0, 8.0, 2.0, mean, at);
    const auto got = m.predict(at);
    EXPECT_NEAR(got.mean, double(want.mean), 1e-9);
    EXPECT_NEAR(got.variance, double(want.variance), 1e-9);
  }
}

TEST(SizeModel, InterpolatesTrainingTargetWithTinyNoise) {
  const auto pts = linear_points(15, 0.1, 30.0, 0.5, 3);
  SizeModelParams params;
  params.noise_std_px = 1e-3;
  params.length_scale_m = 5.0;
  const auto m = ClassSizeModel::fit(pts, params);
  for (const auto& p : pts) EXPECT_NEAR(m.predict(p.distance_m).mean, p.diameter_px, 0.05);
}

TEST(SizeModel, InsufficientData) {
  const auto pts = linear_points(9, 0.0, 30.0, 1.0, 1);
  EXPECT_THROW(ClassSizeModel::fit(pts, SizeModelParams{}), Error);
  try {
    ClassSizeModel::fit(pts, SizeModelParams{});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(SizeModel, RejectsNonPositivePoints) {
  auto pts = linear_points(20, 0.0, 30.0, 1.0, 1);
  pts[3].diameter_px = -1.0;
  EXPECT_THROW(ClassSizeModel::fit(pts, SizeModelParams{}), Error);
}

TEST(SizeModel, SubsamplesLargeTrainingSets) {
  const auto pts = linear_points(5000, -0.3, 80.0, 2.0, 5);
  const auto m = ClassSizeModel::fit(pts, SizeModelParams{});
  EXPECT_EQ(m.points().size(), 2000u);
  EXPECT_TRUE(std::is_sorted(m.points().begin(), m.points().end(),
                             [](const SizePoint& a, const SizePoint& b) { return a.distance_m < b.distance_m; }));
}

TEST(SizeBand, ContainsMeanAndPassesThroughOutsideRange) {
  const auto pts = linear_points(300, -0.3, 80.0, 2.0, 9);
  const auto m = ClassSizeModel::fit(pts, SizeModelParams{});
  for (double d = m.range_lo(); d <= m.range_hi(); d += 3.7) {
    const SizeBand b = m.accepted_band(d);
    ASSERT_FALSE(b.pass_through);
    EXPECT_GE(b.min_px, 1.0);
    EXPECT_TRUE(b.contains(std::max(1.0, m.predict(d).mean))) << d;
  }
  EXPECT_TRUE(m.accepted_band(m.range_lo() * 0.99).pass_through);
  EXPECT_TRUE(m.accepted_band(m.range_hi() * 1.01).pass_through);
  EXPECT_TRUE(m.accepted_band(m.range_hi() * 1.01).contains(1e9));
}

TEST(SizeBand, HeldOutCoverageAndOversizedRejection) {
  const auto train = linear_points(1500, -0.3, 80.0, 2.0, 21);
  const auto model = SizeModel::fit(train, SizeModelParams{});
  const auto held = linear_points(2000, -0.3, 80.0, 2.0, 22);
  std::size_t inside = 0, rejected = 0;
  for (const auto& p : held) {
    inside += model.accepted_band(0, p.distance_m).contains(p.diameter_px);
    rejected += !model.accepted_band(0, p.distance_m).contains(3.0 * (-0.3 * p.distance_m + 80.0));
  }
  EXPECT_GE(inside, 0.99 * held.size());
  EXPECT_EQ(rejected, held.size());
}

TEST(SizeBand, MonotoneInK) {
  const auto train = linear_points(400, -0.3, 80.0, 2.0, 31);
  SizeModelParams narrow, wide;
  narrow.band_k = 1.0;
  wide.band_k = 2.5;
  const auto a = SizeModel::fit(train, narrow), b = SizeModel::fit(train, wide);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(5.0, 320.0), diam(1.0, 120.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = d(rng), y = diam(rng);
    if (a.accepted_band(0, x).contains(y)) EXPECT_TRUE(b.accepted_band(0, x).contains(y));
  }
}

TEST(SizeFilter, EmptyAndPureSelection) {
  const auto model = SizeModel::fit(linear_points(300, -0.3, 80.0, 2.0, 2), SizeModelParams{});
  EXPECT_TRUE(filter({}, model).kept.empty());
  EXPECT_TRUE(filter({}, model).discarded.empty());

  const std::vector<GeoDetection> dets = {sized(56.0, 80.0), sized(200.0, 80.0), sized(3.0, 80.0),
                                          sized(500.0, 1000.0), sized(56.0, 80.0, 3)};
  const auto r = filter(dets, model);
  ASSERT_EQ(r.kept.size(), 3u);
  ASSERT_EQ(r.discarded.size(), 2u);
  EXPECT_EQ(r.kept[0].detection, dets[0].detection);
  EXPECT_EQ(r.kept[1].detection, dets[3].detection);  // outside range: pass-through
  EXPECT_EQ(r.kept[2].detection, dets[4].detection);  // unknown class: pass-through
  EXPECT_EQ(r.discarded[0].reason, DiscardReason::TooLarge);
  EXPECT_EQ(r.discarded[1].reason, DiscardReason::TooSmall);
}

TEST(SizeModel, JsonRoundTripRefits) {
  auto pts = linear_points(120, -0.3, 80.0, 2.0, 8);
  auto more = linear_points(50, 0.1, 20.0, 1.0, 9);
  for (auto& p : more) p.class_id = 2;
  pts.insert(pts.end(), more.begin(), more.end());
  const auto model = SizeModel::fit(pts, SizeModelParams{});
  const auto back = SizeModel::from_json(model.to_json());
  ASSERT_TRUE(back.has_class(0));
  ASSERT_TRUE(back.has_class(2));
  for (double d : {30.0, 70.0, 140.0}) {
    EXPECT_EQ(back.at(0).predict(d).mean, model.at(0).predict(d).mean);
    EXPECT_EQ(back.accepted_band(2, d).max_px, model.accepted_band(2, d).max_px);
  }
}

TEST(SizeModel, CsvRoundTrip) {
  const auto pts = linear_points(30, -0.3, 80.0, 2.0, 8);
  const auto path = std::filesystem::temp_directory_path() / "uavmem_size_points.csv";
  write_size_points_csv(path.string(), pts);
  const auto back = read_size_points_csv(path.string());
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(back[i].distance_m, pts[i].distance_m);
    EXPECT_EQ(back[i].diameter_px, pts[i].diameter_px);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace uavmem
