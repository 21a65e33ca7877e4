#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uavmem/error.hpp"
#include "uavmem/fusion.hpp"
#include "uavmem/geodesy.hpp"
#include "uavmem/io.hpp"

namespace uavmem {
namespace {

const GeoPoint kSite{47.0, 8.0};
const MapSpec kSpec{40.0, 0.5, 0.0, 0.9, 1.0};

MemoryMap filled(const GeoPoint& center, float value, int class_id = 0, const GeoPoint& origin = kSite) {
  MemoryMap m(kSpec, origin, center, class_id);
  for (int r = 0; r < m.size(); ++r)
    for (int c = 0; c < m.size(); ++c) m.at(r, c) = value;
  return m;
}

MemoryMap random_map(std::mt19937_64& rng, const GeoPoint& center, const GeoPoint& origin = kSite) {
  MemoryMap m(kSpec, origin, center, 0);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int r = 0; r < m.size(); ++r)
    for (int c = 0; c < m.size(); ++c) m.at(r, c) = u(rng) < 0.3f ? u(rng) : 0.0f;
  return m;
}

std::vector<float> cells(const MemoryMap& m) { return {m.values().begin(), m.values().end()}; }

TEST(Merge, SingleMapIsRecenteredCopy) {
  std::mt19937_64 rng(1);
  const MemoryMap m = random_map(rng, kSite);
  const GeoPoint target = offset_to_gps({3.2, -4.9}, kSite);
  MemoryMap moved = m;
  moved.recenter(target);
  const std::vector<MemoryMap> maps = {m};
  const MemoryMap out = merge(maps, target, kSpec);
  EXPECT_EQ(out.center_cell(), moved.center_cell());
  EXPECT_EQ(cells(out), cells(moved));
}

TEST(Merge, MeanAndMaxOfTwoCells) {
  const std::vector<MemoryMap> maps = {filled(kSite, 0.4f), filled(kSite, 0.8f)};
  const MemoryMap mean = merge(maps, kSite, kSpec, MergeMode::Mean);
  const MemoryMap max = merge(maps, kSite, kSpec, MergeMode::Max);
  for (float v : mean.values()) ASSERT_NEAR(v, 0.6f, 1e-7);
  for (float v : max.values()) ASSERT_EQ(v, 0.8f);
}

TEST(Merge, PartialCoverageAveragesOverlapOnly) {
  const GeoPoint east = offset_to_gps({30.0, 0.0}, kSite);
  const std::vector<MemoryMap> maps = {filled(kSite, 0.4f), filled(east, 0.8f)};
  const GeoPoint mid = offset_to_gps({15.0, 0.0}, kSite);
  const MemoryMap out = merge(maps, mid, kSpec);
  int zero = 0, only_a = 0, only_b = 0, both = 0;
  for (int r = 0; r < out.size(); ++r)
    for (int c = 0; c < out.size(); ++c) {
      const float v = out.at(r, c);
      ASSERT_EQ(v, oracle::merged_cell(maps, out, r, c));
      zero += v == 0.0f;
      only_a += v == 0.4f;
      only_b += v == 0.8f;
      both += std::fabs(v - 0.6f) < 1e-6f;
    }
  EXPECT_EQ(zero + only_a + only_b + both, out.size() * out.size());
  EXPECT_GT(only_a, 0);
  EXPECT_GT(only_b, 0);
  EXPECT_GT(both, 0);
  EXPECT_EQ(zero, 0);  // windows of edge 40 centred 30 m apart cover the 40 m target
}

TEST(Merge, PermutationSymmetricAndIdempotent) {
  std::mt19937_64 rng(2);
  std::vector<MemoryMap> maps;
  for (int i = 0; i < 4; ++i) maps.push_back(random_map(rng, offset_to_gps({i * 3.0, -i * 2.0}, kSite)));
  const GeoPoint target = offset_to_gps({4.0, -3.0}, kSite);
  for (MergeMode mode : {MergeMode::Mean, MergeMode::Max}) {
    const MemoryMap ref = merge(maps, target, kSpec, mode);
    std::vector<MemoryMap> perm = maps;
    for (int t = 0; t < 6; ++t) {
      std::shuffle(perm.begin(), perm.end(), rng);
      ASSERT_EQ(cells(merge(perm, target, kSpec, mode)), cells(ref));
    }
    const std::vector<MemoryMap> twice = {ref, ref};
    EXPECT_EQ(cells(merge(twice, target, kSpec, mode)), cells(ref));
  }
}

TEST(Merge, MatchesMeanOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  for (int t = 0; t < 30; ++t) {
    const bool shared = t % 2 == 0;
    std::vector<MemoryMap> maps;
    const int k = 1 + int(rng() % 4);
    for (int i = 0; i < k; ++i) {
      const GeoPoint origin = shared ? kSite : offset_to_gps({u(rng), u(rng)}, kSite);
      maps.push_back(random_map(rng, offset_to_gps({u(rng), u(rng)}, kSite), origin));
    }
    const GeoPoint target = offset_to_gps({u(rng), u(rng)}, kSite);
    const MemoryMap out = merge(maps, target, kSpec);
    for (int r = 0; r < out.size(); ++r)
      for (int c = 0; c < out.size(); ++c) ASSERT_NEAR(out.at(r, c), oracle::merged_cell(maps, out, r, c), 1e-6);
  }
}

TEST(Merge, SpecMismatch) {
  const auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  std::vector<MemoryMap> classes = {filled(kSite, 0.1f, 0), filled(kSite, 0.1f, 1)};
  EXPECT_EQ(code([&] { merge(classes, kSite, kSpec); }), ErrorCode::SpecMismatch);
  MapSpec coarse = kSpec;
  coarse.cell_size_m = 1.0;
  std::vector<MemoryMap> cells = {MemoryMap(coarse, kSite, 0)};
  EXPECT_EQ(code([&] { merge(cells, kSite, kSpec); }), ErrorCode::SpecMismatch);
  std::vector<MemoryMap> far = {filled(offset_to_gps({0.0, 81.0}, kSite), 0.1f)};
  EXPECT_EQ(code([&] { merge(far, kSite, kSpec); }), ErrorCode::SpecMismatch);
}

CameraState cam_at(const GeoPoint& p) { return {p.latitude, p.longitude, 60.0, 45.0, 0.0, 2600.0, 3840, 2160}; }

std::vector<StreamFrame> stream(int frames, const GeoPoint& uav, std::int64_t ts_offset, std::uint64_t seed,
                                bool with_detections = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<StreamFrame> out;
  for (int f = 0; f < frames; ++f) {
    StreamFrame s{f, f * 33333 + ts_offset, cam_at(uav), {}};
    if (with_detections) {
      for (int i = 0; i < 6; ++i) {
        const double col = 1920 + (i - 3) * 300 + 6 * u(rng), row = 1500 + 4 * u(rng);
        if (u(rng) < 0.2) continue;
        s.detections.push_back({col - 20, row - 20, col + 20, row + 20, i % 2, 0.2 + 0.5 * u(rng)});
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string dump(const FrameResult& r) { return to_json(r).dump(); }

TEST(RunCooperative, SingleStreamMatchesPipeline) {
  const std::vector<std::vector<StreamFrame>> streams = {stream(60, kSite, 0, 5)};
  CooperativeOptions opt;
  opt.spec = kSpec;
  const auto out = run_cooperative(streams, opt);
  VodPipeline p(kSpec, VodConfig{}, SizeModel{}, kSite);
  ASSERT_EQ(out[0].results.size(), 60u);
  std::size_t finals = 0;
  for (const StreamFrame& f : streams[0]) {
    const FrameResult r = p.process_frame(f.frame_id, f.cam, f.detections);
    ASSERT_EQ(dump(out[0].results[f.frame_id]), dump(r)) << f.frame_id;
    finals += r.final_detections.size();
  }
  EXPECT_GT(finals, 0u);
}

TEST(RunCooperative, SilentSecondUavChangesNothing) {
  CooperativeOptions opt;
  opt.spec = kSpec;
  const std::vector<std::vector<StreamFrame>> one = {stream(60, kSite, 0, 6)};
  const GeoPoint b = offset_to_gps({10.0, 0.0}, kSite);
  const std::vector<std::vector<StreamFrame>> two = {one[0], stream(60, b, 400, 0, false)};
  const auto a = run_cooperative(one, opt);
  const auto ab = run_cooperative(two, opt);
  ASSERT_EQ(ab.size(), 2u);
  for (std::size_t i = 0; i < a[0].results.size(); ++i) {
    ASSERT_EQ(dump(a[0].results[i]), dump(ab[0].results[i]));
    ASSERT_EQ(a[0].track_ids[i], ab[0].track_ids[i]);
    ASSERT_TRUE(ab[1].results[i].final_detections.empty());
  }
}

TEST(RunCooperative, ClockSkewBeyondTolerance) {
  CooperativeOptions opt;
  opt.spec = kSpec;
  const std::vector<std::vector<StreamFrame>> ok = {stream(5, kSite, 0, 1), stream(5, kSite, 49000, 2)};
  EXPECT_NO_THROW(run_cooperative(ok, opt));
  const std::vector<std::vector<StreamFrame>> skewed = {stream(5, kSite, 0, 1), stream(5, kSite, 1000000, 2)};
  try {
    run_cooperative(skewed, opt);
    FAIL() << "expected ClockSkew";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClockSkew);
  }
}

TEST(RunCooperative, Deterministic) {
  CooperativeOptions opt;
  opt.spec = kSpec;
  const std::vector<std::vector<StreamFrame>> s = {stream(40, kSite, 0, 7),
                                                   stream(40, offset_to_gps({-8.0, 0.0}, kSite), 3000, 8)};
  const auto x = run_cooperative(s, opt), y = run_cooperative(s, opt);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < x[k].results.size(); ++i) {
      ASSERT_EQ(dump(x[k].results[i]), dump(y[k].results[i]));
      ASSERT_EQ(x[k].track_ids[i], y[k].track_ids[i]);
    }
}

}  // namespace
}  // namespace uavmem
