#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "sensorpen/ecg_pipeline.hpp"
#include "sensorpen/error.hpp"
#include "sensorpen/wfdb.hpp"
#include "test_support.hpp"

namespace sp = sensorpen;
using namespace sensorpen::ecg;

namespace {

sp::wfdb::EcgRecord ramp_record(std::size_t n, double fs, std::vector<std::size_t> peaks) {
  sp::wfdb::EcgRecord r;
  r.name = "ramp";
  r.sample_rate = fs;
  for (std::size_t i = 0; i < n; ++i) r.samples.push_back(static_cast<int>(i));
  r.peak_indices = std::move(peaks);
  return r;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Downsample, StrideArithmetic) {
  const auto r = downsample(ramp_record(10, 360.0, {12 % 10}), 72.0);
  EXPECT_EQ(r.samples, (std::vector<int>{0, 5}));
  EXPECT_EQ(r.sample_rate, 72.0);
  EXPECT_EQ(r.source_stride, 5u);

  const auto p = downsample(ramp_record(20, 360.0, {12}), 72.0);
  EXPECT_EQ(p.peak_indices, std::vector<std::size_t>{2});

  EXPECT_EQ(downsample(ramp_record(650000, 360.0, {}), 72.0).samples.size(), 130000u);
}

TEST(Downsample, NonIntegerStride) {
  try {
    downsample(ramp_record(100, 250.0, {}), 72.0);
    FAIL();
  } catch (const sp::Error& e) {
    EXPECT_EQ(e.code(), sp::ErrorCode::NonIntegerStride);
  }
}

TEST(Quantize, TruncatesTowardZero) {
  const std::vector<double> v{978.6, -0.4, 12.0, -7.9};
  EXPECT_EQ(quantize(v), (std::vector<int>{978, 0, 12, -7}));
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(quantize(bad), sp::Error);
}

TEST(Quantize, CommutesWithDownsampleOnIntegers) {
  const auto r = sp::wfdb::read_record(sp::testing::wfdb_fixtures().string(), "sur101");
  const auto d = downsample(r, 72.0);
  std::vector<double> as_double(r.samples.begin(), r.samples.end());
  auto q = quantize(as_double);
  auto rq = r;
  rq.samples = q;
  EXPECT_EQ(downsample(rq, 72.0).samples, d.samples);
  std::vector<double> d_double(d.samples.begin(), d.samples.end());
  EXPECT_EQ(quantize(d_double), d.samples);
}

TEST(ExtractQueries, SequentialTiling) {
  const auto r = ramp_record(30 * 72, 72.0, {10, 100, 400, 401, 2000});
  const auto qs = extract_queries(r, ExtractOptions{5.0});
  ASSERT_EQ(qs.size(), 6u);
  for (const auto& q : qs) EXPECT_EQ(q.values.size(), 360u);
  EXPECT_EQ(qs[0].truth_peak_count, 2);
  EXPECT_EQ(qs[1].truth_peak_count, 2);
  EXPECT_EQ(qs[5].truth_peak_count, 1);
  EXPECT_EQ(qs[1].start, 360u);
}

TEST(ExtractQueries, HalfOpenWindowAndHeartRate) {
  const auto r = ramp_record(10 * 72, 72.0, {0, 60, 120, 180, 240, 300, 360});
  const auto qs = extract_queries(r, ExtractOptions{5.0});
  EXPECT_EQ(qs[0].truth_peak_count, 6);
  EXPECT_DOUBLE_EQ(qs[0].truth_hr_bpm, 72.0);
  EXPECT_EQ(qs[1].truth_peak_count, 1);
}

TEST(ExtractQueries, RequiresQueryRateAndFit) {
  EXPECT_THROW(extract_queries(ramp_record(3600, 360.0, {}), ExtractOptions{5.0}), sp::Error);
  try {
    extract_queries(ramp_record(100, 72.0, {}), ExtractOptions{5.0});
    FAIL();
  } catch (const sp::Error& e) {
    EXPECT_EQ(e.code(), sp::ErrorCode::WindowTooLarge);
  }
}

TEST(ExtractQueries, RandomModeIsSeeded) {
  const auto r = downsample(sp::wfdb::read_record(sp::testing::wfdb_fixtures().string(), "sur100"), 72.0);
  ExtractOptions o{5.0, ExtractMode::Random, 42, 10};
  const auto a = extract_queries(r, o);
  const auto b = extract_queries(r, o);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].start, b[i].start);
    EXPECT_EQ(a[i].values, b[i].values);
  }
  o.seed = 43;
  const auto c = extract_queries(r, o);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].start != c[i].start;
  EXPECT_TRUE(differs);
}

TEST(ExtractQueries, TruthMatchesBruteForceScan) {
  const auto src = sp::wfdb::read_record(sp::testing::wfdb_fixtures().string(), "sur106");
  const auto r = downsample(src, 72.0);
  for (double w : {2.5, 5.0, 7.5, 10.0}) {
    for (const auto& q : extract_queries(r, ExtractOptions{w, ExtractMode::Random, 9, 25})) {
      const std::size_t begin = q.start / r.source_stride;
      const std::size_t end = begin + q.values.size();
      int n = 0;
      for (auto p : r.peak_indices) n += p >= begin && p < end;
      ASSERT_EQ(n, q.truth_peak_count);
      ASSERT_DOUBLE_EQ(q.truth_hr_bpm, heart_rate(n, w));
      ASSERT_EQ(q.values.size(), static_cast<std::size_t>(std::llround(w * 72.0)));
    }
  }
}

TEST(HeartRate, Arithmetic) {
  EXPECT_DOUBLE_EQ(heart_rate(6, 5.0), 72.0);
  EXPECT_DOUBLE_EQ(heart_rate(0, 5.0), 0.0);
  for (int k = 0; k < 40; ++k) EXPECT_DOUBLE_EQ(heart_rate(2 * k, 7.5), 2 * heart_rate(k, 7.5));
}

TEST(HeartRate, AppendixExampleWindow) {
  const auto j = nlohmann::json::parse(std::ifstream(sp::testing::pipeline_fixtures() / "appendix_query.json"));
  const auto n = j["values"].size();
  EXPECT_EQ(n, 360u);
  EXPECT_DOUBLE_EQ(heart_rate(6, static_cast<double>(n) / kQueryRate), 72.0);
}

TEST(FormatValues, CommaSpace) {
  const std::vector<int> v{968, 977};
  EXPECT_EQ(format_values(v), "[968, 977]");
  EXPECT_EQ(format_values(std::vector<int>{}), "[]");
}

TEST(QueryJson, RoundTrip) {
  const auto r = downsample(sp::wfdb::read_record(sp::testing::wfdb_fixtures().string(), "sur102"), 72.0);
  const auto q = extract_queries(r, ExtractOptions{5.0}).at(3);
  const auto back = query_from_json(query_to_json(q));
  EXPECT_EQ(back.record, q.record);
  EXPECT_EQ(back.start, q.start);
  EXPECT_EQ(back.values, q.values);
  EXPECT_EQ(back.truth_peak_count, q.truth_peak_count);
}

TEST(RenderFigure, DimensionsAndDeterminism) {
  EcgQuery q;
  q.values = {1, 5, 3, 9, 2, 8};
  const auto a = render_figure(q);
  const auto img = decode_png(a);
  EXPECT_EQ(img.width, 2000);
  EXPECT_EQ(img.height, 500);
  EXPECT_EQ(a, render_figure(q));
  EXPECT_THROW(render_figure(EcgQuery{}), sp::Error);
}

TEST(RenderFigure, ConstantSequenceIsHorizontal) {
  EcgQuery q;
  q.values.assign(360, 977);
  const auto img = decode_png(render_figure(q));
  // Trace colour is (20, 40, 120).
  std::vector<int> rows;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 200; x < 1800; ++x) {
      const auto* p = &img.rgb[3 * (static_cast<std::size_t>(y) * img.width + x)];
      if (p[0] == 20 && p[1] == 40 && p[2] == 120) {
        rows.push_back(y);
        break;
      }
    }
  }
  ASSERT_FALSE(rows.empty());
  EXPECT_LE(rows.back() - rows.front(), 1);
}

TEST(RenderFigure, GoldenImage) {
  const auto j = nlohmann::json::parse(std::ifstream(sp::testing::pipeline_fixtures() / "appendix_query.json"));
  EcgQuery q;
  q.values = j["values"].get<std::vector<int>>();
  const auto golden = read_bytes(sp::testing::fixtures() / "render" / "appendix_query.png");
  const auto expected = decode_png(golden);
  const auto actual = render_raster(q.values);
  ASSERT_EQ(actual.width, expected.width);
  ASSERT_EQ(actual.height, expected.height);
  EXPECT_TRUE(actual.rgb == expected.rgb);
  EXPECT_EQ(render_figure(q), golden);
}
