#pragma once

// ECG preparation: stride decimation, integer quantization, windowing into
// queries, heart-rate conversion and figure rendering.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sensorpen/wfdb.hpp"

namespace sensorpen::ecg {

inline constexpr double kQueryRate = 72.0;

struct EcgQuery {
  std::string record;
  std::size_t start = 0;  // first sample, source-rate index
  double window_s = 5.0;
  double fs = kQueryRate;
  std::vector<int> values;
  int truth_peak_count = 0;
  double truth_hr_bpm = 0.0;
};

// Keeps every (fs / target_fs)-th sample from index 0; peaks map to
// index / stride. Throws NonIntegerStride.
wfdb::EcgRecord downsample(const wfdb::EcgRecord& record, double target_fs = kQueryRate);

// Integer part of each value (truncation toward zero). Throws NonFinite.
std::vector<int> quantize(std::span<const double> values);

enum class ExtractMode { Sequential, Random };

struct ExtractOptions {
  double window_s = 5.0;
  ExtractMode mode = ExtractMode::Sequential;
  std::uint64_t seed = 0;
  std::optional<std::size_t> count;  // default: every tile (sequential) or 1 (random)
};

// Windows of round(window_s * fs) samples at the record's own rate.
// Throws WindowTooLarge.
std::vector<EcgQuery> extract_windows(const wfdb::EcgRecord& record, const ExtractOptions& options);

// extract_windows restricted to 72 Hz records (InvalidArgument otherwise).
std::vector<EcgQuery> extract_queries(const wfdb::EcgRecord& record, const ExtractOptions& options);

double heart_rate(int peak_count, double window_s);

// "[v1, v2, ..., vn]"
std::string format_values(std::span<const int> values);

nlohmann::json query_to_json(const EcgQuery& q);
EcgQuery query_from_json(const nlohmann::json& j);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

inline constexpr int kFigureWidth = 2000;
inline constexpr int kFigureHeight = 500;

// Line plot of the values against sample index with labelled axes.
// Throws EmptyQuery.
Image render_raster(std::span<const int> values);
std::vector<std::uint8_t> render_figure(const EcgQuery& query);

// 8-bit RGB PNG, no interlacing, single IDAT.
std::vector<std::uint8_t> encode_png(const Image& image);
// Decoder for 8-bit RGB, non-interlaced PNGs (enough for images written by
// encode_png). Throws InvalidArgument.
Image decode_png(std::span<const std::uint8_t> bytes);

}  // namespace sensorpen::ecg
