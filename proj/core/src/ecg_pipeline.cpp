#include "sensorpen/ecg_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sensorpen/error.hpp"

namespace sensorpen::ecg {

wfdb::EcgRecord downsample(const wfdb::EcgRecord& record, double target_fs) {
  if (!(record.sample_rate > 0.0) || !(target_fs > 0.0)) {
    throw Error(ErrorCode::BadRate, "sample rates must be positive");
  }
  const double ratio = record.sample_rate / target_fs;
  const double stride_r = std::round(ratio);
  if (stride_r < 1.0 || std::abs(ratio - stride_r) > 1e-9) {
    throw Error(ErrorCode::NonIntegerStride, "cannot decimate " + std::to_string(record.sample_rate) +
                                                 " Hz to " + std::to_string(target_fs) + " Hz");
  }
  const auto stride = static_cast<std::size_t>(stride_r);
  wfdb::EcgRecord out;
  out.name = record.name;
  out.sample_rate = target_fs;
  out.source_stride = record.source_stride * stride;
  out.samples.reserve(record.samples.size() / stride + 1);
  for (std::size_t i = 0; i < record.samples.size(); i += stride) out.samples.push_back(record.samples[i]);
  out.peak_indices.reserve(record.peak_indices.size());
  for (std::size_t p : record.peak_indices) {
    const std::size_t m = p / stride;
    if (out.peak_indices.empty() || out.peak_indices.back() != m) out.peak_indices.push_back(m);
  }
  return out;
}

std::vector<int> quantize(std::span<const double> values) {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "cannot quantize a non-finite value");
    const double t = std::trunc(v);
    if (t < std::numeric_limits<int>::min() || t > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::InvalidArgument, "value outside the integer range");
    }
    out.push_back(static_cast<int>(t));
  }
  return out;
}

double heart_rate(int peak_count, double window_s) {
  if (!(window_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  return static_cast<double>(peak_count) * 60.0 / window_s;
}

std::vector<EcgQuery> extract_windows(const wfdb::EcgRecord& record, const ExtractOptions& options) {
  if (!(options.window_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  const auto n = static_cast<std::size_t>(std::llround(options.window_s * record.sample_rate));
  const std::size_t total = record.samples.size();
  if (n == 0 || n > total) {
    throw Error(ErrorCode::WindowTooLarge, std::to_string(options.window_s) + " s window does not fit in " +
                                               record.name);
  }
  const std::size_t tiles = total / n;
  const std::size_t count = options.count.value_or(tiles);

  std::vector<std::size_t> starts;
  if (options.mode == ExtractMode::Sequential) {
    if (count > tiles) {
      throw Error(ErrorCode::WindowTooLarge, "record holds only " + std::to_string(tiles) + " windows");
    }
    for (std::size_t k = 0; k < count; ++k) starts.push_back(k * n);
  } else {
    // mt19937_64 output is fixed by the standard; the modulo mapping keeps
    // draws identical across standard library implementations.
    std::mt19937_64 rng(options.seed);
    const std::uint64_t span = total - n + 1;
    for (std::size_t k = 0; k < count; ++k) starts.push_back(static_cast<std::size_t>(rng() % span));
  }

  std::vector<EcgQuery> out;
  out.reserve(starts.size());
  for (std::size_t s : starts) {
    EcgQuery q;
    q.record = record.name;
    q.start = s * record.source_stride;
    q.window_s = options.window_s;
    q.fs = record.sample_rate;
    q.values.assign(record.samples.begin() + static_cast<std::ptrdiff_t>(s),
                    record.samples.begin() + static_cast<std::ptrdiff_t>(s + n));
    const auto lo = std::lower_bound(record.peak_indices.begin(), record.peak_indices.end(), s);
    const auto hi = std::lower_bound(lo, record.peak_indices.end(), s + n);
    q.truth_peak_count = static_cast<int>(hi - lo);
    q.truth_hr_bpm = heart_rate(q.truth_peak_count, q.window_s);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<EcgQuery> extract_queries(const wfdb::EcgRecord& record, const ExtractOptions& options) {
  if (std::abs(record.sample_rate - kQueryRate) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "queries are cut from 72 Hz records; downsample first");
  }
  return extract_windows(record, options);
}

std::string format_values(std::span<const int> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  out += ']';
  return out;
}

nlohmann::json query_to_json(const EcgQuery& q) {
  return nlohmann::json{{"record", q.record},         {"start", q.start},
                        {"window_s", q.window_s},     {"fs", q.fs},
                        {"values", q.values},         {"truth_peaks", q.truth_peak_count},
                        {"truth_hr", q.truth_hr_bpm}};
}

EcgQuery query_from_json(const nlohmann::json& j) {
  try {
    EcgQuery q;
    q.record = j.at("record").get<std::string>();
    q.start = j.at("start").get<std::size_t>();
    q.window_s = j.at("window_s").get<double>();
    q.fs = j.value("fs", kQueryRate);
    q.values = j.at("values").get<std::vector<int>>();
    q.truth_peak_count = j.at("truth_peaks").get<int>();
    q.truth_hr_bpm = j.at("truth_hr").get<double>();
    const auto expected = static_cast<std::size_t>(std::llround(q.window_s * q.fs));
    if (q.values.size() != expected) {
      throw Error(ErrorCode::InvalidArgument, "query length does not match window_s");
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad query row: ") + e.what());
  }
}

}  // namespace sensorpen::ecg
