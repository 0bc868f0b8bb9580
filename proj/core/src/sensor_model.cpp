#include "sensorpen/sensor_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "sensorpen/dsp.hpp"
#include "sensorpen/error.hpp"

namespace sensorpen::sensor {

AccelerometerTrace::AccelerometerTrace(double sample_rate, std::vector<Acceleration> samples,
                                       std::optional<double> duration_s)
    : sample_rate_(sample_rate), samples_(std::move(samples)), duration_s_(0.0) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw Error(ErrorCode::BadRate, "accelerometer sample rate must be positive");
  }
  if (samples_.empty()) throw Error(ErrorCode::EmptyTrace, "accelerometer trace has no samples");
  const double implied = static_cast<double>(samples_.size()) / sample_rate_;
  if (duration_s) {
    const double expected = std::round(sample_rate_ * *duration_s);
    if (std::abs(expected - static_cast<double>(samples_.size())) > 1.0) {
      throw Error(ErrorCode::InvalidArgument, "duration does not match the sample count");
    }
    duration_s_ = *duration_s;
  } else {
    duration_s_ = implied;
  }
}

std::string_view to_string(Motion m) noexcept {
  return m == Motion::Walking ? "walking" : "stationary";
}

std::string_view to_string(Environment e) noexcept {
  return e == Environment::Outdoors ? "outdoors" : "indoors";
}

std::optional<Motion> motion_from_string(std::string_view s) noexcept {
  if (s == "stationary") return Motion::Stationary;
  if (s == "walking") return Motion::Walking;
  return std::nullopt;
}

std::optional<Environment> environment_from_string(std::string_view s) noexcept {
  if (s == "indoors") return Environment::Indoors;
  if (s == "outdoors") return Environment::Outdoors;
  return std::nullopt;
}

namespace {

constexpr double kStepLowPassHz = 3.0;
constexpr double kMinProminence = 1.5;
constexpr double kMinGapS = 0.3;

std::vector<double> prominences(const std::vector<double>& x, const std::vector<std::size_t>& peaks) {
  std::vector<double> out;
  out.reserve(peaks.size());
  for (std::size_t p : peaks) {
    double left_min = x[p];
    for (std::size_t i = p; i-- > 0;) {
      if (x[i] > x[p]) break;
      left_min = std::min(left_min, x[i]);
    }
    double right_min = x[p];
    for (std::size_t i = p + 1; i < x.size(); ++i) {
      if (x[i] > x[p]) break;
      right_min = std::min(right_min, x[i]);
    }
    out.push_back(x[p] - std::max(left_min, right_min));
  }
  return out;
}

}  // namespace

StepSummary count_steps(const AccelerometerTrace& trace) {
  const double fs = trace.sample_rate();
  if (fs <= 2.0 * kStepLowPassHz) {
    throw Error(ErrorCode::BadRate, "sample rate too low for the 3 Hz step filter");
  }
  if (trace.duration_s() < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "step counting needs at least 1 s of data");
  }
  std::vector<double> magnitude;
  magnitude.reserve(trace.samples().size());
  for (const auto& s : trace.samples()) {
    magnitude.push_back(std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z) - kGravity);
  }
  const std::array<double, 1> cutoff{kStepLowPassHz};
  const auto smoothed = dsp::lfilter(dsp::butterworth(2, dsp::FilterType::LowPass, cutoff, fs),
                                     magnitude);

  const auto maxima = dsp::local_maxima(smoothed);
  const auto prom = prominences(smoothed, maxima);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    if (prom[i] >= kMinProminence) candidates.push_back(maxima[i]);
  }
  // Enforce the minimum gap, keeping taller peaks first.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return smoothed[candidates[a]] > smoothed[candidates[b]];
  });
  const auto min_gap = static_cast<std::size_t>(std::ceil(kMinGapS * fs));
  std::vector<bool> removed(candidates.size(), false);
  std::size_t steps = 0;
  for (std::size_t k : order) {
    if (removed[k]) continue;
    ++steps;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (j == k || removed[j]) continue;
      const std::size_t gap = candidates[j] > candidates[k] ? candidates[j] - candidates[k]
                                                           : candidates[k] - candidates[j];
      if (gap < min_gap) removed[j] = true;
    }
    removed[k] = true;
  }
  return StepSummary{static_cast<double>(steps) * 60.0 / trace.duration_s()};
}

SatelliteSummary summarize_satellites(const std::vector<SatelliteMeasurement>& measurements) {
  SatelliteSummary out;
  out.count = static_cast<int>(measurements.size());
  if (!measurements.empty()) {
    double sum = 0.0;
    for (const auto& m : measurements) sum += m.cn0;
    out.avg_cn0 = sum / static_cast<double>(measurements.size());
  }
  return out;
}

std::vector<WifiAp> filter_wifi(const std::vector<WifiAp>& aps, int threshold_dbm) {
  std::vector<WifiAp> out;
  std::copy_if(aps.begin(), aps.end(), std::back_inserter(out),
               [threshold_dbm](const WifiAp& ap) { return ap.rssi >= threshold_dbm; });
  return out;
}

std::string format_decimal(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf.data(), ptr);
}

std::string format_ssid_list(const std::vector<WifiAp>& aps) {
  std::string out = "[";
  for (std::size_t i = 0; i < aps.size(); ++i) {
    if (i) out += ", ";
    out += '\'';
    out += aps[i].ssid;
    out += '\'';
  }
  out += ']';
  return out;
}

FieldMap textualize(const SensorSnapshot& snapshot) {
  char snr[64];
  std::snprintf(snr, sizeof snr, "%.2f", snapshot.satellites.avg_cn0.value_or(0.0));
  return FieldMap{
      {"DATA_STEP", format_decimal(snapshot.step.steps_per_minute)},
      {"DATA_SATELLITE_COUNT", std::to_string(snapshot.satellites.count)},
      {"DATA_SATELLITE_SNR", snr},
      {"DATA_WIFI_COUNT", std::to_string(snapshot.wifi.size())},
      {"DATA_WIFI_LIST", format_ssid_list(snapshot.wifi)},
  };
}

SensorSnapshot snapshot_from_json(const nlohmann::json& row, const std::string& fallback_id) {
  try {
    SensorSnapshot s;
    s.id = row.contains("id") ? row.at("id").get<std::string>() : fallback_id;
    s.step.steps_per_minute = row.at("step_per_min").get<double>();
    if (!(s.step.steps_per_minute >= 0.0) || !std::isfinite(s.step.steps_per_minute)) {
      throw Error(ErrorCode::InvalidArgument, "step_per_min must be finite and >= 0");
    }
    std::vector<SatelliteMeasurement> sats;
    for (const auto& sat : row.at("satellites")) {
      SatelliteMeasurement m{sat.at("prn").get<int>(), sat.at("cn0").get<double>()};
      if (m.prn < 1 || !std::isfinite(m.cn0)) {
        throw Error(ErrorCode::InvalidArgument, "satellite needs prn >= 1 and finite cn0");
      }
      sats.push_back(m);
    }
    s.satellites = summarize_satellites(sats);
    std::vector<WifiAp> aps;
    for (const auto& ap : row.at("wifi")) {
      aps.push_back(WifiAp{ap.at("ssid").get<std::string>(), ap.at("rssi").get<int>()});
    }
    s.wifi = filter_wifi(aps);
    s.window_s = row.at("window_s").get<double>();
    if (!(s.window_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "window_s must be positive");

    const auto& labels = row.at("labels");
    const auto motion = motion_from_string(labels.at("motion").get<std::string>());
    const auto env = environment_from_string(labels.at("environment").get<std::string>());
    if (!motion || !env) throw Error(ErrorCode::InvalidArgument, "unknown label value");
    s.labels.motion = *motion;
    s.labels.environment = *env;
    if (labels.contains("location_text") && !labels["location_text"].is_null()) {
      s.labels.location_text = labels["location_text"].get<std::string>();
    }
    if (labels.contains("ssid_informative") && !labels["ssid_informative"].is_null()) {
      s.labels.ssid_informative = labels["ssid_informative"].get<bool>();
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad snapshot row: ") + e.what());
  }
}

std::vector<SensorSnapshot> read_snapshots(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<SensorSnapshot> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(snapshot_from_json(row, "snap-" + std::to_string(lineno)));
  }
  return out;
}

}  // namespace sensorpen::sensor
