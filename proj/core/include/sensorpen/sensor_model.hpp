#pragma once

// Activity-sensing domain types and the preprocessing that reduces raw
// smartphone channels (accelerometer, GNSS, WiFi) to short text fields.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace sensorpen::sensor {

struct Acceleration {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Triaxial accelerometer capture. Validated on construction.
class AccelerometerTrace {
 public:
  // Throws BadRate if sample_rate <= 0, EmptyTrace if samples is empty,
  // InvalidArgument if duration_s disagrees with the sample count by more
  // than one sample.
  AccelerometerTrace(double sample_rate, std::vector<Acceleration> samples,
                     std::optional<double> duration_s = std::nullopt);

  double sample_rate() const noexcept { return sample_rate_; }
  const std::vector<Acceleration>& samples() const noexcept { return samples_; }
  double duration_s() const noexcept { return duration_s_; }

 private:
  double sample_rate_;
  std::vector<Acceleration> samples_;
  double duration_s_;
};

struct StepSummary {
  double steps_per_minute = 0.0;
};

struct SatelliteMeasurement {
  int prn = 1;
  double cn0 = 0.0;  // dB-Hz
};

struct SatelliteSummary {
  int count = 0;
  std::optional<double> avg_cn0;  // absent iff count == 0
};

struct WifiAp {
  std::string ssid;
  int rssi = 0;  // dBm
};

enum class Motion { Stationary, Walking };
enum class Environment { Indoors, Outdoors };

std::string_view to_string(Motion m) noexcept;
std::string_view to_string(Environment e) noexcept;
std::optional<Motion> motion_from_string(std::string_view s) noexcept;
std::optional<Environment> environment_from_string(std::string_view s) noexcept;

struct GroundTruth {
  Motion motion = Motion::Stationary;
  Environment environment = Environment::Indoors;
  std::optional<std::string> location_text;
  std::optional<bool> ssid_informative;
};

struct SensorSnapshot {
  std::string id;
  StepSummary step;
  SatelliteSummary satellites;
  std::vector<WifiAp> wifi;  // already RSSI-filtered
  double window_s = 10.0;
  GroundTruth labels;
};

// Placeholder name -> replacement text.
using FieldMap = std::map<std::string, std::string>;

inline constexpr int kDefaultRssiThresholdDbm = -70;
inline constexpr double kGravity = 9.81;

// Step rate from peaks of the low-passed, gravity-removed acceleration
// magnitude (2nd-order Butterworth at 3 Hz, prominence >= 1.5 m/s^2,
// peaks at least 0.3 s apart).
StepSummary count_steps(const AccelerometerTrace& trace);

SatelliteSummary summarize_satellites(const std::vector<SatelliteMeasurement>& measurements);

// Drops APs whose RSSI is strictly below the threshold; order preserved.
std::vector<WifiAp> filter_wifi(const std::vector<WifiAp>& aps,
                                int threshold_dbm = kDefaultRssiThresholdDbm);

// DATA_STEP, DATA_SATELLITE_COUNT, DATA_SATELLITE_SNR, DATA_WIFI_COUNT,
// DATA_WIFI_LIST.
FieldMap textualize(const SensorSnapshot& snapshot);

// Shortest decimal text that round-trips (5.2 -> "5.2", 5.0 -> "5").
std::string format_decimal(double value);

// ['a', 'b'] with SSIDs emitted verbatim.
std::string format_ssid_list(const std::vector<WifiAp>& aps);

// Snapshot dataset rows. Raw satellite and WiFi arrays are summarised and
// filtered while parsing. The optional "id" defaults to `fallback_id`.
SensorSnapshot snapshot_from_json(const nlohmann::json& row, const std::string& fallback_id);
std::vector<SensorSnapshot> read_snapshots(const std::string& path);

}  // namespace sensorpen::sensor
