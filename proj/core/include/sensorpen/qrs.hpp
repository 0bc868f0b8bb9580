#pragma once

// Classical R-peak detectors used as baselines: Pan-Tompkins, Hamilton,
// Christov, Elgendi's two moving averages (TMA) and the stationary wavelet
// transform detector of Kalidas and Tamil (SWT).
//
// Returned indices point at maxima of each detector's feature signal, which
// lag the R apex by the front-end group delay. Counting beats per window is
// unaffected.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sensorpen::qrs {

enum class DetectorKind { PanTompkins, Hamilton, Christov, Tma, Swt };

inline constexpr std::array<DetectorKind, 5> kAllDetectors{
    DetectorKind::PanTompkins, DetectorKind::Hamilton, DetectorKind::Christov, DetectorKind::Tma,
    DetectorKind::Swt};

std::string_view to_string(DetectorKind kind) noexcept;
std::optional<DetectorKind> detector_from_string(std::string_view name) noexcept;

struct DetectionResult {
  std::vector<std::size_t> peak_indices;
  DetectorKind detector = DetectorKind::PanTompkins;
};

// Minimum spacing between reported peaks.
double refractory_s(DetectorKind kind) noexcept;

// Adaptive thresholds are seeded from the first two seconds.
inline constexpr double kLearningPeriodS = 2.0;

// All detectors throw BadRate for fs <= 0 and SignalTooShort when fewer than
// kLearningPeriodS * fs samples are given.
DetectionResult detect_pan_tompkins(std::span<const double> x, double fs);
DetectionResult detect_hamilton(std::span<const double> x, double fs);
DetectionResult detect_christov(std::span<const double> x, double fs);
DetectionResult detect_tma(std::span<const double> x, double fs);
DetectionResult detect_swt(std::span<const double> x, double fs);

DetectionResult detect(DetectorKind kind, std::span<const double> x, double fs);
DetectionResult detect(DetectorKind kind, std::span<const int> x, double fs);

}  // namespace sensorpen::qrs
