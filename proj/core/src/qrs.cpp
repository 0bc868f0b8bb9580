#include "sensorpen/qrs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>

#include "sensorpen/dsp.hpp"
#include "sensorpen/error.hpp"

namespace sensorpen::qrs {
namespace {

using dsp::FilterType;

constexpr double kTwaveWindowS = 0.36;

std::size_t samples_for(double seconds, double fs) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds * fs)));
}

// Validates input and removes the first sample's offset so filter start-up
// transients do not depend on the DC level.
std::vector<double> prepare(std::span<const double> x, double fs) {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw Error(ErrorCode::BadRate, "sampling rate must be positive");
  if (static_cast<double>(x.size()) < kLearningPeriodS * fs) {
    throw Error(ErrorCode::SignalTooShort, "detectors need at least 2 s of signal");
  }
  std::vector<double> out(x.begin(), x.end());
  const double offset = out.front();
  for (double& v : out) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "signal contains non-finite samples");
    v -= offset;
  }
  return out;
}

std::vector<double> bandpass(std::span<const double> x, int order, double lo, double hi, double fs) {
  const std::array<double, 2> edges{lo, hi};
  return dsp::lfilter(dsp::butterworth(order, FilterType::BandPass, edges, fs), x);
}

double max_abs(std::span<const double> x, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i <= to && i < x.size(); ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

// Keeps the earliest peak of any cluster closer than `min_gap` samples.
std::vector<std::size_t> enforce_spacing(std::vector<std::size_t> peaks, std::size_t min_gap) {
  std::sort(peaks.begin(), peaks.end());
  std::vector<std::size_t> out;
  for (std::size_t p : peaks) {
    if (out.empty() || p - out.back() >= min_gap) out.push_back(p);
  }
  return out;
}

double mean_of(std::span<const double> x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Dual-threshold peak classification shared by Pan-Tompkins and SWT.
// `slope` (optional) enables the T-wave test over `slope_window` samples.
std::vector<std::size_t> pan_peak_detect(std::span<const double> det, double fs, std::size_t refractory,
                                         std::span<const double> slope, std::size_t slope_window) {
  const std::size_t learn = std::min(det.size(), samples_for(kLearningPeriodS, fs));
  double spki = *std::max_element(det.begin(), det.begin() + static_cast<std::ptrdiff_t>(learn)) / 3.0;
  double npki = mean_of(det.subspan(0, learn)) / 2.0;
  double thr1 = npki + 0.25 * (spki - npki);
  double thr2 = 0.5 * thr1;
  const auto twave_gap = samples_for(kTwaveWindowS, fs);

  std::vector<std::size_t> qrs;
  std::vector<std::size_t> maxima;
  double last_slope = 0.0;
  std::size_t rr_missed = 0;

  for (std::size_t i = 1; i + 1 < det.size(); ++i) {
    if (!(det[i - 1] < det[i] && det[i + 1] < det[i])) continue;
    const std::size_t peak = i;
    maxima.push_back(peak);
    const bool clear = qrs.empty() || peak - qrs.back() > refractory;
    bool is_qrs = det[peak] > thr1 && clear;
    double peak_slope = 0.0;
    if (is_qrs && !slope.empty()) {
      peak_slope = max_abs(slope, peak >= slope_window ? peak - slope_window : 0, peak);
      if (!qrs.empty() && peak - qrs.back() < twave_gap && peak_slope < 0.5 * last_slope) is_qrs = false;
    }
    if (is_qrs) {
      if (rr_missed > 0 && peak - qrs.back() > rr_missed) {
        // Search back for the largest skipped peak above the lower threshold.
        std::size_t best = 0;
        double best_val = thr2;
        for (std::size_t m : maxima) {
          if (m <= qrs.back() + refractory || m + refractory >= peak) continue;
          if (det[m] > best_val) {
            best_val = det[m];
            best = m;
          }
        }
        if (best != 0) {
          qrs.push_back(best);
          spki = 0.25 * det[best] + 0.75 * spki;
        }
      }
      qrs.push_back(peak);
      spki = 0.125 * det[peak] + 0.875 * spki;
      if (!slope.empty()) last_slope = peak_slope;
    } else {
      npki = 0.125 * det[peak] + 0.875 * npki;
    }
    thr1 = npki + 0.25 * (spki - npki);
    thr2 = 0.5 * thr1;
    if (qrs.size() >= 9) {
      const double rr_ave = static_cast<double>(qrs.back() - qrs[qrs.size() - 9]) / 8.0;
      rr_missed = static_cast<std::size_t>(1.66 * rr_ave);
    }
  }
  return qrs;
}

// Centred moving average, shrinking at the edges.
std::vector<double> centred_average(std::span<const double> x, std::size_t window) {
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  const std::size_t half = window / 2;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), i + (window - half));
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

DetectionResult finish(std::vector<std::size_t> peaks, DetectorKind kind, double fs, std::size_t n) {
  peaks.erase(std::remove_if(peaks.begin(), peaks.end(), [n](std::size_t p) { return p >= n; }), peaks.end());
  return DetectionResult{enforce_spacing(std::move(peaks), samples_for(refractory_s(kind), fs)), kind};
}

}  // namespace

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::PanTompkins: return "pan_tompkins";
    case DetectorKind::Hamilton: return "hamilton";
    case DetectorKind::Christov: return "christov";
    case DetectorKind::Tma: return "tma";
    case DetectorKind::Swt: return "swt";
  }
  return "unknown";
}

std::optional<DetectorKind> detector_from_string(std::string_view name) noexcept {
  for (auto k : kAllDetectors) {
    if (to_string(k) == name) return k;
  }
  if (name == "pt" || name == "pantompkins") return DetectorKind::PanTompkins;
  return std::nullopt;
}

double refractory_s(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::Tma: return 0.3;
    case DetectorKind::Swt: return 0.25;
    default: return 0.2;
  }
}

DetectionResult detect_pan_tompkins(std::span<const double> raw, double fs) {
  const auto x = prepare(raw, fs);
  const std::array<double, 1> lp_edge{15.0};
  const std::array<double, 1> hp_edge{5.0};
  const auto low = dsp::lfilter(dsp::butterworth(2, FilterType::LowPass, lp_edge, fs), x);
  const auto band = dsp::lfilter(dsp::butterworth(2, FilterType::HighPass, hp_edge, fs), low);

  // five-point derivative
  std::vector<double> deriv(band.size(), 0.0);
  for (std::size_t i = 4; i < band.size(); ++i) {
    deriv[i] = (2.0 * band[i] + band[i - 1] - band[i - 3] - 2.0 * band[i - 4]) / 8.0;
  }
  std::vector<double> squared(deriv.size());
  std::transform(deriv.begin(), deriv.end(), squared.begin(), [](double v) { return v * v; });

  const auto window = samples_for(0.15, fs);
  auto mwi = dsp::box_filter(squared, window);
  std::fill_n(mwi.begin(), std::min(mwi.size(), 2 * window), 0.0);

  auto peaks = pan_peak_detect(mwi, fs, samples_for(refractory_s(DetectorKind::PanTompkins), fs), deriv, window);
  return finish(std::move(peaks), DetectorKind::PanTompkins, fs, x.size());
}

DetectionResult detect_hamilton(std::span<const double> raw, double fs) {
  const auto x = prepare(raw, fs);
  const auto band = bandpass(x, 1, 8.0, 16.0, fs);
  std::vector<double> slope(band.size(), 0.0);
  for (std::size_t i = 1; i < band.size(); ++i) slope[i] = std::abs(band[i] - band[i - 1]);
  const auto window = samples_for(0.08, fs);
  auto ma = dsp::box_filter(slope, window);
  std::fill_n(ma.begin(), std::min(ma.size(), 2 * window), 0.0);

  const std::size_t refractory = samples_for(refractory_s(DetectorKind::Hamilton), fs);
  const std::size_t twave_gap = samples_for(kTwaveWindowS, fs);
  const std::size_t learn = std::min(ma.size(), samples_for(kLearningPeriodS, fs));

  std::deque<double> qrs_pks{*std::max_element(ma.begin(), ma.begin() + static_cast<std::ptrdiff_t>(learn))};
  std::deque<double> noise_pks{mean_of(std::span<const double>(ma).subspan(0, learn))};
  std::deque<std::size_t> rr;
  auto push8 = [](auto& buf, auto v) {
    buf.push_back(v);
    if (buf.size() > 8) buf.pop_front();
  };
  auto avg = [](const std::deque<double>& b) { return std::accumulate(b.begin(), b.end(), 0.0) / b.size(); };
  double th = avg(noise_pks) + 0.45 * (avg(qrs_pks) - avg(noise_pks));
  double rr_ave = 0.0;
  double last_slope = 0.0;

  std::vector<std::size_t> qrs;
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < ma.size(); ++i) {
    if (!(ma[i - 1] < ma[i] && ma[i + 1] < ma[i])) continue;
    const std::size_t peak = i;
    maxima.push_back(peak);
    bool is_qrs = ma[peak] > th && (qrs.empty() || peak - qrs.back() > refractory);
    const double peak_slope = max_abs(slope, peak >= window ? peak - window : 0, peak);
    if (is_qrs && !qrs.empty() && peak - qrs.back() < twave_gap && peak_slope < 0.5 * last_slope) {
      is_qrs = false;
    }
    if (is_qrs) {
      if (rr_ave > 0.0 && static_cast<double>(peak - qrs.back()) > 1.5 * rr_ave) {
        for (std::size_t m : maxima) {
          if (m <= qrs.back() || m + refractory >= peak) continue;
          if (m - qrs.back() > twave_gap && ma[m] > 0.5 * th) {
            qrs.push_back(m);
            break;
          }
        }
      }
      qrs.push_back(peak);
      last_slope = peak_slope;
      push8(qrs_pks, ma[peak]);
      if (qrs.size() >= 2) {
        push8(rr, qrs.back() - qrs[qrs.size() - 2]);
        rr_ave = static_cast<double>(std::accumulate(rr.begin(), rr.end(), std::size_t{0})) / rr.size();
      }
    } else {
      push8(noise_pks, ma[peak]);
    }
    th = avg(noise_pks) + 0.45 * (avg(qrs_pks) - avg(noise_pks));
  }
  return finish(std::move(qrs), DetectorKind::Hamilton, fs, x.size());
}

DetectionResult detect_christov(std::span<const double> raw, double fs) {
  const auto x = prepare(raw, fs);
  const auto ma1 = dsp::box_filter(x, samples_for(0.0286, fs));
  std::vector<double> lead(ma1.size(), 0.0);
  for (std::size_t i = 1; i + 1 < ma1.size(); ++i) lead[i] = std::abs(ma1[i + 1] - ma1[i - 1]);
  auto y = dsp::box_filter(lead, samples_for(0.05, fs));
  const std::size_t settle = samples_for(0.0286, fs) + samples_for(0.05, fs) + 1;
  std::fill_n(y.begin(), std::min(y.size(), settle), 0.0);

  const std::size_t ms50 = samples_for(0.05, fs);
  const std::size_t ms200 = samples_for(refractory_s(DetectorKind::Christov), fs);
  const std::size_t ms350 = samples_for(0.35, fs);
  const std::size_t ms1200 = samples_for(1.2, fs);
  const std::size_t learn = std::min(y.size(), samples_for(5.0, fs));

  // M: steep-slope threshold from a 5-value buffer of 0.6 x peak amplitude.
  const double m0 = 0.6 * *std::max_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(learn));
  std::deque<double> mm(5, m0);
  auto mm_mean = [&] { return std::accumulate(mm.begin(), mm.end(), 0.0) / mm.size(); };
  double m = m0;
  double new_m5 = 0.0;
  double f = 0.0;
  double r = 0.0;
  std::deque<std::size_t> rr;
  std::size_t rm = 0;

  std::vector<std::size_t> qrs;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!qrs.empty()) {
      const std::size_t last = qrs.back();
      if (i < last + ms200) {
        new_m5 = 0.6 * *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(last),
                                         y.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        if (new_m5 > 1.5 * mm.back()) new_m5 = 1.1 * mm.back();
      } else if (i == last + ms200) {
        mm.push_back(new_m5 == 0.0 ? mm.back() : new_m5);
        mm.pop_front();
        m = mm_mean();
      } else if (i < last + ms1200) {
        const double frac = static_cast<double>(i - (last + ms200)) / static_cast<double>(ms1200 - ms200);
        m = mm_mean() * (1.0 - 0.4 * frac);
      } else {
        m = 0.6 * mm_mean();
      }
    }
    // F: follows the drift of the signal maxima over 350 ms. Held at zero
    // or above so a window that opens on a large wave cannot drive the
    // combined threshold negative.
    if (i > ms350) {
      const double latest = *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(i - ms50),
                                              y.begin() + static_cast<std::ptrdiff_t>(i));
      const double earliest = *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(i - ms350),
                                                y.begin() + static_cast<std::ptrdiff_t>(i - ms350 + ms50));
      f = std::max(0.0, f + (latest - earliest) / 150.0);
    }
    // R: decays after two thirds of the expected beat interval.
    if (!qrs.empty() && rm > 0) {
      const std::size_t last = qrs.back();
      if (i < last + (2 * rm) / 3) {
        r = 0.0;
      } else if (i < last + rm) {
        r = (m - mm_mean()) / 1.4;
      }
    }
    const double mfr = m + f + r;
    if (y[i] > mfr && (qrs.empty() || i > qrs.back() + ms200)) {
      qrs.push_back(i);
      if (qrs.size() >= 2) {
        rr.push_back(qrs.back() - qrs[qrs.size() - 2]);
        if (rr.size() > 5) rr.pop_front();
        rm = std::accumulate(rr.begin(), rr.end(), std::size_t{0}) / rr.size();
      }
      new_m5 = 0.0;
    }
  }
  return finish(std::move(qrs), DetectorKind::Christov, fs, x.size());
}

DetectionResult detect_tma(std::span<const double> raw, double fs) {
  const auto x = prepare(raw, fs);
  const auto band = bandpass(x, 2, 8.0, 20.0, fs);
  std::vector<double> energy(band.size());
  std::transform(band.begin(), band.end(), energy.begin(), [](double v) { return v * v; });
  const std::size_t w1 = samples_for(0.097, fs);
  const std::size_t w2 = samples_for(0.611, fs);
  const auto ma_qrs = centred_average(energy, w1);
  const auto ma_beat = centred_average(energy, w2);
  const double offset = 0.08 * mean_of(energy);
  const std::size_t refractory = samples_for(refractory_s(DetectorKind::Tma), fs);

  std::vector<std::size_t> qrs;
  std::size_t i = 0;
  while (i < energy.size()) {
    if (!(ma_qrs[i] > ma_beat[i] + offset)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < energy.size() && ma_qrs[i] > ma_beat[i] + offset) ++i;
    if (i - start < w1) continue;
    const auto top = std::max_element(energy.begin() + static_cast<std::ptrdiff_t>(start),
                                      energy.begin() + static_cast<std::ptrdiff_t>(i));
    const auto peak = static_cast<std::size_t>(top - energy.begin());
    if (qrs.empty() || peak - qrs.back() >= refractory) qrs.push_back(peak);
  }
  return finish(std::move(qrs), DetectorKind::Tma, fs, x.size());
}

DetectionResult detect_swt(std::span<const double> raw, double fs) {
  auto x = prepare(raw, fs);
  const std::size_t n = x.size();
  constexpr int kLevel = 3;
  constexpr std::size_t kBlock = std::size_t{1} << kLevel;
  x.resize((n + kBlock - 1) / kBlock * kBlock, x.back());
  const auto detail = dsp::swt_db3_detail(x, kLevel);
  std::vector<double> squared(detail.size());
  std::transform(detail.begin(), detail.end(), squared.begin(), [](double v) { return v * v; });
  const auto window = samples_for(0.1, fs);
  auto ma = dsp::moving_window_average(squared, window);
  std::fill_n(ma.begin(), std::min(ma.size(), 2 * window), 0.0);
  auto peaks = pan_peak_detect(ma, fs, samples_for(refractory_s(DetectorKind::Swt), fs), detail, window);
  return finish(std::move(peaks), DetectorKind::Swt, fs, n);
}

DetectionResult detect(DetectorKind kind, std::span<const double> x, double fs) {
  switch (kind) {
    case DetectorKind::PanTompkins: return detect_pan_tompkins(x, fs);
    case DetectorKind::Hamilton: return detect_hamilton(x, fs);
    case DetectorKind::Christov: return detect_christov(x, fs);
    case DetectorKind::Tma: return detect_tma(x, fs);
    case DetectorKind::Swt: return detect_swt(x, fs);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown detector");
}

DetectionResult detect(DetectorKind kind, std::span<const int> x, double fs) {
  const std::vector<double> xd(x.begin(), x.end());
  return detect(kind, xd, fs);
}

}  // namespace sensorpen::qrs
