#include "sensorpen/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "sensorpen/error.hpp"

namespace sensorpen::dsp {
namespace {

using cplx = std::complex<double>;

struct Zpk {
  std::vector<cplx> zeros;
  std::vector<cplx> poles;
  double gain = 1.0;
};

Zpk analog_prototype(int order) {
  Zpk proto;
  for (int k = -order + 1; k < order; k += 2) {
    proto.poles.push_back(-std::exp(cplx(0.0, std::numbers::pi * k / (2.0 * order))));
  }
  return proto;
}

std::vector<double> poly_real(const std::vector<cplx>& roots) {
  std::vector<cplx> c{1.0};
  for (const auto& r : roots) {
    std::vector<cplx> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

cplx product(const std::vector<cplx>& v, cplx offset, double sign) {
  cplx p = 1.0;
  for (const auto& x : v) p *= offset + sign * x;
  return p;
}

}  // namespace

IirCoefficients butterworth(int order, FilterType type, std::span<const double> cutoff_hz,
                            double fs) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "filter order must be >= 1");
  if (!(fs > 0.0)) throw Error(ErrorCode::BadRate, "sample rate must be positive");
  const std::size_t edges = type == FilterType::BandPass ? 2 : 1;
  if (cutoff_hz.size() != edges) {
    throw Error(ErrorCode::InvalidArgument, "wrong number of cutoff frequencies");
  }
  // Normalised to Nyquist, then prewarped for the bilinear transform at fs=2.
  std::vector<double> warped;
  for (double f : cutoff_hz) {
    const double wn = f / (fs / 2.0);
    if (!(wn > 0.0 && wn < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "cutoff must lie strictly inside (0, fs/2)");
    }
    warped.push_back(4.0 * std::tan(std::numbers::pi * wn / 2.0));
  }

  Zpk z = analog_prototype(order);
  switch (type) {
    case FilterType::LowPass: {
      const double wo = warped[0];
      for (auto& p : z.poles) p *= wo;
      z.gain *= std::pow(wo, order);
      break;
    }
    case FilterType::HighPass: {
      const double wo = warped[0];
      z.gain *= (1.0 / product(z.poles, 0.0, -1.0)).real();
      for (auto& p : z.poles) p = wo / p;
      z.zeros.assign(static_cast<std::size_t>(order), 0.0);
      break;
    }
    case FilterType::BandPass: {
      if (!(warped[0] < warped[1])) {
        throw Error(ErrorCode::InvalidArgument, "band edges must be increasing");
      }
      const double bw = warped[1] - warped[0];
      const double wo = std::sqrt(warped[0] * warped[1]);
      std::vector<cplx> poles;
      for (const auto& p : z.poles) {
        const cplx lp = p * bw / 2.0;
        const cplx root = std::sqrt(lp * lp - wo * wo);
        poles.push_back(lp + root);
      }
      for (const auto& p : z.poles) {
        const cplx lp = p * bw / 2.0;
        const cplx root = std::sqrt(lp * lp - wo * wo);
        poles.push_back(lp - root);
      }
      z.poles = std::move(poles);
      z.zeros.assign(static_cast<std::size_t>(order), 0.0);
      z.gain *= std::pow(bw, order);
      break;
    }
  }

  // Bilinear transform with fs = 2 (fs2 = 4).
  constexpr double fs2 = 4.0;
  const std::size_t degree = z.poles.size() - z.zeros.size();
  const cplx gain_ratio = product(z.zeros, fs2, -1.0) / product(z.poles, fs2, -1.0);
  for (auto& zero : z.zeros) zero = (fs2 + zero) / (fs2 - zero);
  for (auto& pole : z.poles) pole = (fs2 + pole) / (fs2 - pole);
  z.zeros.insert(z.zeros.end(), degree, cplx(-1.0, 0.0));
  z.gain *= gain_ratio.real();

  IirCoefficients out;
  out.b = poly_real(z.zeros);
  for (auto& v : out.b) v *= z.gain;
  out.a = poly_real(z.poles);
  return out;
}

std::vector<double> lfilter(const IirCoefficients& coeffs, std::span<const double> x) {
  const std::size_t n = std::max(coeffs.a.size(), coeffs.b.size());
  std::vector<double> b(n, 0.0), a(n, 0.0);
  const double a0 = coeffs.a.at(0);
  for (std::size_t i = 0; i < coeffs.b.size(); ++i) b[i] = coeffs.b[i] / a0;
  for (std::size_t i = 0; i < coeffs.a.size(); ++i) a[i] = coeffs.a[i] / a0;

  std::vector<double> state(n, 0.0);
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double out = b[0] * x[k] + state[0];
    for (std::size_t i = 1; i < n; ++i) {
      state[i - 1] = b[i] * x[k] + (i < n - 1 ? state[i] : 0.0) - a[i] * out;
    }
    y[k] = out;
  }
  return y;
}

std::vector<double> box_filter(std::span<const double> x, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i];
    if (i >= n) acc -= x[i - n];
    y[i] = acc / static_cast<double>(n);
  }
  return y;
}

std::vector<double> moving_window_average(std::span<const double> x, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i];
    if (i >= n) acc -= x[i - n];
    y[i] = acc / static_cast<double>(std::min(i + 1, n));
  }
  return y;
}

namespace {

constexpr double kDb3Lo[6] = {0.03522629188570953,  -0.08544127388202666, -0.13501102001025458,
                              0.45987750211849154,  0.8068915093110925,   0.33267055295008263};
constexpr double kDb3Hi[6] = {-0.33267055295008263, 0.8068915093110925,  -0.45987750211849154,
                              -0.13501102001025458, 0.08544127388202666, 0.03522629188570953};

// One a-trous stage: taps dilated by 2^(level-1), periodic boundary.
std::vector<double> atrous(std::span<const double> x, const double (&taps)[6], int level) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t step = std::ptrdiff_t{1} << (level - 1);
  const std::ptrdiff_t shift = 3 * step;
  std::vector<double> y(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < 6; ++j) {
      std::ptrdiff_t idx = (i + shift - j * step) % n;
      if (idx < 0) idx += n;
      acc += taps[j] * x[static_cast<std::size_t>(idx)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

void check_swt_input(std::span<const double> x, int level) {
  if (level < 1) throw Error(ErrorCode::InvalidArgument, "swt level must be >= 1");
  const std::size_t block = std::size_t{1} << level;
  if (x.empty() || x.size() % block != 0) {
    throw Error(ErrorCode::InvalidArgument, "swt input length must be a multiple of 2^level");
  }
}

}  // namespace

std::vector<double> swt_db3_approx(std::span<const double> x, int level) {
  check_swt_input(x, level);
  std::vector<double> approx(x.begin(), x.end());
  for (int l = 1; l <= level; ++l) approx = atrous(approx, kDb3Lo, l);
  return approx;
}

std::vector<double> swt_db3_detail(std::span<const double> x, int level) {
  check_swt_input(x, level);
  std::vector<double> approx(x.begin(), x.end());
  for (int l = 1; l < level; ++l) approx = atrous(approx, kDb3Lo, l);
  return atrous(approx, kDb3Hi, level);
}

std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i - 1] < x[i] && x[i + 1] < x[i]) out.push_back(i);
  }
  return out;
}

}  // namespace sensorpen::dsp
