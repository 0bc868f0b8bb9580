#pragma once

// Signal-processing primitives shared by the step counter and the QRS
// detectors: Butterworth design, direct-form IIR filtering, moving averages
// and the undecimated (stationary) wavelet transform.

#include <cstddef>
#include <span>
#include <vector>

namespace sensorpen::dsp {

enum class FilterType { LowPass, HighPass, BandPass };

// Transfer-function coefficients, a[0] == 1.
struct IirCoefficients {
  std::vector<double> b;
  std::vector<double> a;
};

// Digital Butterworth design through the bilinear transform with frequency
// prewarping. `cutoff_hz` holds one edge for low/high pass and two for band
// pass. Throws InvalidArgument for edges outside (0, fs/2).
IirCoefficients butterworth(int order, FilterType type, std::span<const double> cutoff_hz,
                            double fs);

// Direct form II transposed, zero initial state.
std::vector<double> lfilter(const IirCoefficients& coeffs, std::span<const double> x);

// Causal box filter with zero initial state: y[i] = sum(x[i-n+1..i]) / n.
std::vector<double> box_filter(std::span<const double> x, std::size_t n);

// Causal moving-window integral that averages over the samples seen so far
// until the window is full.
std::vector<double> moving_window_average(std::span<const double> x, std::size_t n);

// Level-`level` detail coefficients of the periodic stationary wavelet
// transform with the Daubechies-3 filter pair. Input length must be a
// multiple of 2^level.
std::vector<double> swt_db3_detail(std::span<const double> x, int level);

// Approximation coefficients at `level`, same conventions as swt_db3_detail.
std::vector<double> swt_db3_approx(std::span<const double> x, int level);

// Indices i with x[i-1] < x[i] > x[i+1].
std::vector<std::size_t> local_maxima(std::span<const double> x);

}  // namespace sensorpen::dsp
