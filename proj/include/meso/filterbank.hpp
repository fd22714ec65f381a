#pragma once

// Fourier-domain constant-Q filterbanks.
//
// Wavelets are analytic Morlet filters: a Gaussian bump at the centre
// frequency minus a scaled Gaussian at DC so the response vanishes at zero
// frequency. Negative frequencies (and the Nyquist bin) carry zero gain. The
// Gaussian width is chosen so neighbouring filters cross at -3 dB, and the
// whole bank is rescaled so the Littlewood-Paley sum peaks at exactly 1.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "meso/dual.hpp"

namespace meso {

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Axis { Time, LogFrequency };

/// Contiguous run of nonzero gains starting at FFT bin `first`.
struct SpectralBand {
  std::size_t first = 0;
  std::vector<double> gain;

  std::size_t end() const { return first + gain.size(); }
};

struct WaveletBank {
  Axis axis = Axis::Time;
  double quality = 1.0;
  /// Transform length the bands are sampled on.
  std::size_t length = 0;
  /// Samples per second (Time) or bins per octave (LogFrequency).
  double sample_rate = 1.0;
  /// Ascending centre frequencies: Hz, or cycles per octave.
  std::vector<double> center_freqs;
  std::vector<double> sigmas;
  /// Normalisation applied to every filter.
  double scale = 1.0;
  std::vector<SpectralBand> bands;

  std::size_t size() const { return center_freqs.size(); }
  double bin_spacing() const { return sample_rate / static_cast<double>(length); }
  /// Continuous response of filter i at frequency f (same units as centres).
  double response(std::size_t i, double f) const;
  /// Gain of filter i over all `length` bins, negative frequencies included.
  std::vector<double> dense(std::size_t i) const;
  /// Sum over filters of squared gain, per bin.
  std::vector<double> littlewood_paley() const;
};

struct LowpassFilter {
  /// Averaging support, in samples (time) or bins (log-frequency).
  double width = 1.0;
  std::size_t length = 0;
  double sample_rate = 1.0;
  /// Standard deviation of the Gaussian in frequency units.
  double sigma = 0.0;
  /// Gain per FFT bin, including the negative-frequency half.
  std::vector<double> fourier_gain;

  double response(double f) const;
  /// Frequency beyond which the gain stays below `tol`.
  double cutoff(double tol = 1e-9) const;
};

/// Gaussian width ratio sigma / centre for quality factor q (-3 dB crossings).
double morlet_sigma_ratio(double q);

/// J*Q temporal wavelets descending J octaves from sample_rate/2 * 2^(-1/Q),
/// or from `top` when it is positive.
WaveletBank build_temporal_bank(double q, double j, std::size_t n, double sample_rate,
                                double top = 0.0);

/// Frequential wavelets over a log-frequency axis of `m` bins sampled at
/// `bins_per_octave` (the first-order quality factor).
WaveletBank build_frequential_bank(double q_fr, double j_fr, std::size_t m,
                                   double bins_per_octave);

/// Gaussian lowpass whose frequency deviation is 0.1 / width cycles per sample.
LowpassFilter build_lowpass(double width, std::size_t n, double sample_rate = 1.0);

/// Circular convolution by a Fourier multiplier of length n; x is zero-padded
/// to n. Tangent lanes are transformed exactly like the primal lane.
DualComplexArray fft_convolve(const DualRealArray& x, const std::vector<double>& multiplier);

/// Dumps the bank's frequency responses, one row per bin.
void write_bank_csv(const std::filesystem::path& path, const WaveletBank& bank);

}  // namespace meso
