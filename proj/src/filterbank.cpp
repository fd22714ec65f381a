#include "meso/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "meso/fft.hpp"

namespace meso {
namespace {

// Gaussian tails beyond this many deviations are below 1e-9 and dropped.
constexpr double kTailSigmas = 6.5;

double morlet(double f, double xi, double sigma) {
  if (f <= 0.0) return 0.0;
  const double bump = std::exp(-(f - xi) * (f - xi) / (2.0 * sigma * sigma));
  const double kappa = std::exp(-xi * xi / (2.0 * sigma * sigma));
  return bump - kappa * std::exp(-f * f / (2.0 * sigma * sigma));
}

WaveletBank build_bank(Axis axis, double q, double octaves, std::size_t n, double rate,
                       double top) {
  if (!(q > 0.0) || !(octaves > 0.0)) throw ConfigurationError("filterbank: Q and J must be positive");
  const auto count = static_cast<std::size_t>(std::lround(octaves * q));
  if (count < 1) throw ConfigurationError("filterbank: J*Q must be at least 1");
  if (n < 4) throw ConfigurationError("filterbank: transform length too short");
  const double nyquist = rate / 2.0;
  if (top <= 0.0) top = nyquist * std::exp2(-1.0 / q);
  if (top >= nyquist) throw ConfigurationError("filterbank: centre frequency at or above Nyquist");

  WaveletBank bank;
  bank.axis = axis;
  bank.quality = q;
  bank.length = n;
  bank.sample_rate = rate;
  const double ratio = morlet_sigma_ratio(q);
  for (std::size_t i = 0; i < count; ++i) {
    const double xi = top * std::exp2(-static_cast<double>(count - 1 - i) / q);
    bank.center_freqs.push_back(xi);
    bank.sigmas.push_back(ratio * xi);
  }

  const double df = bank.bin_spacing();
  const std::size_t last_positive = (n - 1) / 2;  // Nyquist bin excluded
  for (std::size_t i = 0; i < count; ++i) {
    const double xi = bank.center_freqs[i], s = bank.sigmas[i];
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::ceil((xi - kTailSigmas * s) / df)));
    const auto hi = std::min(last_positive, static_cast<std::size_t>(std::floor((xi + kTailSigmas * s) / df)));
    SpectralBand band;
    band.first = lo;
    for (std::size_t k = lo; k <= hi && lo <= hi; ++k) band.gain.push_back(morlet(k * df, xi, s));
    bank.bands.push_back(std::move(band));
  }

  // Rescale so the continuous Littlewood-Paley sum peaks at 1 over the covered
  // band; the scale then does not depend on the transform length.
  const double f_lo = bank.center_freqs.front(), f_hi = bank.center_freqs.back();
  const auto lp = [&](double f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double v = morlet(f, bank.center_freqs[i], bank.sigmas[i]);
      sum += v * v;
    }
    return sum;
  };
  constexpr int kGrid = 8192;
  const double step = count == 1 ? 0.0 : std::log(f_hi / f_lo) / kGrid;
  double peak = 0.0, best = 0.0;
  for (int g = 0; g <= kGrid; ++g) {
    const double v = lp(f_lo * std::exp(g * step));
    if (v > peak) peak = v, best = g * step;
  }
  // Zoom in around the coarse maximum.
  for (double width = step; width > 1e-12 * (1.0 + step); width /= 32.0)
    for (int g = -32; g <= 32; ++g) {
      const double u = std::clamp(best + g * width / 32.0, 0.0, kGrid * step);
      const double v = lp(f_lo * std::exp(u));
      if (v > peak) peak = v, best = u;
    }
  bank.scale = 1.0 / std::sqrt(peak);
  for (auto& band : bank.bands)
    for (double& g : band.gain) g *= bank.scale;
  return bank;
}

}  // namespace

double morlet_sigma_ratio(double q) {
  const double r = std::exp2(-1.0 / q);
  return (1.0 - r) / (std::sqrt(std::numbers::ln2) * (1.0 + r));
}

double WaveletBank::response(std::size_t i, double f) const {
  return scale * morlet(f, center_freqs.at(i), sigmas.at(i));
}

std::vector<double> WaveletBank::dense(std::size_t i) const {
  std::vector<double> out(length, 0.0);
  const auto& band = bands.at(i);
  std::copy(band.gain.begin(), band.gain.end(), out.begin() + static_cast<long>(band.first));
  return out;
}

std::vector<double> WaveletBank::littlewood_paley() const {
  std::vector<double> lp(length, 0.0);
  for (const auto& band : bands)
    for (std::size_t k = 0; k < band.gain.size(); ++k) lp[band.first + k] += band.gain[k] * band.gain[k];
  return lp;
}

WaveletBank build_temporal_bank(double q, double j, std::size_t n, double sample_rate, double top) {
  return build_bank(Axis::Time, q, j, n, sample_rate, top);
}

WaveletBank build_frequential_bank(double q_fr, double j_fr, std::size_t m, double bins_per_octave) {
  return build_bank(Axis::LogFrequency, q_fr, j_fr, m, bins_per_octave, 0.0);
}

double LowpassFilter::response(double f) const { return std::exp(-f * f / (2.0 * sigma * sigma)); }

double LowpassFilter::cutoff(double tol) const { return sigma * std::sqrt(-2.0 * std::log(tol)); }

LowpassFilter build_lowpass(double width, std::size_t n, double sample_rate) {
  if (!(width >= 1.0)) throw ConfigurationError("lowpass: width must be >= 1");
  if (n == 0) throw ConfigurationError("lowpass: empty transform");
  LowpassFilter lp;
  lp.width = width;
  lp.length = n;
  lp.sample_rate = sample_rate;
  // Frequency deviation 0.1 / width cycles per sample, i.e. a time deviation
  // of width / (0.2 pi) samples.
  lp.sigma = 0.1 * sample_rate / width;
  lp.fourier_gain.resize(n);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = (k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) * df;
    lp.fourier_gain[k] = lp.response(f);
  }
  return lp;
}

DualComplexArray fft_convolve(const DualRealArray& x, const std::vector<double>& multiplier) {
  const std::size_t n = multiplier.size();
  if (x.size() > n) throw ConfigurationError("fft_convolve: signal longer than transform");
  DualComplexArray out(n, x.has_tangents());
  for (std::size_t lane = 0; lane < x.lane_count(); ++lane) {
    auto buf = out.lane(lane);
    auto src = x.lane(lane);
    std::copy(src.begin(), src.end(), buf.begin());
    fft::forward(buf, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) buf[k] *= multiplier[k] * inv_n;
    fft::backward(buf, n);
  }
  return out;
}

void write_bank_csv(const std::filesystem::path& path, const WaveletBank& bank) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "frequency";
  for (double c : bank.center_freqs) os << ",filter_" << c;
  os << '\n';
  std::vector<std::vector<double>> dense;
  for (std::size_t i = 0; i < bank.size(); ++i) dense.push_back(bank.dense(i));
  for (std::size_t k = 0; k <= bank.length / 2; ++k) {
    os << k * bank.bin_spacing();
    for (const auto& d : dense) os << ',' << d[k];
    os << '\n';
  }
}

}  // namespace meso
