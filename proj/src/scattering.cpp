#include "meso/scattering.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "meso/fft.hpp"

namespace meso {

using cplx = std::complex<double>;

namespace {

// Ties between alpha * Q1 and lambda (both grids are powers of 2^(1/Q)) are
// resolved as "not kept".
constexpr double kRetentionSlack = 1e-9;

// Smallest sample_rate / 2^k that reaches `needed`, clamped to the sample rate.
double dyadic_rate(double sample_rate, double needed) {
  double rate = sample_rate;
  while (rate / 2.0 >= needed) rate /= 2.0;
  return rate;
}

std::size_t frames_for(double rate, double duration) {
  return static_cast<std::size_t>(std::llround(rate * duration));
}

bool kept(double alpha, double lambda, const ScatteringConfig& cfg) {
  return !cfg.prune_paths || alpha * cfg.Q1 < lambda * (1.0 - kRetentionSlack);
}

// Symmetric extension to 2*rows, zero padded to a power of two so the
// frequential FFTs stay on fast sizes.
std::size_t extension_length(std::size_t rows) { return std::bit_ceil(std::max<std::size_t>(4, 2 * rows)); }

constexpr std::size_t kZeroRow = static_cast<std::size_t>(-1);

// Source row of extended row p: identity, then mirrored, then zero padding.
std::size_t mirror(std::size_t p, std::size_t rows) {
  if (p < rows) return p;
  if (p < 2 * rows) return 2 * rows - 1 - p;
  return kZeroRow;
}

double axis_frequency(std::size_t p, std::size_t n, double rate) {
  const double k = p <= n / 2 ? static_cast<double>(p) : static_cast<double>(p) - static_cast<double>(n);
  return k * rate / static_cast<double>(n);
}

// m = sqrt(|z|^2 + eps^2) with tangents Re(conj(z) dz) / m, for `count`
// elements starting at the given offsets.
void modulus_into(const DualComplexArray& z, std::size_t z_off, DualRealArray& m, std::size_t m_off,
                  std::size_t count, double eps) {
  const auto z0 = z.lane(0).subspan(z_off, count);
  auto m0 = m.lane(0).subspan(m_off, count);
  const double eps2 = eps * eps;
  for (std::size_t i = 0; i < count; ++i) m0[i] = std::sqrt(std::norm(z0[i]) + eps2);
  if (!z.has_tangents()) return;
  for (std::size_t lane = 1; lane < 3; ++lane) {
    const auto zl = z.lane(lane).subspan(z_off, count);
    auto ml = m.lane(lane).subspan(m_off, count);
    for (std::size_t i = 0; i < count; ++i)
      ml[i] = (z0[i].real() * zl[i].real() + z0[i].imag() * zl[i].imag()) / m0[i];
  }
}

// Time averaging by phi_T followed by resampling to the output grid, working
// from the half spectrum of a real row of length n that spans the padded
// duration.
void average_spectrum(std::span<const cplx> half, std::size_t n, const JtfsPlan& plan,
                      std::span<double> out) {
  const std::size_t n_out = out.size();
  const double duration = plan.duration();
  const auto& phi = plan.time_lowpass();
  const auto k_max = std::min<std::size_t>(n / 2, static_cast<std::size_t>(phi.cutoff() * duration));
  AlignedVector<cplx> buf(n_out, cplx{});
  for (std::size_t k = 0; k <= k_max; ++k) {
    const double g = phi.response(static_cast<double>(k) / duration);
    buf[k % n_out] += half[k] * g;
    if (k > 0 && 2 * k != n) buf[(n_out - k % n_out) % n_out] += std::conj(half[k]) * g;
  }
  fft::backward(buf, n_out);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t m = 0; m < n_out; ++m) out[m] = buf[m].real() * inv_n;
}

// Averages every row of a row-major real matrix in time.
CoeffBlock average_block(const CoeffBlock& in, const JtfsPlan& plan) {
  CoeffBlock out = in;
  out.frames = plan.output_length();
  out.frame_rate = plan.output_rate();
  out.values = DualRealArray(in.rows * out.frames, in.values.has_tangents());
  const std::size_t n = in.frames;
  AlignedVector<double> row(n);
  AlignedVector<cplx> half(n / 2 + 1);
  for (std::size_t lane = 0; lane < in.values.lane_count(); ++lane) {
    for (std::size_t r = 0; r < in.rows; ++r) {
      const auto src = in.values.lane(lane).subspan(r * n, n);
      std::copy(src.begin(), src.end(), row.begin());
      fft::r2c(row, half);
      average_spectrum(half, n, plan, out.values.lane(lane).subspan(r * out.frames, out.frames));
    }
  }
  return out;
}

// Gaussian averaging along the row axis (width F bins) followed by row
// subsampling. Operates on a row-major complex matrix of `rows` x `cols`.
DualComplexArray average_rows(const DualComplexArray& z, std::size_t rows, std::size_t cols,
                              const JtfsPlan& plan) {
  const auto& cfg = plan.config();
  const std::size_t p_len = extension_length(rows);
  const auto phi = build_lowpass(cfg.F, p_len, cfg.Q1);
  const std::size_t out_rows = plan.averaged_rows(rows);
  const std::size_t stride = (rows + out_rows - 1) / out_rows;
  DualComplexArray out(out_rows * cols, z.has_tangents());
  AlignedVector<cplx> ext(p_len * cols);
  for (std::size_t lane = 0; lane < z.lane_count(); ++lane) {
    const auto src = z.lane(lane);
    for (std::size_t p = 0; p < p_len; ++p) {
      const auto row = ext.begin() + static_cast<long>(p * cols);
      const std::size_t m = mirror(p, rows);
      if (m == kZeroRow) {
        std::fill_n(row, cols, cplx{});
        continue;
      }
      const auto from = src.subspan(m * cols, cols);
      std::copy(from.begin(), from.end(), row);
    }
    fft::forward_columns(ext, p_len, cols);
    for (std::size_t p = 0; p < p_len; ++p) {
      const double g = phi.fourier_gain[p] / static_cast<double>(p_len);
      for (std::size_t c = 0; c < cols; ++c) ext[p * cols + c] *= g;
    }
    fft::backward_columns(ext, p_len, cols);
    auto dst = out.lane(lane);
    for (std::size_t r = 0; r < out_rows; ++r)
      std::copy_n(ext.begin() + static_cast<long>(r * stride * cols), cols,
                  dst.begin() + static_cast<long>(r * cols));
  }
  return out;
}

DualComplexArray to_complex(const DualRealArray& x) {
  DualComplexArray z(x.size(), x.has_tangents());
  for (std::size_t lane = 0; lane < x.lane_count(); ++lane)
    std::copy(x.lane(lane).begin(), x.lane(lane).end(), z.lane(lane).begin());
  return z;
}

DualRealArray modulus(const DualComplexArray& z, double eps) {
  DualRealArray m(z.size(), z.has_tangents());
  modulus_into(z, 0, m, 0, z.size(), eps);
  return m;
}

// Frequential wavelet moduli of a matrix whose extended axis has already been
// transformed column-wise. `spin` selects the orientation of the filter.
// Columns are processed in chunks that stay cache resident; `work` is scratch
// of at least chunk_size * lanes elements per lane and is overwritten.
CoeffBlock frequential_path(const DualComplexArray& transformed, std::size_t rows, std::size_t cols,
                            const WaveletBank& bank, std::size_t beta_index, int spin,
                            const JtfsPlan& plan, DualComplexArray& work, bool average_freq, double eps) {
  const std::size_t p_len = extension_length(rows);
  std::vector<double> h(p_len);
  for (std::size_t p = 0; p < p_len; ++p) {
    // Ascending ridges put their energy at negative log-frequency rates.
    const double f = axis_frequency(p, p_len, bank.sample_rate);
    h[p] = bank.response(beta_index, spin >= 0 ? -f : f) / static_cast<double>(p_len);
  }
  const std::size_t chunk = work.size() / p_len;

  DualRealArray m(rows * cols, transformed.has_tangents());
  for (std::size_t c0 = 0; c0 < cols; c0 += chunk) {
    const std::size_t width = std::min(chunk, cols - c0);
    for (std::size_t lane = 0; lane < transformed.lane_count(); ++lane) {
      const auto src = transformed.lane(lane);
      auto dst = work.lane(lane).first(p_len * width);
      for (std::size_t p = 0; p < p_len; ++p) {
        auto row = dst.subspan(p * width, width);
        if (h[p] == 0.0) {
          std::fill(row.begin(), row.end(), cplx{});
          continue;
        }
        const auto in = src.subspan(p * cols + c0, width);
        for (std::size_t c = 0; c < width; ++c) row[c] = in[c] * h[p];
      }
      fft::backward_columns(dst, p_len, width);
    }
    for (std::size_t r = 0; r < rows; ++r) modulus_into(work, r * width, m, r * cols + c0, width, eps);
  }

  CoeffBlock block;
  block.beta = bank.center_freqs[beta_index];
  block.spin = spin;
  block.rows = rows;
  block.frames = cols;
  if (average_freq && plan.config().F > 0.0) {
    // Averaging over log-frequency follows the modulus.
    auto z = average_rows(to_complex(m), rows, cols, plan);
    block.rows = plan.averaged_rows(rows);
    block.values = DualRealArray(block.rows * cols, z.has_tangents());
    for (std::size_t lane = 0; lane < z.lane_count(); ++lane)
      for (std::size_t i = 0; i < z.size(); ++i) block.values.lane(lane)[i] = z.lane(lane)[i].real();
  } else {
    block.values = std::move(m);
  }
  return block;
}

// Scratch for frequential_path: a power-of-two number of columns per chunk.
DualComplexArray chunk_scratch(std::size_t rows, std::size_t cols, bool tangents) {
  constexpr std::size_t kChunkElements = 16384;
  const std::size_t p_len = extension_length(rows);
  const std::size_t chunk = std::min(cols, std::max<std::size_t>(1, kChunkElements / p_len));
  return DualComplexArray(p_len * chunk, tangents);
}

// Symmetric extension of a row-major matrix to 2*rows (or 4 for a single row),
// transformed column-wise.
DualComplexArray extend_and_transform(const DualComplexArray& z, std::size_t rows, std::size_t cols) {
  const std::size_t p_len = extension_length(rows);
  DualComplexArray ext(p_len * cols, z.has_tangents());
  for (std::size_t lane = 0; lane < z.lane_count(); ++lane) {
    const auto src = z.lane(lane);
    auto dst = ext.lane(lane);
    for (std::size_t p = 0; p < p_len; ++p) {
      const std::size_t m = mirror(p, rows);
      if (m == kZeroRow) continue;
      const auto from = src.subspan(m * cols, cols);
      std::copy(from.begin(), from.end(), dst.begin() + static_cast<long>(p * cols));
    }
    fft::forward_columns(dst, p_len, cols);
  }
  return ext;
}

}  // namespace

void ScatteringConfig::validate() const {
  if (J < 1 || Q1 < 1 || Q2 < 1 || J_fr < 1 || Q_fr < 1)
    throw ConfigurationError("scattering: J, Q1, Q2, J_fr, Q_fr must be >= 1");
  if (!(T >= 1.0)) throw ConfigurationError("scattering: T must be >= 1");
  if (F < 0.0) throw ConfigurationError("scattering: F must be >= 0");
  if (F > 0.0 && F < 1.0) throw ConfigurationError("scattering: F must be 0 or >= 1");
  if (oversampling < 0) throw ConfigurationError("scattering: oversampling must be >= 0");
}

JtfsPlan::JtfsPlan(const ScatteringConfig& cfg, std::size_t signal_length, double sample_rate)
    : cfg_(cfg), sample_rate_(sample_rate), signal_length_(signal_length) {
  cfg_.validate();
  if (signal_length == 0 || !(sample_rate > 0.0)) throw ConfigurationError("scattering: empty signal");
  padded_length_ = std::bit_ceil(signal_length + static_cast<std::size_t>(std::ceil(cfg.T)));
  duration_ = static_cast<double>(padded_length_) / sample_rate;

  lambda_bank_ = build_temporal_bank(cfg.Q1, cfg.J, padded_length_, sample_rate);
  alpha_bank_ = build_temporal_bank(cfg.Q2, cfg.J, padded_length_, sample_rate);
  time_lowpass_ = build_lowpass(cfg.T, padded_length_, sample_rate);

  const double stride = std::max(1.0, cfg.T / std::exp2(cfg.oversampling));
  output_stride_ = static_cast<std::size_t>(stride);
  if (static_cast<double>(output_stride_) != stride || padded_length_ % output_stride_ != 0)
    throw ConfigurationError("scattering: T / 2^oversampling must divide the padded length");
  output_length_ = padded_length_ / output_stride_;
  const double min_rate = std::min(sample_rate, 8.0 * output_rate());

  const std::size_t n_rows = lambda_bank_.size();
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double lambda = lambda_bank_.center_freqs[i];
    double alpha_max = 0.0;
    for (double a : alpha_bank_.center_freqs)
      if (kept(a, lambda, cfg_)) alpha_max = std::max(alpha_max, a);
    // 0.52 lambda holds the wavelet band out to +-5 deviations without overlap.
    const double needed = std::max({0.52 * lambda, 4.0 * alpha_max, min_rate});
    row_rates_.push_back(dyadic_rate(sample_rate, needed));
    row_lengths_.push_back(frames_for(row_rates_.back(), duration_));
  }

  for (std::size_t b = alpha_bank_.size(); b-- > 0;) {
    const double alpha = alpha_bank_.center_freqs[b];
    std::size_t first = 0;
    while (first < n_rows && !kept(alpha, lambda_bank_.center_freqs[first], cfg_)) ++first;
    if (first == n_rows) continue;
    AlphaPath path;
    path.bank_index = b;
    path.alpha = alpha;
    path.frame_rate = dyadic_rate(sample_rate, std::max(2.0 * alpha, min_rate));
    path.length = frames_for(path.frame_rate, duration_);
    path.first_row = first;
    alpha_paths_.push_back(path);
  }

  auto add_beta_bank = [&](std::size_t rows) {
    const std::size_t p_len = extension_length(rows);
    if (!beta_banks_.contains(p_len))
      beta_banks_.emplace(p_len, build_frequential_bank(cfg.Q_fr, cfg.J_fr, p_len, cfg.Q1));
  };
  add_beta_bank(n_rows);
  for (const auto& p : alpha_paths_) add_beta_bank(n_rows - p.first_row);
}

const WaveletBank& JtfsPlan::beta_bank(std::size_t rows) const {
  return beta_banks_.at(extension_length(rows));
}

std::size_t JtfsPlan::averaged_rows(std::size_t rows) const {
  if (cfg_.F <= 0.0) return rows;
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(cfg_.F / std::exp2(cfg_.oversampling)));
  return (rows + stride - 1) / stride;
}

std::size_t JtfsPlan::coefficient_count() const {
  const std::size_t n_beta = static_cast<std::size_t>(cfg_.J_fr * cfg_.Q_fr);
  std::size_t total = (averaged_rows(rows()) + n_beta * rows()) * output_length_;
  for (const auto& p : alpha_paths_) {
    const std::size_t r = averaged_rows(rows() - p.first_row);
    total += (1 + 2 * n_beta) * r * output_length_;
  }
  return total;
}

Scalogram scalogram(const Signal& x, const JtfsPlan& plan) {
  if (x.size() != plan.signal_length())
    throw ConfigurationError("scalogram: signal length does not match the plan");
  const std::size_t n_pad = plan.padded_length();
  const bool tangents = x.samples.has_tangents();
  const std::size_t lanes = x.samples.lane_count();

  std::vector<AlignedVector<cplx>> spectrum(lanes, AlignedVector<cplx>(n_pad / 2 + 1));
  AlignedVector<double> padded(n_pad);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(x.samples.lane(lane).begin(), x.samples.lane(lane).end(), padded.begin());
    fft::r2c(padded, spectrum[lane]);
  }

  Scalogram u1;
  u1.duration = plan.duration();
  double peak = 0.0;
  for (double v : x.samples.value()) peak = std::max(peak, std::abs(v));
  u1.floor = kModulusFloor * (peak > 0.0 ? peak : 1.0);
  const auto& bank = plan.lambda_bank();
  const double inv_n = 1.0 / static_cast<double>(n_pad);
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    const std::size_t n = plan.row_length(i);
    const auto& band = bank.bands[i];
    DualComplexArray z(n, tangents);
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      auto buf = z.lane(lane);
      for (std::size_t k = 0; k < band.gain.size(); ++k) {
        const std::size_t bin = band.first + k;
        buf[bin % n] += spectrum[lane][bin] * (band.gain[k] * inv_n);
      }
      fft::backward(buf, n);
    }
    ScalogramRow row;
    row.lambda = bank.center_freqs[i];
    row.frame_rate = plan.row_rate(i);
    row.values = modulus(z, u1.floor);
    row.spectrum = DualComplexArray(n / 2 + 1, tangents);
    for (std::size_t lane = 0; lane < lanes; ++lane) fft::r2c(row.values.lane(lane), row.spectrum.lane(lane));
    u1.rows.push_back(std::move(row));
  }
  return u1;
}

std::vector<CoeffBlock> jtfs_s1(const Scalogram& u1, const JtfsPlan& plan) {
  const std::size_t rows = u1.size();
  const std::size_t cols = plan.output_length();
  const bool tangents = rows > 0 && u1.rows[0].values.has_tangents();

  CoeffBlock base;
  base.order = 1;
  base.rows = rows;
  base.frames = cols;
  base.frame_rate = plan.output_rate();
  base.values = DualRealArray(rows * cols, tangents);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = u1.rows[i];
    for (std::size_t lane = 0; lane < row.values.lane_count(); ++lane)
      average_spectrum(row.spectrum.lane(lane), row.values.size(), plan,
                       base.values.lane(lane).subspan(i * cols, cols));
  }

  std::vector<CoeffBlock> out;
  const auto z = to_complex(base.values);
  if (plan.config().F > 0.0) {
    CoeffBlock averaged = base;
    const auto za = average_rows(z, rows, cols, plan);
    averaged.rows = plan.averaged_rows(rows);
    averaged.values = DualRealArray(za.size(), tangents);
    for (std::size_t lane = 0; lane < za.lane_count(); ++lane)
      for (std::size_t k = 0; k < za.size(); ++k) averaged.values.lane(lane)[k] = za.lane(lane)[k].real();
    out.push_back(std::move(averaged));
  } else {
    out.push_back(base);
  }

  // Real input: both orientations give the same modulus, so one spin suffices.
  const auto transformed = extend_and_transform(z, rows, cols);
  const auto& bank = plan.beta_bank(rows);
  auto work = chunk_scratch(rows, cols, tangents);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    // S1 carries no frequential averaging on its wavelet paths.
    auto b = frequential_path(transformed, rows, cols, bank, j, 1, plan, work, false, u1.floor);
    b.order = 1;
    b.spin = 0;
    b.frame_rate = plan.output_rate();
    out.push_back(std::move(b));
  }
  return out;
}

SecondOrderBlock jtfs_second_order_raw(const Scalogram& u1, const JtfsPlan& plan,
                                       std::size_t alpha_index) {
  const auto& path = plan.alpha_paths().at(alpha_index);
  const std::size_t rows = u1.size() - path.first_row;
  const std::size_t cols = path.length;
  const bool tangents = u1.rows[0].values.has_tangents();
  const auto& alpha_filter = plan.alpha_bank().bands[path.bank_index];

  // U1 * psi_alpha on the alpha frame grid, rows stacked row-major.
  DualComplexArray z(rows * cols, tangents);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = u1.rows[path.first_row + r];
    const std::size_t n = row.values.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t lane = 0; lane < z.lane_count(); ++lane) {
      auto buf = z.lane(lane).subspan(r * cols, cols);
      const auto half = row.spectrum.lane(lane);
      for (std::size_t k = 0; k < alpha_filter.gain.size(); ++k) {
        const std::size_t bin = alpha_filter.first + k;
        if (2 * bin >= n) break;
        buf[bin % cols] += half[bin] * (alpha_filter.gain[k] * inv_n);
      }
      fft::backward(buf, cols);
    }
  }

  SecondOrderBlock out;
  out.path = path;
  const auto finish = [&](CoeffBlock& b) {
    b.order = 2;
    b.alpha = path.alpha;
    b.first_row = path.first_row;
    b.frame_rate = path.frame_rate;
  };

  CoeffBlock lowpass;
  lowpass.rows = rows;
  lowpass.frames = cols;
  if (plan.config().F > 0.0) {
    const auto za = average_rows(z, rows, cols, plan);
    lowpass.rows = plan.averaged_rows(rows);
    lowpass.values = modulus(za, u1.floor);
  } else {
    lowpass.values = modulus(z, u1.floor);
  }
  finish(lowpass);
  out.paths.push_back(std::move(lowpass));

  const auto transformed = extend_and_transform(z, rows, cols);
  const auto& bank = plan.beta_bank(rows);
  auto work = chunk_scratch(rows, cols, tangents);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    for (int spin : {1, -1}) {
      auto b = frequential_path(transformed, rows, cols, bank, j, spin, plan, work, true, u1.floor);
      finish(b);
      out.paths.push_back(std::move(b));
    }
  }
  return out;
}

std::vector<CoeffBlock> jtfs_s2(const SecondOrderBlock& u2, const JtfsPlan& plan) {
  std::vector<CoeffBlock> out;
  out.reserve(u2.paths.size());
  for (const auto& p : u2.paths) out.push_back(average_block(p, plan));
  return out;
}

JtfsCoeffs jtfs(const Signal& x, const JtfsPlan& plan) {
  const auto u1 = scalogram(x, plan);
  JtfsCoeffs c;
  c.config = plan.config();
  c.lambdas = plan.lambda_bank().center_freqs;
  c.s1 = jtfs_s1(u1, plan);
  for (std::size_t a = 0; a < plan.alpha_paths().size(); ++a) {
    auto s2 = jtfs_s2(jtfs_second_order_raw(u1, plan, a), plan);
    for (auto& b : s2) c.s2.push_back(std::move(b));
  }
  return c;
}

std::size_t JtfsCoeffs::size() const {
  std::size_t n = 0;
  for (const auto& b : s1) n += b.values.size();
  for (const auto& b : s2) n += b.values.size();
  return n;
}

DualRealArray JtfsCoeffs::flatten() const {
  bool tangents = false;
  for (const auto& b : s1) tangents = tangents || b.values.has_tangents();
  DualRealArray flat(size(), tangents);
  std::size_t offset = 0;
  const auto append = [&](const CoeffBlock& b) {
    for (std::size_t lane = 0; lane < flat.lane_count(); ++lane) {
      auto dst = flat.lane(lane).subspan(offset, b.values.size());
      if (lane < b.values.lane_count())
        std::copy(b.values.lane(lane).begin(), b.values.lane(lane).end(), dst.begin());
    }
    offset += b.values.size();
  };
  for (const auto& b : s1) append(b);
  for (const auto& b : s2) append(b);
  return flat;
}

namespace {
double row_lambda(const JtfsCoeffs& c, const CoeffBlock& b, std::size_t r) {
  const double stride = c.config.F > 0.0 ? std::max(1.0, std::floor(c.config.F / std::exp2(c.config.oversampling))) : 1.0;
  const auto idx = b.first_row + static_cast<std::size_t>(r * stride);
  return idx < c.lambdas.size() ? c.lambdas[idx] : c.lambdas.back();
}
}  // namespace

void write_coeffs_csv(const std::filesystem::path& path, const JtfsCoeffs& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.precision(17);
  os << "order,alpha_hz,beta_cpo,spin,lambda_hz,time_s,value\n";
  for (const auto* blocks : {&c.s1, &c.s2}) {
    for (const auto& b : *blocks) {
      for (std::size_t r = 0; r < b.rows; ++r) {
        const double lambda = row_lambda(c, b, r);
        for (std::size_t t = 0; t < b.frames; ++t)
          os << b.order << ',' << b.alpha << ',' << b.beta << ',' << b.spin << ',' << lambda << ','
             << t / b.frame_rate << ',' << b.values.lane(0)[r * b.frames + t] << '\n';
      }
    }
  }
}

void write_coeffs_json(const std::filesystem::path& path, const JtfsCoeffs& c) {
  nlohmann::json j;
  j["config"] = {{"J", c.config.J},     {"Q1", c.config.Q1},   {"Q2", c.config.Q2},
                 {"J_fr", c.config.J_fr}, {"Q_fr", c.config.Q_fr}, {"T", c.config.T},
                 {"F", c.config.F},     {"oversampling", c.config.oversampling},
                 {"prune_paths", c.config.prune_paths}};
  j["lambdas_hz"] = c.lambdas;
  auto& blocks = j["blocks"] = nlohmann::json::array();
  for (const auto* list : {&c.s1, &c.s2}) {
    for (const auto& b : *list) {
      std::vector<double> lambdas;
      for (std::size_t r = 0; r < b.rows; ++r) lambdas.push_back(row_lambda(c, b, r));
      const auto v = b.values.value();
      blocks.push_back({{"order", b.order},
                        {"alpha_hz", b.alpha},
                        {"beta_cpo", b.beta},
                        {"spin", b.spin},
                        {"lambda_hz", lambdas},
                        {"frame_rate", b.frame_rate},
                        {"frames", b.frames},
                        {"values", std::vector<double>(v.begin(), v.end())}});
    }
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << j.dump();
}

}  // namespace meso
