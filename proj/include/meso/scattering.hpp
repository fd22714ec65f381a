#pragma once

// Joint time-frequency scattering.
//
// Layout conventions:
//  * The scalogram is multirate: row i (ascending centre frequency lambda_i)
//    is sampled at its own power-of-two fraction of the sample rate, at least
//    four times the largest second-order rate alpha kept for that row. Every
//    row spans the same padded duration, so all rows share one bin spacing.
//  * Second-order blocks are produced one rate alpha at a time over the rows
//    with lambda > Q1 * alpha. Inside a block, values are row-major
//    (row, frame).
//  * Spin +1 responds to ascending time-frequency patterns, spin -1 to
//    descending ones. First-order and beta = 0 paths carry spin 0.
//  * Flattening order: S1 blocks (beta = 0 first, then ascending beta), then
//    S2 blocks (alpha descending; within an alpha the beta = 0 path, then each
//    beta ascending with spin +1 before spin -1); each block row-major with
//    time innermost.

#include <cstddef>
#include <filesystem>
#include <map>
#include <vector>

#include "meso/dual.hpp"
#include "meso/filterbank.hpp"
#include "meso/synth.hpp"

namespace meso {

struct ScatteringConfig {
  int J = 12;
  int Q1 = 8;
  int Q2 = 2;
  int J_fr = 5;
  int Q_fr = 2;
  double T = 8192.0;  ///< temporal averaging support, samples
  double F = 0.0;     ///< frequential averaging support, bins; 0 disables
  int oversampling = 1;
  /// Keep only second-order rates alpha < lambda / Q1.
  bool prune_paths = true;

  void validate() const;
};

/// Banks, rates and lengths shared by every transform with the same
/// configuration and signal length. Immutable once built.
class JtfsPlan {
 public:
  JtfsPlan(const ScatteringConfig& cfg, std::size_t signal_length, double sample_rate);

  struct AlphaPath {
    std::size_t bank_index;  ///< index into alpha_bank()
    double alpha;
    double frame_rate;
    std::size_t length;     ///< frames over the padded duration
    std::size_t first_row;  ///< rows [first_row, rows()) are kept
  };

  const ScatteringConfig& config() const { return cfg_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t signal_length() const { return signal_length_; }
  std::size_t padded_length() const { return padded_length_; }
  double duration() const { return duration_; }

  const WaveletBank& lambda_bank() const { return lambda_bank_; }
  const WaveletBank& alpha_bank() const { return alpha_bank_; }
  const LowpassFilter& time_lowpass() const { return time_lowpass_; }
  /// Frequential bank sampled on a symmetric-extension axis of 2*rows bins.
  const WaveletBank& beta_bank(std::size_t rows) const;

  std::size_t rows() const { return lambda_bank_.size(); }
  double row_rate(std::size_t i) const { return row_rates_[i]; }
  std::size_t row_length(std::size_t i) const { return row_lengths_[i]; }
  const std::vector<AlphaPath>& alpha_paths() const { return alpha_paths_; }

  std::size_t output_stride() const { return output_stride_; }
  std::size_t output_length() const { return output_length_; }
  double output_rate() const { return sample_rate_ / static_cast<double>(output_stride_); }
  /// Number of frequential rows after optional averaging by F.
  std::size_t averaged_rows(std::size_t rows) const;

  /// Total number of coefficients produced by jtfs().
  std::size_t coefficient_count() const;

 private:
  ScatteringConfig cfg_;
  double sample_rate_;
  std::size_t signal_length_;
  std::size_t padded_length_;
  double duration_;
  WaveletBank lambda_bank_;
  WaveletBank alpha_bank_;
  LowpassFilter time_lowpass_;
  std::map<std::size_t, WaveletBank> beta_banks_;
  std::vector<double> row_rates_;
  std::vector<std::size_t> row_lengths_;
  std::vector<AlphaPath> alpha_paths_;
  std::size_t output_stride_;
  std::size_t output_length_;
};

struct ScalogramRow {
  double lambda = 0.0;
  double frame_rate = 0.0;
  DualRealArray values;
  /// Half spectrum of `values` (length/2 + 1 bins), cached for second order.
  DualComplexArray spectrum;
};

struct Scalogram {
  std::vector<ScalogramRow> rows;
  double duration = 0.0;
  /// Modulus smoothing floor, kModulusFloor times the input peak; every
  /// modulus downstream uses it, so the transform stays 1-homogeneous.
  double floor = kModulusFloor;

  std::size_t size() const { return rows.size(); }
};

/// Coefficients of one scattering path family, row-major (row, frame).
struct CoeffBlock {
  int order = 1;
  double alpha = 0.0;  ///< Hz; 0 for first order
  double beta = 0.0;   ///< cycles per octave; 0 for the frequential lowpass
  int spin = 0;        ///< +1 up, -1 down, 0 when beta = 0
  std::size_t first_row = 0;
  std::size_t rows = 0;
  std::size_t frames = 0;
  double frame_rate = 0.0;
  DualRealArray values;

  DualScalar at(std::size_t row, std::size_t frame) const {
    return meso::at(values, row * frames + frame);
  }
};

/// Raw second-order moduli |U1 * psi_alpha * psi_beta| for one alpha.
struct SecondOrderBlock {
  JtfsPlan::AlphaPath path;
  std::vector<CoeffBlock> paths;
};

struct JtfsCoeffs {
  std::vector<CoeffBlock> s1;
  std::vector<CoeffBlock> s2;
  ScatteringConfig config;
  std::vector<double> lambdas;

  std::size_t size() const;
  /// Concatenation in the documented flattening order.
  DualRealArray flatten() const;
};

/// U1: smoothed modulus of every temporal wavelet convolution.
Scalogram scalogram(const Signal& x, const JtfsPlan& plan);

/// U2 for second-order path `alpha_index` of plan.alpha_paths().
SecondOrderBlock jtfs_second_order_raw(const Scalogram& u1, const JtfsPlan& plan,
                                       std::size_t alpha_index);

/// S1: time-averaged scalogram followed by frequential wavelet moduli.
std::vector<CoeffBlock> jtfs_s1(const Scalogram& u1, const JtfsPlan& plan);

/// S2: time averaging (and frequential averaging when F > 0) of U2.
std::vector<CoeffBlock> jtfs_s2(const SecondOrderBlock& u2, const JtfsPlan& plan);

JtfsCoeffs jtfs(const Signal& x, const JtfsPlan& plan);

/// Long-format export: order, alpha_hz, beta_cpo, spin, lambda_hz, time_s, value.
void write_coeffs_csv(const std::filesystem::path& path, const JtfsCoeffs& c);
void write_coeffs_json(const std::filesystem::path& path, const JtfsCoeffs& c);

}  // namespace meso
