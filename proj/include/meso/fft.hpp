#pragma once

// Thin FFTW front end with a process-wide plan cache.
//
// All transforms are unnormalized, matching FFTW: a forward transform followed
// by a backward one scales the data by n.

#include <complex>
#include <cstddef>
#include <span>

namespace meso::fft {

using cplx = std::complex<double>;

/// Real-to-half-complex forward transform; out.size() must be in.size()/2 + 1.
void r2c(std::span<const double> in, std::span<cplx> out);

/// In-place complex transform of `count` contiguous blocks of length n.
void forward(std::span<cplx> data, std::size_t n, std::size_t count = 1);
void backward(std::span<cplx> data, std::size_t n, std::size_t count = 1);

/// Strided batch: transforms `count` sequences of length n where element j of
/// sequence b lives at data[b + j * count]. Used for column-wise transforms of
/// row-major matrices.
void forward_columns(std::span<cplx> data, std::size_t n, std::size_t count);
void backward_columns(std::span<cplx> data, std::size_t n, std::size_t count);

}  // namespace meso::fft
