#include "meso/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace meso::fft {
namespace {

enum class Kind { R2C, Forward, Backward, ForwardColumns, BackwardColumns };

using Key = std::tuple<Kind, std::size_t, std::size_t, bool>;

// The FFTW planner is not reentrant; execution with the new-array interface is.
std::mutex g_planner_mutex;
std::map<Key, fftw_plan>& plan_cache() {
  static std::map<Key, fftw_plan> cache;
  return cache;
}

bool is_aligned(const void* p) {
  return fftw_alignment_of(static_cast<double*>(const_cast<void*>(p))) == 0;
}

fftw_plan make_plan(const Key& key) {
  const auto [kind, n, count, aligned] = key;
  const unsigned flags = FFTW_MEASURE | (aligned ? 0U : FFTW_UNALIGNED);
  const int ni = static_cast<int>(n);
  const int ci = static_cast<int>(count);
  fftw_plan plan = nullptr;
  if (kind == Kind::R2C) {
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(ni, in, out, flags);
    fftw_free(in);
    fftw_free(out);
  } else {
    fftw_complex* buf = fftw_alloc_complex(n * count);
    const int sign = (kind == Kind::Forward || kind == Kind::ForwardColumns) ? FFTW_FORWARD
                                                                             : FFTW_BACKWARD;
    if (kind == Kind::Forward || kind == Kind::Backward) {
      plan = fftw_plan_many_dft(1, &ni, ci, buf, nullptr, 1, ni, buf, nullptr, 1, ni, sign, flags);
    } else {
      plan = fftw_plan_many_dft(1, &ni, ci, buf, nullptr, ci, 1, buf, nullptr, ci, 1, sign, flags);
    }
    fftw_free(buf);
  }
  if (plan == nullptr) throw std::runtime_error("fft: planner failed");
  return plan;
}

fftw_plan get_plan(Kind kind, std::size_t n, std::size_t count, bool aligned) {
  const Key key{kind, n, count, aligned};
  std::lock_guard lock(g_planner_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  fftw_plan plan = make_plan(key);
  cache.emplace(key, plan);
  return plan;
}

void run_c2c(Kind kind, std::span<cplx> data, std::size_t n, std::size_t count) {
  if (n == 0 || count == 0) return;
  if (data.size() != n * count) throw std::invalid_argument("fft: buffer size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = get_plan(kind, n, count, is_aligned(p));
  fftw_execute_dft(plan, p, p);
}

}  // namespace

void r2c(std::span<const double> in, std::span<cplx> out) {
  const std::size_t n = in.size();
  if (out.size() != n / 2 + 1) throw std::invalid_argument("fft::r2c: output size mismatch");
  auto* ip = const_cast<double*>(in.data());
  auto* op = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan = get_plan(Kind::R2C, n, 1, is_aligned(ip) && is_aligned(op));
  fftw_execute_dft_r2c(plan, ip, op);
}

void forward(std::span<cplx> data, std::size_t n, std::size_t count) {
  run_c2c(Kind::Forward, data, n, count);
}
void backward(std::span<cplx> data, std::size_t n, std::size_t count) {
  run_c2c(Kind::Backward, data, n, count);
}
void forward_columns(std::span<cplx> data, std::size_t n, std::size_t count) {
  run_c2c(Kind::ForwardColumns, data, n, count);
}
void backward_columns(std::span<cplx> data, std::size_t n, std::size_t count) {
  run_c2c(Kind::BackwardColumns, data, n, count);
}

}  // namespace meso::fft
