#pragma once

// Forward-mode differentiation with a fixed two-dimensional tangent space.
//
// Tangent slot 0 carries d/d(f_m) and slot 1 carries d/d(gamma). Every
// pipeline in this library (synthesis, wavelet transforms, losses) is
// differentiated by pushing these two tangents alongside the primal value.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meso/aligned.hpp"

namespace meso {

/// Raised when an elementary operation is evaluated outside its domain.
class NumericDomainError : public std::domain_error {
 public:
  explicit NumericDomainError(const std::string& op)
      : std::domain_error("numeric domain error in " + op), op_(op) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

using Tangent = std::array<double, 2>;

struct DualScalar {
  double value = 0.0;
  Tangent tangent{0.0, 0.0};

  constexpr DualScalar() = default;
  constexpr DualScalar(double v) : value(v) {}  // NOLINT: constants promote implicitly
  constexpr DualScalar(double v, Tangent t) : value(v), tangent(t) {}

  constexpr bool is_constant() const { return tangent[0] == 0.0 && tangent[1] == 0.0; }

  constexpr DualScalar& operator+=(const DualScalar& o) {
    value += o.value;
    tangent[0] += o.tangent[0];
    tangent[1] += o.tangent[1];
    return *this;
  }
  constexpr DualScalar& operator-=(const DualScalar& o) {
    value -= o.value;
    tangent[0] -= o.tangent[0];
    tangent[1] -= o.tangent[1];
    return *this;
  }
  constexpr DualScalar& operator*=(const DualScalar& o) {
    tangent[0] = tangent[0] * o.value + value * o.tangent[0];
    tangent[1] = tangent[1] * o.value + value * o.tangent[1];
    value *= o.value;
    return *this;
  }
};

/// Seeds `value` as parameter `index` (0 = f_m, 1 = gamma), or as a constant.
constexpr DualScalar lift(double value, std::optional<int> index = std::nullopt) {
  DualScalar d(value);
  if (index) d.tangent[static_cast<std::size_t>(*index)] = 1.0;
  return d;
}

constexpr DualScalar operator-(const DualScalar& a) {
  return {-a.value, {-a.tangent[0], -a.tangent[1]}};
}
constexpr DualScalar operator+(DualScalar a, const DualScalar& b) { return a += b; }
constexpr DualScalar operator-(DualScalar a, const DualScalar& b) { return a -= b; }
constexpr DualScalar operator*(DualScalar a, const DualScalar& b) { return a *= b; }

inline DualScalar operator/(const DualScalar& a, const DualScalar& b) {
  if (b.value == 0.0) throw NumericDomainError("div");
  const double q = a.value / b.value;
  return {q,
          {(a.tangent[0] - q * b.tangent[0]) / b.value,
           (a.tangent[1] - q * b.tangent[1]) / b.value}};
}

// Unary functions: f(a) with tangent f'(a.value) * a.tangent.
namespace detail {
constexpr DualScalar chain(const DualScalar& a, double f, double df) {
  return {f, {df * a.tangent[0], df * a.tangent[1]}};
}
}  // namespace detail

inline DualScalar sin(const DualScalar& a) {
  return detail::chain(a, std::sin(a.value), std::cos(a.value));
}
inline DualScalar cos(const DualScalar& a) {
  return detail::chain(a, std::cos(a.value), -std::sin(a.value));
}
inline DualScalar exp(const DualScalar& a) {
  const double e = std::exp(a.value);
  return detail::chain(a, e, e);
}
/// 2^a
inline DualScalar pow2(const DualScalar& a) {
  const double e = std::exp2(a.value);
  return detail::chain(a, e, e * std::numbers::ln2);
}
inline DualScalar log(const DualScalar& a) {
  if (!(a.value > 0.0)) throw NumericDomainError("log");
  return detail::chain(a, std::log(a.value), 1.0 / a.value);
}
inline DualScalar sqrt(const DualScalar& a) {
  if (!(a.value > 0.0)) throw NumericDomainError("sqrt");
  const double s = std::sqrt(a.value);
  return detail::chain(a, s, 0.5 / s);
}

struct DualComplex {
  DualScalar re;
  DualScalar im;
};

inline DualComplex operator+(const DualComplex& a, const DualComplex& b) {
  return {a.re + b.re, a.im + b.im};
}
inline DualComplex operator-(const DualComplex& a, const DualComplex& b) {
  return {a.re - b.re, a.im - b.im};
}
inline DualComplex operator*(const DualComplex& a, const DualComplex& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

/// Floor of the smoothed complex modulus, relative to the signal scale.
inline constexpr double kModulusFloor = 1e-12;

/// Smoothed modulus sqrt(re^2 + im^2 + eps^2).
inline DualScalar abs(const DualComplex& z, double eps = kModulusFloor) {
  if (!(eps > 0.0)) throw NumericDomainError("abs");
  const double m = std::sqrt(z.re.value * z.re.value + z.im.value * z.im.value + eps * eps);
  return {m,
          {(z.re.value * z.re.tangent[0] + z.im.value * z.im.tangent[0]) / m,
           (z.re.value * z.re.tangent[1] + z.im.value * z.im.tangent[1]) / m}};
}

/// Central finite-difference gradient of a scalar function of theta.
inline Tangent fd_oracle(const std::function<double(const Tangent&)>& f, const Tangent& theta,
                         double h) {
  if (!(h > 0.0)) throw NumericDomainError("fd_oracle");
  Tangent g{};
  for (std::size_t i = 0; i < 2; ++i) {
    Tangent up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

/// Channel-wise storage for a sequence of duals: lane 0 is the primal value,
/// lanes 1 and 2 are the tangents. Constant arrays keep only lane 0, so every
/// downstream stage skips tangent work for them.
template <class T>
class DualArray {
 public:
  DualArray() = default;
  DualArray(std::size_t n, bool with_tangents) : lanes_(with_tangents ? 3 : 1) {
    for (auto& l : lanes_) l.assign(n, T{});
  }

  std::size_t size() const { return lanes_.empty() ? 0 : lanes_[0].size(); }
  bool has_tangents() const { return lanes_.size() == 3; }
  std::size_t lane_count() const { return lanes_.size(); }

  std::span<T> lane(std::size_t k) { return lanes_[k]; }
  std::span<const T> lane(std::size_t k) const { return lanes_[k]; }
  std::span<const T> value() const { return lanes_[0]; }

  /// Promotes a constant array to one with zero tangents.
  void add_tangents() {
    if (has_tangents()) return;
    lanes_.resize(3, AlignedVector<T>(size(), T{}));
  }

 private:
  std::vector<AlignedVector<T>> lanes_;
};

using DualRealArray = DualArray<double>;
using DualComplexArray = DualArray<std::complex<double>>;

inline DualScalar at(const DualRealArray& a, std::size_t i) {
  DualScalar d(a.lane(0)[i]);
  if (a.has_tangents()) d.tangent = {a.lane(1)[i], a.lane(2)[i]};
  return d;
}

inline void set(DualRealArray& a, std::size_t i, const DualScalar& d) {
  a.lane(0)[i] = d.value;
  if (a.has_tangents()) {
    a.lane(1)[i] = d.tangent[0];
    a.lane(2)[i] = d.tangent[1];
  }
}

}  // namespace meso
