#pragma once

// Real-coefficient polynomials in the complex frequency variable s.
//
// Coefficients are stored in ascending powers of s, matching the
// "1 + s(...) + s^2(...)" form circuit expressions are written in. The
// library instantiates the template with long double so that coefficient
// sums such as (C1 + Cc)(C2 + Cc) - Cc^2 keep enough digits when the
// capacitances span several decades.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace millerpole {

template <std::floating_point T>
class BasicPolynomial {
 public:
  using value_type = T;

  BasicPolynomial() = default;
  BasicPolynomial(std::initializer_list<T> coeffs) : c_(coeffs) { trim(); }
  explicit BasicPolynomial(std::vector<T> coeffs) : c_(std::move(coeffs)) { trim(); }

  template <std::floating_point U>
  explicit BasicPolynomial(const BasicPolynomial<U>& other)
      : c_(other.coeffs().begin(), other.coeffs().end()) {}

  static BasicPolynomial constant(T v) { return BasicPolynomial({v}); }

  /// c * s^power
  static BasicPolynomial monomial(T c, std::size_t power) {
    std::vector<T> v(power + 1, T{0});
    v[power] = c;
    return BasicPolynomial(std::move(v));
  }

  /// 1 + s*tau, the factor of a real pole at -1/tau.
  static BasicPolynomial time_constant(T tau) { return BasicPolynomial({T{1}, tau}); }

  std::span<const T> coeffs() const noexcept { return c_; }

  /// Coefficient of s^i; zero past the stored degree.
  T operator[](std::size_t i) const noexcept { return i < c_.size() ? c_[i] : T{0}; }

  bool is_zero() const noexcept { return c_.empty(); }

  /// -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }

  T leading() const noexcept { return c_.empty() ? T{0} : c_.back(); }

  T max_abs_coeff() const noexcept {
    T m{0};
    for (T v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Number of exact zero low-order coefficients (multiplicity of s = 0).
  std::size_t origin_multiplicity() const noexcept {
    std::size_t k = 0;
    while (k < c_.size() && c_[k] == T{0}) ++k;
    return k;
  }

  template <std::floating_point U>
  std::complex<U> operator()(std::complex<U> s) const {
    std::complex<U> acc{0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + static_cast<U>(*it);
    return acc;
  }

  T operator()(T s) const {
    T acc{0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  BasicPolynomial derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<T> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<T>(i) * c_[i];
    return BasicPolynomial(std::move(d));
  }

  BasicPolynomial& operator+=(const BasicPolynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T{0});
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    trim();
    return *this;
  }

  BasicPolynomial& operator-=(const BasicPolynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T{0});
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    trim();
    return *this;
  }

  BasicPolynomial& operator*=(T k) {
    for (T& v : c_) v *= k;
    trim();
    return *this;
  }

  BasicPolynomial& operator/=(T k) {
    for (T& v : c_) v /= k;
    trim();
    return *this;
  }

  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator-(BasicPolynomial a) { return a *= T{-1}; }
  friend BasicPolynomial operator*(BasicPolynomial a, T k) { return a *= k; }
  friend BasicPolynomial operator*(T k, BasicPolynomial a) { return a *= k; }
  friend BasicPolynomial operator/(BasicPolynomial a, T k) { return a /= k; }

  friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
    return poly_mul(a, b);
  }

  friend bool operator==(const BasicPolynomial&, const BasicPolynomial&) = default;

  /// Coefficient convolution.
  friend BasicPolynomial poly_mul(const BasicPolynomial& a, const BasicPolynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<T> out(a.c_.size() + b.c_.size() - 1, T{0});
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    }
    return BasicPolynomial(std::move(out));
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == T{0}) c_.pop_back();
  }

  std::vector<T> c_;
};

using Polynomial = BasicPolynomial<long double>;

/// The variable s itself.
template <std::floating_point T = long double>
BasicPolynomial<T> s_var() {
  return BasicPolynomial<T>::monomial(T{1}, 1);
}

/// Largest coefficientwise relative difference, each coefficient compared
/// against the larger magnitude of the pair. Zero when both are identical.
template <std::floating_point T>
T max_relative_difference(const BasicPolynomial<T>& a, const BasicPolynomial<T>& b) {
  const std::size_t n = static_cast<std::size_t>(std::max(a.degree(), b.degree()) + 1);
  T worst{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T x = a[i], y = b[i];
    const T scale = std::max(std::abs(x), std::abs(y));
    if (scale == T{0}) continue;
    worst = std::max(worst, std::abs(x - y) / scale);
  }
  return worst;
}

}  // namespace millerpole
