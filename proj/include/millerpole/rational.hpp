#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "millerpole/error.hpp"
#include "millerpole/polynomial.hpp"

namespace millerpole {

/// Ratio of two real polynomials in s, kept in canonical form: a nonzero
/// constant denominator term is normalized to 1 ("1 + s(...)"), otherwise the
/// denominator is made monic. Common factors are never cancelled.
template <std::floating_point T>
class BasicRational {
 public:
  using poly_type = BasicPolynomial<T>;

  BasicRational() : num_{}, den_{T{1}} {}
  BasicRational(poly_type num, poly_type den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw Error("polyalg", "rational function with zero denominator");
    canonicalize();
  }
  explicit BasicRational(poly_type num) : BasicRational(std::move(num), poly_type{T{1}}) {}

  static BasicRational constant(T v) { return BasicRational(poly_type{v}); }

  const poly_type& num() const noexcept { return num_; }
  const poly_type& den() const noexcept { return den_; }

  friend BasicRational operator*(const BasicRational& a, const BasicRational& b) {
    return BasicRational(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend BasicRational operator*(T k, const BasicRational& a) { return BasicRational(a.num_ * k, a.den_); }
  friend BasicRational operator-(const BasicRational& a) { return BasicRational(-a.num_, a.den_); }

  friend bool operator==(const BasicRational&, const BasicRational&) = default;

 private:
  void canonicalize() {
    const T norm = den_[0] != T{0} ? den_[0] : den_.leading();
    if (norm != T{1}) {
      num_ /= norm;
      den_ /= norm;
    }
  }

  poly_type num_;
  poly_type den_;
};

using RationalFunction = BasicRational<long double>;

/// a / (1 + a*beta), formed by exact polynomial arithmetic:
/// num = Na*Db, den = Da*Db + Na*Nb.
template <std::floating_point T>
BasicRational<T> rational_close(const BasicRational<T>& a, const BasicRational<T>& beta) {
  auto den = a.den() * beta.den() + a.num() * beta.num();
  if (den.is_zero()) throw Error("polyalg", "degenerate feedback");
  return BasicRational<T>(a.num() * beta.den(), std::move(den));
}

/// num(s)/den(s) by Horner evaluation.
template <std::floating_point T, std::floating_point U>
std::complex<U> eval(const BasicRational<T>& r, std::complex<U> s) {
  const auto d = r.den()(std::complex<T>(s));
  T scale{0};
  T pw{1};
  for (T c : r.den().coeffs()) {
    scale += std::abs(c) * pw;
    pw *= std::abs(std::complex<T>(s));
  }
  if (std::abs(d) <= scale * std::numeric_limits<T>::epsilon()) throw Error("polyalg", "pole evaluation");
  const auto n = r.num()(std::complex<T>(s));
  const auto q = n / d;
  return {static_cast<U>(q.real()), static_cast<U>(q.imag())};
}

/// Cross-multiplied equality a.num*b.den == b.num*a.den within a relative
/// coefficient tolerance; equality of rational functions without requiring
/// common factors to be cancelled.
template <std::floating_point T>
bool equivalent(const BasicRational<T>& a, const BasicRational<T>& b, T rel_tol) {
  return max_relative_difference(a.num() * b.den(), b.num() * a.den()) <= rel_tol;
}

}  // namespace millerpole
