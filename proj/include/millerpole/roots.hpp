#pragma once

// Complex root extraction for real-coefficient polynomials.
//
// Roots at the origin are deflated exactly. The remaining polynomial is
// rescaled with s = sigma * x, sigma = |c0 / cn|^(1/n) (the geometric mean of
// the root magnitudes), so circuit polynomials whose time constants span many
// decades become well conditioned. The balanced companion matrix is solved in
// long double and each eigenvalue is then polished by guarded Newton steps on
// the scaled polynomial.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "millerpole/error.hpp"
#include "millerpole/polynomial.hpp"

namespace millerpole {

using cplx = std::complex<double>;

/// Multiset of complex roots (rad/s), sorted by magnitude, then real part,
/// then imaginary part. Non-real entries come in exact conjugate pairs.
using RootSet = std::vector<cplx>;

inline constexpr double kRootResidualTolerance = 1e-9;

/// Roots of c0 + c1 s + c2 s^2 with c2 != 0. Complex pairs are returned as
/// exact conjugates (negative imaginary part first); real pairs use the
/// cancellation-free form.
template <std::floating_point T>
std::pair<std::complex<T>, std::complex<T>> quadratic_roots(T c0, T c1, T c2) {
  if (c2 == T{0}) throw Error("polyalg", "quadratic with zero leading coefficient");
  const T disc = std::fma(c1, c1, -T{4} * c2 * c0);
  if (disc >= T{0}) {
    const T q = -(c1 + std::copysign(std::sqrt(disc), c1)) / T{2};
    if (q == T{0}) return {T{0}, T{0}};
    std::complex<T> r1{q / c2}, r2{c0 / q};
    if (std::abs(r2) < std::abs(r1)) std::swap(r1, r2);
    return {r1, r2};
  }
  const T re = -c1 / (T{2} * c2);
  const T im = std::sqrt(-disc) / (T{2} * std::abs(c2));
  return {{re, -im}, {re, im}};
}

namespace detail {

template <typename T>
using DynMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Parlett-Reinsch balancing with power-of-two scale factors, over the full
// row and column norms.
template <typename T>
void balance(DynMatrix<T>& m) {
  const T gamma = T(0.9);
  const Eigen::Index n = m.rows();
  bool changed = true;
  int sweeps = 0;
  while (changed && sweeps++ < 100) {
    changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const T row = m.row(i).cwiseAbs().sum();
      const T col = m.col(i).cwiseAbs().sum();
      if (row == T{0} || col == T{0}) continue;
      int e = 0;
      std::frexp(row / col, &e);
      e /= 2;
      if (e == 0) continue;
      if (std::ldexp(col, e) + std::ldexp(row, -e) < gamma * (col + row)) {
        changed = true;
        m.row(i) *= std::ldexp(T{1}, -e);
        m.col(i) *= std::ldexp(T{1}, e);
      }
    }
  }
}

template <typename T>
std::complex<T> horner(const std::vector<T>& c, std::complex<T> z, std::complex<T>* deriv) {
  std::complex<T> p{0}, d{0};
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    d = d * z + p;
    p = p * z + *it;
  }
  if (deriv) *deriv = d;
  return p;
}

template <typename T>
std::complex<T> polish(const std::vector<T>& c, std::complex<T> z) {
  std::complex<T> d;
  std::complex<T> p = horner(c, z, &d);
  for (int it = 0; it < 40 && std::abs(p) > T{0}; ++it) {
    if (std::abs(d) == T{0}) break;
    const std::complex<T> next = z - p / d;
    std::complex<T> dn;
    const std::complex<T> pn = horner(c, next, &dn);
    if (!(std::abs(pn) < std::abs(p))) break;
    z = next;
    p = pn;
    d = dn;
  }
  return z;
}

template <typename T>
std::vector<std::complex<T>> eigen_roots(const std::vector<T>& monic) {
  const auto n = static_cast<Eigen::Index>(monic.size() - 1);
  DynMatrix<T> comp = DynMatrix<T>::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = T{1};
  for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -monic[static_cast<std::size_t>(i)];
  balance(comp);
  Eigen::EigenSolver<DynMatrix<T>> solver(comp, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw Error("polyalg", "eigenvalue iteration did not converge");
  std::vector<std::complex<T>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()(i));
  return out;
}

template <typename T>
void enforce_conjugate_pairs(std::vector<std::complex<T>>& r) {
  std::vector<bool> used(r.size(), false);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (used[i] || r[i].imag() <= T{0}) continue;
    std::size_t best = r.size();
    T best_d = std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (used[j] || j == i || r[j].imag() >= T{0}) continue;
      const T d = std::abs(r[i] - std::conj(r[j]));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == r.size()) continue;
    const T re = (r[i].real() + r[best].real()) / T{2};
    const T im = (r[i].imag() - r[best].imag()) / T{2};
    r[i] = {re, im};
    r[best] = {re, -im};
    used[i] = used[best] = true;
  }
  // A non-real root without a partner cannot occur for real coefficients;
  // it is an artifact of roundoff and is projected onto the real axis.
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!used[i] && r[i].imag() != T{0}) r[i] = {r[i].real(), T{0}};
  }
}

template <typename T>
bool root_less(const std::complex<T>& a, const std::complex<T>& b) {
  const T ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma < mb;
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace detail

/// Normalized residual |p(r)| / (max|c| * max(1, |r|)^deg).
template <std::floating_point T>
T root_residual(const BasicPolynomial<T>& p, std::complex<T> r) {
  const T scale = p.max_abs_coeff() * std::pow(std::max(T{1}, std::abs(r)), static_cast<T>(p.degree()));
  return std::abs(p(r)) / scale;
}

/// All complex roots of p, in working precision T.
template <std::floating_point T>
std::vector<std::complex<T>> roots_exact(const BasicPolynomial<T>& p) {
  if (p.degree() < 1) throw Error("polyalg", "no roots defined");

  const std::size_t zeros = p.origin_multiplicity();
  std::vector<std::complex<T>> out(zeros, std::complex<T>{0});
  std::vector<T> q(p.coeffs().begin() + static_cast<std::ptrdiff_t>(zeros), p.coeffs().end());
  const std::size_t n = q.size() - 1;

  if (n == 1) {
    out.emplace_back(-q[0] / q[1]);
  } else if (n == 2) {
    auto [a, b] = quadratic_roots(q[0], q[1], q[2]);
    out.push_back(a);
    out.push_back(b);
  } else if (n > 2) {
    const T sigma = std::pow(std::abs(q[0] / q[n]), T{1} / static_cast<T>(n));
    std::vector<T> scaled(n + 1);
    T pw{1};
    for (std::size_t i = 0; i <= n; ++i) {
      scaled[i] = q[i] * pw;
      pw *= sigma;
    }
    const T lead = scaled[n];
    for (T& v : scaled) v /= lead;
    for (auto z : detail::eigen_roots(scaled)) out.push_back(detail::polish(scaled, z) * sigma);
  }

  detail::enforce_conjugate_pairs(out);
  std::sort(out.begin(), out.end(), detail::root_less<T>);

  for (const auto& r : out) {
    if (!(root_residual(p, r) <= static_cast<T>(kRootResidualTolerance))) {
      throw Error("polyalg", "root extraction failed to reach residual tolerance");
    }
  }
  return out;
}

/// All complex roots of p (multiplicity-aware), reported in double.
template <std::floating_point T>
RootSet roots(const BasicPolynomial<T>& p) {
  RootSet out;
  for (const auto& r : roots_exact(p)) out.emplace_back(static_cast<double>(r.real()), static_cast<double>(r.imag()));
  return out;
}

inline RootSet sorted_roots(RootSet r) {
  std::sort(r.begin(), r.end(), detail::root_less<double>);
  return r;
}

}  // namespace millerpole
