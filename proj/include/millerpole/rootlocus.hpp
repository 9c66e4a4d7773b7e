#pragma once

// Root-locus sweeps: closed-loop roots of den(L) + k*num(L) over a
// log-spaced gain grid, stitched into continuous branches.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "millerpole/error.hpp"
#include "millerpole/polynomial.hpp"
#include "millerpole/rational.hpp"
#include "millerpole/roots.hpp"

namespace millerpole {

/// positive: 1 + k L(s) = 0 for k > 0 (180-degree locus).
/// negative: 1 - k L(s) = 0 for k > 0 (0-degree locus), used when the loop's
/// high-frequency sign is reversed relative to its midband sign.
enum class LocusRule { positive, negative };

struct LocusTrajectory {
  std::vector<double> gains;
  std::vector<std::vector<cplx>> branches;  ///< branches[b][i] is the root of branch b at gains[i]

  std::size_t branch_count() const noexcept { return branches.size(); }
  std::size_t size() const noexcept { return gains.size(); }

  RootSet at(std::size_t i) const {
    RootSet out;
    for (const auto& b : branches) out.push_back(b[i]);
    return out;
  }
};

struct SweepOptions {
  bool refine = true;
  /// Insert a midpoint when a branch moves by more than this fraction of its
  /// magnitude between consecutive gains.
  double refine_threshold = 0.1;
  int max_refine_depth = 12;
  unsigned threads = 1;
};

/// den(L) + k num(L); k = 0 gives the open-loop poles.
inline Polynomial characteristic(const RationalFunction& loop_hat, double k) {
  return loop_hat.den() + loop_hat.num() * static_cast<long double>(k);
}

struct LocusForm {
  LocusRule rule;
  RationalFunction loop_hat;  ///< numerator leading sign matches the denominator's
};

/// Rewrites a loop so its numerator and denominator have leading coefficients
/// of the same sign, and reports which rule the original gain sign implies.
/// Sweeping the result with that rule reproduces the roots of den + k num.
inline LocusForm locus_form(const RationalFunction& loop) {
  if (loop.num().is_zero()) throw Error("rootlocus", "loop transmission is identically zero");
  const bool flipped = (loop.num().leading() > 0) != (loop.den().leading() > 0);
  if (!flipped) return {LocusRule::positive, loop};
  return {LocusRule::negative, -loop};
}

namespace detail {

// Minimal-cost assignment (Hungarian algorithm). Returns col[row].
inline std::vector<std::size_t> assign(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col(n);
  for (std::size_t j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
  return col;
}

inline double alignment(cplx from, cplx to, cplx velocity) {
  const cplx step = to - from;
  const double ns = std::abs(step), nv = std::abs(velocity);
  if (ns == 0 || nv == 0) return 0;
  return (step.real() * velocity.real() + step.imag() * velocity.imag()) / (ns * nv);
}

// Orders `next` so that next[b] continues branch b. Total displacement is
// minimized; pairs whose swap leaves the total unchanged (coalescence) are
// resolved by keeping each branch's previous direction of travel.
inline RootSet match_branches(const RootSet& prev, const RootSet& velocity, const RootSet& next) {
  const std::size_t n = prev.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i][j] = std::abs(next[j] - prev[i]);
  }
  auto col = assign(cost);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double keep = cost[i][col[i]] + cost[j][col[j]];
      const double swap = cost[i][col[j]] + cost[j][col[i]];
      if (std::abs(swap - keep) > 1e-9 * (keep + swap)) continue;
      const double a_keep =
          alignment(prev[i], next[col[i]], velocity[i]) + alignment(prev[j], next[col[j]], velocity[j]);
      const double a_swap =
          alignment(prev[i], next[col[j]], velocity[i]) + alignment(prev[j], next[col[i]], velocity[j]);
      if (a_swap > a_keep) std::swap(col[i], col[j]);
    }
  }
  RootSet out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = next[col[i]];
  return out;
}

inline bool jumps(const RootSet& a, const RootSet& b, double threshold) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (std::abs(b[i] - a[i]) > threshold * scale) return true;
  }
  return false;
}

template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Tracker {
 public:
  Tracker(const std::function<Polynomial(double)>& char_at, const SweepOptions& opt, LocusTrajectory& out)
      : char_at_(char_at), opt_(opt), out_(out) {}

  RootSet solve(double g) const {
    const Polynomial p = char_at_(g);
    if (p.degree() < 1) throw Error("rootlocus", "characteristic degree changes along the sweep");
    return roots(p);
  }

  void start(double g, RootSet r) {
    cur_ = std::move(r);
    vel_.assign(cur_.size(), cplx{0});
    out_.branches.assign(cur_.size(), {});
    append(g, cur_);
  }

  void advance(double g_from, double g_to, const RootSet& raw, int depth) {
    if (raw.size() != cur_.size()) throw Error("rootlocus", "characteristic degree changes along the sweep");
    RootSet next = match_branches(cur_, vel_, raw);
    if (opt_.refine && depth < opt_.max_refine_depth && jumps(cur_, next, opt_.refine_threshold)) {
      const double mid = std::sqrt(g_from * g_to);
      if (mid > g_from && mid < g_to) {
        advance(g_from, mid, solve(mid), depth + 1);
        advance(mid, g_to, raw, depth + 1);
        return;
      }
    }
    for (std::size_t i = 0; i < next.size(); ++i) vel_[i] = next[i] - cur_[i];
    cur_ = std::move(next);
    append(g_to, cur_);
  }

 private:
  void append(double g, const RootSet& r) {
    out_.gains.push_back(g);
    for (std::size_t i = 0; i < r.size(); ++i) out_.branches[i].push_back(r[i]);
  }

  const std::function<Polynomial(double)>& char_at_;
  const SweepOptions& opt_;
  LocusTrajectory& out_;
  RootSet cur_, vel_;
};

}  // namespace detail

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0) || !(hi >= lo) || n < 2) throw Error("rootlocus", "log grid needs 0 < lo <= hi and n >= 2");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Tracks the roots of char_at(g) over a log-spaced grid of a positive
/// parameter g. The base grid is solved concurrently; branch matching and
/// adaptive refinement are a sequential pass.
inline LocusTrajectory track(const std::function<Polynomial(double)>& char_at, double lo, double hi, std::size_t n,
                             const SweepOptions& opt = {}) {
  const auto grid = log_grid(lo, hi, n);
  LocusTrajectory out;
  detail::Tracker tracker(char_at, opt, out);
  std::vector<RootSet> raw(grid.size());
  detail::parallel_for(grid.size(), opt.threads, [&](std::size_t i) { raw[i] = tracker.solve(grid[i]); });

  tracker.start(grid[0], raw[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) tracker.advance(grid[i - 1], grid[i], raw[i], 0);
  return out;
}

/// Root locus of loop_hat for gains k in [k_min, k_max]. With the negative
/// rule the numerator is negated, i.e. the roots of den - k num are tracked.
inline LocusTrajectory sweep(const RationalFunction& loop_hat, double k_min, double k_max, std::size_t n,
                             LocusRule rule, const SweepOptions& opt = {}) {
  if (!(k_min > 0)) throw Error("rootlocus", "sweep requires k_min > 0");
  if (n < 2) throw Error("rootlocus", "sweep requires at least two gain points");
  const double sign = rule == LocusRule::positive ? 1.0 : -1.0;
  return track([&](double k) { return characteristic(loop_hat, sign * k); }, k_min, k_max, n, opt);
}

/// Real breakaway / break-in points: real roots of N D' - N' D at which the
/// locus gain k = -D/N is real and admissible for the requested rule
/// (k >= 0 positive, k <= 0 negative, either when no rule is given).
inline RootSet breakaway_points(const RationalFunction& loop_hat, std::optional<LocusRule> rule = std::nullopt) {
  const Polynomial& n = loop_hat.num();
  const Polynomial& d = loop_hat.den();
  if (n.is_zero()) throw Error("rootlocus", "loop transmission is identically zero");
  const Polynomial w = n * d.derivative() - n.derivative() * d;
  RootSet out;
  if (w.degree() < 1) return out;
  for (const auto& r : roots(w)) {
    if (std::abs(r.imag()) > 1e-7 * std::max(std::abs(r), 1e-300)) continue;
    const long double x = r.real();
    const long double nx = n(x);
    if (nx == 0) continue;
    const long double k = -d(x) / nx;
    if (rule == LocusRule::positive && k < 0) continue;
    if (rule == LocusRule::negative && k > 0) continue;
    const cplx pt{static_cast<double>(x), 0.0};
    if (std::none_of(out.begin(), out.end(), [&](cplx q) { return std::abs(q - pt) <= 1e-9 * std::abs(pt); })) {
      out.push_back(pt);
    }
  }
  return sorted_roots(out);
}

}  // namespace millerpole
