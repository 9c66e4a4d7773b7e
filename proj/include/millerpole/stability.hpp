#pragma once

// Gain-bandwidth, phase margin, damping and the scenario reports. Phase
// margin refers to the unity-feedback voltage gain gm0*A(s): its DC gain is
// GBW/|p_cd| and its poles and zeros are those of the transimpedance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "millerpole/error.hpp"
#include "millerpole/feedback.hpp"
#include "millerpole/netlist.hpp"
#include "millerpole/polesplit.hpp"
#include "millerpole/roots.hpp"

namespace millerpole {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;

inline double gbw(const CircuitParams& params) {
  struct Visitor {
    double operator()(const TwoStageParams& p) const { return over(p.gm0, p.Cc); }
    double operator()(const CurrentBufferParams& p) const { return over(p.gm0, p.Cc); }
    double operator()(const NmcParams& p) const { return over(p.gm0 > 0 ? std::optional(p.gm0) : std::nullopt, p.Cc0); }
    static double over(std::optional<double> gm0, double cc) {
      if (!gm0 || !(*gm0 > 0)) throw Error("stability", "input transconductance required");
      if (!(cc > 0)) throw Error("stability", "GBW undefined without a compensation capacitor");
      return *gm0 / cc;
    }
  };
  return std::visit(Visitor{}, params);
}

struct PhaseMargin {
  double closed_form_deg = 0;
  std::optional<double> numeric_deg;
  std::optional<double> crossover;  ///< unity-magnitude frequency of the numeric variant, rad/s
  Warnings warnings;
};

namespace detail {

// Phase of the factor (1 - s/r) at s = jw, in (-180, 180]. For roots off the
// imaginary axis each factor's phase is continuous in w, so sums of these
// give the unwrapped phase of the product.
inline double factor_phase(cplx r, double w) { return std::arg(cplx(1.0, 0.0) - cplx(0.0, w) / r); }

inline double wrap_deg(double d) {
  d = std::fmod(d, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

inline std::size_t dominant_index(const RootSet& poles) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < poles.size(); ++i) {
    if (std::abs(poles[i]) < std::abs(poles[k])) k = i;
  }
  return k;
}

}  // namespace detail

/// Phase margin of the voltage-gain model with the given poles (one of them
/// dominant) and finite zeros. The closed form takes 90 degrees for the
/// dominant pole and adds each remaining factor's phase at w = GBW; the
/// numeric variant locates |L(jw)| = 1 and reports 180 + arg L there.
inline PhaseMargin phase_margin(const RootSet& poles, const RootSet& zeros, double gbw) {
  if (poles.empty()) throw Error("stability", "phase margin needs at least one pole");
  if (!(gbw > 0)) throw Error("stability", "GBW must be positive");
  for (const auto& p : poles) {
    if (p == cplx{0}) throw Error("stability", "pole at the origin");
  }
  PhaseMargin pm;
  const std::size_t dom = detail::dominant_index(poles);
  const double pd = std::abs(poles[dom]);
  if (pd * 10 > gbw) {
    pm.warnings.push_back({"dominant-pole-validity", "dominant pole is not well below GBW"});
  }

  double phase = 0;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (i != dom) phase -= detail::factor_phase(poles[i], gbw);
  }
  for (const auto& z : zeros) {
    if (z != cplx{0}) phase += detail::factor_phase(z, gbw);
  }
  pm.closed_form_deg = detail::wrap_deg(90.0 + phase * kDegPerRad);

  // L(jw) = (GBW/|p_d|) prod(1 - jw/z) / prod(1 - jw/p)
  const double a0 = gbw / pd;
  auto log_mag = [&](double w) {
    double m = std::log(a0);
    for (const auto& p : poles) m -= std::log(std::abs(cplx(1.0, 0.0) - cplx(0.0, w) / p));
    for (const auto& z : zeros) {
      if (z != cplx{0}) m += std::log(std::abs(cplx(1.0, 0.0) - cplx(0.0, w) / z));
    }
    return m;
  };
  double hi_scale = gbw;
  for (const auto& p : poles) hi_scale = std::max(hi_scale, std::abs(p));
  for (const auto& z : zeros) hi_scale = std::max(hi_scale, std::abs(z));
  const double lo = std::log(pd * 1e-3), hi = std::log(hi_scale * 1e3);
  const int n = static_cast<int>(std::ceil((hi - lo) / std::log(10.0) * 64)) + 1;
  std::optional<std::pair<double, double>> bracket;
  double prev_x = lo;
  double prev_m = log_mag(std::exp(lo));
  if (prev_m > 0) {
    for (int i = 1; i < n; ++i) {
      const double x = lo + (hi - lo) * i / (n - 1);
      const double m = log_mag(std::exp(x));
      if (m <= 0) {
        bracket = {prev_x, x};
        break;
      }
      prev_x = x;
      prev_m = m;
    }
  }
  if (!bracket) {
    pm.warnings.push_back({"no-crossover", "no unity-gain crossover found; closed form only"});
    return pm;
  }
  auto [a, b] = *bracket;
  for (int it = 0; it < 200 && b - a > 1e-15 * std::abs(b); ++it) {
    const double mid = 0.5 * (a + b);
    (log_mag(std::exp(mid)) > 0 ? a : b) = mid;
  }
  const double wc = std::exp(0.5 * (a + b));
  double ph = 0;
  for (const auto& p : poles) ph -= detail::factor_phase(p, wc);
  for (const auto& z : zeros) {
    if (z != cplx{0}) ph += detail::factor_phase(z, wc);
  }
  pm.crossover = wc;
  pm.numeric_deg = detail::wrap_deg(180.0 + ph * kDegPerRad);
  return pm;
}

/// 90 - atan[2 xi u / (1 - u^2)], u = GBW/w_n, with the arctangent taken on
/// the branch that stays continuous through u = 1.
inline double pm_complex_pair(double xi, double omega_n, double gbw) {
  if (!(omega_n > 0) || !(gbw > 0)) throw Error("stability", "natural frequency and GBW must be positive");
  const double u = gbw / omega_n;
  return 90.0 - std::atan2(2.0 * xi * u, 1.0 - u * u) * kDegPerRad;
}

struct Damping {
  double xi = 0;
  double omega_n = 0;
};

struct PoleDeviation {
  cplx approx;
  cplx oracle;
  double relative = 0;
};

struct StabilityReport {
  Topology topology{};
  std::optional<double> gbw;
  std::optional<double> pm_deg;          ///< closed form
  std::optional<double> pm_numeric_deg;
  std::optional<double> crossover;
  RootSet approx_poles, approx_zeros;
  RootSet oracle_poles, oracle_zeros;
  std::vector<PoleDeviation> deviations;
  std::optional<Damping> damping;
  std::string scenario;
  Warnings warnings;
  std::vector<std::string> annotations;
  std::string convention;
};

inline constexpr const char* kPmConvention =
    "phase margin of the unity-feedback voltage gain gm0*A(s); DC gain GBW/|p_cd|; "
    "closed form counts 90 deg for the dominant pole";

inline constexpr const char* kNmcAnnotation =
    "with p_cnd1 held at 2 GBW, p_o2 must stay far above GBW; placing |p_cnd2| at 2 GBW as well "
    "(separate-pole placement) is not reachable in this structure";

struct ReportOptions {
  bool feedforward = true;        ///< keep the RHP zero of the two-stage amplifier
  double validity_ratio = kDefaultValidityRatio;
  double cancellation = 0.1;      ///< relative distance to z_a for the optimum-gmc scenario
  double ideal_buffer_ratio = 1000;
};

namespace detail {

inline std::vector<PoleDeviation> match_to_oracle(const RootSet& approx, const RootSet& oracle) {
  std::vector<PoleDeviation> out;
  std::vector<bool> used(oracle.size(), false);
  for (const auto& a : approx) {
    std::size_t best = oracle.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(a - oracle[j]) / std::abs(oracle[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == oracle.size()) break;
    used[best] = true;
    out.push_back({a, oracle[best], best_d});
  }
  return out;
}

inline std::optional<Damping> pair_damping(const RootSet& poles) {
  for (const auto& p : poles) {
    if (p.imag() < 0) return Damping{-p.real() / std::abs(p), std::abs(p)};
  }
  return std::nullopt;
}

inline void append(Warnings& to, const Warnings& from) { to.insert(to.end(), from.begin(), from.end()); }

// max_i |p_cnd,i - z_a| / |z_a|
inline double cancellation_distance(const RootSet& pair, double za) {
  double d = 0;
  for (const auto& p : pair) d = std::max(d, std::abs(p - cplx{za}) / std::abs(za));
  return d;
}

inline std::string nmc_scenario(double x) {
  if (x >= 50) return "fig11a";
  if (x >= 8 * (1 - 1e-6)) return "fig11b";
  return "fig11c";
}

}  // namespace detail

/// Approximate and exact poles/zeros of the closed-loop transimpedance, PM,
/// damping and the matching figure scenario.
inline StabilityReport scenario_report(const CircuitParams& params, const ReportOptions& opt = {}) {
  validate(params);
  StabilityReport rep;
  rep.topology = topology_of(params);
  rep.convention = kPmConvention;

  if (const auto* p = std::get_if<TwoStageParams>(&params)) {
    const auto s = two_stage_split(*p);
    detail::append(rep.warnings, s.warnings);
    rep.approx_poles = sorted_roots({*s.p_cd, s.p_cnd[0]});
    if (opt.feedforward) rep.approx_zeros = {cplx{p->gm / p->Cc}};
    rep.scenario = "fig7a";
  } else if (const auto* p = std::get_if<CurrentBufferParams>(&params)) {
    const auto s = cb_nondominant_pair(*p, opt.validity_ratio);
    const double ideal_pcnd1 = p->gm * p->Cc / ((p->C2 + p->Cc) * p->C1);
    detail::append(rep.warnings, s.warnings);
    rep.approx_poles = sorted_roots({*s.p_cd, s.p_cnd[0], s.p_cnd[1]});
    rep.approx_zeros = {cplx{cb_za(*p)}};
    const double za = cb_za(*p);
    if (detail::cancellation_distance(s.p_cnd, za) < opt.cancellation) {
      rep.scenario = "fig7e";
    } else if (std::abs(cb_po3(*p)) >= opt.ideal_buffer_ratio * ideal_pcnd1) {
      rep.scenario = "fig7b";
    } else if (s.p_cnd[0].imag() != 0) {
      rep.scenario = "fig7d";
    } else {
      rep.scenario = "fig7c";
    }
  } else {
    const auto& q = std::get<NmcParams>(params);
    const auto s = nmc_nondominant_pair(q, opt.validity_ratio);
    detail::append(rep.warnings, s.warnings);
    rep.approx_poles = sorted_roots({*s.p_cd, s.p_cnd[0], s.p_cnd[1]});
    if (q.gm0 > 0) rep.scenario = detail::nmc_scenario(std::abs(nmc_po2(q)) / gbw(params));
    rep.annotations.push_back(kNmcAnnotation);
  }

  const RationalFunction exact = exact_transimpedance(params);
  rep.oracle_poles = roots(exact.den());
  if (exact.num().degree() >= 1) rep.oracle_zeros = roots(exact.num());
  rep.deviations = detail::match_to_oracle(rep.approx_poles, rep.oracle_poles);
  rep.damping = detail::pair_damping(rep.approx_poles);

  try {
    rep.gbw = gbw(params);
  } catch (const Error&) {
    rep.warnings.push_back({"no-gbw", "gm0 not given; GBW and phase margin omitted"});
  }
  if (rep.gbw) {
    const auto pm = phase_margin(rep.approx_poles, rep.approx_zeros, *rep.gbw);
    rep.pm_deg = pm.closed_form_deg;
    rep.pm_numeric_deg = pm.numeric_deg;
    rep.crossover = pm.crossover;
    detail::append(rep.warnings, pm.warnings);
  }
  return rep;
}

struct GmcOptimum {
  double gmc = 0;
  double distance = 0;  ///< max_i |p_cnd,i - z_a| / |z_a| at the optimum
  StabilityReport report;
  Warnings warnings;
};

/// Chooses gmc so both nondominant poles of the current-buffer amplifier sit
/// as close as possible to z_a = -gmc/Cc. A log grid over gm*[1e-6, 1e6] is
/// followed by golden-section refinement around the best grid point.
inline GmcOptimum optimize_gmc(const CurrentBufferParams& base, const ReportOptions& opt = {}) {
  validate(base);
  if (!(base.gm > 0)) throw Error("stability", "gmc search requires gm > 0");
  auto objective = [&](double log_gmc) {
    CurrentBufferParams p = base;
    p.gmc = std::exp(log_gmc);
    return detail::cancellation_distance(cb_nondominant_pair(p).p_cnd, cb_za(p));
  };

  const double lo = std::log(base.gm * 1e-6), hi = std::log(base.gm * 1e6);
  const int n = 241;
  std::vector<double> xs(n), fs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = lo + (hi - lo) * i / (n - 1);
    fs[i] = objective(xs[i]);
  }
  const int best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());

  GmcOptimum out;
  int minima = 0;
  for (int i = 0; i < n; ++i) {
    const bool left = i == 0 || fs[i] < fs[i - 1];
    const bool right = i == n - 1 || fs[i] < fs[i + 1];
    if (left && right) ++minima;
  }
  double x_best = xs[best];
  if (minima > 1) {
    out.warnings.push_back({"non-unimodal", "objective has several local minima on the grid; grid minimum returned"});
  } else {
    double a = xs[std::max(best - 1, 0)], b = xs[std::min(best + 1, n - 1)];
    const double r = (std::sqrt(5.0) - 1) / 2;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = objective(c), fd = objective(d);
    for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - r * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + r * (b - a);
        fd = objective(d);
      }
    }
    const double x_ref = 0.5 * (a + b);
    if (objective(x_ref) <= fs[best]) x_best = x_ref;
  }
  if (best == 0 || best == n - 1) out.warnings.push_back({"grid-edge", "optimum lies on the edge of the search range"});

  out.gmc = std::exp(x_best);
  out.distance = objective(x_best);
  CurrentBufferParams p = base;
  p.gmc = out.gmc;
  out.report = scenario_report(p, opt);
  return out;
}

}  // namespace millerpole
