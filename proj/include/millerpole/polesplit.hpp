#pragma once

// Pole splitting. For a loop with a zero at the origin, two real poles
// p_od < p_ond in magnitude and a large midband value a0b0, the closed-loop
// poles are p_cd = p_od / a0b0 and p_cnd = p_ond * a0b0. The per-topology
// closed forms and the nondominant quadratics are collected here as well.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>

#include "millerpole/error.hpp"
#include "millerpole/feedback.hpp"
#include "millerpole/netlist.hpp"
#include "millerpole/polynomial.hpp"
#include "millerpole/rational.hpp"
#include "millerpole/roots.hpp"

namespace millerpole {

struct TwoPoleLoop {
  double p_od = 0;   ///< lower-frequency open-loop pole, rad/s, negative
  double p_ond = 0;  ///< higher-frequency open-loop pole, rad/s, negative
  double a0b0 = 0;   ///< midband loop magnitude
};

enum class SplitMethod { theorem, quadratic_exact, closed_form };

inline std::string_view to_string(SplitMethod m) {
  switch (m) {
    case SplitMethod::theorem: return "theorem";
    case SplitMethod::quadratic_exact: return "quadratic-exact";
    case SplitMethod::closed_form: return "closed-form";
  }
  return "?";
}

struct SplitResult {
  std::optional<cplx> p_cd;
  RootSet p_cnd;  ///< {p_cnd} or {p_cnd1, p_cnd2}
  SplitMethod method = SplitMethod::theorem;
  Warnings warnings;
  std::optional<double> vieta_product;       ///< c0/c2 of the nondominant quadratic
  std::optional<cplx> attraction_estimate;   ///< p_cnd1 rebuilt from the attraction relation
};

/// Threshold used by validity-domain checks standing in for "much greater than".
inline constexpr double kDefaultValidityRatio = 10.0;

/// Midband value of a loop with a simple zero at the origin: the plateau of
/// |loop(jw)| between its first two poles, c1 * w1 with w1 the smallest pole
/// magnitude.
inline double midband(const RationalFunction& loop) {
  const Polynomial& n = loop.num();
  const Polynomial& d = loop.den();
  if (n.is_zero() || n[0] != 0 || n.degree() < 1 || n[1] == 0 || d[0] == 0) {
    throw Error("polesplit", "midband undefined (loop needs a simple zero at the origin)");
  }
  if (d.degree() < 2) throw Error("polesplit", "midband undefined (fewer than two poles)");
  double w1 = std::numeric_limits<double>::infinity();
  for (const auto& p : roots(d)) {
    if (p.imag() != 0 || !(p.real() < 0)) throw Error("polesplit", "midband undefined (poles must be real and LHP)");
    w1 = std::min(w1, -p.real());
  }
  return static_cast<double>(std::abs(n[1] / d[0])) * w1;
}

/// Damping ratio of 1 + a0b0 s/|p_od| + s^2/(p_od p_ond).
inline double xi_check(const TwoPoleLoop& tp) { return 0.5 * std::sqrt(tp.p_ond / tp.p_od) * tp.a0b0; }

/// The splitting relation. Errors on misordered poles or a0b0 < 2; warns on
/// a0b0 in [2, 10).
inline SplitResult split(const TwoPoleLoop& tp) {
  if (!(tp.p_od < 0) || !(tp.p_ond < 0) || !std::isfinite(tp.p_od) || !std::isfinite(tp.p_ond)) {
    throw Error("polesplit", "open-loop poles must be finite and strictly negative");
  }
  if (!(std::abs(tp.p_od) < std::abs(tp.p_ond))) throw Error("polesplit", "pole ordering (|p_od| must be < |p_ond|)");
  if (!(tp.a0b0 > 0) || !std::isfinite(tp.a0b0)) throw Error("polesplit", "midband value must be positive");
  if (tp.a0b0 < 2) throw Error("polesplit", "midband value below 2, poles do not split");
  SplitResult r;
  r.method = SplitMethod::theorem;
  r.p_cd = cplx{tp.p_od / tp.a0b0};
  r.p_cnd = {cplx{tp.p_ond * tp.a0b0}};
  if (tp.a0b0 < 10) {
    r.warnings.push_back({"weak-midband", "midband value " + std::to_string(tp.a0b0) + " is below 10"});
  }
  return r;
}

/// Exact roots of 1 + a0b0 s/|p_od| + s^2/(p_od p_ond), the characteristic
/// polynomial the splitting relation approximates.
inline RootSet two_pole_exact(const TwoPoleLoop& tp) {
  const long double od = tp.p_od, ond = tp.p_ond;
  auto [a, b] = quadratic_roots(1.0L, static_cast<long double>(tp.a0b0) / std::abs(od), 1.0L / (od * ond));
  return {cplx(static_cast<double>(a.real()), static_cast<double>(a.imag())),
          cplx(static_cast<double>(b.real()), static_cast<double>(b.imag()))};
}

/// Nondominant pole of the two-stage amplifier with the RHP zero neglected
/// (textbook = false) or the textbook value that keeps it (textbook = true).
inline cplx two_stage_pcnd(const TwoStageParams& p, bool textbook = false) {
  validate(p);
  const long double C1 = p.C1, C2 = p.C2, Cc = p.Cc, gm = p.gm;
  const long double den = textbook ? C1 * C2 + Cc * (C1 + C2) : (C1 + Cc) * (C2 + Cc);
  return cplx{static_cast<double>(-gm * Cc / den)};
}

inline TwoPoleLoop two_stage_loop(const TwoStageParams& p) {
  const auto d = decompose_two_stage(p);
  return {d.open_poles[0].real(), d.open_poles[1].real(), midband(d.loop)};
}

/// Split poles of the two-stage amplifier through the theorem; the midband
/// value follows whichever open-loop pole is lower.
inline SplitResult two_stage_split(const TwoStageParams& p) { return split(two_stage_loop(p)); }

namespace detail {

inline void check_ratio(Warnings& ws, double big, double small, double ratio, const std::string& what) {
  if (big < ratio * small) {
    ws.push_back({"validity-domain", what + " holds only by a factor " + std::to_string(big / small)});
  }
}

inline SplitResult quadratic_pair(long double c1, long double c2) {
  const auto [a, b] = quadratic_roots(1.0L, c1, c2);
  SplitResult r;
  r.method = SplitMethod::quadratic_exact;
  r.p_cnd = {cplx(static_cast<double>(a.real()), static_cast<double>(a.imag())),
             cplx(static_cast<double>(b.real()), static_cast<double>(b.imag()))};
  r.vieta_product = static_cast<double>(1.0L / c2);
  return r;
}

}  // namespace detail

inline double cb_po3(const CurrentBufferParams& p) { return -p.gmc * (p.C2 + p.Cc) / (p.C2 * p.Cc); }
inline double cb_za(const CurrentBufferParams& p) { return -p.gmc / p.Cc; }

/// Ideal current buffer (p_o3 at infinity): the remaining two-pole loop split
/// by the theorem.
inline SplitResult cb_ideal_split(const CurrentBufferParams& p) {
  validate(p);
  detail::require_feedback(p.Cc, "Cc");
  const double po1 = -1.0 / (p.R1 * p.C1);
  const double po2 = -1.0 / (p.R2 * (p.C2 + p.Cc));
  const double lo = std::abs(po1) < std::abs(po2) ? po1 : po2;
  const double hi = std::abs(po1) < std::abs(po2) ? po2 : po1;
  const double a0b0 = p.gm * p.R1 * p.R2 * p.Cc * std::abs(lo);
  return split({lo, hi, a0b0});
}

/// Nondominant pair of the current-buffer amplifier from the quadratic
/// 1 + s[Cc C2 + gmc R1 C1 (Cc + C2)]/(gm R1 gmc Cc) + s^2 C1 C2/(gm gmc).
/// p_cnd1 is the lower-magnitude root (or the negative-imaginary member of a
/// complex pair).
inline SplitResult cb_nondominant_pair(const CurrentBufferParams& p, double ratio = kDefaultValidityRatio) {
  validate(p);
  detail::require_feedback(p.Cc, "Cc");
  if (!(p.gm > 0)) throw Error("polesplit", "current-buffer pair requires gm > 0");
  const long double gm = p.gm, gmc = p.gmc, R1 = p.R1, C1 = p.C1, C2 = p.C2, Cc = p.Cc;
  const long double c1 = (Cc * C2 + gmc * R1 * C1 * (Cc + C2)) / (gm * R1 * gmc * Cc);
  const long double c2 = C1 * C2 / (gm * gmc);
  SplitResult r = detail::quadratic_pair(c1, c2);
  r.p_cd = cplx{-1.0 / (p.gm * p.R1 * p.R2 * p.Cc)};
  const cplx ideal = -p.gm * p.Cc / ((p.C2 + p.Cc) * p.C1);
  r.attraction_estimate = cb_po3(p) / r.p_cnd[1] * ideal;
  detail::check_ratio(r.warnings, p.gm * p.R1, 1, ratio, "gm >> 1/R1");
  detail::check_ratio(r.warnings, p.gm * p.R2, 1, ratio, "gm >> 1/R2");
  detail::check_ratio(r.warnings, p.gmc * p.R1, 1, ratio, "gmc >> 1/R1");
  detail::check_ratio(r.warnings, p.gmc * p.R2, 1, ratio, "gmc >> 1/R2");
  return r;
}

/// Loop of the NMC amplifier reduced to two poles: the inner Miller pole
/// -1/(gm2 R1 R2 Cc1) and p_o0 ~ -1/(R0 Cc0), with a0b0 = gm1 R0 Cc0 / Cc1.
inline TwoPoleLoop nmc_loop(const NmcParams& p) {
  validate(p);
  detail::require_feedback(p.Cc0, "Cc0");
  detail::require_feedback(p.Cc1, "Cc1");
  return {-1.0 / (p.gm2 * p.R1 * p.R2 * p.Cc1), -1.0 / (p.R0 * p.Cc0), p.gm1 * p.R0 * p.Cc0 / p.Cc1};
}

/// Dominant and first nondominant pole of the NMC amplifier with p_o2 pushed
/// to high frequency: -1/(gm1 gm2 R0 R1 R2 Cc0) and -gm1/Cc1.
inline SplitResult nmc_split(const NmcParams& p) { return split(nmc_loop(p)); }

/// p_o2 of the NMC loop in its large-load form, -gm2/C2.
inline double nmc_po2(const NmcParams& p) { return -p.gm2 / p.C2; }

/// Nondominant pair of the NMC amplifier, roots of
/// 1 + s Cc1/gm1 + s^2 Cc1 C2/(gm1 gm2).
inline SplitResult nmc_nondominant_pair(const NmcParams& p, double ratio = kDefaultValidityRatio) {
  validate(p);
  detail::require_feedback(p.Cc0, "Cc0");
  detail::require_feedback(p.Cc1, "Cc1");
  if (!(p.gm1 > 0) || !(p.gm2 > 0)) throw Error("polesplit", "nmc pair requires gm1, gm2 > 0");
  const long double gm1 = p.gm1, gm2 = p.gm2, C2 = p.C2, Cc1 = p.Cc1;
  SplitResult r = detail::quadratic_pair(Cc1 / gm1, Cc1 * C2 / (gm1 * gm2));
  r.p_cd = cplx{-1.0 / (p.gm1 * p.gm2 * p.R0 * p.R1 * p.R2 * p.Cc0)};
  r.attraction_estimate = nmc_po2(p) / r.p_cnd[1] * cplx{-p.gm1 / p.Cc1};
  for (double R : {p.R0, p.R1, p.R2}) {
    detail::check_ratio(r.warnings, p.gm1 * R, 1, ratio, "gm1 >> 1/R");
    detail::check_ratio(r.warnings, p.gm2 * R, 1, ratio, "gm2 >> 1/R");
  }
  for (double Cc : {p.Cc0, p.Cc1}) {
    detail::check_ratio(r.warnings, p.C2, Cc, ratio, "C2 >> Cc");
    detail::check_ratio(r.warnings, Cc, p.C0, ratio, "Cc >> C0");
    detail::check_ratio(r.warnings, Cc, p.C1, ratio, "Cc >> C1");
  }
  return r;
}

/// p_o2/2 -/+ (p_o2/2) sqrt(1 + 8 GBW/p_o2): the NMC pair when gm1/Cc1 = 2 GBW.
/// A negative radicand yields an exact conjugate pair, negative imaginary first.
inline std::pair<cplx, cplx> nmc_radical_pair(double p_o2, double gbw) {
  if (!(p_o2 < 0) || !(gbw > 0)) throw Error("polesplit", "radical pair needs p_o2 < 0 and GBW > 0");
  const long double h = static_cast<long double>(p_o2) / 2;
  const long double arg = 1.0L + 8.0L * gbw / p_o2;
  if (arg >= 0) {
    const long double q = std::sqrt(arg);
    const cplx a{static_cast<double>(h - h * q)}, b{static_cast<double>(h + h * q)};
    return std::abs(a) <= std::abs(b) ? std::pair{a, b} : std::pair{b, a};
  }
  const long double q = std::sqrt(-arg) * std::abs(h);
  return {cplx(static_cast<double>(h), static_cast<double>(-q)), cplx(static_cast<double>(h), static_cast<double>(q))};
}

}  // namespace millerpole
