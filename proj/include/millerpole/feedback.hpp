#pragma once

// Shunt-shunt two-port decomposition of the Miller-compensated amplifiers:
// the loaded open-loop transimpedance a(s) (a-circuit), the feedback network
// beta(s) (beta-circuit), and the loop transmission a(s)beta(s).

#include <optional>
#include <string>
#include <utility>

#include "millerpole/error.hpp"
#include "millerpole/netlist.hpp"
#include "millerpole/polynomial.hpp"
#include "millerpole/rational.hpp"
#include "millerpole/roots.hpp"

namespace millerpole {

struct LoopDecomposition {
  Topology topology{};
  RationalFunction a;                    ///< open-loop transimpedance, feedforward neglected
  std::optional<RationalFunction> a_ff;  ///< with the feedforward current through Cc (two-stage only)
  RationalFunction beta;                 ///< feedback transadmittance I_x / V_o
  RationalFunction loop;                 ///< a * beta; positive midband for negative feedback
  RootSet open_poles;                    ///< poles of the loop (open-loop poles of A)
  RootSet loop_zeros;                    ///< finite zeros of the loop
  RootSet a_zeros;                       ///< finite zeros of a(s)
  RootSet beta_poles;                    ///< poles of beta(s)
};

namespace detail {

inline void require_feedback(double c, const char* name) {
  if (!(c > 0)) throw Error("feedback", std::string("no feedback path (") + name + " = 0)");
}

}  // namespace detail

/// Loaded two-stage decomposition. p_o1 = -1/(R1(C1+Cc)), p_o2 = -1/(R2(C2+Cc)).
inline LoopDecomposition decompose_two_stage(const TwoStageParams& p) {
  validate(p);
  detail::require_feedback(p.Cc, "Cc");
  using LD = long double;
  const LD gm = p.gm, R1 = p.R1, R2 = p.R2, C1 = p.C1, C2 = p.C2, Cc = p.Cc;

  const Polynomial den = Polynomial::time_constant(R1 * (C1 + Cc)) * Polynomial::time_constant(R2 * (C2 + Cc));

  LoopDecomposition d;
  d.topology = Topology::two_stage;
  d.a = RationalFunction(Polynomial{-gm * R1 * R2}, den);
  d.a_ff = RationalFunction(Polynomial{-gm * R1 * R2, Cc * R1 * R2}, den);
  d.beta = RationalFunction(Polynomial{0.0L, -Cc});
  d.loop = d.a * d.beta;
  d.open_poles = sorted_roots({-1.0 / (p.R1 * (p.C1 + p.Cc)), -1.0 / (p.R2 * (p.C2 + p.Cc))});
  d.loop_zeros = {0.0};
  return d;
}

/// Current-buffer decomposition, valid for gmc*R2 >> 1. The zero of a(s) at
/// -gmc/Cc and the pole of beta(s) at the same place cancel in the loop; the
/// loop is written directly in its cancelled form.
inline LoopDecomposition decompose_current_buffer(const CurrentBufferParams& p) {
  validate(p);
  detail::require_feedback(p.Cc, "Cc");
  using LD = long double;
  const LD gm = p.gm, gmc = p.gmc, R1 = p.R1, R2 = p.R2, C1 = p.C1, C2 = p.C2, Cc = p.Cc;
  const LD c_series = C2 * Cc / (C2 + Cc);

  const Polynomial den = Polynomial::time_constant(R1 * C1) * Polynomial::time_constant(R2 * (C2 + Cc)) *
                         Polynomial::time_constant(c_series / gmc);

  LoopDecomposition d;
  d.topology = Topology::current_buffer;
  d.a = RationalFunction(Polynomial{-gm * R1 * R2, -gm * R1 * R2 * Cc / gmc}, den);
  d.beta = RationalFunction(Polynomial{0.0L, -Cc}, Polynomial::time_constant(Cc / gmc));
  d.loop = RationalFunction(Polynomial{0.0L, gm * R1 * R2 * Cc}, den);
  d.open_poles = sorted_roots({-1.0 / (p.R1 * p.C1), -1.0 / (p.R2 * (p.C2 + p.Cc)),
                               -p.gmc / static_cast<double>(c_series)});
  d.loop_zeros = {0.0};
  d.a_zeros = {-p.gmc / p.Cc};
  d.beta_poles = {-p.gmc / p.Cc};
  return d;
}

/// Nested-Miller decomposition with feedforward through Cc0 and Cc1 neglected.
inline LoopDecomposition decompose_nmc(const NmcParams& p) {
  validate(p);
  detail::require_feedback(p.Cc0, "Cc0");
  detail::require_feedback(p.Cc1, "Cc1");
  if (!(p.gm2 > 0)) throw Error("feedback", "nmc decomposition requires gm2 > 0");
  using LD = long double;
  const LD gm1 = p.gm1, gm2 = p.gm2, R0 = p.R0, R1 = p.R1, R2 = p.R2;
  const LD C0 = p.C0, C1 = p.C1, C2 = p.C2, Cc0 = p.Cc0, Cc1 = p.Cc1;

  const Polynomial den = Polynomial::time_constant(R0 * (C0 + Cc0)) * Polynomial::time_constant(gm2 * R1 * R2 * Cc1) *
                         Polynomial::time_constant((C1 + Cc1) * (C2 + Cc0 + Cc1) / (gm2 * Cc1));

  LoopDecomposition d;
  d.topology = Topology::nmc;
  d.loop = RationalFunction(Polynomial{0.0L, gm1 * gm2 * R0 * R1 * R2 * Cc0}, den);
  d.beta = RationalFunction(Polynomial{0.0L, -Cc0});
  d.a = RationalFunction(Polynomial{-gm1 * gm2 * R0 * R1 * R2}, den);
  d.open_poles = sorted_roots({-1.0 / (p.R0 * (p.C0 + p.Cc0)), -1.0 / (p.gm2 * p.R1 * p.R2 * p.Cc1),
                               -p.gm2 * p.Cc1 / ((p.C1 + p.Cc1) * (p.C2 + p.Cc0 + p.Cc1))});
  d.loop_zeros = {0.0};
  return d;
}

inline LoopDecomposition decompose(const CircuitParams& p) {
  struct Visitor {
    LoopDecomposition operator()(const TwoStageParams& v) const { return decompose_two_stage(v); }
    LoopDecomposition operator()(const CurrentBufferParams& v) const { return decompose_current_buffer(v); }
    LoopDecomposition operator()(const NmcParams& v) const { return decompose_nmc(v); }
  };
  return std::visit(Visitor{}, p);
}

/// a'(s)beta(s): the loop including the feedforward current, which carries
/// the right-half-plane zero at gm/Cc.
inline RationalFunction feedforward_loop(const LoopDecomposition& d) {
  if (!d.a_ff) throw Error("feedback", "feedforward model unavailable");
  return *d.a_ff * d.beta;
}

/// Closed-loop transimpedance a/(1 + a*beta), optionally with a'(s).
inline RationalFunction close_loop(const LoopDecomposition& d, bool with_feedforward) {
  if (with_feedforward && !d.a_ff) throw Error("feedback", "feedforward model unavailable");
  return rational_close(with_feedforward ? *d.a_ff : d.a, d.beta);
}

struct InputImpedancePZ {
  RootSet poles;
  RootSet zeros;
  double dc = 0;
};

/// Poles and zeros of the driving-point impedance at the amplifier input. The
/// forward voltage stage now sits in the feedback path, so its open-loop pole
/// shows up as a zero.
inline InputImpedancePZ input_impedance_pz(const CircuitParams& p) {
  const MnaSystem sys = build_mna(p);
  const RationalFunction z = mna_input_impedance(sys, sys.node(input_node(topology_of(p))));
  InputImpedancePZ out;
  out.poles = roots(z.den());
  if (z.num().degree() >= 1) out.zeros = roots(z.num());
  out.dc = static_cast<double>(z.num()[0] / z.den()[0]);
  return out;
}

}  // namespace millerpole
