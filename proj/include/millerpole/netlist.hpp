#pragma once

// Small-signal models of the three amplifier topologies and an exact modified
// nodal analysis (MNA) solve over polynomial admittances. This is the oracle
// the feedback decomposition is checked against: transfer functions come out
// of Cramer's rule with determinants expanded symbolically in s.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "millerpole/error.hpp"
#include "millerpole/polynomial.hpp"
#include "millerpole/rational.hpp"

namespace millerpole {

enum class Topology { two_stage, current_buffer, nmc };

inline std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::two_stage: return "two-stage";
    case Topology::current_buffer: return "current-buffer";
    case Topology::nmc: return "nmc";
  }
  return "?";
}

inline Topology parse_topology(std::string_view tag) {
  if (tag == "two-stage") return Topology::two_stage;
  if (tag == "current-buffer") return Topology::current_buffer;
  if (tag == "nmc") return Topology::nmc;
  throw Error("netlist", "unknown topology tag '" + std::string(tag) + "'");
}

/// Two-stage Miller amplifier: transconductor gm between an input node (R1, C1)
/// and an output node (R2, C2), compensation capacitor Cc across it.
struct TwoStageParams {
  double gm = 0;
  double R1 = 0, R2 = 0;
  double C1 = 0, C2 = 0, Cc = 0;
  std::optional<double> gm0;  ///< input transconductance, only needed for GBW
};

/// Two-stage amplifier with a unilateral current buffer (input conductance and
/// transconductance gmc) in series with Cc.
struct CurrentBufferParams {
  double gm = 0, gmc = 0;
  double R1 = 0, R2 = 0;
  double C1 = 0, C2 = 0, Cc = 0;
  std::optional<double> gm0;
};

/// Three-stage nested Miller amplifier. Cc0 is the outer capacitor (output to
/// first-stage output), Cc1 the inner one (output to second-stage output).
struct NmcParams {
  double gm0 = 0, gm1 = 0, gm2 = 0;
  double R0 = 0, R1 = 0, R2 = 0;
  double C0 = 0, C1 = 0, C2 = 0;
  double Cc0 = 0, Cc1 = 0;
};

using CircuitParams = std::variant<TwoStageParams, CurrentBufferParams, NmcParams>;

inline Topology topology_of(const CircuitParams& p) {
  return static_cast<Topology>(p.index());
}

namespace detail {

inline void require(bool ok, std::string_view name, std::string_view what) {
  if (!ok) throw Error("netlist", "invalid parameter " + std::string(name) + ": must be " + std::string(what));
}

inline void positive(double v, std::string_view name) { require(std::isfinite(v) && v > 0, name, "> 0"); }
inline void nonnegative(double v, std::string_view name) { require(std::isfinite(v) && v >= 0, name, ">= 0"); }

}  // namespace detail

inline void validate(const TwoStageParams& p) {
  detail::nonnegative(p.gm, "gm");
  detail::positive(p.R1, "R1");
  detail::positive(p.R2, "R2");
  detail::positive(p.C1, "C1");
  detail::positive(p.C2, "C2");
  detail::nonnegative(p.Cc, "Cc");
  if (p.gm0) detail::positive(*p.gm0, "gm0");
}

inline void validate(const CurrentBufferParams& p) {
  detail::nonnegative(p.gm, "gm");
  detail::positive(p.gmc, "gmc");
  detail::positive(p.R1, "R1");
  detail::positive(p.R2, "R2");
  detail::positive(p.C1, "C1");
  detail::positive(p.C2, "C2");
  detail::nonnegative(p.Cc, "Cc");
  if (p.gm0) detail::positive(*p.gm0, "gm0");
}

inline void validate(const NmcParams& p) {
  detail::nonnegative(p.gm0, "gm0");
  detail::nonnegative(p.gm1, "gm1");
  detail::nonnegative(p.gm2, "gm2");
  detail::positive(p.R0, "R0");
  detail::positive(p.R1, "R1");
  detail::positive(p.R2, "R2");
  detail::positive(p.C0, "C0");
  detail::positive(p.C1, "C1");
  detail::positive(p.C2, "C2");
  detail::nonnegative(p.Cc0, "Cc0");
  detail::nonnegative(p.Cc1, "Cc1");
}

inline void validate(const CircuitParams& p) {
  std::visit([](const auto& v) { validate(v); }, p);
}

/// Nodal admittance system Y(s) V = I with polynomial entries G + sC.
class MnaSystem {
 public:
  static constexpr std::size_t ground = static_cast<std::size_t>(-1);

  MnaSystem(std::vector<std::string> labels, std::size_t excitation)
      : labels_(std::move(labels)), y_(labels_.size() * labels_.size()), excitation_(excitation) {}

  std::size_t nodes() const noexcept { return labels_.size(); }
  std::size_t excitation() const noexcept { return excitation_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  const Polynomial& at(std::size_t row, std::size_t col) const { return y_[index(row, col)]; }

  std::size_t node(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) return i;
    }
    throw Error("netlist", "no node named '" + std::string(label) + "'");
  }

  /// Two-terminal admittance g + s*c between a and b (either may be ground).
  void stamp_admittance(std::size_t a, std::size_t b, long double g, long double c) {
    const Polynomial y{g, c};
    if (a != ground) add(a, a, y);
    if (b != ground) add(b, b, y);
    if (a != ground && b != ground) {
      add(a, b, -y);
      add(b, a, -y);
    }
  }

  /// Controlled current g*V(ctrl) leaving node `out` towards ground. A
  /// negative g injects the current instead.
  void stamp_vccs(std::size_t out, std::size_t ctrl, long double g) { add(out, ctrl, Polynomial{g}); }

 private:
  std::size_t index(std::size_t r, std::size_t c) const {
    if (r >= nodes() || c >= nodes()) throw Error("netlist", "node index out of range");
    return r * nodes() + c;
  }
  void add(std::size_t r, std::size_t c, const Polynomial& p) { y_[index(r, c)] += p; }

  std::vector<std::string> labels_;
  std::vector<Polynomial> y_;
  std::size_t excitation_;
};

// Every gain stage inverts; its VCCS draws gm*V_in out of its output node.
inline MnaSystem build_mna(const TwoStageParams& p) {
  validate(p);
  MnaSystem sys({"V1", "V2"}, 0);
  sys.stamp_admittance(0, MnaSystem::ground, 1.0L / p.R1, p.C1);
  sys.stamp_admittance(1, MnaSystem::ground, 1.0L / p.R2, p.C2);
  sys.stamp_admittance(0, 1, 0, p.Cc);
  sys.stamp_vccs(1, 0, p.gm);
  return sys;
}

// The buffer's input looks like a conductance gmc from Vc to ground; the
// current it absorbs, gmc*Vc, is delivered into V1 (output impedance ideal).
inline MnaSystem build_mna(const CurrentBufferParams& p) {
  validate(p);
  MnaSystem sys({"V1", "V2", "Vc"}, 0);
  sys.stamp_admittance(0, MnaSystem::ground, 1.0L / p.R1, p.C1);
  sys.stamp_admittance(1, MnaSystem::ground, 1.0L / p.R2, p.C2);
  sys.stamp_admittance(1, 2, 0, p.Cc);
  sys.stamp_admittance(2, MnaSystem::ground, p.gmc, 0);
  sys.stamp_vccs(1, 0, p.gm);
  sys.stamp_vccs(0, 2, -static_cast<long double>(p.gmc));
  return sys;
}

// First stage (gm1) non-inverting, second stage (gm2) inverting, so that both
// the inner (Cc1) and the outer (Cc0) Miller loops are negative.
inline MnaSystem build_mna(const NmcParams& p) {
  validate(p);
  MnaSystem sys({"V0", "V1", "V2"}, 0);
  sys.stamp_admittance(0, MnaSystem::ground, 1.0L / p.R0, p.C0);
  sys.stamp_admittance(1, MnaSystem::ground, 1.0L / p.R1, p.C1);
  sys.stamp_admittance(2, MnaSystem::ground, 1.0L / p.R2, p.C2);
  sys.stamp_admittance(2, 0, 0, p.Cc0);
  sys.stamp_admittance(2, 1, 0, p.Cc1);
  sys.stamp_vccs(1, 0, -static_cast<long double>(p.gm1));
  sys.stamp_vccs(2, 1, p.gm2);
  return sys;
}

inline MnaSystem build_mna(const CircuitParams& p) {
  return std::visit([](const auto& v) { return build_mna(v); }, p);
}

inline MnaSystem build_mna(Topology t, const CircuitParams& p) {
  if (topology_of(p) != t) {
    throw Error("netlist", "parameter block does not match topology '" + std::string(to_string(t)) + "'");
  }
  return build_mna(p);
}

namespace detail {

using PolyMatrix = std::vector<std::vector<Polynomial>>;

inline Polynomial determinant(const PolyMatrix& m) {
  const std::size_t n = m.size();
  if (n == 0) return Polynomial{1.0L};
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Polynomial det;
  for (std::size_t col = 0; col < n; ++col) {
    if (m[0][col].is_zero()) continue;
    PolyMatrix minor(n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        if (c != col) minor[r - 1].push_back(m[r][c]);
      }
    }
    const Polynomial term = m[0][col] * determinant(minor);
    if (col % 2 == 0) det += term;
    else det -= term;
  }
  return det;
}

// Nodes whose voltages enter the equations of `seed`, transitively. Rows in
// this set reference no columns outside it, so the subsystem can be solved on
// its own.
inline std::vector<std::size_t> closure(const MnaSystem& sys, std::size_t seed) {
  std::vector<bool> in(sys.nodes(), false);
  std::vector<std::size_t> stack{seed};
  in[seed] = true;
  while (!stack.empty()) {
    const std::size_t r = stack.back();
    stack.pop_back();
    for (std::size_t c = 0; c < sys.nodes(); ++c) {
      if (!in[c] && !sys.at(r, c).is_zero()) {
        in[c] = true;
        stack.push_back(c);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sys.nodes(); ++i) {
    if (in[i]) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Characteristic polynomial det Y(s) of the full network.
inline Polynomial mna_determinant(const MnaSystem& sys) {
  detail::PolyMatrix m(sys.nodes(), std::vector<Polynomial>(sys.nodes()));
  for (std::size_t r = 0; r < sys.nodes(); ++r) {
    for (std::size_t c = 0; c < sys.nodes(); ++c) m[r][c] = sys.at(r, c);
  }
  return detail::determinant(m);
}

/// V(out) / I(in) by Cramer's rule with exact polynomial determinants.
inline RationalFunction mna_transfer(const MnaSystem& sys, std::size_t in_node, std::size_t out_node) {
  if (in_node >= sys.nodes() || out_node >= sys.nodes()) throw Error("netlist", "node index out of range");

  const auto keep = detail::closure(sys, out_node);
  std::size_t in_pos = keep.size(), out_pos = keep.size();
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] == in_node) in_pos = i;
    if (keep[i] == out_node) out_pos = i;
  }

  const std::size_t n = keep.size();
  detail::PolyMatrix y(n, std::vector<Polynomial>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) y[r][c] = sys.at(keep[r], keep[c]);
  }
  Polynomial den = detail::determinant(y);
  if (den.is_zero()) throw Error("netlist", "degenerate network");
  if (in_pos == n) return RationalFunction(Polynomial{}, std::move(den));

  for (std::size_t r = 0; r < n; ++r) y[r][out_pos] = Polynomial{r == in_pos ? 1.0L : 0.0L};
  return RationalFunction(detail::determinant(y), std::move(den));
}

inline RationalFunction mna_transfer(const MnaSystem& sys, std::string_view in, std::string_view out) {
  return mna_transfer(sys, sys.node(in), sys.node(out));
}

/// V(node) / I(node): driving-point impedance seen by a current injected at node.
inline RationalFunction mna_input_impedance(const MnaSystem& sys, std::size_t node) {
  return mna_transfer(sys, node, node);
}

/// Label of the output node of each topology's transimpedance V_out / I_in.
inline std::string_view output_node(Topology) { return "V2"; }

inline std::string_view input_node(Topology t) { return t == Topology::nmc ? "V0" : "V1"; }

/// Exact closed-loop transimpedance of a topology (the oracle A_exact).
inline RationalFunction exact_transimpedance(const CircuitParams& p) {
  const MnaSystem sys = build_mna(p);
  const Topology t = topology_of(p);
  return mna_transfer(sys, input_node(t), output_node(t));
}

}  // namespace millerpole
