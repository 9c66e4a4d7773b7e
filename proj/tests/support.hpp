#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "millerpole/netlist.hpp"

namespace testing_support {

using cd = std::complex<double>;

inline double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// log-uniform over [lo, hi]
inline double log_uniform(std::mt19937_64& g, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(g));
}

/// Expands prod (s - r_i) with real coefficients (r must be closed under
/// conjugation), ascending order, leading coefficient `lead`.
inline std::vector<long double> from_roots(const std::vector<cd>& r, long double lead = 1) {
  std::vector<std::complex<long double>> c{1};
  for (const auto& z : r) {
    std::vector<std::complex<long double>> n(c.size() + 1);
    for (std::size_t i = 0; i < c.size(); ++i) {
      n[i + 1] += c[i];
      n[i] -= c[i] * std::complex<long double>(z);
    }
    c = n;
  }
  std::vector<long double> out;
  for (auto& v : c) out.push_back(v.real() * lead);
  return out;
}

// Hand-written nodal equations Y(s) V = I for each topology, solved
// numerically at a single complex frequency. Independent of the polynomial
// stamping code.
inline Eigen::MatrixXcd nodal_matrix(const millerpole::TwoStageParams& p, cd s) {
  Eigen::MatrixXcd y(2, 2);
  y << 1 / p.R1 + s * (p.C1 + p.Cc), -s * p.Cc,
       p.gm - s * p.Cc, 1 / p.R2 + s * (p.C2 + p.Cc);
  return y;
}

inline Eigen::MatrixXcd nodal_matrix(const millerpole::CurrentBufferParams& p, cd s) {
  Eigen::MatrixXcd y(3, 3);
  y << 1 / p.R1 + s * p.C1, 0, -p.gmc,
       p.gm, 1 / p.R2 + s * (p.C2 + p.Cc), -s * p.Cc,
       0, -s * p.Cc, p.gmc + s * p.Cc;
  return y;
}

inline Eigen::MatrixXcd nodal_matrix(const millerpole::NmcParams& p, cd s) {
  Eigen::MatrixXcd y(3, 3);
  y << 1 / p.R0 + s * (p.C0 + p.Cc0), 0, -s * p.Cc0,
       -p.gm1, 1 / p.R1 + s * (p.C1 + p.Cc1), -s * p.Cc1,
       -s * p.Cc0, p.gm2 - s * p.Cc1, 1 / p.R2 + s * (p.C2 + p.Cc0 + p.Cc1);
  return y;
}

/// V(out) for a unit current injected at node 0.
template <typename P>
cd numeric_transfer(const P& p, cd s, int out) {
  const auto y = nodal_matrix(p, s);
  Eigen::VectorXcd i = Eigen::VectorXcd::Zero(y.rows());
  i(0) = 1;
  const Eigen::VectorXcd v = y.fullPivLu().solve(i);
  return v(out);
}

inline millerpole::TwoStageParams random_two_stage(std::mt19937_64& g) {
  millerpole::TwoStageParams p;
  p.gm = log_uniform(g, 1e-6, 1);
  p.R1 = log_uniform(g, 1e3, 1e9);
  p.R2 = log_uniform(g, 1e3, 1e9);
  p.C1 = log_uniform(g, 1e-15, 1e-9);
  p.C2 = log_uniform(g, 1e-15, 1e-9);
  p.Cc = log_uniform(g, 1e-15, 1e-9);
  return p;
}

}  // namespace testing_support
