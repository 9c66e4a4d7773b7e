#include <gtest/gtest.h>

#include <random>

#include "millerpole/feedback.hpp"
#include "support.hpp"

using namespace millerpole;
using testing_support::cd;
using testing_support::rel;

namespace {

TwoStageParams two_stage() { return {1e-3, 1e6, 1e6, 1e-13, 1e-11, 1e-12, 1e-5}; }

}  // namespace

TEST(Feedback, TwoStageLoopTransmission) {
  const auto p = two_stage();
  const auto d = decompose_two_stage(p);
  const long double k = static_cast<long double>(p.gm) * p.R1 * p.R2 * p.Cc;
  const RationalFunction want(
      Polynomial{0, k}, Polynomial::time_constant(static_cast<long double>(p.R1) * (p.C1 + p.Cc)) *
                            Polynomial::time_constant(static_cast<long double>(p.R2) * (p.C2 + p.Cc)));
  EXPECT_TRUE(equivalent(d.loop, want, 1e-15L));
  ASSERT_EQ(d.open_poles.size(), 2u);
  EXPECT_LT(rel(d.open_poles[0], -1 / (p.R2 * (p.C2 + p.Cc))), 1e-15);
  EXPECT_LT(rel(d.open_poles[1], -1 / (p.R1 * (p.C1 + p.Cc))), 1e-15);
}

TEST(Feedback, MidbandSignIsPositive) {
  const auto d = decompose_two_stage(two_stage());
  const double w = std::sqrt(std::abs(d.open_poles[0] * d.open_poles[1]));
  EXPECT_GT(eval(d.loop, cd(0, w)).real(), 0);
}

TEST(Feedback, ClosedLoopWithFeedforwardIsExact) {
  std::mt19937_64 g(11);
  for (int i = 0; i < 200; ++i) {
    const auto p = testing_support::random_two_stage(g);
    const auto d = decompose_two_stage(p);
    EXPECT_TRUE(equivalent(close_loop(d, true), exact_transimpedance(p), 1e-12L)) << i;
  }
}

TEST(Feedback, ApproximateClosedLoopCarriesCcSquared) {
  std::mt19937_64 g(12);
  for (int i = 0; i < 100; ++i) {
    const auto p = testing_support::random_two_stage(g);
    const auto cl = close_loop(decompose_two_stage(p), false);
    const long double R1 = p.R1, R2 = p.R2, C1 = p.C1, C2 = p.C2, Cc = p.Cc;
    const long double want = R1 * R2 * (C1 * C2 + Cc * (C1 + C2) + Cc * Cc);
    EXPECT_LT(std::abs(cl.den()[2] / cl.den()[0] - want) / want, 1e-15L) << i;
  }
}

TEST(Feedback, NoCompensationCapacitor) {
  auto p = two_stage();
  p.Cc = 0;
  try {
    decompose_two_stage(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no feedback path"), std::string::npos);
  }
}

TEST(Feedback, FeedforwardZero) {
  const auto p = two_stage();
  const auto d = decompose_two_stage(p);
  const auto z = roots(d.a_ff->num());
  ASSERT_EQ(z.size(), 1u);
  EXPECT_LT(rel(z[0], p.gm / p.Cc), 1e-15);
  // high-frequency sign of a'(s)beta(s) is reversed relative to midband
  const auto lff = feedforward_loop(d);
  EXPECT_LT(lff.num().leading() * lff.den().leading(), 0);
  EXPECT_GT(d.loop.num().leading() * d.loop.den().leading(), 0);
}

TEST(Feedback, CurrentBufferCancellation) {
  const CurrentBufferParams p{1e-3, 2e-4, 1e6, 1e6, 1e-13, 1e-11, 1e-12, std::nullopt};
  const auto d = decompose_current_buffer(p);
  ASSERT_EQ(d.a_zeros.size(), 1u);
  EXPECT_EQ(d.a_zeros, d.beta_poles);
  EXPECT_TRUE(equivalent(d.a * d.beta, d.loop, 1e-15L));
  EXPECT_EQ(d.loop.den().degree(), 3);
  ASSERT_EQ(d.open_poles.size(), 3u);
  EXPECT_LT(rel(d.open_poles[2], -p.gmc * (p.C2 + p.Cc) / (p.C2 * p.Cc)), 1e-15);
  EXPECT_THROW(feedforward_loop(d), Error);
}

TEST(Feedback, CurrentBufferDcAndDominantPole) {
  const CurrentBufferParams p{1e-3, 1e-2, 1e6, 1e6, 1e-13, 1e-11, 1e-12, std::nullopt};
  const auto cl = close_loop(decompose_current_buffer(p), false);
  const auto exact = exact_transimpedance(p);
  EXPECT_LT(std::abs(cl.num()[0] / cl.den()[0] - exact.num()[0] / exact.den()[0]) / std::abs(exact.num()[0]), 1e-12L);
  const auto pa = roots(cl.den());
  const auto pe = roots(exact.den());
  EXPECT_LT(rel(pa[0], pe[0]), 1e-3);
}

TEST(Feedback, NmcLoop) {
  NmcParams p;
  p.gm1 = 1e-4;
  p.gm2 = 1e-3;
  p.R0 = p.R1 = p.R2 = 1e6;
  p.C0 = p.C1 = 1e-14;
  p.C2 = 1e-11;
  p.Cc0 = 1e-12;
  p.Cc1 = 5e-13;
  const auto d = decompose_nmc(p);
  EXPECT_EQ(d.loop.den().degree(), 3);
  EXPECT_TRUE(equivalent(d.a * d.beta, d.loop, 1e-15L));
  EXPECT_NEAR(static_cast<double>(d.loop.num()[1]), p.gm1 * p.gm2 * p.R0 * p.R1 * p.R2 * p.Cc0, 1e-3);
  const auto exact = exact_transimpedance(p);
  const auto cl = close_loop(d, false);
  EXPECT_LT(rel(roots(cl.den())[0], roots(exact.den())[0]), 1e-3);
}

TEST(Feedback, InputImpedanceSwapsPoleIntoZero) {
  auto p = two_stage();
  p.R1 = 1e5;  // |p_o1| > |p_o2|
  const auto zin = input_impedance_pz(p);
  ASSERT_EQ(zin.zeros.size(), 1u);
  EXPECT_LT(rel(zin.zeros[0], -1 / (p.R2 * (p.C2 + p.Cc))), 1e-12);
  const auto poles = roots(exact_transimpedance(p).den());
  ASSERT_EQ(zin.poles.size(), poles.size());
  for (std::size_t i = 0; i < poles.size(); ++i) EXPECT_LT(rel(zin.poles[i], poles[i]), 1e-12);
}
