#include <gtest/gtest.h>

#include <random>

#include "millerpole/polynomial.hpp"
#include "millerpole/rational.hpp"
#include "millerpole/roots.hpp"
#include "support.hpp"

using namespace millerpole;
using testing_support::cd;
using testing_support::rel;

TEST(Polynomial, TrimsAndReportsDegree) {
  EXPECT_EQ(Polynomial{}.degree(), -1);
  EXPECT_TRUE(Polynomial({0.0L, 0.0L}).is_zero());
  EXPECT_EQ(Polynomial({1.0L, 2.0L, 0.0L}).degree(), 1);
  EXPECT_EQ(Polynomial::monomial(3, 4).degree(), 4);
  EXPECT_EQ(Polynomial({0.0L, 0.0L, 5.0L}).origin_multiplicity(), 2u);
}

TEST(Polynomial, Arithmetic) {
  const Polynomial a{1, 1};   // 1 + s
  const Polynomial b{1, -1};  // 1 - s
  EXPECT_EQ(a * b, Polynomial({1, 0, -1}));
  EXPECT_EQ(a + b, Polynomial({2}));
  EXPECT_EQ(a - b, Polynomial({0, 2}));
  EXPECT_EQ(-a, Polynomial({-1, -1}));
  EXPECT_EQ(a * 3.0L, Polynomial({3, 3}));
  EXPECT_TRUE((a - a).is_zero());
  EXPECT_EQ(Polynomial({1, 2, 3}).derivative(), Polynomial({2, 6}));
  EXPECT_EQ(s_var() * s_var(), Polynomial::monomial(1, 2));
}

TEST(Polynomial, Evaluation) {
  const Polynomial p{1, 2, 3};
  EXPECT_EQ(p(2.0L), 17.0L);
  const auto v = p(std::complex<long double>(0, 1));
  EXPECT_EQ(v, std::complex<long double>(-2, 2));
}

TEST(Polynomial, RelativeDifference) {
  EXPECT_EQ(max_relative_difference(Polynomial{1, 2}, Polynomial{1, 2}), 0.0L);
  EXPECT_NEAR(static_cast<double>(max_relative_difference(Polynomial{1, 2}, Polynomial{1, 2.2L})), 0.2 / 2.2, 1e-15);
}

TEST(Roots, SimpleReal) {
  const auto r = roots(Polynomial(testing_support::from_roots({-1, -2, -3})));
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0].real(), -1, 1e-14);
  EXPECT_NEAR(r[1].real(), -2, 1e-14);
  EXPECT_NEAR(r[2].real(), -3, 1e-14);
}

TEST(Roots, ConjugatePairsAreExact) {
  const auto r = roots(Polynomial{1, 0, 1});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], std::conj(r[1]));
  EXPECT_LT(r[0].imag(), 0);
  EXPECT_NEAR(r[1].imag(), 1, 1e-15);

  const auto q = roots(Polynomial(testing_support::from_roots({{-1, 2}, {-1, -2}, {-3, 0}, {-0.5, 7}, {-0.5, -7}})));
  for (const auto& z : q) {
    if (z.imag() == 0) continue;
    EXPECT_NE(std::find(q.begin(), q.end(), std::conj(z)), q.end());
  }
}

TEST(Roots, OriginDeflation) {
  const auto r = roots(Polynomial{0, 0, 5, 1});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0], cd(0));
  EXPECT_EQ(r[1], cd(0));
  EXPECT_NEAR(r[2].real(), -5, 1e-14);
}

TEST(Roots, WidelySpreadTimeConstants) {
  const Polynomial p =
      Polynomial::time_constant(1e3L) * Polynomial::time_constant(1e-3L) * Polynomial::time_constant(1e-9L);
  const auto r = roots(p);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_LT(rel(r[0], -1e-3), 1e-12);
  EXPECT_LT(rel(r[1], -1e3), 1e-12);
  EXPECT_LT(rel(r[2], -1e9), 1e-12);
}

TEST(Roots, RandomConstructedPolynomials) {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<cd> want;
    const int deg = 3 + trial % 5;
    while (static_cast<int>(want.size()) < deg) {
      const double mag = testing_support::log_uniform(g, 1e-3, 1e6);
      if (deg - static_cast<int>(want.size()) >= 2 && g() % 3 == 0) {
        const double ang = std::uniform_real_distribution<double>(0.1, 1.4)(g);
        want.emplace_back(-mag * std::cos(ang), mag * std::sin(ang));
        want.emplace_back(-mag * std::cos(ang), -mag * std::sin(ang));
      } else {
        want.emplace_back(-mag, 0);
      }
    }
    const auto got = roots(Polynomial(testing_support::from_roots(want)));
    ASSERT_EQ(got.size(), want.size());
    for (const auto& w : want) {
      double best = 1e300;
      for (const auto& z : got) best = std::min(best, rel(z, w));
      EXPECT_LT(best, 1e-6) << "trial " << trial;
    }
  }
}

TEST(Roots, ConstantHasNoRoots) {
  try {
    roots(Polynomial{3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.module(), "polyalg");
    EXPECT_NE(std::string(e.what()).find("no roots defined"), std::string::npos);
  }
}

TEST(Roots, QuadraticWithoutCancellation) {
  // s^2 + 1e8 s + 1: small root -1e-8 - 1e-24 + ...
  const auto [a, b] = quadratic_roots(1.0L, 1e8L, 1.0L);
  EXPECT_LT(std::abs(static_cast<double>(a.real()) + 1e-8) / 1e-8, 1e-15);
  EXPECT_LT(std::abs(static_cast<double>(b.real()) + 1e8) / 1e8, 1e-15);
}

TEST(Rational, CanonicalForm) {
  const RationalFunction r(Polynomial{2, 4}, Polynomial{2, 2});
  EXPECT_EQ(r.den()[0], 1.0L);
  EXPECT_EQ(r.num(), Polynomial({1, 2}));
  const RationalFunction q(Polynomial{1}, Polynomial{0, 4});
  EXPECT_EQ(q.den(), Polynomial({0, 1}));
  EXPECT_THROW(RationalFunction(Polynomial{1}, Polynomial{}), Error);
}

TEST(Rational, CloseLoop) {
  // a = 10/(1+s), beta = 1 -> 10/(11+s)
  const RationalFunction a(Polynomial{10}, Polynomial{1, 1});
  const auto cl = rational_close(a, RationalFunction::constant(1));
  EXPECT_TRUE(equivalent(cl, RationalFunction(Polynomial{10}, Polynomial{11, 1}), 1e-18L));
  const RationalFunction m(Polynomial{1}, Polynomial{1});
  EXPECT_THROW(rational_close(m, RationalFunction::constant(-1)), Error);
}

TEST(Rational, PoleEvaluation) {
  const RationalFunction r(Polynomial{1}, Polynomial{1, 1});
  EXPECT_LT(std::abs(eval(r, cd(0, 1)) - cd(0.5, -0.5)), 1e-15);
  EXPECT_THROW(eval(r, cd(-1, 0)), Error);
}
