#include <gtest/gtest.h>

#include <random>

#include "scalarforge/fft.hpp"
#include "scalarforge/mollifier.hpp"
#include "scalarforge/parallel.hpp"

using namespace sf;

TEST(Grid, RejectsBadSizes) {
    EXPECT_THROW(Grid(4), SizeMismatch);
    EXPECT_THROW(Grid(48), SizeMismatch);
    EXPECT_NO_THROW(Grid(8));
    Grid g(16);
    EXPECT_EQ(g.max_freq(), 7);
    EXPECT_EQ(g.freq(9), -7);
    EXPECT_EQ(g.index(-1), 15);
}

TEST(Fft, ConstantFieldHasUnitMean) {
    Grid g(32);
    Field f(g, 1.0);
    Spectrum s = fft(f);
    EXPECT_NEAR(std::abs(s.mode(0, 0) - 1.0), 0.0, 1e-15);
    double rest = 0;
    s.for_each([&](int k1, int k2, const cplx& c) {
        if (k1 || k2) rest = std::max(rest, std::abs(c));
    });
    EXPECT_LT(rest, 1e-15);
}

TEST(Fft, CosineSplitsIntoTwoHalves) {
    Grid g(32);
    Field f = Field::sample(g, [](double x1, double) { return std::cos(x1); });
    Spectrum s = fft(f);
    EXPECT_NEAR(s.mode(1, 0).real(), 0.5, 1e-14);
    EXPECT_NEAR(s.mode(-1, 0).real(), 0.5, 1e-14);
    EXPECT_NEAR(std::abs(s.mode(0, 1)), 0.0, 1e-14);
}

TEST(Fft, RoundTripRandom) {
    for (int n : {8, 64, 256}) {
        Grid g(n);
        std::mt19937_64 rng(n);
        std::normal_distribution<double> nd;
        Field f(g);
        CField z(g);
        for (std::size_t i = 0; i < f.size(); ++i) {
            f.v[i] = nd(rng);
            z.v[i] = cplx(nd(rng), nd(rng));
        }
        Field back = ifft_real(fft(f));
        CField zb = ifft(fft(z));
        double e1 = 0, e2 = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            e1 = std::max(e1, std::abs(back.v[i] - f.v[i]));
            e2 = std::max(e2, std::abs(zb.v[i] - z.v[i]));
        }
        EXPECT_LT(e1, 1e-12) << n;
        EXPECT_LT(e2, 1e-12) << n;
    }
}

TEST(Fft, IntegralOfSquaredCosine) {
    Grid g(16);
    Field f = Field::sample(g, [](double x1, double x2) { return std::cos(x1 + 2 * x2); });
    EXPECT_NEAR(integral(mul(f, f)), 2 * std::numbers::pi * std::numbers::pi, 1e-12);
    EXPECT_NEAR(mean(f), 0.0, 1e-15);
}

TEST(Mollifier, SmoothStepIsExactOutside) {
    EXPECT_EQ(smooth_step(-0.1), 0.0);
    EXPECT_EQ(smooth_step(1.2), 1.0);
    EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-14);
    double prev = 0;
    for (int i = 1; i < 100; ++i) {
        double s = smooth_step(i / 100.0);
        EXPECT_GE(s, prev);
        EXPECT_NEAR(s + smooth_step(1 - i / 100.0), 1.0, 1e-13);
        prev = s;
    }
}

TEST(Mollifier, SmoothStepMatchesAdaptiveQuadrature) {
    using boost::math::quadrature::gauss_kronrod;
    double mass = gauss_kronrod<double, 61>::integrate(bump, -1.0, 1.0, 15, 1e-15);
    for (double s : {0.01, 0.1, 0.33, 0.5, 0.77, 0.95}) {
        double ref = gauss_kronrod<double, 61>::integrate(bump, -1.0, 2 * s - 1, 15, 1e-15) / mass;
        EXPECT_NEAR(smooth_step(s), ref, 1e-13) << s;
    }
}

TEST(Mollifier, UnitBumpHasUnitMass) {
    GaussRule r = gauss_legendre(80, -1, 1);
    double m = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) m += r.w[i] * unit_bump(r.x[i]);
    EXPECT_NEAR(m, 1.0, 1e-10);
}

TEST(Mollifier, GaussLegendreIntegratesPolynomials) {
    for (unsigned n : {1u, 2u, 5u, 8u, 16u}) {
        GaussRule r = gauss_legendre(n, 0.0, 2.0);
        ASSERT_EQ(r.x.size(), n);
        double s = 0;
        int p = int(2 * n - 1);
        for (std::size_t i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], p);
        EXPECT_NEAR(s, std::pow(2.0, p + 1) / (p + 1), 1e-11 * std::pow(2.0, p + 1));
    }
}

TEST(Mollifier, MollifiedIndicatorPlateau) {
    EXPECT_EQ(mollified_indicator(0.5, 0.0, 1.0, 0.1), 1.0);
    EXPECT_EQ(mollified_indicator(-0.2, 0.0, 1.0, 0.1), 0.0);
    EXPECT_NEAR(mollified_indicator(0.0, 0.0, 1.0, 0.1), 0.5, 1e-13);
}

TEST(Parallel, CoversEveryIndexOnce) {
    set_threads(3);
    std::vector<int> hit(101, 0);
    parallel_for(101, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) throw BlowUp("boom");
                 }),
                 BlowUp);
    set_threads(0);
}
