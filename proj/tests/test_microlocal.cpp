#include <gtest/gtest.h>

#include "scalarforge/microlocal.hpp"

using namespace sf;

namespace {

WavePacket bent_packet(int n, int lambda) {
    Grid g(n);
    WavePacket p;
    p.linear = {1, 0};
    p.lambda = lambda;
    p.xi_tilde = Field::sample(g, [](double x, double y) { return 0.05 * std::sin(x + y); });
    p.amplitude = to_complex(Field::sample(g, [](double x, double y) { return 1 + 0.5 * std::cos(y) + 0.2 * std::sin(x); }));
    return p;
}

double worst(const CField& a, const CField& b, const std::vector<std::size_t>& pts) {
    double m = 0;
    for (auto i : pts) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

} // namespace

TEST(Microlocal, LinearPhaseConstantAmplitudeIsExact) {
    Grid g(64);
    WavePacket p{{1, 1}, Field(), CField(g, 2.0), 5};
    auto e = expand_exact(symbols::ipm2d(), p);
    EXPECT_LT(std::max(sup(e.error[0]), sup(e.error[1])), 1e-13);
    GaussianKernel K{{5, 5}, 2};
    auto q = expand_quadrature(K, p, QuadSpec{4, 4, 0.5, 1e-14, 8});
    for (auto i : q.points) EXPECT_LT(std::abs(q.error[0].v[i]), 1e-12);
}

TEST(Microlocal, ReconstructionIdentity) {
    WavePacket p = bent_packet(128, 12);
    const Grid& g = p.grid();
    auto e = expand_exact(symbols::sqg(), p);
    CField E = phase_factor(p);
    CVectorField T = apply_multiplier(mul(E, p.amplitude), symbols::sqg());
    for (int c = 0; c < 2; ++c) {
        double m = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            m = std::max(m, std::abs(E.v[i] * (e.leading[c].v[i] + e.error[c].v[i]) - T[c].v[i]));
        EXPECT_LT(m, 1e-12);
    }
}

TEST(Microlocal, QuadratureMatchesExact) {
    WavePacket p = bent_packet(256, 32);
    GaussianKernel K{{32, 0}, 8};
    auto ex = expand_exact(K.multiplier(), p);
    auto q = expand_quadrature(K, p, QuadSpec{});
    ASSERT_FALSE(q.points.empty());
    double scale = sup(ex.error[0]);
    ASSERT_GT(scale, 1e-4);  // the comparison is not trivially zero
    EXPECT_LT(worst(q.error[0], ex.error[0], q.points) / scale, 1e-3);
}

TEST(Microlocal, QuadratureConvergesInR) {
    WavePacket p = bent_packet(128, 16);
    GaussianKernel K{{16, 0}, 4};
    auto ex = expand_exact(K.multiplier(), p);
    double prev = 1e300;
    for (int r : {1, 2, 4}) {
        QuadSpec qs;
        qs.r_nodes = r;
        qs.stride = 32;
        auto q = expand_quadrature(K, p, qs);
        double e = worst(q.error[0], ex.error[0], q.points);
        EXPECT_LT(e, prev) << r;
        prev = e;
    }
}

TEST(Microlocal, DriftErrorDecaysLikeInverseLambda) {
    Grid g(256);
    Field phase = Field::sample(g, [](double x, double y) { return 0.1 * std::sin(x) + 0.05 * std::cos(y); });
    CField amp = to_complex(Field::sample(g, [](double x, double y) { return 1 + 0.3 * std::cos(x - y); }));
    DecayStudy d = decay_study(symbols::ipm2d(), {1, 1}, phase, amp, {8, 16, 32});
    EXPECT_FALSE(d.exact_u);
    EXPECT_NEAR(d.slope_u, -1.0, 0.2);
    for (std::size_t k = 1; k < d.du.size(); ++k) EXPECT_LT(d.du[k], d.du[k - 1]);
}

TEST(Microlocal, UnresolvedPacketThrows) {
    WavePacket p = bent_packet(32, 15);
    EXPECT_THROW(expand_exact(symbols::sqg(), p), ResolutionError);
    EXPECT_THROW(expand_quadrature(GaussianKernel{{1, 0}, 1}, bent_packet(32, 2), QuadSpec{0}), QuadratureError);
}
