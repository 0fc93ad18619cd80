#include <gtest/gtest.h>

#include "scalarforge/step.hpp"

using namespace sf;

namespace {

// theta = 0, c = 0, R = zeta(t) r constant in space: div R = 0 so the
// compound equation holds exactly.
CompoundState still_stress(const Grid& g, const TimeAxis& ax, vec2 r, double lo, double hi) {
    CompoundState s = CompoundState::zero(g, ax, lo, hi);
    for (int i = 0; i < ax.count; ++i) {
        double z = mollified_indicator(ax.t(i), lo + 0.1, hi - 0.1, 0.1);
        s.R[i] = {Field(g, z * r[0]), Field(g, z * r[1])};
    }
    return s;
}

} // namespace

TEST(Energy, ProfileSupportAndPlateau) {
    EnergyProfile p = build_energy_profile(0, 1, 0.01, 0.5, 4);
    EXPECT_NEAR(p.lo(), -0.04, 1e-15);
    EXPECT_NEAR(p.hi(), 1.04, 1e-15);
    EXPECT_DOUBLE_EQ(p.e(0.5), 4.0);
    EXPECT_EQ(p.e(-0.0401), 0.0);
    EXPECT_EQ(p.e(1.0401), 0.0);
    for (double t = -0.01; t <= 1.01; t += 0.001) EXPECT_NEAR(p.e(t), 4.0, 1e-12) << t;
    auto M = profile_derivative_constants(p, 2, 1, 1);
    EXPECT_GT(M[0], 0);
    EXPECT_TRUE(std::isfinite(M[1]));
}

TEST(Energy, PartitionOfUnity) {
    TimePartition P{0.07};
    double worst = 0;
    for (int i = 0; i < 5000; ++i) {
        double t = -3 + 6.0 * i / 5000, s = 0;
        for (int k : P.active(t)) s += P.eta(k, t) * P.eta(k, t);
        worst = std::max(worst, std::abs(s - 1));
        for (int k : P.active(t)) EXPECT_LT(std::abs(t - k * P.tau), 2 * P.tau / 3 + 1e-12);
    }
    EXPECT_LT(worst, 1e-14);
}

TEST(Energy, AmplitudeIdentity) {
    Grid g(32);
    Field ct(g), cj(g);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            ct(i, j) = 0.3 * std::sin(g.x(i));
            cj(i, j) = -0.2 * std::cos(g.x(j));
        }
    double se = 1.3;
    TimePartition P{0.1};
    double t = 0.137;
    std::vector<std::pair<int, double>> etas;
    for (int k : P.active(t)) etas.push_back({k, P.eta(k, t)});
    SliceAmplitudes a = solve_amplitudes(se, etas, ct, cj);
    double worst = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        double s = 0;
        for (const auto& th : a.theta) s += th.v[p] * th.v[p];
        worst = std::max(worst, std::abs(s - se * se * (1 + a.eps.v[p])));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Energy, ClosedFormGamma) {
    Grid g(16);
    double e = 2.0;
    Field ct(g, -e / 8), cj(g, -e / 8);     // c_tilde + c_J = -e/4, eps = 1/4
    SliceAmplitudes a = solve_amplitudes(std::sqrt(e), {{0, 1.0}}, ct, cj);
    ASSERT_EQ(a.theta.size(), 1u);
    for (double v : a.theta[0].v) EXPECT_NEAR(v / std::sqrt(e), std::sqrt(5.0) / 2, 1e-15);
    Field zero(g);
    a = solve_amplitudes(std::sqrt(e), {{0, 1.0}}, zero, zero);
    for (double v : a.theta[0].v) EXPECT_NEAR(v, std::sqrt(e), 1e-15);
}

TEST(Energy, EpsilonTooLarge) {
    Grid g(16);
    Field big(g, 1.0), zero(g);
    EXPECT_THROW(solve_amplitudes(1.0, {{0, 1.0}}, big, zero), EpsilonTooLarge);
    EXPECT_THROW(solve_amplitudes(0.0, {}, big, zero), EpsilonTooLarge);
}

TEST(Step, ParametersFollowTheLevels) {
    FrequencyEnergyLevels lv{4, 1, 0.25, 0.1};
    StepParameters p = step_parameters(lv, 10, 2);
    EXPECT_DOUBLE_EQ(p.tau_hat, 0.25);
    EXPECT_NEAR(p.b, std::sqrt(1.0 / (0.5 * 10)), 1e-15);
    EXPECT_EQ(p.lambda, 80);
    EXPECT_NEAR(p.tau, p.b * p.tau_hat / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(p.e_J_next, p.b * 0.25, 1e-15);
    EXPECT_THROW(step_parameters(lv, 1, 1), ScaleInvariant);
}

TEST(Step, WavePotentialAndZeroAmplitudes) {
    Grid g(64);
    Field f(g);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) f(i, j) = std::cos(3 * g.x(i) - 2 * g.x(j)) + 0.2 * std::sin(7 * g.x(j));
    VectorField W = wave_potential(f);
    EXPECT_LT(sup(divergence(W) - f), 1e-11);
    SliceAmplitudes a;
    a.eps = Field(g);
    SliceWaves w = assemble_waves(a, {}, 0, 2, {1, 0}, symbols::ipm2d());
    EXPECT_EQ(sup(w.Theta), 0.0);
    EXPECT_EQ(sup(w.U), 0.0);
}

TEST(Step, IdentityOnZeroState) {
    Grid g(256);
    TimeAxis ax{-2, 0.05, 101};
    CompoundState s = CompoundState::zero(g, ax, 0, 1);
    Symbol m = symbols::ipm2d();
    DirectionPair pair = select_direction_pair(m);
    StepConfig cfg;
    cfg.N = 1;
    FrequencyEnergyLevels lv{2, 1, 1, 1};
    StepResult r = main_lemma_step(s, m, pair, lv, cfg);
    EXPECT_EQ(r.state.tag, VectorTag::B);
    for (int i = 0; i < ax.count; ++i) {
        EXPECT_EQ(sup(r.state.theta[i]), 0.0);
        EXPECT_EQ(sup(r.state.R[i]), 0.0);
        EXPECT_EQ(sup(r.state.c[i]), 0.0);
    }
    EXPECT_EQ(r.report.norm_R1, 0.0);
}

TEST(Step, DefectIdentityOnStillStress) {
    Grid g(256);
    TimeAxis ax{-2.2, 0.05, 109};
    Symbol m = symbols::ipm2d();
    DirectionPair pair = select_direction_pair(m);
    CompoundState s = still_stress(g, ax, {0.3, -0.2}, 0, 1);
    ASSERT_LT(residual_defect(s, m, pair.A).hminus1, 1e-14);
    StepConfig cfg;
    cfg.N = 1;
    cfg.max_lambda_doublings = 0;
    cfg.delta_stride = 16;
    FrequencyEnergyLevels lv{2, 1, 1, 0.5};
    StepResult r = main_lemma_step(s, m, pair, lv, cfg);
    const StepReport& rep = r.report;
    EXPECT_EQ(r.state.tag, VectorTag::B);
    EXPECT_GT(rep.waves, 0);
    EXPECT_TRUE(rep.defect_checked);
    EXPECT_LT(rep.defect.relative, 1e-9) << to_json(rep).dump(2);
    EXPECT_LT(rep.amplitude_identity_err, 1e-12);
    EXPECT_LT(rep.pre_delta_sum_rel, 1e-10);
    EXPECT_LT(rep.pre_delta_plancherel_rel, 1e-10);
    EXPECT_LT(rep.self_interference_max, 1e-12);
    EXPECT_LT(rep.divW_err, 1e-10);
    EXPECT_LT(rep.mean_drift, 1e-12);
    EXPECT_TRUE(rep.band_disjoint);
    EXPECT_TRUE(rep.energy_increment_ok);
    EXPECT_LE(rep.eps_max, 0.5);
    // I grows by exactly 4 tau_hat on each side
    EXPECT_EQ(rep.support_lo, 0 - 4 * 0.5);
    EXPECT_EQ(rep.support_hi, 1 + 4 * 0.5);
    EXPECT_LT(r.state.support_violation(), 1e-12);
    auto j = to_json(rep);
    EXPECT_EQ(j["tag_out"], "B");
    EXPECT_TRUE(j["stress"].contains("R_T"));
}
