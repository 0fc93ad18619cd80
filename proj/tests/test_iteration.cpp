#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "scalarforge/scalarforge.hpp"

using namespace sf;

namespace {

ScheduleInputs inputs(rational K1, rational Z, int k_max = 3) {
    ScheduleInputs in;
    in.e_J0 = 1;
    in.K1 = K1;
    in.Z = Z;
    in.C0 = 1;
    in.Xi_bar = 2;
    in.alpha = 0.01;
    in.k_max = k_max;
    return in;
}

std::vector<Field> seed_wave(const Grid& g, const TimeAxis& ax) {
    std::vector<Field> f;
    for (int i = 0; i < ax.count; ++i) {
        double z = mollified_indicator(ax.t(i), -1, 1, 0.5);
        f.push_back(Field::sample(g, [&](double x1, double) { return z * std::cos(x1); }));
    }
    return f;
}

} // namespace

TEST(Schedule, TwoAndHundredLevels) {
    ScheduleInputs in = inputs(2, 100, 3);
    in.alpha = 0.1;
    auto s = build_schedule(in);
    ASSERT_EQ(s.stages.size(), 4u);
    EXPECT_TRUE(s.exact);
    EXPECT_EQ(s.stages[0].e_v, 2);
    EXPECT_EQ(s.stages[0].e_R, 2);
    EXPECT_EQ(s.stages[0].e_J, 1);
    EXPECT_EQ(s.stages[1].e_v, 2);
    EXPECT_EQ(s.stages[1].e_R, 2);
    EXPECT_EQ(s.stages[1].e_J, rational(1, 100));
    EXPECT_EQ(s.stages[2].e_v, 2);
    EXPECT_EQ(s.stages[2].e_R, rational(2, 100));
    EXPECT_EQ(s.stages[2].e_J, rational(1, 10000));
    // k >= 2: (K1 / Z^{k-2}, K1 / Z^{k-1}, 1 / Z^k)
    for (int k = 2; k <= 3; ++k) {
        EXPECT_EQ(s.stages[k].e_v, 2 / pow_q(100, k - 2));
        EXPECT_EQ(s.stages[k].e_R, 2 / pow_q(100, k - 1));
        EXPECT_EQ(s.stages[k].e_J, 1 / pow_q(100, k));
    }
    EXPECT_EQ(s.stages[0].N, 4 * pow_q(100, 2));
    EXPECT_EQ(s.stages[1].N, 4 * pow_q(100, 4));
    EXPECT_EQ(s.stages[2].N, 4 * pow_q(100, 4) * 10);
    EXPECT_EQ(s.stages[3].N, s.stages[2].N);
    EXPECT_LT(s.holder_ratio, 1);
}

TEST(Schedule, ClosedFormForRandomConstants) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> qd(2, 30), pd(1, 40);
    for (int trial = 0; trial < 5; ++trial) {
        const int q = qd(rng);
        rational Z = q * q;
        rational K1 = 1 + rational(pd(rng), pd(rng) + 7);
        if (K1 > Z) K1 = Z;
        auto s = build_schedule(inputs(K1, Z, 4));
        EXPECT_TRUE(s.exact) << trial;
        for (const auto& st : s.stages) {
            bool exact = true;
            EXPECT_EQ(st.N, closed_form_N(st.k, K1, Z, exact)) << "k=" << st.k << " K1=" << K1 << " Z=" << Z;
            EXPECT_TRUE(exact);
            // e_J' computed from N reproduces e_J / Z
            exact = true;
            EXPECT_EQ(next_e_J(st.e_v, st.e_R, st.N, exact), st.e_J / Z) << st.k;
            EXPECT_TRUE(exact);
        }
        for (std::size_t k = 0; k + 1 < s.stages.size(); ++k) {
            const auto &a = s.stages[k], &b = s.stages[k + 1];
            EXPECT_EQ(b.e_v, a.e_R);
            EXPECT_EQ(b.e_R, K1 * a.e_J);
            EXPECT_EQ(b.e_J, a.e_J / Z);
            EXPECT_EQ(b.Xi, s.in.C0 * a.N * a.Xi);
            EXPECT_NE(a.tag, b.tag);
        }
    }
}

TEST(Schedule, NonSquareZIsFlaggedInexact) {
    auto s = build_schedule(inputs(2, 8, 2));
    EXPECT_FALSE(s.exact);
    EXPECT_NEAR(to_double(s.stages[2].N), 4 * std::pow(8.0, 4.5), 1e-6 * std::pow(8.0, 4.5) * 4);
}

TEST(Schedule, Rejections) {
    ScheduleInputs in = inputs(2, 100);
    in.alpha = 1.0 / 9;
    EXPECT_THROW(build_schedule(in), ScheduleError);
    in.alpha = 0.2;
    EXPECT_THROW(build_schedule(in), ScheduleError);
    in = inputs(4, 2);
    EXPECT_THROW(build_schedule(in), ScheduleError);   // Z < K1
    in = inputs(2, 4);
    in.alpha = 0.1;
    in.C0 = 100;
    EXPECT_THROW(build_schedule(in), ScheduleError);   // geometric ratio >= 1
}

TEST(Schedule, IntervalsGrowByFourTauHat) {
    ScheduleInputs in = inputs(2, 100, 3);
    in.I_lo = -1.25;
    in.I_hi = 0.75;
    in.Y = 3;
    auto s = build_schedule(in);
    for (std::size_t k = 0; k + 1 < s.stages.size(); ++k) {
        EXPECT_EQ(s.stages[k + 1].I_lo, s.stages[k].I_lo - 4 * s.stages[k].tau_hat);
        EXPECT_EQ(s.stages[k + 1].I_hi, s.stages[k].I_hi + 4 * s.stages[k].tau_hat);
    }
    EXPECT_LE(s.growth_T, s.growth_T_bound);
}

TEST(Schedule, ParseRational) {
    EXPECT_EQ(parse_rational("3/4"), rational(3, 4));
    EXPECT_EQ(parse_rational("64"), 64);
    EXPECT_EQ(parse_rational("0.5"), rational(1, 2));
    EXPECT_THROW(parse_rational("x/2"), ConfigError);
}

TEST(Glue, CutoffAndDerivative) {
    GlueCutoff psi{2.0};
    EXPECT_EQ(psi(0), 1.0);
    EXPECT_EQ(psi(1.25), 1.0);
    EXPECT_EQ(psi(-1.5), 0.0);
    EXPECT_EQ(psi(3), 0.0);
    for (double t = -1.6; t <= 1.6; t += 0.01) {
        double h = 1e-6, fd = (psi(t + h) - psi(t - h)) / (2 * h);
        EXPECT_NEAR(psi.derivative(t), fd, 1e-6 * (1 + std::abs(fd))) << t;
    }
}

TEST(Glue, StressLivesOnTheTransition) {
    Grid g(32);
    auto theta0 = Field::sample(g, [](double x, double y) { return std::sin(x) * std::cos(2 * y) + 0.3 * std::cos(x + y); });
    SolverConfig sc;
    sc.dt = 1e-3;
    sc.t_end = 1.0;
    sc.save_every = 4;
    auto tr = evolve(theta0, symbols::ipm2d(), sc);
    TimeAxis ax = tr.axis;
    ax.t0 = -0.5;
    auto s = glue_solution(tr.theta, ax, symbols::ipm2d(), 0.5);
    EXPECT_EQ(glue_support_violation(s, 0.5), 0.0);
    EXPECT_EQ(s.support_violation(), 0.0);
    double inside = 0;
    const double bar = mean(tr.theta[0]);
    for (int i = 0; i < ax.count; ++i) {
        double a = std::abs(ax.t(i));
        if (a > 0.625 * 0.5 && a < 0.375) inside = std::max(inside, sup(s.R[i]));
        if (a <= 0.625 * 0.5) EXPECT_EQ(sup(s.theta[i] - tr.theta[i]), 0.0);
        if (a >= 0.375) {
            double d = 0;
            for (double v : s.theta[i].v) d = std::max(d, std::abs(v - bar));
            EXPECT_EQ(d, 0.0);
        }
    }
    EXPECT_GT(inside, 0.0);
    TimeAxis shorty = ax;
    shorty.t0 = -0.4;
    EXPECT_THROW(glue_solution(tr.theta, shorty, symbols::ipm2d(), 0.5), TimeRange);
}

TEST(Driver, SeedStressSatisfiesTheEquation) {
    Grid g(32);
    auto ax = TimeAxis::covering(-2, 2, 41);
    auto f = seed_wave(g, ax);
    auto seed = init_from_function(f, ax, symbols::ipm2d());
    EXPECT_GT(seed.e_J0, 0);
    EXPECT_EQ(seed.state.tag, VectorTag::A);
    auto d = residual_defect(seed.state, symbols::ipm2d(), {0, 0});
    EXPECT_LT(d.relative, 1e-11);
    EXPECT_LE(seed.state.I_lo, -1.5);
    EXPECT_GE(seed.state.I_hi, 1.5);
    EXPECT_EQ(seed.state.support_violation(), 0.0);
}

TEST(Driver, TimeConstantSolutionKeepsOnlyTheNonlinearTerm) {
    // cos(x1) is steady for IPM (u = 0); cos(x1) + cos(x2) is not, and its
    // stress is the one of div(theta u) alone
    Grid g(32);
    auto ax = TimeAxis::covering(0, 1, 5);
    std::vector<Field> steady(ax.count, Field::sample(g, [](double x, double) { return std::cos(x); }));
    EXPECT_LT(init_from_function(steady, ax, symbols::ipm2d()).e_J0, 1e-14);
    auto th = Field::sample(g, [](double x, double y) { return std::cos(x) + std::cos(y); });
    std::vector<Field> f(ax.count, th);
    auto seed = init_from_function(f, ax, symbols::ipm2d());
    VectorField ref = grad_inv_laplacian(divergence_spectrum(scalar_times(th, velocity(th, symbols::ipm2d()))));
    EXPECT_LT(sup(seed.state.R[2] - ref), 1e-14);
    EXPECT_GT(seed.e_J0, 0.1);
}

TEST(Driver, ZeroSeedAndMeanDrift) {
    Grid g(16);
    auto ax = TimeAxis::covering(0, 1, 9);
    std::vector<Field> zero(ax.count, Field(g));
    auto seed = init_from_function(zero, ax, symbols::ipm2d());
    EXPECT_EQ(seed.e_J0, 0.0);
    for (const auto& r : seed.state.R) EXPECT_EQ(sup(r), 0.0);
    auto res = run(seed, zero, symbols::ipm2d(), select_direction_pair(symbols::ipm2d()), DriverConfig{});
    EXPECT_TRUE(res.stages.empty());

    std::vector<Field> drift;
    for (int i = 0; i < ax.count; ++i) drift.push_back(Field(g, 0.1 * ax.t(i)));
    EXPECT_THROW(init_from_function(drift, ax, symbols::ipm2d()), MeanDrift);
}

TEST(Driver, KMaxZeroReturnsTheSeed) {
    Grid g(32);
    auto ax = TimeAxis::covering(-2, 2, 41);
    auto f = seed_wave(g, ax);
    auto seed = init_from_function(f, ax, symbols::ipm2d());
    DriverConfig dc;
    dc.k_max = 0;
    auto res = run(seed, f, symbols::ipm2d(), select_direction_pair(symbols::ipm2d()), dc);
    EXPECT_TRUE(res.stages.empty());
    ASSERT_EQ(res.schedule.stages.size(), 1u);
    EXPECT_EQ(sup(res.state.R[20] - seed.state.R[20]), 0.0);
    EXPECT_EQ(res.state.I_lo, seed.state.I_lo);
}

TEST(Driver, StepErrorsCarryTheStage) {
    Grid g(16);   // far too coarse for any wave
    auto ax = TimeAxis::covering(-3, 3, 25);
    auto f = seed_wave(g, ax);
    auto seed = init_from_function(f, ax, symbols::ipm2d());
    DriverConfig dc;
    dc.k_max = 1;
    dc.N_override = 1;
    try {
        run(seed, f, symbols::ipm2d(), select_direction_pair(symbols::ipm2d()), dc);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("stage 0: ", 0), 0u) << e.what();
        EXPECT_NE(e.kind(), "Error");
    }
}

TEST(Config, DefaultsValidateAndRoundTrip) {
    ExperimentConfig c;
    EXPECT_NO_THROW(validate(c));
    auto j = to_json(c);
    auto d = parse_config(j);
    EXPECT_EQ(to_json(d), j);
}

TEST(Config, UnknownKeysAndBadValues) {
    using nlohmann::json;
    EXPECT_THROW(parse_config(json{{"gird", 64}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"B", {{"lamda", 2}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"seed", {{"window", {0, 1}}, {"slice", 3}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"grid", "big"}}), ConfigError);
    auto c = parse_config(json{{"Z", "81/4"}, {"K1", 2}, {"symbol", {{"m1", "0"}, {"m2", "xi1^2/(xi1^2+xi2^2)"}}}});
    EXPECT_EQ(parse_rational(c.Z), rational(81, 4));
    EXPECT_EQ(parse_rational(c.K1), 2);
    EXPECT_NO_THROW(c.make_symbol());
    c.n = 100;
    EXPECT_THROW(validate(c), SizeMismatch);
    c = ExperimentConfig{};
    c.alpha = 0.2;
    EXPECT_THROW(validate(c), ConfigError);
    c = ExperimentConfig{};
    c.seed.expression = "cos(x3)";
    EXPECT_THROW(validate(c), ParseError);
}

TEST(StateIo, RoundTrip) {
    Grid g(16);
    auto ax = TimeAxis::covering(-1, 1, 7);
    auto s = CompoundState::zero(g, ax, -0.5, 0.25);
    s.tag = VectorTag::B;
    for (int i = 0; i < ax.count; ++i) {
        s.theta[i] = Field::sample(g, [&](double x, double y) { return std::sin(x + i) * std::cos(y); });
        s.c[i] = Field(g, 0.1 * i);
        s.R[i] = {Field(g, 1.0 * i), Field(g, -2.0 * i)};
    }
    auto dir = (std::filesystem::temp_directory_path() / "sf_state_io").string();
    save_state(dir, s, {{"note", "x"}});
    auto back = load_state(dir);
    EXPECT_EQ(back.meta["note"], "x");
    EXPECT_EQ(back.state.tag, VectorTag::B);
    EXPECT_EQ(back.state.I_lo, -0.5);
    EXPECT_EQ(back.state.I_hi, 0.25);
    EXPECT_EQ(back.state.axis.dt, ax.dt);
    for (int i = 0; i < ax.count; ++i) {
        EXPECT_EQ(sup(back.state.theta[i] - s.theta[i]), 0.0);
        EXPECT_EQ(sup(back.state.c[i] - s.c[i]), 0.0);
        EXPECT_EQ(sup(back.state.R[i] - s.R[i]), 0.0);
    }
    std::filesystem::remove_all(dir);
}
