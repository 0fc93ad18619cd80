#pragma once

#include <fstream>
#include <optional>
#include <random>
#include <set>

#include <json.hpp>

#include "driver.hpp"
#include "expression.hpp"
#include "sfld.hpp"
#include "smooth_solver.hpp"

namespace sf {

// Experiment configuration. JSON, every section optional, unknown keys are
// an error at every level (schema in the README).
struct SeedSpec {
    std::string expression = "(step((t + 2.25) / 1.5) - step((t - 0.75) / 1.5)) * cos(x1)";   // in t, x1, x2
    std::string snapshot;          // SFLD series, one record per slice; overrides the expression
    double t0 = -6, t1 = 6;
    int slices = 97;
};

struct MicrolocalSpec {
    int n = 1024;
    std::vector<int> lambdas{64, 128, 256};
    std::array<int, 2> direction{1, 0};
    std::string phase = "0.05 * sin(x1) * cos(x2)";       // periodic part, in x1, x2
    std::string amplitude = "exp(cos(x1) + sin(x2))";     // in x1, x2
};

struct SmoothSpec {
    std::string theta0;            // expression in x1, x2; empty: random band-limited data
    int random_modes = 4;
    double random_amplitude = 1.0;
    SolverConfig solver;
};

struct ExperimentConfig {
    std::string symbol = "ipm2d";
    std::string m1, m2;            // custom symbol (both set)
    int n = 512;
    double alpha = 0.1;
    std::string K1 = "auto", Z = "64", Y = "1", C0 = "2";
    double N = 1;                  // 0: the schedule's N
    int k_max = 2;
    double B_lambda = 1, B_mollify = 10;
    int lambda_doublings = 8, mollify_doublings = 8;
    bool check_defect = true;
    int delta_stride = 8;
    SeedSpec seed;
    std::string probe = "bump(t / 3) * cos(x1 + x2)";   // test function for the weak pairing; empty: none
    MicrolocalSpec microlocal;
    SmoothSpec smooth;
    double glue_T = 1;
    std::string output = "out";
    std::uint64_t rng_seed = 1;
    int threads = 0;

    Symbol make_symbol() const {
        if (!m1.empty() || !m2.empty()) {
            if (m1.empty() || m2.empty()) throw ConfigError("custom symbol needs both m1 and m2");
            return symbols::custom(m1, m2, symbol.empty() ? "custom" : symbol);
        }
        return symbols::builtin(symbol);
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

// rationals may be given as numbers or "p/q" strings
inline void take_rational(const nlohmann::json& j, const char* key, std::string& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_string()) dst = v.get<std::string>();
    else if (v.is_number()) dst = v.dump();
    else throw ConfigError("bad value for '" + std::string(key) + "'");
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::take;
    ExperimentConfig c;
    detail::check_keys(j,
                       {"symbol", "grid", "alpha", "K1", "Z", "Y", "C0", "N", "k_max", "B", "step", "seed", "probe",
                        "microlocal", "smooth", "glue", "output", "rng_seed", "threads"},
                       "config");
    if (j.contains("symbol")) {
        const auto& s = j["symbol"];
        if (s.is_string()) {
            c.symbol = s.get<std::string>();
        } else {
            detail::check_keys(s, {"name", "m1", "m2"}, "symbol");
            c.symbol = "custom";
            take(s, "name", c.symbol, "symbol");
            take(s, "m1", c.m1, "symbol");
            take(s, "m2", c.m2, "symbol");
        }
    }
    take(j, "grid", c.n, "config");
    take(j, "alpha", c.alpha, "config");
    detail::take_rational(j, "K1", c.K1);
    detail::take_rational(j, "Z", c.Z);
    detail::take_rational(j, "Y", c.Y);
    detail::take_rational(j, "C0", c.C0);
    take(j, "N", c.N, "config");
    take(j, "k_max", c.k_max, "config");
    if (j.contains("B")) {
        const auto& b = j["B"];
        detail::check_keys(b, {"lambda", "lambda_doublings", "mollify", "mollify_doublings"}, "B");
        take(b, "lambda", c.B_lambda, "B");
        take(b, "lambda_doublings", c.lambda_doublings, "B");
        take(b, "mollify", c.B_mollify, "B");
        take(b, "mollify_doublings", c.mollify_doublings, "B");
    }
    if (j.contains("step")) {
        const auto& s = j["step"];
        detail::check_keys(s, {"check_defect", "delta_stride"}, "step");
        take(s, "check_defect", c.check_defect, "step");
        take(s, "delta_stride", c.delta_stride, "step");
    }
    if (j.contains("seed")) {
        const auto& s = j["seed"];
        detail::check_keys(s, {"expression", "snapshot", "window", "slices"}, "seed");
        take(s, "expression", c.seed.expression, "seed");
        take(s, "snapshot", c.seed.snapshot, "seed");
        if (s.contains("window")) {
            std::array<double, 2> w{};
            take(s, "window", w, "seed");
            c.seed.t0 = w[0];
            c.seed.t1 = w[1];
        }
        take(s, "slices", c.seed.slices, "seed");
    }
    if (j.contains("probe")) {
        if (j["probe"].is_null()) c.probe.clear();
        else take(j, "probe", c.probe, "config");
    }
    if (j.contains("microlocal")) {
        const auto& m = j["microlocal"];
        detail::check_keys(m, {"grid", "lambdas", "direction", "phase", "amplitude"}, "microlocal");
        take(m, "grid", c.microlocal.n, "microlocal");
        take(m, "lambdas", c.microlocal.lambdas, "microlocal");
        take(m, "direction", c.microlocal.direction, "microlocal");
        take(m, "phase", c.microlocal.phase, "microlocal");
        take(m, "amplitude", c.microlocal.amplitude, "microlocal");
    }
    if (j.contains("smooth")) {
        const auto& m = j["smooth"];
        detail::check_keys(m,
                           {"theta0", "random_modes", "random_amplitude", "dt", "t_end", "dealias", "nu_h",
                            "hyper_order", "blowup_factor", "save_every"},
                           "smooth");
        take(m, "theta0", c.smooth.theta0, "smooth");
        take(m, "random_modes", c.smooth.random_modes, "smooth");
        take(m, "random_amplitude", c.smooth.random_amplitude, "smooth");
        take(m, "dt", c.smooth.solver.dt, "smooth");
        take(m, "t_end", c.smooth.solver.t_end, "smooth");
        take(m, "dealias", c.smooth.solver.dealias, "smooth");
        take(m, "nu_h", c.smooth.solver.nu_h, "smooth");
        take(m, "hyper_order", c.smooth.solver.hyper_order, "smooth");
        take(m, "blowup_factor", c.smooth.solver.blowup_factor, "smooth");
        take(m, "save_every", c.smooth.solver.save_every, "smooth");
    }
    if (j.contains("glue")) {
        const auto& g = j["glue"];
        detail::check_keys(g, {"T"}, "glue");
        take(g, "T", c.glue_T, "glue");
    }
    take(j, "output", c.output, "config");
    take(j, "rng_seed", c.rng_seed, "config");
    take(j, "threads", c.threads, "config");
    return c;
}

// Everything that can be checked without computing.
inline void validate(const ExperimentConfig& c) {
    Grid{c.n};   // power of two, >= 8
    c.make_symbol();
    Expression(c.seed.expression, {"t", "x1", "x2"});
    if (!c.probe.empty()) Expression(c.probe, {"t", "x1", "x2"});
    Expression(c.microlocal.phase, {"x1", "x2"});
    Expression(c.microlocal.amplitude, {"x1", "x2"});
    if (!c.smooth.theta0.empty()) Expression(c.smooth.theta0, {"x1", "x2"});
    Grid{c.microlocal.n};
    if (c.microlocal.lambdas.size() < 3) throw ConfigError("microlocal.lambdas needs at least three values");
    if (c.seed.slices < 5 || !(c.seed.t1 > c.seed.t0)) throw ConfigError("seed window needs t1 > t0 and >= 5 slices");
    if (!(c.alpha > 0 && c.alpha < 1.0 / 9)) throw ConfigError("alpha must lie in (0, 1/9)");
    if (c.k_max < 0) throw ConfigError("k_max must be >= 0");
    if (c.N < 0 || c.B_lambda <= 0 || c.B_mollify <= 0) throw ConfigError("N, B.lambda and B.mollify must be positive");
    if (c.lambda_doublings < 0 || c.mollify_doublings < 0 || c.delta_stride < 0)
        throw ConfigError("doubling budgets and delta_stride must be >= 0");
    if (!(c.glue_T > 0)) throw ConfigError("glue.T must be positive");
    for (const auto* s : {&c.Z, &c.Y, &c.C0}) parse_rational(*s);
    if (c.K1 != "auto") parse_rational(c.K1);
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    ExperimentConfig c = parse_config(j);
    validate(c);
    return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json sym = c.m1.empty() ? nlohmann::json(c.symbol)
                                      : nlohmann::json{{"name", c.symbol}, {"m1", c.m1}, {"m2", c.m2}};
    return {{"symbol", sym},
            {"grid", c.n},
            {"alpha", c.alpha},
            {"K1", c.K1},
            {"Z", c.Z},
            {"Y", c.Y},
            {"C0", c.C0},
            {"N", c.N},
            {"k_max", c.k_max},
            {"B",
             {{"lambda", c.B_lambda},
              {"lambda_doublings", c.lambda_doublings},
              {"mollify", c.B_mollify},
              {"mollify_doublings", c.mollify_doublings}}},
            {"step", {{"check_defect", c.check_defect}, {"delta_stride", c.delta_stride}}},
            {"seed",
             {{"expression", c.seed.expression},
              {"snapshot", c.seed.snapshot},
              {"window", {c.seed.t0, c.seed.t1}},
              {"slices", c.seed.slices}}},
            {"probe", c.probe},
            {"microlocal",
             {{"grid", c.microlocal.n},
              {"lambdas", c.microlocal.lambdas},
              {"direction", c.microlocal.direction},
              {"phase", c.microlocal.phase},
              {"amplitude", c.microlocal.amplitude}}},
            {"smooth",
             {{"theta0", c.smooth.theta0},
              {"random_modes", c.smooth.random_modes},
              {"random_amplitude", c.smooth.random_amplitude},
              {"dt", c.smooth.solver.dt},
              {"t_end", c.smooth.solver.t_end},
              {"dealias", c.smooth.solver.dealias},
              {"nu_h", c.smooth.solver.nu_h},
              {"hyper_order", c.smooth.solver.hyper_order},
              {"blowup_factor", c.smooth.solver.blowup_factor},
              {"save_every", c.smooth.solver.save_every}}},
            {"glue", {{"T", c.glue_T}}},
            {"output", c.output},
            {"rng_seed", c.rng_seed},
            {"threads", c.threads}};
}

// ---- building inputs from a config ----

inline Field sample(const Grid& g, const Expression& e, std::initializer_list<double> lead = {}) {
    Field f(g);
    std::vector<double> args(lead);
    args.resize(lead.size() + 2);
    for (int a = 0; a < g.n(); ++a)
        for (int b = 0; b < g.n(); ++b) {
            args[lead.size()] = g.x(a);
            args[lead.size() + 1] = g.x(b);
            f(a, b) = e(args.data()).real();
        }
    return f;
}

inline TimeAxis seed_axis(const ExperimentConfig& c) { return TimeAxis::covering(c.seed.t0, c.seed.t1, c.seed.slices); }

inline std::vector<Field> sample_series(const ExperimentConfig& c, const std::string& expr, const TimeAxis& ax) {
    Grid g{c.n};
    Expression e(expr, {"t", "x1", "x2"});
    std::vector<Field> out(ax.count);
    parallel_for(std::size_t(ax.count), [&](std::size_t i) { out[i] = sample(g, e, {ax.t(int(i))}); });
    return out;
}

inline std::vector<Field> seed_series(const ExperimentConfig& c) {
    TimeAxis ax = seed_axis(c);
    if (!c.seed.snapshot.empty()) {
        auto f = sfld::load(c.seed.snapshot);
        if (int(f.size()) != ax.count) throw ConfigError("seed snapshot has " + std::to_string(f.size()) +
                                                         " records, the window has " + std::to_string(ax.count));
        if (f[0].grid.n() != c.n) throw ConfigError("seed snapshot grid differs from the configured grid");
        return f;
    }
    return sample_series(c, c.seed.expression, ax);
}

// sum over |k|_inf <= K of random coefficients, real, mean zero, sup scaled to `amplitude`
inline Field random_band_limited(const Grid& g, int K, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    Field f(g);
    for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = 0; k2 <= K; ++k2) {
            if (k2 == 0 && k1 <= 0) continue;
            double a = N01(rng), b = N01(rng);
            for (int p = 0; p < g.n(); ++p)
                for (int q = 0; q < g.n(); ++q) {
                    double ph = k1 * g.x(p) + k2 * g.x(q);
                    f(p, q) += a * std::cos(ph) + b * std::sin(ph);
                }
        }
    double s = sup(f);
    if (s > 0)
        for (auto& v : f.v) v *= amplitude / s;
    return f;
}

inline Field smooth_initial(const ExperimentConfig& c) {
    Grid g{c.n};
    if (!c.smooth.theta0.empty()) return sample(g, Expression(c.smooth.theta0, {"x1", "x2"}));
    return random_band_limited(g, c.smooth.random_modes, c.smooth.random_amplitude, c.rng_seed);
}

inline DriverConfig driver_config(const ExperimentConfig& c) {
    DriverConfig d;
    d.alpha = c.alpha;
    d.Z = parse_rational(c.Z);
    d.Y = parse_rational(c.Y);
    d.C0 = parse_rational(c.C0);
    d.K1 = c.K1 == "auto" ? rational(0) : parse_rational(c.K1);
    d.k_max = c.k_max;
    d.N_override = c.N;
    d.step.B_lambda_init = c.B_lambda;
    d.step.max_lambda_doublings = c.lambda_doublings;
    d.step.B_init = c.B_mollify;
    d.step.max_B_doublings = c.mollify_doublings;
    d.step.check_defect = c.check_defect;
    d.step.delta_stride = c.delta_stride;
    return d;
}

} // namespace sf
