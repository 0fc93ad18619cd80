#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "state.hpp"

namespace sf {

using rational = boost::multiprecision::cpp_rational;

inline double to_double(const rational& q) { return q.convert_to<double>(); }

// Exact square root when numerator and denominator are perfect squares;
// otherwise the nearest double, and `exact` is cleared.
inline rational sqrt_q(const rational& q, bool& exact) {
    using boost::multiprecision::cpp_int;
    if (q < 0) throw ScheduleError("square root of a negative level");
    cpp_int a = boost::multiprecision::numerator(q), b = boost::multiprecision::denominator(q);
    cpp_int ra = boost::multiprecision::sqrt(a), rb = boost::multiprecision::sqrt(b);
    if (ra * ra == a && rb * rb == b) return rational(ra, rb);
    exact = false;
    return rational(std::sqrt(to_double(q)));
}

inline rational pow_q(rational q, int k) {
    rational r = 1;
    if (k < 0) {
        q = 1 / q;
        k = -k;
    }
    for (int i = 0; i < k; ++i) r *= q;
    return r;
}

// "p/q", "p" or a decimal literal; decimals are taken at their exact double value
inline rational parse_rational(const std::string& s) {
    try {
        if (s.find_first_of(".eE") != std::string::npos) return rational(std::stod(s));
        return rational(s);
    } catch (const std::exception&) {
        throw ConfigError("not a rational number: '" + s + "'");
    }
}

struct ScheduleInputs {
    rational e_J0 = 1, K1 = 1, Z = 4, Y = 1, C0 = 1, Xi_bar = 2;
    double alpha = 0.1;
    int k_max = 2;
    double I_lo = 0, I_hi = 1;
};

struct Stage {
    int k = 0;
    rational e_v, e_R, e_J, N, Xi;
    double tau_hat = 0;
    double I_lo = 0, I_hi = 0;     // support interval of the stage-k stress
    VectorTag tag = VectorTag::A;

    FrequencyEnergyLevels levels() const {
        return {to_double(Xi), to_double(e_v), to_double(e_R), to_double(e_J), 2};
    }
};

struct IterationSchedule {
    ScheduleInputs in;
    std::vector<Stage> stages;             // k = 0 .. k_max
    bool exact = true;                     // every square root came out rational
    double holder_ratio = 0;               // C0^a K1^{2a} Z^{9a/2 - 1/2}
    double growth_T = 0, growth_T_bound = 0;
    double pairing_factor = 0;             // sum (N_k Xi_k)^-1 e_R^{1/2}
};

// (e_v / e_R)^{1/2} (e_R / e_J)^2 Z^2
inline rational stage_N(const rational& e_v, const rational& e_R, const rational& e_J, const rational& Z, bool& exact) {
    rational q = e_R / e_J;
    return sqrt_q(e_v / e_R, exact) * q * q * Z * Z;
}

// (e_v^{1/2} / (e_R^{1/2} N))^{1/2} e_R
inline rational next_e_J(const rational& e_v, const rational& e_R, const rational& N, bool& exact) {
    return sqrt_q(sqrt_q(e_v / e_R, exact) / N, exact) * e_R;
}

inline IterationSchedule build_schedule(const ScheduleInputs& in) {
    if (!(in.alpha > 0)) throw ScheduleError("alpha must be positive");
    if (in.alpha >= 1.0 / 9) throw ScheduleError("alpha must be below 1/9");
    if (in.K1 < 1) throw ScheduleError("K1 must be >= 1");
    if (in.Z < in.K1) throw ScheduleError("Z must be >= K1");
    if (in.e_J0 <= 0) throw ScheduleError("e_J0 must be positive");
    if (in.Y < 1) throw ScheduleError("Y must be >= 1");
    if (in.C0 <= 0 || in.Xi_bar <= 0) throw ScheduleError("C0 and Xi_bar must be positive");
    if (in.k_max < 0) throw ScheduleError("k_max must be >= 0");

    IterationSchedule s;
    s.in = in;
    const double a = in.alpha;
    s.holder_ratio = std::pow(to_double(in.C0), a) * std::pow(to_double(in.K1), 2 * a) *
                     std::pow(to_double(in.Z), 4.5 * a - 0.5);
    if (!(s.holder_ratio < 1))
        throw ScheduleError("Z too small for alpha: C0^a K1^{2a} Z^{9a/2 - 1/2} = " + std::to_string(s.holder_ratio) +
                            " >= 1");

    Stage st;
    st.e_J = in.e_J0;
    st.e_v = st.e_R = in.K1 * in.e_J0;
    st.Xi = in.Y * in.Xi_bar;
    st.I_lo = in.I_lo;
    st.I_hi = in.I_hi;
    for (int k = 0; k <= in.k_max; ++k) {
        st.k = k;
        st.tag = k % 2 ? VectorTag::B : VectorTag::A;
        st.N = stage_N(st.e_v, st.e_R, st.e_J, in.Z, s.exact);
        st.tau_hat = 1.0 / (to_double(st.Xi) * std::sqrt(to_double(st.e_v)));
        s.stages.push_back(st);
        s.growth_T += 4 * st.tau_hat;
        s.pairing_factor += std::sqrt(to_double(st.e_R)) / to_double(st.N * st.Xi);

        Stage nx;
        nx.e_v = st.e_R;
        nx.e_R = in.K1 * st.e_J;
        nx.e_J = st.e_J / in.Z;
        nx.Xi = in.C0 * st.N * st.Xi;
        nx.I_lo = st.I_lo - 4 * st.tau_hat;
        nx.I_hi = st.I_hi + 4 * st.tau_hat;
        st = nx;
    }
    s.growth_T_bound = 8 / (to_double(in.Y * in.Xi_bar) * std::sqrt(to_double(in.e_J0)));
    return s;
}

// N_0 = K1^2 Z^2, N_1 = K1^2 Z^4, N_k = K1^2 Z^{9/2}
inline rational closed_form_N(int k, const rational& K1, const rational& Z, bool& exact) {
    if (k == 0) return K1 * K1 * Z * Z;
    if (k == 1) return K1 * K1 * pow_q(Z, 4);
    return K1 * K1 * pow_q(Z, 4) * sqrt_q(Z, exact);
}

inline std::string str(const rational& q) {
    std::ostringstream os;
    os << q;
    return os.str();
}

inline nlohmann::json to_json(const IterationSchedule& s) {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& g : s.stages)
        st.push_back({{"k", g.k},
                      {"tag", tag_name(g.tag)},
                      {"e_v", str(g.e_v)},
                      {"e_R", str(g.e_R)},
                      {"e_J", str(g.e_J)},
                      {"N", str(g.N)},
                      {"Xi", str(g.Xi)},
                      {"e_v_value", to_double(g.e_v)},
                      {"e_R_value", to_double(g.e_R)},
                      {"e_J_value", to_double(g.e_J)},
                      {"N_value", to_double(g.N)},
                      {"Xi_value", to_double(g.Xi)},
                      {"tau_hat", g.tau_hat},
                      {"interval", {g.I_lo, g.I_hi}}});
    return {{"inputs",
             {{"e_J0", str(s.in.e_J0)},
              {"K1", str(s.in.K1)},
              {"Z", str(s.in.Z)},
              {"Y", str(s.in.Y)},
              {"C0", str(s.in.C0)},
              {"Xi_bar", str(s.in.Xi_bar)},
              {"alpha", s.in.alpha},
              {"k_max", s.in.k_max}}},
            {"exact", s.exact},
            {"holder_ratio", s.holder_ratio},
            {"interval_growth", s.growth_T},
            {"interval_growth_bound", s.growth_T_bound},
            {"pairing_factor", s.pairing_factor},
            {"stages", st}};
}

} // namespace sf
