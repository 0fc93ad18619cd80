#pragma once

#include "flow.hpp"
#include "state.hpp"

namespace sf {

struct MollificationScales {
    double eps_theta = 0, eps_u = 0, eps_x = 0, eps_t = 0;
    double B = 10;
    int q = 0;     // 2^-q ~ eps_theta, level of the double low-pass
};

// eps = (B N^{1/L} Xi)^-1 for theta, u and the stress in space,
// eps_t = B^-1 (N Xi)^-1 e_R^{-1/2}.
inline MollificationScales compute_scales(const FrequencyEnergyLevels& lv, double N, double B) {
    lv.validate();
    const double Nmin = std::pow(lv.e_v / lv.e_R, 1.5);
    if (N < Nmin * (1 - 1e-12))
        throw ScaleInvariant("N = " + std::to_string(N) + " is below (e_v/e_R)^{3/2} = " + std::to_string(Nmin));
    if (!(B > 0)) throw ScaleInvariant("B must be positive");
    MollificationScales s;
    s.B = B;
    s.eps_theta = s.eps_u = s.eps_x = 1.0 / (B * std::pow(N, 1.0 / lv.L) * lv.Xi);
    s.eps_t = 1.0 / (B * N * lv.Xi * std::sqrt(lv.e_R));
    if (!(s.eps_t < 1.0 / (lv.Xi * std::sqrt(lv.e_v))))
        throw ScaleInvariant("eps_t = " + std::to_string(s.eps_t) + " is not below the advective time scale");
    s.q = int(std::ceil(std::log2(1.0 / s.eps_theta) - 1e-12));
    return s;
}

inline void require_low_pass_resolved(const Grid& g, int q) {
    if (q < 0 || std::ldexp(1.0, q + 1) > g.max_freq())
        throw ResolutionError("low-pass level q = " + std::to_string(q) + " needs frequencies up to " +
                              std::to_string(int(std::ldexp(1.0, q + 1))) + " but the grid resolves " +
                              std::to_string(g.max_freq()));
}

// theta_eps = P_{<=q}^2 theta
inline Field mollify(const Field& f, int q) {
    require_low_pass_resolved(f.grid, q);
    return low_pass(f, q, 2);
}

struct MollifiedState {
    Field theta_eps;
    VectorField u_eps;
    double theta_err = 0, u_err = 0;
};

inline MollifiedState mollify_state(const Field& theta, const Symbol& sym, const MollificationScales& s) {
    MollifiedState m;
    m.theta_eps = mollify(theta, s.q);
    m.u_eps = velocity(m.theta_eps, sym);   // P^2 commutes with T
    m.theta_err = sup(theta - m.theta_eps);
    VectorField u = velocity(theta, sym);
    m.u_err = sup(u - m.u_eps);
    return m;
}

// targets for the mollification errors of (theta, u) and of (c, R)
inline double state_target(const FrequencyEnergyLevels& lv, double N) {
    return std::sqrt(lv.e_v * lv.e_R) / (1000 * N);
}
inline double stress_target(const FrequencyEnergyLevels& lv, double N) {
    return std::sqrt(lv.e_v * lv.e_R) / (100 * N);
}

struct RegularizedStress {
    std::vector<Field> c;
    std::vector<VectorField> R;
    double c_err = 0, R_err = 0;
    double support_lo = 0, support_hi = 0;   // time support of the output on the grid
};

inline RegularizedStress regularize_stress(const std::vector<Field>& c, const std::vector<VectorField>& R,
                                           const VelocityHistory& u_eps, const MollificationScales& s) {
    const TimeAxis& ax = u_eps.axis();
    if (int(c.size()) != ax.count || int(R.size()) != ax.count)
        throw SizeMismatch("regularize_stress: stress and velocity windows differ");
    std::vector<SliceGetter> get{[&](int i) -> const Field& { return c[i]; },
                                 [&](int i) -> const Field& { return R[i][0]; },
                                 [&](int i) -> const Field& { return R[i][1]; }};
    auto avg = flow_average(get, u_eps, s.eps_x, s.eps_t);
    RegularizedStress out;
    out.c = std::move(avg[0]);
    out.R.resize(ax.count);
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < ax.count; ++i) {
        out.R[i] = {std::move(avg[1][i]), std::move(avg[2][i])};
        out.c_err = std::max(out.c_err, sup(c[i] - out.c[i]));
        out.R_err = std::max(out.R_err, sup(R[i] - out.R[i]));
        if (sup(out.c[i]) > 0 || sup(out.R[i]) > 0) {
            lo = std::min(lo, ax.t(i));
            hi = std::max(hi, ax.t(i));
        }
    }
    out.support_lo = lo;
    out.support_hi = hi;
    return out;
}

} // namespace sf
