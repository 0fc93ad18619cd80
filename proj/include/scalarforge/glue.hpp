#pragma once

#include "diagnostics.hpp"
#include "state.hpp"

namespace sf {

// psi = 1 on |t| <= 5T/8, 0 on |t| >= 3T/4
struct GlueCutoff {
    double T = 1;

    double operator()(double t) const { return smooth_step((0.75 * T - std::abs(t)) / (T / 8)); }
    double derivative(double t) const {
        double s = (0.75 * T - std::abs(t)) / (T / 8);
        if (s <= 0 || s >= 1) return 0.0;
        double d = 2 * bump(2 * s - 1) / detail::bump_mass() / (T / 8);
        return t > 0 ? -d : d;
    }
};

// theta_0 = psi theta + (1 - psi) mean, R = grad Lap^-1 [d_t theta_0 + div(theta_0 u_0)].
// With d_t theta = -div(theta u) this is psi' (theta - mean) - psi (1 - psi) div(theta u),
// so R vanishes wherever psi' = 0 and psi (1 - psi) = 0.
inline CompoundState glue_solution(const std::vector<Field>& theta, const TimeAxis& ax, const Symbol& sym, double T) {
    if (int(theta.size()) != ax.count) throw SizeMismatch("glue: trajectory does not match its time axis");
    if (!(T > 0)) throw TimeRange("glue: T must be positive");
    if (ax.t0 > -T + 1e-9 * T || ax.t_end() < T - 1e-9 * T)
        throw TimeRange("glue: trajectory must cover (-T, T)");
    const Grid& g = theta[0].grid;
    const double bar = mean(theta[0]);
    GlueCutoff psi{T};
    CompoundState s = CompoundState::zero(g, ax, -0.75 * T, 0.75 * T);
    s.tag = VectorTag::A;
    parallel_for(std::size_t(ax.count), [&](std::size_t is) {
        const int i = int(is);
        const double t = ax.t(i), p = psi(t), dp = psi.derivative(t);
        Field& th0 = s.theta[i];
        for (std::size_t q = 0; q < th0.size(); ++q) th0.v[q] = p * theta[i].v[q] + (1 - p) * bar;
        if (dp == 0 && p * (1 - p) == 0) return;
        Spectrum src = divergence_spectrum(scalar_times(theta[i], velocity(theta[i], sym)));
        Spectrum dev = fft(theta[i]);
        for (std::size_t q = 0; q < src.c.size(); ++q) src.c[q] = dp * dev.c[q] - p * (1 - p) * src.c[q];
        src.c[0] = 0;   // psi' (theta - mean) and a divergence: no zero mode
        s.R[i] = grad_inv_laplacian(src);
    });
    return s;
}

// largest |R| on slices with 5T/8 < |t| < 3T/4 excluded
inline double glue_support_violation(const CompoundState& s, double T) {
    double m = 0;
    for (int i = 0; i < s.slices(); ++i) {
        double a = std::abs(s.axis.t(i));
        if (a >= 0.625 * T - 1e-12 * T && a <= 0.75 * T + 1e-12 * T) continue;
        m = std::max({m, sup(s.R[i]), sup(s.c[i])});
    }
    return m;
}

} // namespace sf
