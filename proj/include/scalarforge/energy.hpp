#pragma once

#include "mollifier.hpp"
#include "state.hpp"

namespace sf {

// e^{1/2}(t) = (2 K0 s)^{1/2} (eta_tau_hat * 1_{[a - 3 tau_hat, b + 3 tau_hat]})(t);
// s is the energy unit (e_R / K1). `shrink` pulls both ends in so that a
// time stencil of that reach keeps everything inside [a - 4 tau_hat, b + 4 tau_hat].
struct EnergyProfile {
    double a = 0, b = 0, tau_hat = 1, level = 0;   // level = 2 K0 s
    double shrink = 0;

    double sqrt_e(double t) const {
        if (level <= 0) return 0.0;
        return std::sqrt(level) * mollified_indicator(t, a - 3 * tau_hat + shrink, b + 3 * tau_hat - shrink, tau_hat);
    }
    double e(double t) const {
        double r = sqrt_e(t);
        return r * r;
    }
    double lo() const { return a - 4 * tau_hat + shrink; }
    double hi() const { return b + 4 * tau_hat - shrink; }
    bool zero() const { return level <= 0; }
};

inline EnergyProfile build_energy_profile(double a, double b, double tau_hat, double s, double K0,
                                          double shrink = 0) {
    if (!(tau_hat > 0)) throw ScheduleError("tau_hat must be positive");
    if (b < a) throw TimeRange("energy profile interval is reversed");
    // the plateau must still cover [a - tau_hat, b + tau_hat]
    if (shrink < 0 || shrink > tau_hat * (1 + 1e-12))
        throw ResolutionError("time step too coarse: stencil reach " + std::to_string(shrink) + " exceeds tau_hat " +
                              std::to_string(tau_hat));
    return {a, b, tau_hat, 2 * K0 * std::max(s, 0.0), shrink};
}

// sup |(d/dt)^r e^{1/2}| / ((Xi e_v^{1/2})^r e_R^{1/2}) for r = 1, 2, by
// central differences on a fine grid over the support
inline std::array<double, 2> profile_derivative_constants(const EnergyProfile& p, double Xi, double e_v, double e_R) {
    if (p.zero()) return {0, 0};
    const int m = 4000;
    const double h = (p.hi() - p.lo()) / m;
    double d1 = 0, d2 = 0;
    for (int i = 1; i < m; ++i) {
        double t = p.lo() + i * h;
        double f0 = p.sqrt_e(t - h), f1 = p.sqrt_e(t), f2 = p.sqrt_e(t + h);
        d1 = std::max(d1, std::abs(f2 - f0) / (2 * h));
        d2 = std::max(d2, std::abs(f2 - 2 * f1 + f0) / (h * h));
    }
    const double f = Xi * std::sqrt(e_v);
    return {d1 / (f * std::sqrt(e_R)), d2 / (f * f * std::sqrt(e_R))};
}

// eta_k(t) = chi((t - k tau)/tau) / sqrt(sum_j chi^2((t - j tau)/tau)),
// chi = 1 on |s| <= 1/3, 0 for |s| >= 2/3.
struct TimePartition {
    double tau = 1;

    static double chi(double s) { return smooth_step(3 * (2.0 / 3.0 - std::abs(s))); }

    double eta(int k, double t) const {
        double c = chi(t / tau - k);
        if (c == 0) return 0.0;
        int j0 = int(std::floor(t / tau));
        double s = 0;
        for (int j = j0 - 1; j <= j0 + 2; ++j) {
            double x = chi(t / tau - j);
            s += x * x;
        }
        return c / std::sqrt(s);
    }
    // indices whose eta can be nonzero at t
    std::vector<int> active(double t) const {
        std::vector<int> ks;
        int j0 = int(std::floor(t / tau));
        for (int j = j0 - 1; j <= j0 + 2; ++j)
            if (chi(t / tau - j) > 0) ks.push_back(j);
        return ks;
    }
    // every index with support meeting [lo, hi]
    std::pair<int, int> range(double lo, double hi) const {
        return {int(std::ceil(lo / tau - 2.0 / 3.0)), int(std::floor(hi / tau + 2.0 / 3.0))};
    }
};

// theta_k = e^{1/2} eta_k gamma, gamma = (1 + eps)^{1/2}, eps = -(c_tilde + c_J)/e
struct SliceAmplitudes {
    std::vector<int> ks;
    std::vector<Field> theta;     // one real field per active k
    Field eps;
    double eps_max = 0;
};

inline SliceAmplitudes solve_amplitudes(double sqrt_e, const std::vector<std::pair<int, double>>& etas,
                                        const Field& c_tilde, const Field& c_J, double eps_limit = 0.5) {
    const Grid& g = c_tilde.grid;
    SliceAmplitudes a;
    a.eps = Field(g);
    const double e = sqrt_e * sqrt_e;
    for (std::size_t p = 0; p < g.size(); ++p) {
        double s = c_tilde.v[p] + c_J.v[p];
        if (e > 0) {
            a.eps.v[p] = -s / e;
        } else if (s != 0) {
            throw EpsilonTooLarge("stress is nonzero where the energy profile vanishes");
        }
        a.eps_max = std::max(a.eps_max, std::abs(a.eps.v[p]));
    }
    if (a.eps_max > eps_limit)
        throw EpsilonTooLarge("|eps| reaches " + std::to_string(a.eps_max) + " > " + std::to_string(eps_limit) +
                              "; K is too small or the energy lower bound fails");
    for (auto [k, eta] : etas) {
        if (eta == 0 || e == 0) continue;
        Field th(g);
        for (std::size_t p = 0; p < g.size(); ++p) th.v[p] = sqrt_e * eta * std::sqrt(1 + a.eps.v[p]);
        a.ks.push_back(k);
        a.theta.push_back(std::move(th));
    }
    return a;
}

} // namespace sf
