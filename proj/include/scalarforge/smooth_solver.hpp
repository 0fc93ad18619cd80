#pragma once

#include <functional>

#include "spectral_ops.hpp"
#include "time_series.hpp"

namespace sf {

// Pseudo-spectral RK4 for d_t theta + div(theta T[theta]) = 0 with 2/3
// truncation; optional hyperviscosity -nu |k|^{2 order}.
struct SolverConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    bool dealias = true;
    double nu_h = 0;
    int hyper_order = 4;
    double blowup_factor = 1e6;
    int save_every = 0;          // 0: pick a stride that keeps at most 256 snapshots
};

struct Trajectory {
    TimeAxis axis;
    std::vector<Field> theta;
    double cfl = 0;              // max dt |u| max_freq seen
    std::vector<std::string> warnings;
    int steps = 0;
};

namespace detail {

struct SpectralRhs {
    const Symbol& sym;
    const Grid& g;
    std::vector<double> keep;          // 2/3 mask
    std::vector<double> damp;          // -nu |k|^{2p}

    SpectralRhs(const Symbol& s, const Grid& grid, const SolverConfig& cfg) : sym(s), g(grid) {
        keep.assign(g.size(), 1.0);
        damp.assign(g.size(), 0.0);
        const int cut = g.n() / 3;
        for (int a = 0; a < g.n(); ++a)
            for (int b = 0; b < g.n(); ++b) {
                std::size_t i = g.at(a, b);
                int k1 = g.freq(a), k2 = g.freq(b);
                if (g.nyquist(a) || g.nyquist(b) || (cfg.dealias && (std::abs(k1) > cut || std::abs(k2) > cut)))
                    keep[i] = 0;
                if (cfg.nu_h > 0) damp[i] = -cfg.nu_h * std::pow(double(k1 * k1 + k2 * k2), cfg.hyper_order);
            }
    }

    Spectrum operator()(const Spectrum& s, double* umax = nullptr) const {
        Field th = ifft_real(s);
        VectorField u = apply_multiplier(s, sym);
        if (umax) *umax = sup(u);
        Spectrum d = divergence_spectrum(scalar_times(th, u));
        Spectrum r(g);
        for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = keep[i] * (-d.c[i] + damp[i] * s.c[i]);
        return r;
    }
};

inline Spectrum axpy(const Spectrum& x, double a, const Spectrum& y) {
    Spectrum o = x;
    for (std::size_t i = 0; i < o.c.size(); ++i) o.c[i] += a * y.c[i];
    return o;
}

} // namespace detail

// observer(t, theta) is called on every step, including t = 0
inline Trajectory evolve(const Field& theta0, const Symbol& sym, const SolverConfig& cfg,
                         const std::function<void(double, const Field&)>& observer = {}) {
    if (!(cfg.dt > 0) || !(cfg.t_end >= 0)) throw ConfigError("solver needs dt > 0 and t_end >= 0");
    const Grid& g = theta0.grid;
    detail::SpectralRhs rhs(sym, g, cfg);
    Spectrum s = fft(theta0);
    double total = 0, lost = 0;
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        total += std::norm(s.c[i]);
        if (rhs.keep[i] == 0 && i != 0) lost += std::norm(s.c[i]);
    }
    if (lost > 1e-20 * std::max(total, 1e-300))
        throw ResolutionError("initial data is not band-limited below the 2/3 cutoff");
    for (std::size_t i = 1; i < s.c.size(); ++i) s.c[i] *= rhs.keep[i];

    const int steps = int(std::llround(cfg.t_end / cfg.dt));
    if (std::abs(steps * cfg.dt - cfg.t_end) > 1e-9 * std::max(1.0, cfg.t_end))
        throw ConfigError("t_end must be a multiple of dt");
    const int every = cfg.save_every > 0 ? cfg.save_every : std::max(1, (steps + 255) / 256);

    Trajectory tr;
    tr.axis = TimeAxis{0, cfg.dt * every, steps / every + 1};
    const double th0 = std::max(sup(theta0), 1e-300);
    Field cur = ifft_real(s);
    tr.theta.push_back(cur);
    if (observer) observer(0, cur);
    bool warned = false;
    for (int n = 1; n <= steps; ++n) {
        const double h = cfg.dt;
        double umax = 0;
        Spectrum k1 = rhs(s, &umax);
        Spectrum k2 = rhs(detail::axpy(s, h / 2, k1));
        Spectrum k3 = rhs(detail::axpy(s, h / 2, k2));
        Spectrum k4 = rhs(detail::axpy(s, h, k3));
        for (std::size_t i = 0; i < s.c.size(); ++i) s.c[i] += h / 6 * (k1.c[i] + 2.0 * k2.c[i] + 2.0 * k3.c[i] + k4.c[i]);
        double cfl = h * umax * g.max_freq();
        tr.cfl = std::max(tr.cfl, cfl);
        if (cfl > 0.5 && !warned) {
            tr.warnings.push_back("CFL number " + std::to_string(cfl) + " exceeds 0.5 at t = " + std::to_string(n * h));
            warned = true;
        }
        cur = ifft_real(s);
        double m = sup(cur);
        if (!std::isfinite(m) || m > cfg.blowup_factor * th0)
            throw BlowUp("solution grew by more than " + std::to_string(cfg.blowup_factor) + " at t = " +
                         std::to_string(n * h));
        if (observer) observer(n * h, cur);
        if (n % every == 0) tr.theta.push_back(cur);
        tr.steps = n;
    }
    return tr;
}

} // namespace sf
