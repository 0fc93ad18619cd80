#pragma once

#include "flow.hpp"
#include "microlocal.hpp"

namespace sf {

// xi_I(t, x) = L.x + xi_tilde(t, x) with L = sign 10^[k] xi1; only the
// periodic part lives on the grid, on the slices where the amplitude of
// wave k can be nonzero.
struct PhaseFunction {
    int k = 0, sign = 1;
    std::array<int, 2> linear{};
    double birth = 0;
    int first = 0;                 // slice index of xi.front()
    int last = -1;
    bool flat = true;              // xi_tilde == 0 on every slice
    std::vector<Field> xi;         // empty when flat

    bool covers(int i) const { return i >= first && i <= last; }
    Field at(int i) const {
        if (!covers(i)) throw TimeRange("phase " + std::to_string(k) + " not defined at slice " + std::to_string(i));
        return flat ? Field() : xi[i - first];
    }
    vec2 base_gradient() const { return {double(linear[0]), double(linear[1])}; }

    WavePacket packet(int i, CField amplitude, int lambda) const { return {linear, at(i), std::move(amplitude), lambda}; }

    // xi_(k,-) = -xi_(k,+)
    PhaseFunction conjugate() const {
        PhaseFunction c = *this;
        c.sign = -sign;
        c.linear = {-linear[0], -linear[1]};
        for (auto& f : c.xi) f *= -1.0;
        return c;
    }
};

inline int parity_scale(int k) { return (k % 2 + 2) % 2 ? 10 : 1; }

struct PhaseOptions {
    double cfl = 1.0;
    double escape_ratio = 0.25;
};

namespace detail {

// -u.(L + grad xi), 2/3-truncated
inline Field phase_rhs(const VectorField& u, const vec2& L, const Field& xi) {
    const Grid& g = xi.grid;
    VectorField gx = gradient(xi);
    Field r(g);
    for (std::size_t p = 0; p < r.size(); ++p)
        r.v[p] = -(u[0].v[p] * (L[0] + gx[0].v[p]) + u[1].v[p] * (L[1] + gx[1].v[p]));
    Spectrum s = fft(r);
    const int cut = g.n() / 3;
    s.for_each([&](int k1, int k2, cplx& c) {
        if (std::abs(k1) > cut || std::abs(k2) > cut) c = 0;
    });
    return ifft_real(s);
}

} // namespace detail

// (d_t + u.grad) xi_tilde = -u.L, xi_tilde(birth) = 0, solved forward and
// backward from the birth time over the slices with |t - birth| < reach.
inline PhaseFunction solve_phase(const VelocityHistory& u, int k, int sign, const std::array<int, 2>& xi1,
                                 double birth, double reach, const PhaseOptions& opt = {}) {
    const TimeAxis& ax = u.axis();
    const Grid& g = u.grid();
    PhaseFunction ph;
    ph.k = k;
    ph.sign = sign;
    ph.birth = birth;
    const int sc = sign * parity_scale(k);
    ph.linear = {sc * xi1[0], sc * xi1[1]};
    ph.first = std::max(0, int(std::ceil((birth - reach - ax.t0) / ax.dt - 1e-9)));
    ph.last = std::min(ax.count - 1, int(std::floor((birth + reach - ax.t0) / ax.dt + 1e-9)));
    // drop end slices sitting exactly on the edge (amplitude vanishes there)
    if (ph.first <= ph.last && std::abs(ax.t(ph.first) - (birth - reach)) < 1e-12 * ax.dt) ++ph.first;
    if (ph.first <= ph.last && std::abs(ax.t(ph.last) - (birth + reach)) < 1e-12 * ax.dt) --ph.last;
    if (ph.first > ph.last) return ph;

    const vec2 L = ph.base_gradient();
    // zero forcing everywhere on the window: xi_tilde stays zero
    bool zero = true;
    for (int i = std::max(0, ph.first - 2); i <= std::min(ax.count - 1, ph.last + 2) && zero; ++i) {
        const auto& v = u.slice(i);
        for (std::size_t p = 0; p < v[0].size(); ++p)
            if (v[0].v[p] * L[0] + v[1].v[p] * L[1] != 0) {
                zero = false;
                break;
            }
    }
    if (zero) return ph;

    ph.flat = false;
    ph.xi.assign(ph.last - ph.first + 1, Field(g));
    const double umax = std::max(u.sup_norm(), 1e-300);
    const double hmax = std::min(ax.dt, opt.cfl / (umax * std::max(1, g.max_freq())));
    const double limit = opt.escape_ratio * norm2(L);

    auto check = [&](const Field& xi, double t) {
        VectorField gx = gradient(xi);
        if (sup(gx) > limit)
            throw PhaseEscape("phase " + std::to_string(k) + " gradient drifted by " + std::to_string(sup(gx)) +
                              " > " + std::to_string(limit) + " at t = " + std::to_string(t) + "; tau too large");
    };
    auto rk4 = [&](Field& xi, double t, double h) {
        auto F = [&](double s, const Field& x) { return detail::phase_rhs(u.field_at(s), L, x); };
        Field k1 = F(t, xi);
        Field k2 = F(t + h / 2, xi + k1 * (h / 2));
        Field k3 = F(t + h / 2, xi + k2 * (h / 2));
        Field k4 = F(t + h, xi + k3 * h);
        for (std::size_t p = 0; p < xi.size(); ++p)
            xi.v[p] += h / 6 * (k1.v[p] + 2 * k2.v[p] + 2 * k3.v[p] + k4.v[p]);
    };
    auto march = [&](Field xi, double t, double target) {
        double span = target - t;
        if (span == 0) return xi;
        int steps = std::max(1, int(std::ceil(std::abs(span) / hmax - 1e-9)));
        double h = span / steps;
        for (int s = 0; s < steps; ++s) rk4(xi, t + s * h, h);
        return xi;
    };

    // first slice at or after birth, then forward; slice before birth, then backward
    int up = std::max(ph.first, int(std::ceil((birth - ax.t0) / ax.dt - 1e-12)));
    Field cur(g);
    double t = birth;
    for (int i = up; i <= ph.last; ++i) {
        cur = march(cur, t, ax.t(i));
        t = ax.t(i);
        check(cur, t);
        ph.xi[i - ph.first] = cur;
    }
    cur = Field(g);
    t = birth;
    for (int i = std::min(up - 1, ph.last); i >= ph.first; --i) {
        cur = march(cur, t, ax.t(i));
        t = ax.t(i);
        check(cur, t);
        ph.xi[i - ph.first] = cur;
    }
    return ph;
}

} // namespace sf
