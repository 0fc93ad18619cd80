#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace sf {

// Uniform time axis t_i = t0 + i dt, i = 0 .. count-1.
struct TimeAxis {
    double t0 = 0, dt = 1;
    int count = 0;

    double t(int i) const { return t0 + dt * i; }
    double t_end() const { return t(count - 1); }
    bool contains(double t) const { return t >= t0 - 1e-12 * dt && t <= t_end() + 1e-12 * dt; }

    static TimeAxis covering(double a, double b, int count) {
        if (count < 2 || !(b > a)) throw TimeRange("time axis needs count >= 2 and b > a");
        return {a, (b - a) / (count - 1), count};
    }
};

using Stencil = std::vector<std::pair<int, double>>;

// Weights of the discrete d/dt at slice i. Fourth order (central inside,
// one-sided five-point at the two ends) when count >= 5, second order for
// 3 or 4 slices. The same operator is used everywhere a time derivative
// enters, so identities built from it hold exactly.
inline Stencil ddt_stencil(const TimeAxis& ax, int i) {
    const int n = ax.count;
    if (n < 3) throw TimeRange("time derivative needs at least 3 slices");
    if (i < 0 || i >= n) throw TimeRange("slice index out of range");
    Stencil s;
    if (n >= 5) {
        const double c = 1.0 / (12 * ax.dt);
        if (i >= 2 && i <= n - 3) {
            s = {{i - 2, c}, {i - 1, -8 * c}, {i + 1, 8 * c}, {i + 2, -c}};
        } else if (i == 0) {
            s = {{0, -25 * c}, {1, 48 * c}, {2, -36 * c}, {3, 16 * c}, {4, -3 * c}};
        } else if (i == 1) {
            s = {{0, -3 * c}, {1, -10 * c}, {2, 18 * c}, {3, -6 * c}, {4, c}};
        } else if (i == n - 1) {
            s = {{n - 1, 25 * c}, {n - 2, -48 * c}, {n - 3, 36 * c}, {n - 4, -16 * c}, {n - 5, 3 * c}};
        } else {
            s = {{n - 1, 3 * c}, {n - 2, 10 * c}, {n - 3, -18 * c}, {n - 4, 6 * c}, {n - 5, -c}};
        }
        return s;
    }
    const double c = 1.0 / (2 * ax.dt);
    if (i == 0) return {{0, -3 * c}, {1, 4 * c}, {2, -c}};
    if (i == n - 1) return {{n - 1, 3 * c}, {n - 2, -4 * c}, {n - 3, c}};
    return {{i - 1, -c}, {i + 1, c}};
}

// sum_j w_j get(j); `get` returns something field-like (Field, CField ...)
template <class Get>
auto apply_stencil(const Stencil& st, Get&& get) {
    auto out = get(st.front().first) * st.front().second;
    for (std::size_t k = 1; k < st.size(); ++k) {
        const auto& f = get(st[k].first);
        for (std::size_t p = 0; p < out.size(); ++p) out.v[p] += st[k].second * f.v[p];
    }
    return out;
}

template <class F>
F ddt(const std::vector<F>& slices, const TimeAxis& ax, int i) {
    if (int(slices.size()) != ax.count) throw SizeMismatch("slice count does not match the time axis");
    return apply_stencil(ddt_stencil(ax, i), [&](int j) -> const F& { return slices[j]; });
}

inline double ddt(const std::vector<double>& v, const TimeAxis& ax, int i) {
    double s = 0;
    for (auto [j, w] : ddt_stencil(ax, i)) s += w * v[j];
    return s;
}

} // namespace sf
