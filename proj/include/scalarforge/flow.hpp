#pragma once

#include <functional>

#include "mollifier.hpp"
#include "parallel.hpp"
#include "spectral_ops.hpp"
#include "time_series.hpp"

namespace sf {

namespace detail {

// 4-point Lagrange weights for nodes 0,1,2,3 at position p
inline std::array<double, 4> lagrange4(double p) {
    return {-(p - 1) * (p - 2) * (p - 3) / 6, p * (p - 2) * (p - 3) / 2, -p * (p - 1) * (p - 3) / 2,
            p * (p - 1) * (p - 2) / 6};
}

inline double wrap(double x) {
    x = std::fmod(x, two_pi);
    return x < 0 ? x + two_pi : x;
}

} // namespace detail

// Periodic bicubic (4x4 Lagrange) interpolation at an off-grid point.
template <class T>
T interpolate(const BasicField<T>& f, const vec2& x) {
    const Grid& g = f.grid;
    const int n = g.n();
    double p1 = detail::wrap(x[0]) / g.dx(), p2 = detail::wrap(x[1]) / g.dx();
    int i0 = int(std::floor(p1)) - 1, j0 = int(std::floor(p2)) - 1;
    auto w1 = detail::lagrange4(p1 - i0), w2 = detail::lagrange4(p2 - j0);
    T s{};
    for (int a = 0; a < 4; ++a) {
        int i = ((i0 + a) % n + n) % n;
        T row{};
        for (int b = 0; b < 4; ++b) row += w2[b] * f.v[g.at(i, ((j0 + b) % n + n) % n)];
        s += w1[a] * row;
    }
    return s;
}

// u_eps on a uniform time axis, cubic in time and bicubic in space. A single
// slice is treated as a steady field.
class VelocityHistory {
public:
    VelocityHistory(TimeAxis ax, const std::vector<VectorField>& u) : ax_(ax), u_(&u) {
        if (u.empty() || int(u.size()) != ax.count) throw SizeMismatch("velocity history does not match its time axis");
    }

    const TimeAxis& axis() const { return ax_; }
    const Grid& grid() const { return (*u_)[0][0].grid; }
    const VectorField& slice(int i) const { return (*u_)[i]; }
    bool steady() const { return ax_.count == 1; }

    vec2 operator()(double t, const vec2& x) const {
        vec2 out{0, 0};
        for_weights(t, [&](int i, double w) {
            out[0] += w * interpolate((*u_)[i][0], x);
            out[1] += w * interpolate((*u_)[i][1], x);
        });
        return out;
    }

    VectorField field_at(double t) const {
        VectorField out = zero_vector(grid());
        for_weights(t, [&](int i, double w) {
            for (int c = 0; c < 2; ++c)
                for (std::size_t p = 0; p < out[c].size(); ++p) out[c].v[p] += w * (*u_)[i][c].v[p];
        });
        return out;
    }

    double sup_norm() const {
        double m = 0;
        for (const auto& v : *u_) m = std::max(m, sup(v));
        return m;
    }

private:
    template <class F>
    void for_weights(double t, F&& f) const {
        const int n = ax_.count;
        if (n == 1) return f(0, 1.0);
        if (!ax_.contains(t)) throw TimeRange("velocity requested at t = " + std::to_string(t) + " outside the stored window");
        double p = std::clamp((t - ax_.t0) / ax_.dt, 0.0, double(n - 1));
        if (n < 4) {
            int i = std::min(int(p), n - 2);
            double a = p - i;
            f(i, 1 - a);
            f(i + 1, a);
            return;
        }
        int b = std::clamp(int(std::floor(p)) - 1, 0, n - 4);
        auto w = detail::lagrange4(p - b);
        for (int k = 0; k < 4; ++k) f(b + k, w[k]);
    }

    TimeAxis ax_;
    const std::vector<VectorField>* u_;
};

// Phi_s(t, x): d/ds Phi = (1, u(Phi)), Phi_0 = (t, x).
struct FlowPoint {
    double t = 0;
    vec2 x{};
    double s = 0;
    double image_t = 0;
    vec2 image_x{};
};

// u: any callable (t, x) -> vec2, e.g. a VelocityHistory
template <class U>
vec2 rk4_step(const U& u, double t, vec2 x, double h) {
    auto add = [](const vec2& a, const vec2& b, double c) { return vec2{a[0] + c * b[0], a[1] + c * b[1]}; };
    vec2 k1 = u(t, x);
    vec2 k2 = u(t + h / 2, add(x, k1, h / 2));
    vec2 k3 = u(t + h / 2, add(x, k2, h / 2));
    vec2 k4 = u(t + h, add(x, k3, h));
    return {x[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            x[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

template <class U>
FlowPoint advance_flow(const U& u, double t, const vec2& x, double s, int steps) {
    if (steps < 1) throw TimeRange("advance_flow needs at least one step");
    FlowPoint p{t, x, s, t, x};
    const double h = s / steps;
    for (int k = 0; k < steps; ++k) p.image_x = rk4_step(u, t + k * h, p.image_x, h);
    p.image_t = t + s;
    p.image_x = {detail::wrap(p.image_x[0]), detail::wrap(p.image_x[1])};
    return p;
}

// Positive space-time averaging kernel. The spatial part is a product of bumps of
// radius max(eps_x, 2 dx) summed over grid points around the (off-grid)
// evaluation point, weights renormalised; the time part samples the bump of
// radius eps_t at the slices s = m dt, |m| <= floor(eps_t / dt).
struct AveragingKernel {
    double radius = 0;
    std::vector<double> time_weights;   // index m + M
    int M = 0;

    AveragingKernel(const Grid& g, const TimeAxis& ax, double eps_x, double eps_t) {
        radius = std::max(eps_x, 2 * g.dx());
        M = ax.count > 1 ? int(std::floor(eps_t / ax.dt * (1 + 1e-12))) : 0;
        time_weights.resize(2 * M + 1);
        double s = 0;
        for (int m = -M; m <= M; ++m) s += time_weights[m + M] = M ? bump(m * ax.dt / eps_t) : 1.0;
        for (auto& w : time_weights) w /= s;
    }
};

namespace detail {

// (eta * f)(y) for an off-grid y, several fields sharing the weights; the
// kernel is the tensor product of two bumps so the weights factor
inline void mollify_at(const std::vector<const Field*>& fs, const vec2& y, double r, std::vector<double>& out) {
    const Grid& g = fs[0]->grid;
    const int n = g.n();
    const double dx = g.dx();
    int c1 = int(std::floor(y[0] / dx)), c2 = int(std::floor(y[1] / dx));
    const int R = int(std::ceil(r / dx)) + 1;
    double w1[64], w2[64];
    int i1[64], i2[64];
    double s1 = 0, s2 = 0;
    for (int a = 0; a <= 2 * R; ++a) {
        w1[a] = bump(((c1 - R + a) * dx - y[0]) / r);
        w2[a] = bump(((c2 - R + a) * dx - y[1]) / r);
        i1[a] = (((c1 - R + a) % n) + n) % n;
        i2[a] = (((c2 - R + a) % n) + n) % n;
        s1 += w1[a];
        s2 += w2[a];
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (int a = 0; a <= 2 * R; ++a) {
        if (w1[a] == 0) continue;
        for (std::size_t k = 0; k < fs.size(); ++k) {
            const double* row = &fs[k]->v[g.at(i1[a], 0)];
            double acc = 0;
            for (int b = 0; b <= 2 * R; ++b) acc += w2[b] * row[i2[b]];
            out[k] += w1[a] * acc;
        }
    }
    for (auto& o : out) o /= s1 * s2;
}

// grid-point version via one FFT convolution with the same kernel
inline Spectrum kernel_spectrum(const Grid& g, double r) {
    const int n = g.n();
    std::vector<double> w(n);
    double s = 0;
    for (int i = 0; i < n; ++i) s += w[i] = bump(g.freq(i) * g.dx() / r);
    Field k(g);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = w[i] * w[j] / (s * s);
    Spectrum ks = fft(k);
    for (auto& c : ks.c) c *= double(g.size());   // convolution with unit-sum weights
    return ks;
}

} // namespace detail

// Flow-averaged regularisation of several time-indexed fields at once:
// out(t, x) = sum_m w_m (eta_x * f)(Phi_{s_m}(t, x)). Slices outside the
// stored window count as zero (the inputs are supported inside it).
using SliceGetter = std::function<const Field&(int)>;

inline std::vector<std::vector<Field>> flow_average(const std::vector<SliceGetter>& fields, const VelocityHistory& u,
                                                    double eps_x, double eps_t, int substeps = 2) {
    const TimeAxis& ax = u.axis();
    const Grid& g = u.grid();
    AveragingKernel K(g, ax, eps_x, eps_t);
    std::vector<std::vector<Field>> out(fields.size(), std::vector<Field>(ax.count, Field(g)));

    if (K.M == 0) {
        Spectrum ks = detail::kernel_spectrum(g, K.radius);
        parallel_for(std::size_t(ax.count) * fields.size(), [&](std::size_t q) {
            std::size_t c = q / ax.count;
            int i = int(q % ax.count);
            Spectrum s = fft(fields[c](i));
            for (std::size_t p = 0; p < s.c.size(); ++p) s.c[p] *= ks.c[p];
            out[c][i] = ifft_real(s);
        });
        return out;
    }

    if (2 * (int(std::ceil(K.radius / g.dx())) + 1) + 1 > 64)
        throw ResolutionError("flow_average: spatial kernel wider than 64 cells");
    const double dt = ax.dt;
    std::vector<char> nonzero(ax.count, 0);
    for (int i = 0; i < ax.count; ++i)
        for (const auto& f : fields)
            if (sup(f(i)) > 0) nonzero[i] = 1;
    const bool still = u.sup_norm() == 0;
    parallel_for(std::size_t(ax.count), [&](std::size_t is) {
        const int i = int(is);
        bool any = false;
        for (int m = -K.M; m <= K.M; ++m)
            if (i + m >= 0 && i + m < ax.count && nonzero[i + m]) any = true;
        if (!any) return;
        std::vector<double> val(fields.size());
        std::vector<const Field*> fs(fields.size());
        for (int a = 0; a < g.n(); ++a)
            for (int b = 0; b < g.n(); ++b) {
                std::size_t idx = g.at(a, b);
                for (int dir : {1, -1}) {
                    vec2 y{g.x(a), g.x(b)};
                    for (int m = (dir == 1 ? 0 : 1); m <= K.M; ++m) {
                        int sl = i + dir * m;
                        if (sl < 0 || sl >= ax.count) break;
                        // advance the flow line from s = (m-1) dt to m dt
                        for (int k = 0; !still && m > 0 && k < substeps; ++k) {
                            double h = dir * dt / substeps;
                            y = rk4_step(u, ax.t(i) + dir * (m - 1) * dt + k * h, y, h);
                        }
                        if (!nonzero[sl]) continue;
                        vec2 yw{detail::wrap(y[0]), detail::wrap(y[1])};
                        for (std::size_t c = 0; c < fields.size(); ++c) fs[c] = &fields[c](sl);
                        detail::mollify_at(fs, yw, K.radius, val);
                        double w = K.time_weights[dir * m + K.M];
                        for (std::size_t c = 0; c < fields.size(); ++c) out[c][i].v[idx] += w * val[c];
                    }
                }
            }
    });
    return out;
}

inline std::vector<Field> flow_average(const std::vector<Field>& f, const VelocityHistory& u, double eps_x,
                                       double eps_t) {
    if (int(f.size()) != u.axis().count) throw SizeMismatch("flow_average: field and velocity windows differ");
    SliceGetter get = [&f](int i) -> const Field& { return f[i]; };
    return std::move(flow_average(std::vector<SliceGetter>{get}, u, eps_x, eps_t)[0]);
}

} // namespace sf
