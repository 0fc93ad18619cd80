#pragma once

#include <fstream>
#include <iomanip>
#include <map>

#include "parallel.hpp"
#include "state.hpp"

namespace sf {

// ---- residual of the compound scalar-stress equation ----

struct DefectReport {
    double hminus1 = 0;        // max over slices and modes of |g_hat(k)| / |k|, plus |g_hat(0)|
    double l2 = 0;             // max over slices of ||g||_L2
    double reference = 0;      // same H^-1 norm of div R
    double relative = 0;       // hminus1 / reference
    int worst_slice = -1;
    std::array<int, 2> worst_mode{};
};

// g = d_t theta + div(theta u) - div(c V + R) on every slice, d_t with the
// shared time stencil, u = T[theta].
inline DefectReport residual_defect(const CompoundState& s, const Symbol& sym, const vec2& V) {
    s.check_shape();
    const Grid& g = s.grid();
    const int n = s.slices();
    DefectReport d;
    if (n < 3) throw TimeRange("residual_defect needs at least 3 slices");
    std::vector<double> hm(n), l2(n), ref(n);
    std::vector<std::array<int, 2>> wm(n);
    parallel_for(std::size_t(n), [&](std::size_t is) {
        const int i = int(is);
        Field dt = ddt(s.theta, s.axis, i);
        VectorField u = velocity(s.theta[i], sym);
        VectorField flux = scalar_times(s.theta[i], u);
        VectorField st = times_vector(s.c[i], V) + s.R[i];
        Spectrum gs = fft(dt);
        Spectrum a = divergence_spectrum(flux), b = divergence_spectrum(st), dr = divergence_spectrum(s.R[i]);
        double h = 0, r = 0, q = 0;
        std::array<int, 2> w{};
        const int nyq = -g.n() / 2;   // not represented by the spatial operators
        gs.for_each([&](int k1, int k2, cplx& c) {
            if (k1 == nyq || k2 == nyq) return;
            c += a.mode(k1, k2) - b.mode(k1, k2);
            double kk = std::hypot(k1, k2);
            double val = kk > 0 ? std::abs(c) / kk : std::abs(c);
            if (val > h) {
                h = val;
                w = {k1, k2};
            }
            if (kk > 0) r = std::max(r, std::abs(dr.mode(k1, k2)) / kk);
            q += std::norm(c);
        });
        hm[i] = h;
        ref[i] = r;
        l2[i] = std::sqrt(q) * two_pi;
        wm[i] = w;
    });
    for (int i = 0; i < n; ++i) {
        if (hm[i] > d.hminus1) {
            d.hminus1 = hm[i];
            d.worst_slice = i;
            d.worst_mode = wm[i];
        }
        d.l2 = std::max(d.l2, l2[i]);
        d.reference = std::max(d.reference, ref[i]);
    }
    d.relative = d.reference > 0 ? d.hminus1 / d.reference : d.hminus1;
    return d;
}

// ---- time series ----

inline std::vector<double> energy_series(const std::vector<Field>& theta) {
    std::vector<double> e;
    for (const auto& f : theta) e.push_back(integral(mul(f, f)));
    return e;
}

inline std::vector<double> mean_series(const std::vector<Field>& theta) {
    std::vector<double> m;
    for (const auto& f : theta) m.push_back(mean(f));
    return m;
}

// max over modes of |xi . u_hat(xi)| / ||u||_C0 with u = T[theta]
inline double divergence_check(const Field& theta, const Symbol& sym) {
    VectorField u = velocity(theta, sym);
    double scale = sup(u);
    if (scale == 0) return 0;
    Spectrum a = fft(u[0]), b = fft(u[1]);
    double w = 0;
    a.for_each([&](int k1, int k2, cplx& c) { w = std::max(w, std::abs(double(k1) * c + double(k2) * b.mode(k1, k2))); });
    return w / scale;
}

// ---- Hamiltonian for odd multipliers ----

namespace detail {

inline void require_odd(const Symbol& m, const Grid& g) {
    const auto& tab = m.table(g);
    double even = 0, all = 0;
    for (int a = 0; a < g.n(); ++a)
        for (int b = 0; b < g.n(); ++b) {
            if (g.nyquist(a) || g.nyquist(b)) continue;
            const cvec2& p = tab[g.at(a, b)];
            cvec2 q = m(vec2{-double(g.freq(a)), -double(g.freq(b))});
            even = std::max({even, std::abs(p[0] + q[0]), std::abs(p[1] + q[1])});
            all = std::max({all, std::abs(p[0]), std::abs(p[1])});
        }
    if (even > 1e-12 * std::max(all, 1.0))
        throw NotOdd(m.name() + " has a nonzero even part (" + std::to_string(even) + ")");
}

// L_hat = |xi|^-2 (i xi2 m1 - i xi1 m2) = |xi|^-1 ell(xi)
inline double hamiltonian_symbol(const Symbol& m, const vec2& xi) {
    double r2 = xi[0] * xi[0] + xi[1] * xi[1];
    if (r2 == 0) return 0;
    cvec2 v = m(xi);
    const cplx i(0, 1);
    return (i * xi[1] * v[0] - i * xi[0] * v[1]).real() / r2;
}

} // namespace detail

// H = int theta L theta = (2pi)^2 sum_k |theta_hat(k)|^2 |k|^-1 ell(k)
inline double hamiltonian(const Field& theta, const Symbol& m) {
    const Grid& g = theta.grid;
    detail::require_odd(m, g);
    Spectrum s = fft(theta);
    const int nyq = -g.n() / 2;
    double h = 0;
    s.for_each([&](int k1, int k2, cplx& c) {
        if (k1 == nyq || k2 == nyq) return;
        h += std::norm(c) * detail::hamiltonian_symbol(m, {double(k1), double(k2)});
    });
    return h * two_pi * two_pi;
}

inline std::vector<double> hamiltonian_series(const std::vector<Field>& theta, const Symbol& m) {
    std::vector<double> h;
    for (const auto& f : theta) h.push_back(hamiltonian(f, m));
    return h;
}

// ---- commutator form of the nonlinear term ----

struct CommutatorCheck {
    double direct = 0, rewritten = 0, diff = 0, relative = 0;
};

// N = int theta u^l d_l phi against one half of
//   - int theta [d_j T^l, d_l phi] a^j - int a^j d^k T^l[a_j] d_k d_l phi
//   + int a_k d^k T^l[a_j] d^j d_l phi - int a_k d^j T^l[a_j] d^k d_l phi
// with a_j = Delta^-1 d_j theta. Products are taken on the grid, so the
// inputs should be band-limited well below n/3.
inline CommutatorCheck commutator_check(const Field& theta, const Field& phi, const Symbol& m) {
    const Grid& g = theta.grid;
    require_same(g, phi.grid);
    detail::require_odd(m, g);
    const auto& tab = m.table(g);
    Spectrum ts = fft(theta);
    VectorField a = grad_inv_laplacian(ts);
    VectorField gphi = gradient(phi);
    auto H = hessian(phi);
    auto hess = [&](int k, int l) -> const Field& { return H[k + l]; };   // {11, 12, 22}
    // b[j][l] = T^l[a_j], db[k][j][l] = d_k T^l[a_j]
    Field b[2][2];
    Field db[2][2][2];
    for (int j = 0; j < 2; ++j) {
        Spectrum as = fft(a[j]);
        for (int l = 0; l < 2; ++l) {
            Spectrum t(g);
            for (std::size_t q = 0; q < t.c.size(); ++q) t.c[q] = tab[q][l] * as.c[q];
            b[j][l] = ifft_real(t);
            VectorField gb = gradient(b[j][l]);
            db[0][j][l] = gb[0];
            db[1][j][l] = gb[1];
        }
    }
    // d_j T^l applied to a scalar
    auto djTl = [&](const Field& f, int j, int l) {
        Spectrum fs = fft(f);
        for (int p = 0; p < g.n(); ++p)
            for (int q = 0; q < g.n(); ++q) {
                std::size_t i = g.at(p, q);
                fs.c[i] *= cplx(0, j == 0 ? detail::dwave(g, p) : detail::dwave(g, q)) * tab[i][l];
            }
        return ifft_real(fs);
    };
    CommutatorCheck r;
    VectorField u = velocity(theta, m);
    r.direct = integral(mul(theta, mul(u[0], gphi[0]))) + integral(mul(theta, mul(u[1], gphi[1])));
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
    for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) {
            Field c = djTl(mul(a[j], gphi[l]), j, l) - mul(djTl(a[j], j, l), gphi[l]);
            t1 -= integral(mul(theta, c));
            for (int k = 0; k < 2; ++k) {
                t2 -= integral(mul(a[j], mul(db[k][j][l], hess(k, l))));
                t3 += integral(mul(a[k], mul(db[k][j][l], hess(j, l))));
                t4 -= integral(mul(a[k], mul(db[j][j][l], hess(k, l))));
            }
        }
    r.rewritten = 0.5 * (t1 + t2 + t3 + t4);
    r.diff = std::abs(r.direct - r.rewritten);
    double scale = std::max({std::abs(r.direct), 0.5 * (std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4)), 1e-300});
    r.relative = r.diff / scale;
    return r;
}

// ---- the constraint for multipliers whose even part lies in a hyperplane ----

struct ConstraintValue {
    double linear = 0, quadratic = 0, total = 0;
    double gradient_residue = 0;
};

// int f d_t phi + f T0^l[f] d_l phi over the window (trapezoid in time),
// T0 the odd part of the multiplier. grad phi must be parallel to xi0.
inline ConstraintValue degenerate_constraint(const TimeAxis& ax, const std::vector<Field>& f,
                                             const std::vector<Field>& phi, const std::vector<Field>& dphi_dt,
                                             const Symbol& m, const std::array<int, 2>& xi0) {
    if (int(f.size()) != ax.count || int(phi.size()) != ax.count)
        throw SizeMismatch("degenerate_constraint: series do not match the time axis");
    if (!dphi_dt.empty() && int(dphi_dt.size()) != ax.count)
        throw SizeMismatch("degenerate_constraint: d_t phi series does not match the time axis");
    Symbol odd = even_odd_split(m).second;
    const vec2 n0 = {double(xi0[0]), double(xi0[1])};
    const double nn = norm2(n0);
    if (nn == 0) throw GradientCondition("xi0 must be nonzero");
    ConstraintValue v;
    double gscale = 0;
    std::vector<double> lin(ax.count), quad(ax.count);
    for (int i = 0; i < ax.count; ++i) {
        VectorField gp = gradient(phi[i]);
        for (std::size_t p = 0; p < gp[0].size(); ++p) {
            double cross = (gp[0].v[p] * n0[1] - gp[1].v[p] * n0[0]) / nn;
            v.gradient_residue = std::max(v.gradient_residue, std::abs(cross));
        }
        gscale = std::max(gscale, sup(gp));
        Field dt = dphi_dt.empty() ? ddt(phi, ax, i) : dphi_dt[i];
        lin[i] = integral(mul(f[i], dt));
        VectorField u0 = apply_multiplier(f[i], odd);
        quad[i] = integral(mul(f[i], mul(u0[0], gp[0]))) + integral(mul(f[i], mul(u0[1], gp[1])));
    }
    if (v.gradient_residue > 1e-12 * std::max(gscale, 1.0))
        throw GradientCondition("grad phi leaves the direction of xi0 by " + std::to_string(v.gradient_residue));
    auto trap = [&](const std::vector<double>& y) {
        double s = 0;
        for (int i = 0; i < ax.count; ++i) s += (i == 0 || i == ax.count - 1 ? 0.5 : 1.0) * y[i];
        return s * ax.dt;
    };
    v.linear = trap(lin);
    v.quadratic = trap(quad);
    v.total = v.linear + v.quadratic;
    return v;
}

// ---- weak pairing against a test function ----

struct WeakPairing {
    double pairing = 0;     // int (theta - f) phi dx dt
    double bound = 0;       // sum_k ||W_k||_C0 * ||grad phi||_L1
    double grad_phi_l1 = 0;
};

inline WeakPairing weak_pairing(const TimeAxis& ax, const std::vector<Field>& f, const std::vector<Field>& theta,
                                const std::vector<Field>& phi, const std::vector<double>& w_norms = {}) {
    if (int(f.size()) != ax.count || int(theta.size()) != ax.count || int(phi.size()) != ax.count)
        throw SizeMismatch("weak_pairing: series do not match the time axis");
    WeakPairing w;
    for (int i = 0; i < ax.count; ++i) {
        double c = (i == 0 || i == ax.count - 1 ? 0.5 : 1.0) * ax.dt;
        w.pairing += c * integral(mul(theta[i] - f[i], phi[i]));
        VectorField gp = gradient(phi[i]);
        double l1 = 0;
        for (std::size_t p = 0; p < gp[0].size(); ++p) l1 += std::hypot(gp[0].v[p], gp[1].v[p]);
        w.grad_phi_l1 += c * l1 * two_pi * two_pi / double(gp[0].size());
    }
    double sw = 0;
    for (double x : w_norms) sw += x;
    w.bound = sw * w.grad_phi_l1;
    return w;
}

// ---- norms ----

struct NormsReport {
    double c0 = 0, grad_c0 = 0, advective_c0 = -1;
    std::map<double, double> holder;               // alpha -> finite-difference seminorm estimate
    std::map<double, double> holder_interpolation; // alpha -> (2||f||)^{1-a} ||grad f||^a
};

// sup over shifts h = 2^m dx along e1, e2, e1+e2 of |f(x+h)-f(x)|/|h|^alpha
inline double holder_estimate(const Field& f, double alpha) {
    const Grid& g = f.grid;
    const int n = g.n();
    double best = 0;
    for (int s = 1; s <= n / 2; s *= 2)
        for (auto [d1, d2] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
            double h = g.dx() * s * std::hypot(d1, d2);
            double m = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    m = std::max(m, std::abs(f((i + d1 * s) % n, (j + d2 * s) % n) - f(i, j)));
            best = std::max(best, m / std::pow(h, alpha));
        }
    return best;
}

inline NormsReport norms(const Field& f, const std::vector<double>& alphas = {}) {
    NormsReport r;
    r.c0 = sup(f);
    r.grad_c0 = sup(gradient(f));
    for (double a : alphas) {
        r.holder[a] = holder_estimate(f, a);
        r.holder_interpolation[a] = std::pow(2 * r.c0, 1 - a) * std::pow(r.grad_c0, a);
    }
    return r;
}

// with the advective derivative along u at slice i
inline NormsReport norms(const std::vector<Field>& f, const TimeAxis& ax, int i, const VectorField& u,
                         const std::vector<double>& alphas = {}) {
    NormsReport r = norms(f.at(i), alphas);
    r.advective_c0 = sup(advective_derivative(f, ax, i, u));
    return r;
}

// ---- CSV ----

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n" << std::setprecision(17);
    std::size_t rows = 0;
    for (const auto& c : columns) rows = std::max(rows, c.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out << ",";
            if (r < columns[c].size()) out << columns[c][r];
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace sf
