#pragma once

#include "fft.hpp"
#include "mollifier.hpp"
#include "symbol.hpp"

namespace sf {

// Generic transform on a complex array: forward returns the coefficient
// array in grid layout, inverse synthesises values from it.
inline CField transform(const CField& f, Direction d) {
    if (d == Direction::forward) {
        Spectrum s = fft(f);
        CField out(f.grid);
        out.v = std::move(s.c);
        return out;
    }
    Spectrum s(f.grid);
    s.c = f.v;
    return ifft(s);
}

namespace detail {
// wavenumber used for differentiation: the unpaired Nyquist mode is dropped
inline int dwave(const Grid& g, int a) { return g.nyquist(a) ? 0 : g.freq(a); }

template <class F>  // F(k1, k2, index)
void for_modes(const Grid& g, F&& f) {
    const int n = g.n();
    for (int a = 0; a < n; ++a) {
        int k1 = dwave(g, a);
        for (int b = 0; b < n; ++b) f(k1, dwave(g, b), g.at(a, b), g.nyquist(a) || g.nyquist(b));
    }
}
} // namespace detail

// ---- derivatives; all of them zero the Nyquist modes ----

inline VectorField gradient(const Field& f) {
    Spectrum s = fft(f);
    Spectrum d1(f.grid), d2(f.grid);
    detail::for_modes(f.grid, [&](int k1, int k2, std::size_t i, bool) {
        d1.c[i] = cplx(0, k1) * s.c[i];
        d2.c[i] = cplx(0, k2) * s.c[i];
    });
    return {ifft_real(d1), ifft_real(d2)};
}

inline CVectorField gradient(const CField& f) {
    Spectrum s = fft(f);
    Spectrum d1(f.grid), d2(f.grid);
    detail::for_modes(f.grid, [&](int k1, int k2, std::size_t i, bool) {
        d1.c[i] = cplx(0, k1) * s.c[i];
        d2.c[i] = cplx(0, k2) * s.c[i];
    });
    return {ifft(d1), ifft(d2)};
}

inline Spectrum divergence_spectrum(const VectorField& u) {
    require_same(u[0].grid, u[1].grid);
    Spectrum a = fft(u[0]), b = fft(u[1]);
    Spectrum d(u[0].grid);
    detail::for_modes(d.grid, [&](int k1, int k2, std::size_t i, bool) {
        d.c[i] = cplx(0, k1) * a.c[i] + cplx(0, k2) * b.c[i];
    });
    return d;
}

inline Field divergence(const VectorField& u) { return ifft_real(divergence_spectrum(u)); }

// second derivatives d_a d_b f, returned as (11, 12, 22)
inline std::array<Field, 3> hessian(const Field& f) {
    Spectrum s = fft(f);
    Spectrum h11(f.grid), h12(f.grid), h22(f.grid);
    detail::for_modes(f.grid, [&](int k1, int k2, std::size_t i, bool) {
        h11.c[i] = -double(k1 * k1) * s.c[i];
        h12.c[i] = -double(k1 * k2) * s.c[i];
        h22.c[i] = -double(k2 * k2) * s.c[i];
    });
    return {ifft_real(h11), ifft_real(h12), ifft_real(h22)};
}

// grad Delta^{-1} from a spectrum (mode 0 dropped)
inline VectorField grad_inv_laplacian(const Spectrum& s) {
    Spectrum a(s.grid), b(s.grid);
    detail::for_modes(s.grid, [&](int k1, int k2, std::size_t i, bool) {
        int r2 = k1 * k1 + k2 * k2;
        if (r2 == 0) return;
        a.c[i] = cplx(0, -k1) * s.c[i] / double(r2);
        b.c[i] = cplx(0, -k2) * s.c[i] / double(r2);
    });
    return {ifft_real(a), ifft_real(b)};
}

// ---- multipliers ----

inline Spectrum multiply(const Spectrum& s, const std::vector<cplx>& table) {
    Spectrum o(s.grid);
    for (std::size_t i = 0; i < s.c.size(); ++i) o.c[i] = table[i] * s.c[i];
    return o;
}

// u^l = T^l[theta], u_hat(xi) = m(xi) theta_hat(xi), m(0) = 0. When
// `imag_residue` is given the synthesis is done in complex arithmetic and
// the largest imaginary part is reported.
inline VectorField apply_multiplier(const Field& theta, const Symbol& m, double* imag_residue = nullptr) {
    const auto& tab = m.table(theta.grid);
    Spectrum s = fft(theta);
    Spectrum a(theta.grid), b(theta.grid);
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        a.c[i] = tab[i][0] * s.c[i];
        b.c[i] = tab[i][1] * s.c[i];
    }
    if (imag_residue) {
        CField ca = ifft(a), cb = ifft(b);
        double r = 0;
        for (std::size_t i = 0; i < ca.size(); ++i)
            r = std::max({r, std::abs(ca.v[i].imag()), std::abs(cb.v[i].imag())});
        *imag_residue = r;
        return {real_part(ca), real_part(cb)};
    }
    return {ifft_real(a), ifft_real(b)};
}

inline VectorField apply_multiplier(const Spectrum& s, const Symbol& m) {
    const auto& tab = m.table(s.grid);
    Spectrum a(s.grid), b(s.grid);
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        a.c[i] = tab[i][0] * s.c[i];
        b.c[i] = tab[i][1] * s.c[i];
    }
    return {ifft_real(a), ifft_real(b)};
}

inline CVectorField apply_multiplier(const CField& theta, const Symbol& m) {
    const auto& tab = m.table(theta.grid);
    Spectrum s = fft(theta);
    Spectrum a(theta.grid), b(theta.grid);
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        a.c[i] = tab[i][0] * s.c[i];
        b.c[i] = tab[i][1] * s.c[i];
    }
    return {ifft(a), ifft(b)};
}

// A scalar multiplier given as a function of a (real) frequency vector.
struct ScalarMultiplier {
    std::function<cplx(const vec2&)> f;
    cplx operator()(const vec2& xi) const { return f(xi); }
};

template <class F>
Spectrum apply_scalar(const Spectrum& s, F&& mult) {
    Spectrum o(s.grid);
    const Grid& g = s.grid;
    detail::for_modes(g, [&](int k1, int k2, std::size_t i, bool nyq) {
        if (nyq) return;
        o.c[i] = mult(vec2{double(k1), double(k2)}) * s.c[i];
    });
    return o;
}

// ---- frequency bands ----

// Smooth frequency cutoffs: low-pass P_{<=q}, the ball around a wave's
// base frequency, and the annulus [lambda/3, 40 lambda].
struct BandSpec {
    enum class Kind { low_pass, ball, annulus };
    Kind kind = Kind::ball;
    vec2 center{};
    double plateau = 0, support = 0;      // ball / low-pass radii
    double lo_zero = 0, lo_one = 0;       // annulus inner ramp
    double hi_one = 0, hi_zero = 0;       // annulus outer ramp

    // eta(xi / 2^q): 1 on |xi| <= 2^q, 0 beyond 2^{q+1}
    static BandSpec low_pass(int q) {
        BandSpec b;
        b.kind = Kind::low_pass;
        b.plateau = std::ldexp(1.0, q);
        b.support = 2 * b.plateau;
        return b;
    }
    static BandSpec ball(vec2 c, double r_plateau, double r_support) {
        BandSpec b;
        b.kind = Kind::ball;
        b.center = c;
        b.plateau = r_plateau;
        b.support = r_support;
        return b;
    }
    // P^I_{~lambda} for I = (k, sign): center sign 10^[k] lambda xi_dir,
    // 1 within a quarter of the center's length, 0 beyond half of it
    static BandSpec wave(double lambda, const std::array<int, 2>& dir, int k, int sign) {
        double s = sign * lambda * ((k % 2 != 0) ? 10.0 : 1.0);
        vec2 c{s * dir[0], s * dir[1]};
        double r = norm2(c);
        return ball(c, r / 4, r / 2);
    }
    static BandSpec annulus(double lambda) {
        BandSpec b;
        b.kind = Kind::annulus;
        b.lo_zero = lambda / 3;
        b.lo_one = lambda / 2;
        b.hi_one = 30 * lambda;
        b.hi_zero = 40 * lambda;
        return b;
    }

    double operator()(const vec2& xi) const {
        switch (kind) {
        case Kind::low_pass: return plateau_cutoff(norm2(xi), plateau, support);
        case Kind::ball: return plateau_cutoff(norm2(vec2{xi[0] - center[0], xi[1] - center[1]}), plateau, support);
        case Kind::annulus: {
            double r = norm2(xi);
            if (r <= lo_zero || r >= hi_zero) return 0.0;
            double inner = r >= lo_one ? 1.0 : smooth_step((r - lo_zero) / (lo_one - lo_zero));
            return inner * plateau_cutoff(r, hi_one, hi_zero);
        }
        }
        return 0.0;
    }

    bool in_plateau(const vec2& xi) const {
        switch (kind) {
        case Kind::low_pass: return norm2(xi) <= plateau;
        case Kind::ball: return norm2(vec2{xi[0] - center[0], xi[1] - center[1]}) <= plateau;
        case Kind::annulus: {
            double r = norm2(xi);
            return r >= lo_one && r <= hi_one;
        }
        }
        return false;
    }

    // largest |xi| where the cutoff can be nonzero
    double outer_radius() const {
        switch (kind) {
        case Kind::low_pass: return support;
        case Kind::ball: return norm2(center) + support;
        case Kind::annulus: return hi_zero;
        }
        return 0;
    }

    void require_resolved(const Grid& g) const {
        if (outer_radius() >= g.n() / 2.0)
            throw BandUnresolved("band reaches |xi| = " + std::to_string(outer_radius()) +
                                 " but the grid resolves |xi| < " + std::to_string(g.n() / 2) +
                                 "; refine the grid or lower lambda");
    }

    ScalarMultiplier as_multiplier() const {
        BandSpec b = *this;
        return {[b](const vec2& xi) { return cplx(b(xi), 0.0); }};
    }
};

// Cutoff values on the lattice of a grid (Nyquist zeroed).
inline std::vector<double> band_table(const Grid& g, const BandSpec& band) {
    std::vector<double> t(g.size(), 0.0);
    detail::for_modes(g, [&](int k1, int k2, std::size_t i, bool nyq) {
        if (!nyq) t[i] = band(vec2{double(k1), double(k2)});
    });
    return t;
}

inline Spectrum project_band(const Spectrum& s, const BandSpec& band) {
    band.require_resolved(s.grid);
    auto t = band_table(s.grid, band);
    Spectrum o(s.grid);
    for (std::size_t i = 0; i < s.c.size(); ++i) o.c[i] = t[i] * s.c[i];
    return o;
}

inline Field project_band(const Field& f, const BandSpec& band) { return ifft_real(project_band(fft(f), band)); }
inline CField project_band(const CField& f, const BandSpec& band) { return ifft(project_band(fft(f), band)); }

// Solve div R = f with R = grad Delta^{-1} f. The mean of f must vanish;
// when `band_lambda` > 0 the spectral mass outside the annulus
// [lambda/3, 40 lambda] is reported through `leak` (relative l2).
inline VectorField inverse_divergence(const Field& f, double band_lambda = 0, double* leak = nullptr) {
    Spectrum s = fft(f);
    double scale = std::max(sup(f), 1e-300);
    if (std::abs(s.c[0]) > 1e-12 * scale)
        throw NonzeroMean("inverse_divergence: mean " + std::to_string(std::abs(s.c[0])) +
                          " is not zero (relative to sup " + std::to_string(scale) + ")");
    if (band_lambda > 0 && leak) {
        double out = 0, all = 0;
        BandSpec ann = BandSpec::annulus(band_lambda);
        s.for_each([&](int k1, int k2, const cplx& c) {
            double r = std::hypot(double(k1), double(k2));
            all += std::norm(c);
            if (r < ann.lo_zero || r > ann.hi_zero) out += std::norm(c);
        });
        *leak = all > 0 ? std::sqrt(out / all) : 0.0;
    }
    return grad_inv_laplacian(s);
}

// ---- low-pass used by the regularisation ----

inline Field low_pass(const Field& f, int q, int power = 1) {
    BandSpec b = BandSpec::low_pass(q);
    auto t = band_table(f.grid, b);
    Spectrum s = fft(f);
    for (std::size_t i = 0; i < s.c.size(); ++i) s.c[i] *= std::pow(t[i], power);
    return ifft_real(s);
}

// spectral L2-type norms
inline double l2_norm(const Field& f) {
    double s = 0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * two_pi * two_pi / double(f.size()));
}

} // namespace sf
