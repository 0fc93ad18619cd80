#pragma once

#include <optional>

#include "parallel.hpp"
#include "spectral_ops.hpp"

namespace sf {

// Theta = e^{i lambda xi(x)} theta(x) with xi(x) = L.x + xi_tilde(x),
// L integer so the exponential is periodic.
struct WavePacket {
    std::array<int, 2> linear{1, 0};
    Field xi_tilde;        // periodic part of the phase
    CField amplitude;      // theta
    int lambda = 1;

    const Grid& grid() const { return amplitude.grid; }
};

// e^{i lambda xi(x)} on the grid
inline CField phase_factor(const WavePacket& p) {
    const Grid& g = p.grid();
    CField e(g);
    const bool flat = p.xi_tilde.v.empty();
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) {
            // integer part reduced exactly before multiplying by 2pi/n
            long m = (long(p.lambda) * p.linear[0] * i + long(p.lambda) * p.linear[1] * j) % g.n();
            double ph = two_pi * double(m) / g.n();
            if (!flat) ph += p.lambda * p.xi_tilde(i, j);
            e(i, j) = std::polar(1.0, ph);
        }
    return e;
}

// grad xi = L + grad xi_tilde, pointwise
inline VectorField phase_gradient(const WavePacket& p) {
    const Grid& g = p.grid();
    VectorField gx{Field(g, double(p.linear[0])), Field(g, double(p.linear[1]))};
    if (!p.xi_tilde.v.empty()) gx += gradient(p.xi_tilde);
    return gx;
}

// T[Theta] = e^{i lambda xi}(leading + error); one component for scalar
// operators (band projections, scalar kernels), two for symbols.
struct MicrolocalExpansion {
    std::vector<CField> leading, error;
    std::string method;
    std::vector<std::size_t> points;   // quadrature: the sampled grid points
};

namespace detail {

// Largest coefficient in the outer 1/16 of the lattice, relative to the
// largest coefficient overall.
inline double spectral_tail(const Spectrum& s) {
    const int n = s.grid.n(), edge = n / 2 - n / 16;
    double all = 0, tail = 0;
    s.for_each([&](int k1, int k2, const cplx& c) {
        double a = std::abs(c);
        all = std::max(all, a);
        if (std::abs(k1) >= edge || std::abs(k2) >= edge) tail = std::max(tail, a);
    });
    return all > 0 ? tail / all : 0.0;
}

inline void require_resolved(const Spectrum& s, const char* what) {
    double t = spectral_tail(s);
    if (t > 1e-10)
        throw ResolutionError(std::string(what) + ": spectrum reaches the grid edge (relative tail " +
                              std::to_string(t) + "); refine the grid or lower lambda");
}

} // namespace detail

// Exact conjugation: error = e^{-i lambda xi} T[Theta] - theta K(lambda grad xi).
inline MicrolocalExpansion expand_exact(const Symbol& m, const WavePacket& p) {
    const Grid& g = p.grid();
    CField E = phase_factor(p);
    CField Th = mul(E, p.amplitude);
    Spectrum s = fft(Th);
    detail::require_resolved(s, "expand_exact");
    const auto& tab = m.table(g);
    Spectrum a(g), b(g);
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        a.c[i] = tab[i][0] * s.c[i];
        b.c[i] = tab[i][1] * s.c[i];
    }
    CVectorField TT{ifft(a), ifft(b)};
    VectorField gx = phase_gradient(p);
    MicrolocalExpansion out;
    out.method = "exact-conjugation";
    out.leading = {CField(g), CField(g)};
    out.error = {CField(g), CField(g)};
    for (std::size_t i = 0; i < g.size(); ++i) {
        cvec2 mv = m(vec2{p.lambda * gx[0].v[i], p.lambda * gx[1].v[i]});
        for (int c = 0; c < 2; ++c) {
            out.leading[c].v[i] = p.amplitude.v[i] * mv[c];
            out.error[c].v[i] = std::conj(E.v[i]) * TT[c].v[i] - out.leading[c].v[i];
        }
    }
    return out;
}

inline MicrolocalExpansion expand_exact(const ScalarMultiplier& K, const WavePacket& p) {
    const Grid& g = p.grid();
    CField E = phase_factor(p);
    Spectrum s = fft(mul(E, p.amplitude));
    detail::require_resolved(s, "expand_exact");
    CField TT = ifft(apply_scalar(s, K));
    VectorField gx = phase_gradient(p);
    MicrolocalExpansion out;
    out.method = "exact-conjugation";
    out.leading = {CField(g)};
    out.error = {CField(g)};
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.leading[0].v[i] = p.amplitude.v[i] * K(vec2{p.lambda * gx[0].v[i], p.lambda * gx[1].v[i]});
        out.error[0].v[i] = std::conj(E.v[i]) * TT.v[i] - out.leading[0].v[i];
    }
    return out;
}

inline MicrolocalExpansion expand_exact(const BandSpec& band, const WavePacket& p) {
    band.require_resolved(p.grid());
    return expand_exact(band.as_multiplier(), p);
}

// ---- quadrature form of the error term ----

// Kernel with K_hat(xi) = exp(-|xi - c|^2 / (2 s^2)), i.e.
// K(h) = s^2/(2 pi) e^{i c.h} e^{-s^2 |h|^2 / 2}.
struct GaussianKernel {
    vec2 center{};
    double width = 1;

    cplx operator()(const vec2& h) const {
        double s2 = width * width;
        return s2 / two_pi * std::exp(cplx(-0.5 * s2 * (h[0] * h[0] + h[1] * h[1]), dot(center, h)));
    }
    cplx hat(const vec2& xi) const {
        double dx = xi[0] - center[0], dy = xi[1] - center[1];
        return std::exp(-(dx * dx + dy * dy) / (2 * width * width));
    }
    ScalarMultiplier multiplier() const {
        GaussianKernel k = *this;
        return {[k](const vec2& xi) { return k.hat(xi); }};
    }
    // radius beyond which |K| < cutoff * peak
    double truncation_radius(double cutoff) const { return std::sqrt(-2 * std::log(cutoff)) / width; }
};

struct QuadSpec {
    int r_nodes = 8;
    int s_nodes = 8;
    double h_step = 0.5;        // h spacing in units of 1/width
    double cutoff = 1e-14;      // truncation of the h domain
    int stride = 16;            // sample every stride-th grid point per axis
};

// Trigonometric polynomial kept as its nonzero modes, for off-grid values.
class SparseTrig {
public:
    SparseTrig() = default;
    explicit SparseTrig(const Spectrum& s, double rel = 1e-15) {
        double m = 0;
        for (auto& c : s.c) m = std::max(m, std::abs(c));
        s.for_each([&](int k1, int k2, const cplx& c) {
            if (std::abs(c) > rel * m && m > 0) modes_.push_back({k1, k2, c});
        });
    }
    cplx value(const vec2& y) const {
        cplx v{};
        for (auto& md : modes_) v += md.c * std::polar(1.0, md.k1 * y[0] + md.k2 * y[1]);
        return v;
    }
    // value and gradient together
    void value_grad(const vec2& y, cplx& v, cvec2& gr) const {
        v = 0;
        gr = {cplx{}, cplx{}};
        for (auto& md : modes_) {
            cplx e = md.c * std::polar(1.0, md.k1 * y[0] + md.k2 * y[1]);
            v += e;
            gr[0] += cplx(0, md.k1) * e;
            gr[1] += cplx(0, md.k2) * e;
        }
    }
    // h^a h^b d_a d_b at y (real part for real data)
    cplx hess_hh(const vec2& y, const vec2& h) const {
        cplx v{};
        for (auto& md : modes_) {
            double kh = md.k1 * h[0] + md.k2 * h[1];
            v += -kh * kh * md.c * std::polar(1.0, md.k1 * y[0] + md.k2 * y[1]);
        }
        return v;
    }
    std::size_t size() const { return modes_.size(); }

private:
    struct Mode {
        int k1, k2;
        cplx c;
    };
    std::vector<Mode> modes_;
};

// delta(x) = int_0^1 dr d/dr int e^{-i lambda grad xi(x).h} e^{i Z(r,x,h)} theta(x - rh) K(h) dh,
// Z(r,x,h) = r lambda int_0^1 h^a h^b d_a d_b xi(x - s h)(1 - s) ds.
// The r-derivative is taken analytically, r and s by Gauss-Legendre, h by
// the trapezoid rule on a square truncated where |K| drops below cutoff.
inline MicrolocalExpansion expand_quadrature(const GaussianKernel& K, const WavePacket& p, const QuadSpec& q = {}) {
    const Grid& g = p.grid();
    if (q.r_nodes < 1 || q.s_nodes < 1 || q.stride < 1 || !(q.h_step > 0))
        throw QuadratureError("invalid quadrature specification");
    SparseTrig th(fft(p.amplitude));
    SparseTrig xt;
    if (!p.xi_tilde.v.empty()) xt = SparseTrig(fft(p.xi_tilde));
    VectorField gx = phase_gradient(p);
    GaussRule gr = gauss_legendre(unsigned(q.r_nodes), 0.0, 1.0);
    GaussRule gs = gauss_legendre(unsigned(q.s_nodes), 0.0, 1.0);
    const double H = K.truncation_radius(q.cutoff);
    const double dh = q.h_step / K.width;
    const int nh = int(std::ceil(H / dh));
    std::vector<vec2> hs;
    std::vector<cplx> kw;
    for (int a = -nh; a <= nh; ++a)
        for (int b = -nh; b <= nh; ++b) {
            vec2 h{a * dh, b * dh};
            if (norm2(h) > H) continue;
            hs.push_back(h);
            kw.push_back(K(h) * dh * dh);
        }

    MicrolocalExpansion out;
    out.method = "quadrature";
    out.leading = {CField(g)};
    out.error = {CField(g)};
    for (int i = 0; i < g.n(); i += q.stride)
        for (int j = 0; j < g.n(); j += q.stride) out.points.push_back(g.at(i, j));

    const double lam = p.lambda;
    parallel_for(out.points.size(), [&](std::size_t pi) {
        std::size_t idx = out.points[pi];
        int i = int(idx / g.n()), j = int(idx % g.n());
        vec2 x{g.x(i), g.x(j)};
        vec2 G{gx[0].v[idx], gx[1].v[idx]};
        cplx acc{};
        for (std::size_t m = 0; m < hs.size(); ++m) {
            const vec2& h = hs[m];
            // Z(1, x, h)
            double Z1 = 0;
            if (xt.size())
                for (std::size_t k = 0; k < gs.x.size(); ++k) {
                    vec2 y{x[0] - gs.x[k] * h[0], x[1] - gs.x[k] * h[1]};
                    Z1 += gs.w[k] * (1 - gs.x[k]) * xt.hess_hh(y, h).real();
                }
            Z1 *= lam;
            cplx inner{};
            for (std::size_t k = 0; k < gr.x.size(); ++k) {
                double r = gr.x[k];
                vec2 y{x[0] - r * h[0], x[1] - r * h[1]};
                cplx v;
                cvec2 dv;
                th.value_grad(y, v, dv);
                cplx ddr = std::polar(1.0, r * Z1) * (cplx(0, Z1) * v - (h[0] * dv[0] + h[1] * dv[1]));
                inner += gr.w[k] * ddr;
            }
            acc += kw[m] * std::polar(1.0, -lam * dot(G, h)) * inner;
        }
        out.error[0].v[idx] = acc;
        out.leading[0].v[idx] = p.amplitude.v[idx] * K.hat(vec2{lam * G[0], lam * G[1]});
    });
    return out;
}

// ---- decay of the error with lambda ----

struct DecayStudy {
    std::vector<int> lambdas;
    std::vector<double> dtheta, du;       // sup norms of the band / drift errors
    double slope_theta = 0, slope_u = 0;
    bool exact_theta = false, exact_u = false;
};

inline double fit_slope(const std::vector<int>& x, const std::vector<double>& y) {
    double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::log(double(x[i])), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// For each lambda: packet e^{i lambda xi} theta with xi = L.x + phase, the
// drift symbol error delta u and the band-projection error delta theta
// (band = the wave ball around lambda L).
inline DecayStudy decay_study(const Symbol& drift, const std::array<int, 2>& L, const Field& phase,
                              const CField& amplitude, const std::vector<int>& lambdas) {
    if (lambdas.size() < 3) throw QuadratureError("decay_study needs at least three lambda values");
    DecayStudy d;
    d.lambdas = lambdas;
    d.dtheta.resize(lambdas.size());
    d.du.resize(lambdas.size());
    const double scale = std::max(sup(amplitude), 1e-300);
    parallel_for(lambdas.size(), [&](std::size_t k) {
        WavePacket p{L, phase, amplitude, lambdas[k]};
        auto eu = expand_exact(drift, p);
        auto et = expand_exact(BandSpec::wave(lambdas[k], L, 0, 1), p);
        d.du[k] = std::max(sup(eu.error[0]), sup(eu.error[1]));
        d.dtheta[k] = sup(et.error[0]);
    });
    auto tiny = [&](const std::vector<double>& v) {
        for (double x : v)
            if (x > 1e-13 * scale) return false;
        return true;
    };
    d.exact_theta = tiny(d.dtheta);
    d.exact_u = tiny(d.du);
    d.slope_theta = d.exact_theta ? 0.0 : fit_slope(lambdas, d.dtheta);
    d.slope_u = d.exact_u ? 0.0 : fit_slope(lambdas, d.du);
    return d;
}

} // namespace sf
