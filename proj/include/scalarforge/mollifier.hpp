#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace sf {

// The one bump everything is built from: exp(-1/(1-t^2)) on (-1, 1).
inline double bump(double t) {
    double a = 1.0 - t * t;
    return a > 0 ? std::exp(-1.0 / a) : 0.0;
}

namespace detail {
// fixed 61-point Gauss-Kronrod on one subinterval (the integrand is smooth)
inline double bump_integral(double lo, double hi) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(bump, lo, hi, 0);
}

// first two derivatives of the bump
inline double bump_d1(double t) {
    double a = 1.0 - t * t;
    return a > 0 ? bump(t) * (-2 * t / (a * a)) : 0.0;
}
// Primitive of the bump on [-1, 1], tabulated once and evaluated by
// quintic Hermite interpolation (value, first and second derivative known).
class BumpPrimitive {
public:
    static const BumpPrimitive& get() {
        static const BumpPrimitive p;
        return p;
    }
    double mass() const { return F_.back(); }
    double operator()(double y) const {
        if (y <= -1) return 0.0;
        if (y >= 1) return mass();
        double u = (y + 1) / h_;
        int j = std::min(int(u), cells - 1);
        double s = u - j, y0 = -1 + j * h_, y1 = y0 + h_;
        double f0 = F_[j], f1 = F_[j + 1];
        double d0 = bump(y0) * h_, d1 = bump(y1) * h_;
        double c0 = bump_d1(y0) * h_ * h_, c1 = bump_d1(y1) * h_ * h_;
        double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
        double H0 = 1 - 10 * s3 + 15 * s4 - 6 * s5, H1 = s - 6 * s3 + 8 * s4 - 3 * s5;
        double H2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
        double G0 = 10 * s3 - 15 * s4 + 6 * s5, G1 = -4 * s3 + 7 * s4 - 3 * s5;
        double G2 = 0.5 * (s3 - 2 * s4 + s5);
        return f0 * H0 + d0 * H1 + c0 * H2 + f1 * G0 + d1 * G1 + c1 * G2;
    }

private:
    static constexpr int cells = 4096;
    double h_ = 2.0 / cells;
    std::vector<double> F_;
    BumpPrimitive() : F_(cells + 1, 0.0) {
        for (int j = 0; j < cells; ++j) F_[j + 1] = F_[j] + bump_integral(-1 + j * h_, -1 + (j + 1) * h_);
    }
};

inline double bump_mass() { return BumpPrimitive::get().mass(); }
} // namespace detail

// unit-mass version of the bump, support |t| <= 1
inline double unit_bump(double t) { return bump(t) / detail::bump_mass(); }

// Smooth step built as the normalised primitive of the bump: 0 for s <= 0,
// 1 for s >= 1, C-infinity in between. Exact 0/1 outside (0, 1); the two
// halves are evaluated from their own ends so s and 1 - s sum to 1.
inline double smooth_step(double s) {
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    const auto& P = detail::BumpPrimitive::get();
    double y = 2 * s - 1;
    if (y <= 0) return P(y) / P.mass();
    return 1.0 - P(-y) / P.mass();
}

// 1 for r <= r_plateau, 0 for r >= r_support, smooth and monotone between.
inline double plateau_cutoff(double r, double r_plateau, double r_support) {
    if (r <= r_plateau) return 1.0;
    if (r >= r_support) return 0.0;
    return smooth_step((r_support - r) / (r_support - r_plateau));
}

// eta_eps * indicator[a, b]: closed form via the primitive of the bump.
inline double mollified_indicator(double t, double a, double b, double eps) {
    return smooth_step((t - a + eps) / (2 * eps)) - smooth_step((t - b + eps) / (2 * eps));
}

// Gauss-Legendre nodes/weights on [-1, 1] for any n >= 1.
struct GaussRule {
    std::vector<double> x, w;
};

inline GaussRule gauss_legendre(unsigned n) {
    GaussRule r;
    if (n == 0) return r;
    auto zeros = boost::math::legendre_p_zeros<double>(int(n));  // nonnegative half
    for (double z : zeros) {
        double p = boost::math::legendre_p_prime(int(n), z);
        double w = 2.0 / ((1 - z * z) * p * p);
        if (z == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(w);
        } else {
            r.x.push_back(-z);
            r.w.push_back(w);
            r.x.push_back(z);
            r.w.push_back(w);
        }
    }
    std::vector<std::pair<double, double>> xw;
    for (std::size_t i = 0; i < r.x.size(); ++i) xw.emplace_back(r.x[i], r.w[i]);
    std::sort(xw.begin(), xw.end());
    for (std::size_t i = 0; i < xw.size(); ++i) {
        r.x[i] = xw[i].first;
        r.w[i] = xw[i].second;
    }
    return r;
}

// rule mapped to [a, b]
inline GaussRule gauss_legendre(unsigned n, double a, double b) {
    GaussRule r = gauss_legendre(n);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.x[i] = 0.5 * (a + b) + 0.5 * (b - a) * r.x[i];
        r.w[i] *= 0.5 * (b - a);
    }
    return r;
}

} // namespace sf
