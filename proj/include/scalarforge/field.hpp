#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"

namespace sf {

using cplx = std::complex<double>;
using vec2 = std::array<double, 2>;
using cvec2 = std::array<cplx, 2>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double norm2(const vec2& v) { return std::hypot(v[0], v[1]); }
inline double dot(const vec2& a, const vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

// Uniform periodic grid on [0, 2pi)^2, n points per axis, x1 is the slow index.
class Grid {
public:
    Grid() = default;
    explicit Grid(int n) : n_(n) {
        if (n < 8 || (n & (n - 1)) != 0)
            throw SizeMismatch("grid size must be a power of two >= 8, got " + std::to_string(n));
    }
    int n() const { return n_; }
    std::size_t size() const { return std::size_t(n_) * n_; }
    int max_freq() const { return n_ / 2 - 1; }
    int dim() const { return 2; }
    double dx() const { return two_pi / n_; }
    double x(int i) const { return two_pi * i / n_; }
    // signed wavenumber of array index a, in [-n/2, n/2)
    int freq(int a) const { return a < n_ / 2 ? a : a - n_; }
    int index(int k) const { return ((k % n_) + n_) % n_; }
    bool nyquist(int a) const { return a == n_ / 2; }
    std::size_t at(int i, int j) const { return std::size_t(i) * n_ + j; }
    bool operator==(const Grid& o) const { return n_ == o.n_; }
    bool operator!=(const Grid& o) const { return n_ != o.n_; }

private:
    int n_ = 0;
};

inline void require_same(const Grid& a, const Grid& b) {
    if (a != b)
        throw SizeMismatch("grid sizes differ: " + std::to_string(a.n()) + " vs " +
                           std::to_string(b.n()));
}

// Grid values of a scalar field (real or complex).
template <class T>
struct BasicField {
    Grid grid;
    std::vector<T> v;

    BasicField() = default;
    explicit BasicField(const Grid& g, T fill = T{}) : grid(g), v(g.size(), fill) {}

    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }
    T& operator()(int i, int j) { return v[grid.at(i, j)]; }
    const T& operator()(int i, int j) const { return v[grid.at(i, j)]; }
    std::size_t size() const { return v.size(); }

    template <class F>
    static BasicField sample(const Grid& g, F&& f) {
        BasicField out(g);
        for (int i = 0; i < g.n(); ++i)
            for (int j = 0; j < g.n(); ++j) out(i, j) = f(g.x(i), g.x(j));
        return out;
    }

    BasicField& operator+=(const BasicField& o) {
        require_same(grid, o.grid);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
    BasicField& operator-=(const BasicField& o) {
        require_same(grid, o.grid);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
        return *this;
    }
    BasicField& operator*=(T s) {
        for (auto& x : v) x *= s;
        return *this;
    }
    friend BasicField operator+(BasicField a, const BasicField& b) { return a += b; }
    friend BasicField operator-(BasicField a, const BasicField& b) { return a -= b; }
    friend BasicField operator*(BasicField a, T s) { return a *= s; }
    friend BasicField operator*(T s, BasicField a) { return a *= s; }
};

using Field = BasicField<double>;
using CField = BasicField<cplx>;
using VectorField = std::array<Field, 2>;
using CVectorField = std::array<CField, 2>;

inline VectorField zero_vector(const Grid& g) { return {Field(g), Field(g)}; }

// pointwise products
template <class A, class B>
auto mul(const BasicField<A>& a, const BasicField<B>& b) {
    require_same(a.grid, b.grid);
    BasicField<decltype(A{} * B{})> out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

inline Field real_part(const CField& f) {
    Field out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i].real();
    return out;
}

inline CField to_complex(const Field& f) {
    CField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i];
    return out;
}

// Grid maximum; C0 norms throughout are grid maxima.
template <class T>
double sup(const BasicField<T>& f) {
    double m = 0;
    for (const auto& x : f.v) m = std::max(m, double(std::abs(x)));
    return m;
}

// pointwise Euclidean length, then grid max
template <class T>
double sup(const std::array<BasicField<T>, 2>& f) {
    double m = 0;
    for (std::size_t i = 0; i < f[0].size(); ++i)
        m = std::max(m, std::sqrt(std::norm(f[0].v[i]) + std::norm(f[1].v[i])));
    return m;
}

namespace detail {
// Neumaier-compensated sum; plain summation of 10^5..10^6 values loses
// more than the 1e-13 the mean checks ask for
inline double csum(const std::vector<double>& v) {
    double s = 0, c = 0;
    for (double x : v) {
        double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}
inline cplx csum(const std::vector<cplx>& v) {
    double sr = 0, cr = 0, si = 0, ci = 0;
    for (const cplx& z : v) {
        double t = sr + z.real();
        cr += std::abs(sr) >= std::abs(z.real()) ? (sr - t) + z.real() : (z.real() - t) + sr;
        sr = t;
        t = si + z.imag();
        ci += std::abs(si) >= std::abs(z.imag()) ? (si - t) + z.imag() : (z.imag() - t) + si;
        si = t;
    }
    return {sr + cr, si + ci};
}
} // namespace detail

// integral over the torus (rectangle rule, exact for resolved trigonometric data)
template <class T>
T integral(const BasicField<T>& f) {
    return detail::csum(f.v) * (two_pi * two_pi / double(f.size()));
}

template <class T>
T mean(const BasicField<T>& f) {
    return detail::csum(f.v) / double(f.size());
}

inline VectorField operator+(VectorField a, const VectorField& b) {
    a[0] += b[0];
    a[1] += b[1];
    return a;
}
inline VectorField operator-(VectorField a, const VectorField& b) {
    a[0] -= b[0];
    a[1] -= b[1];
    return a;
}
inline VectorField& operator+=(VectorField& a, const VectorField& b) {
    a[0] += b[0];
    a[1] += b[1];
    return a;
}

// c(x) * V for a constant vector V
inline VectorField times_vector(const Field& c, const vec2& V) {
    return {c * V[0], c * V[1]};
}

inline VectorField scalar_times(const Field& s, const VectorField& u) {
    return {mul(s, u[0]), mul(s, u[1])};
}

} // namespace sf
