#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "field.hpp"

namespace sf {

// Fourier coefficients on the full dual lattice, array layout matching Grid:
// c(k) = n^-2 sum_x f(x) e^{-i k.x}, so f(x) = sum_k c(k) e^{i k.x}.
struct Spectrum {
    Grid grid;
    std::vector<cplx> c;

    Spectrum() = default;
    explicit Spectrum(const Grid& g) : grid(g), c(g.size(), cplx{}) {}

    cplx& operator()(int a, int b) { return c[grid.at(a, b)]; }
    const cplx& operator()(int a, int b) const { return c[grid.at(a, b)]; }
    // access by signed wavenumber
    cplx& mode(int k1, int k2) { return c[grid.at(grid.index(k1), grid.index(k2))]; }
    const cplx& mode(int k1, int k2) const { return c[grid.at(grid.index(k1), grid.index(k2))]; }

    template <class F>  // F(k1, k2, coeff&)
    void for_each(F&& f) {
        int n = grid.n();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) f(grid.freq(a), grid.freq(b), c[grid.at(a, b)]);
    }
    template <class F>
    void for_each(F&& f) const {
        int n = grid.n();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) f(grid.freq(a), grid.freq(b), c[grid.at(a, b)]);
    }

    Spectrum& operator+=(const Spectrum& o) {
        require_same(grid, o.grid);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
        return *this;
    }
    Spectrum& operator*=(cplx s) {
        for (auto& x : c) x *= s;
        return *this;
    }
};

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are built once per (n, kind) under a lock and kept for the
// lifetime of the process.
class PlanCache {
public:
    enum Kind { c2c_fwd, c2c_bwd, r2c, c2r };

    static PlanCache& get() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan plan(int n, Kind kind) {
        std::lock_guard<std::mutex> lk(m_);
        auto key = std::make_pair(n, int(kind));
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::size_t N = std::size_t(n) * n;
        fftw_plan p = nullptr;
        if (kind == c2c_fwd || kind == c2c_bwd) {
            auto* a = fftw_alloc_complex(N);
            auto* b = fftw_alloc_complex(N);
            p = fftw_plan_dft_2d(n, n, a, b, kind == c2c_fwd ? FFTW_FORWARD : FFTW_BACKWARD, flags);
            fftw_free(a);
            fftw_free(b);
        } else if (kind == r2c) {
            auto* a = fftw_alloc_real(N);
            auto* b = fftw_alloc_complex(std::size_t(n) * (n / 2 + 1));
            p = fftw_plan_dft_r2c_2d(n, n, a, b, flags);
            fftw_free(a);
            fftw_free(b);
        } else {
            auto* a = fftw_alloc_complex(std::size_t(n) * (n / 2 + 1));
            auto* b = fftw_alloc_real(N);
            p = fftw_plan_dft_c2r_2d(n, n, a, b, flags);
            fftw_free(a);
            fftw_free(b);
        }
        if (!p) throw std::runtime_error("fftw planning failed");
        plans_[key] = p;
        return p;
    }

    ~PlanCache() {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }

private:
    std::mutex m_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline fftw_complex* fc(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace detail

inline Spectrum fft(const CField& f) {
    const Grid& g = f.grid;
    Spectrum s(g);
    auto p = detail::PlanCache::get().plan(g.n(), detail::PlanCache::c2c_fwd);
    std::vector<cplx> in(f.v);
    fftw_execute_dft(p, detail::fc(in.data()), detail::fc(s.c.data()));
    const double inv = 1.0 / double(g.size());
    for (auto& x : s.c) x *= inv;
    return s;
}

inline Spectrum fft(const Field& f) {
    const Grid& g = f.grid;
    const int n = g.n(), h = n / 2 + 1;
    std::vector<cplx> half(std::size_t(n) * h);
    std::vector<double> in(f.v);
    auto p = detail::PlanCache::get().plan(n, detail::PlanCache::r2c);
    fftw_execute_dft_r2c(p, in.data(), detail::fc(half.data()));
    Spectrum s(g);
    const double inv = 1.0 / double(g.size());
    for (int a = 0; a < n; ++a) {
        int na = (n - a) % n;
        for (int b = 0; b < h; ++b) {
            cplx v = half[std::size_t(a) * h + b] * inv;
            s(a, b) = v;
            s(na, (n - b) % n) = std::conj(v);
        }
    }
    return s;
}

inline CField ifft(const Spectrum& s) {
    const Grid& g = s.grid;
    CField out(g);
    auto p = detail::PlanCache::get().plan(g.n(), detail::PlanCache::c2c_bwd);
    std::vector<cplx> in(s.c);
    fftw_execute_dft(p, detail::fc(in.data()), detail::fc(out.v.data()));
    return out;
}

// Real part of the synthesis. The Hermitian part (c(k) + conj c(-k))/2 is
// formed explicitly, so a non-Hermitian spectrum is handled correctly.
inline Field ifft_real(const Spectrum& s) {
    const Grid& g = s.grid;
    const int n = g.n(), h = n / 2 + 1;
    std::vector<cplx> half(std::size_t(n) * h);
    for (int a = 0; a < n; ++a) {
        int na = (n - a) % n;
        for (int b = 0; b < h; ++b)
            half[std::size_t(a) * h + b] = 0.5 * (s(a, b) + std::conj(s(na, (n - b) % n)));
    }
    Field out(g);
    auto p = detail::PlanCache::get().plan(n, detail::PlanCache::c2r);
    fftw_execute_dft_c2r(p, detail::fc(half.data()), out.v.data());
    return out;
}

enum class Direction { forward, inverse };

} // namespace sf
