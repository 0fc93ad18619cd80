#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <unordered_map>

#include "expression.hpp"
#include "field.hpp"

namespace sf {

using cvec3 = std::array<cplx, 3>;
using vec3 = std::array<double, 3>;

// Degree-0 homogeneous Fourier multiplier m(xi). 2D symbols drive the
// construction; 3D formulas (IPM-3D, MG) are evaluation-only.
class Symbol {
public:
    using Eval2 = std::function<cvec2(const vec2&)>;
    using Eval3 = std::function<cvec3(const vec3&)>;

    Symbol() = default;
    Symbol(std::string name, Eval2 f) : name_(std::move(name)), dim_(2), f2_(std::move(f)) {}
    Symbol(std::string name, Eval3 f) : name_(std::move(name)), dim_(3), f3_(std::move(f)) {}

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }

    cvec2 operator()(const vec2& xi) const {
        if (dim_ != 2) throw UnsupportedSymbol(name_ + " is a 3D formula; the construction is 2D only");
        if (xi[0] == 0 && xi[1] == 0) return {cplx{}, cplx{}};
        return f2_(xi);
    }
    cvec3 operator()(const vec3& xi) const {
        if (dim_ != 3) throw UnsupportedSymbol(name_ + " is a 2D symbol");
        if (xi[0] == 0 && xi[1] == 0 && xi[2] == 0) return {cplx{}, cplx{}, cplx{}};
        return f3_(xi);
    }

    // Symbol values on the integer lattice of a grid, two components per
    // mode, cached per grid size. Nyquist modes are zeroed.
    const std::vector<cvec2>& table(const Grid& g) const {
        std::lock_guard<std::mutex> lk(cache_->m);
        auto it = cache_->tables.find(g.n());
        if (it != cache_->tables.end()) return *it->second;
        auto t = std::make_shared<std::vector<cvec2>>(g.size());
        for (int a = 0; a < g.n(); ++a)
            for (int b = 0; b < g.n(); ++b) {
                if (g.nyquist(a) || g.nyquist(b)) {
                    (*t)[g.at(a, b)] = {cplx{}, cplx{}};
                    continue;
                }
                (*t)[g.at(a, b)] = (*this)(vec2{double(g.freq(a)), double(g.freq(b))});
            }
        cache_->tables[g.n()] = t;
        return *t;
    }

private:
    struct Cache {
        std::mutex m;
        std::unordered_map<int, std::shared_ptr<std::vector<cvec2>>> tables;
    };
    std::string name_;
    int dim_ = 2;
    Eval2 f2_;
    Eval3 f3_;
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

namespace symbols {

inline Symbol sqg() {
    return Symbol("sqg", [](const vec2& x) -> cvec2 {
        double r = norm2(x);
        const cplx i(0, 1);
        return {i * (-x[1]) / r, i * x[0] / r};
    });
}

inline Symbol ipm2d() {
    return Symbol("ipm2d", [](const vec2& x) -> cvec2 {
        double r2 = x[0] * x[0] + x[1] * x[1];
        return {x[0] * x[1] / r2, -x[0] * x[0] / r2};
    });
}

inline Symbol ipm3d() {
    return Symbol("ipm3d", [](const vec3& x) -> cvec3 {
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return {x[0] * x[2] / r2, x[1] * x[2] / r2, -(x[0] * x[0] + x[1] * x[1]) / r2};
    });
}

// Magneto-geostrophic symbol; defined as 0 on the plane xi3 = 0.
inline Symbol mg() {
    return Symbol("mg", [](const vec3& x) -> cvec3 {
        if (x[2] == 0) return {cplx{}, cplx{}, cplx{}};
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        double den = x[2] * x[2] * r2 + std::pow(x[1], 4);
        return {(x[1] * x[2] * r2 + x[0] * x[1] * x[1] * x[2]) / den,
                (-x[0] * x[2] * r2 + x[1] * x[1] * x[1] * x[2]) / den,
                -x[1] * x[1] * (x[0] * x[0] + x[1] * x[1]) / den};
    });
}

// m = (m1, m2) given as expressions in xi1, xi2.
inline Symbol custom(const std::string& m1, const std::string& m2, std::string name = "custom") {
    auto e1 = std::make_shared<Expression>(m1, std::vector<std::string>{"xi1", "xi2"});
    auto e2 = std::make_shared<Expression>(m2, std::vector<std::string>{"xi1", "xi2"});
    return Symbol(std::move(name), [e1, e2](const vec2& x) -> cvec2 {
        return {(*e1)(x.data()), (*e2)(x.data())};
    });
}

inline Symbol builtin(const std::string& name) {
    if (name == "sqg") return sqg();
    if (name == "ipm2d" || name == "ipm") return ipm2d();
    if (name == "ipm3d" || name == "ipm3d-formula") return ipm3d();
    if (name == "mg" || name == "mg-formula") return mg();
    throw UnknownSymbol("unknown symbol '" + name + "'");
}

} // namespace symbols

inline Symbol scaled(const Symbol& m, double s) {
    return Symbol(m.name() + "*" + std::to_string(s), [m, s](const vec2& x) -> cvec2 {
        auto v = m(x);
        return {s * v[0], s * v[1]};
    });
}

inline Symbol sum(const Symbol& a, const Symbol& b) {
    return Symbol(a.name() + "+" + b.name(), [a, b](const vec2& x) -> cvec2 {
        auto u = a(x), v = b(x);
        return {u[0] + v[0], u[1] + v[1]};
    });
}

inline std::pair<Symbol, Symbol> even_odd_split(const Symbol& m) {
    Symbol even(m.name() + ":even", [m](const vec2& x) -> cvec2 {
        auto p = m(x), q = m(vec2{-x[0], -x[1]});
        return {0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])};
    });
    Symbol odd(m.name() + ":odd", [m](const vec2& x) -> cvec2 {
        auto p = m(x), q = m(vec2{-x[0], -x[1]});
        return {0.5 * (p[0] - q[0]), 0.5 * (p[1] - q[1])};
    });
    return {even, odd};
}

struct SymbolFlags {
    bool real_condition = true;     // m(-xi) = conj m(xi)
    bool divergence_free = true;    // xi . m(xi) = 0
    bool homogeneous = true;        // m(s xi) = m(xi)
    bool odd = true;                // m(-xi) = -m(xi)
    bool even = true;               // m(-xi) = m(xi)
    double worst_real = 0, worst_div = 0, worst_hom = 0;
};

// Flag predicates checked on random nonzero frequencies.
inline SymbolFlags check_flags(const Symbol& m, int samples = 1000, unsigned seed = 12345,
                               double tol = 1e-12) {
    SymbolFlags f;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> us(0.01, 100.0);
    for (int k = 0; k < samples; ++k) {
        vec2 x{nd(rng), nd(rng)};
        if (norm2(x) < 1e-8) continue;
        auto p = m(x), q = m(vec2{-x[0], -x[1]});
        double s = us(rng);
        auto r = m(vec2{s * x[0], s * x[1]});
        double mag = std::sqrt(std::norm(p[0]) + std::norm(p[1]));
        double re = std::max(std::abs(q[0] - std::conj(p[0])), std::abs(q[1] - std::conj(p[1])));
        double dv = std::abs(x[0] * p[0] + x[1] * p[1]) / std::max(mag * norm2(x), 1e-300);
        if (mag == 0) dv = 0;
        double hm = std::max(std::abs(r[0] - p[0]), std::abs(r[1] - p[1]));
        double od = std::max(std::abs(q[0] + p[0]), std::abs(q[1] + p[1]));
        double ev = std::max(std::abs(q[0] - p[0]), std::abs(q[1] - p[1]));
        f.worst_real = std::max(f.worst_real, re);
        f.worst_div = std::max(f.worst_div, dv);
        f.worst_hom = std::max(f.worst_hom, hm);
        if (re > tol) f.real_condition = false;
        if (dv > tol) f.divergence_free = false;
        if (hm > tol) f.homogeneous = false;
        if (od > tol * std::max(1.0, mag)) f.odd = false;
        if (ev > tol * std::max(1.0, mag)) f.even = false;
    }
    return f;
}

// Linearly independent pair A = m(xi1)+m(-xi1), B = m(xi2)+m(-xi2).
struct DirectionPair {
    std::array<int, 2> xi1{}, xi2{};
    vec2 A{}, B{};
    double det = 0;
    std::array<vec2, 2> inv_rows{};  // rows of [A|B]^-1

    // coefficients (c_A, c_B) with c_A A + c_B B = R
    std::array<double, 2> decompose(const vec2& R) const {
        return {dot(inv_rows[0], R), dot(inv_rows[1], R)};
    }
};

inline DirectionPair make_pair(std::array<int, 2> xi1, std::array<int, 2> xi2, vec2 A, vec2 B) {
    DirectionPair p;
    p.xi1 = xi1;
    p.xi2 = xi2;
    p.A = A;
    p.B = B;
    p.det = A[0] * B[1] - A[1] * B[0];
    if (std::abs(p.det) <= 1e-10 * std::max(1.0, norm2(A) * norm2(B)))
        throw SingularPair("A and B are not linearly independent");
    // [A|B] = [[A0, B0], [A1, B1]]
    p.inv_rows[0] = {B[1] / p.det, -B[0] / p.det};
    p.inv_rows[1] = {-A[1] / p.det, A[0] / p.det};
    return p;
}

// Deterministic search on the lattice ball: one representative per +-xi
// (upper half plane, positive xi1 axis), ordered by |xi|^2 then by angle in
// [0, pi); the pair maximising |det[A|B]| wins, earlier pairs win ties.
inline DirectionPair select_direction_pair(const Symbol& m, int search_radius = 2) {
    struct Cand {
        std::array<int, 2> xi;
        int r2;
        double angle;
        vec2 a;
    };
    std::vector<Cand> cands;
    double amax = 0;
    for (int a = -search_radius; a <= search_radius; ++a)
        for (int b = 0; b <= search_radius; ++b) {
            if (b == 0 && a <= 0) continue;
            int r2 = a * a + b * b;
            if (r2 > search_radius * search_radius) continue;
            vec2 x{double(a), double(b)};
            auto p = m(x), q = m(vec2{-x[0], -x[1]});
            cplx s0 = p[0] + q[0], s1 = p[1] + q[1];
            double scale = std::max({1.0, std::abs(s0), std::abs(s1)});
            if (std::abs(s0.imag()) > 1e-10 * scale || std::abs(s1.imag()) > 1e-10 * scale)
                throw UnsupportedSymbol("even part of " + m.name() + " is not real; reality condition fails");
            Cand c{{a, b}, r2, std::atan2(double(b), double(a)), {s0.real(), s1.real()}};
            amax = std::max(amax, norm2(c.a));
            cands.push_back(c);
        }
    if (amax <= 1e-10)
        throw OddMultiplier(m.name() + " has vanishing even part; no construction is possible for odd multipliers");
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.r2 != y.r2) return x.r2 < y.r2;
        return x.angle < y.angle;
    });
    double best = 0;
    int bi = -1, bj = -1;
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
            double d = std::abs(cands[i].a[0] * cands[j].a[1] - cands[i].a[1] * cands[j].a[0]);
            if (d > best * (1 + 1e-12) && d > 1e-10 * amax * amax) {
                best = d;
                bi = int(i);
                bj = int(j);
            }
        }
    if (bi < 0)
        throw SingularPair("even part of " + m.name() + " has one-dimensional image on the search ball");
    return make_pair(cands[bi].xi, cands[bj].xi, cands[bi].a, cands[bj].a);
}

struct ConstructionConstants {
    double Z_dec = 0;       // sup over unit stress of |c_tilde + c_J| / e_R, worst tag
    double K0 = 0;          // 2 Z_dec
    double K1 = 0;          // max(1, coefficient form, vector form)
    double K1_coeff = 0;    // max row norm of [A|B]^-1
    double K1_vector = 0;   // max(|A| |row1|, |B| |row2|)
    double z_dec_A = 0, z_dec_B = 0;
};

inline ConstructionConstants decomposition_constants(const DirectionPair& p) {
    ConstructionConstants c;
    double r1 = norm2(p.inv_rows[0]), r2 = norm2(p.inv_rows[1]);
    c.K1_coeff = std::max(r1, r2);
    c.K1_vector = std::max(norm2(p.A) * r1, norm2(p.B) * r2);
    c.K1 = std::max({1.0, c.K1_coeff, c.K1_vector});
    // |c_tilde| <= e_R and |R| <= e_J <= e_R; the coefficient along the
    // active vector adds |row| e_R.
    c.z_dec_A = 1 + r1;
    c.z_dec_B = 1 + r2;
    c.Z_dec = std::max(c.z_dec_A, c.z_dec_B);
    c.K0 = 2 * c.Z_dec;
    return c;
}

} // namespace sf
