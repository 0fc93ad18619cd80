#pragma once

#include "spectral_ops.hpp"
#include "time_series.hpp"

namespace sf {

enum class VectorTag { A, B };

inline const char* tag_name(VectorTag t) { return t == VectorTag::A ? "A" : "B"; }
inline VectorTag other(VectorTag t) { return t == VectorTag::A ? VectorTag::B : VectorTag::A; }

// d_t theta + div(theta u) = div(c V + R), V the tagged vector of the pair,
// stored on the slices of a uniform time window. u = T[theta] is not stored.
struct CompoundState {
    TimeAxis axis;
    std::vector<Field> theta, c;
    std::vector<VectorField> R;
    VectorTag tag = VectorTag::A;
    double I_lo = 0, I_hi = 0;    // support interval of (c, R)

    const Grid& grid() const { return theta.at(0).grid; }
    int slices() const { return axis.count; }

    static CompoundState zero(const Grid& g, const TimeAxis& ax, double lo, double hi) {
        CompoundState s;
        s.axis = ax;
        s.theta.assign(ax.count, Field(g));
        s.c.assign(ax.count, Field(g));
        s.R.assign(ax.count, zero_vector(g));
        s.I_lo = lo;
        s.I_hi = hi;
        return s;
    }

    void check_shape() const {
        const int n = axis.count;
        if (int(theta.size()) != n || int(c.size()) != n || int(R.size()) != n)
            throw SizeMismatch("state slices do not match the time axis");
    }

    // largest |c| + |R| on slices outside [I_lo, I_hi]
    double support_violation() const {
        double m = 0;
        for (int i = 0; i < axis.count; ++i) {
            double t = axis.t(i);
            if (t >= I_lo - 1e-12 && t <= I_hi + 1e-12) continue;
            m = std::max({m, sup(c[i]), sup(R[i])});
        }
        return m;
    }
};

inline VectorField velocity(const Field& theta, const Symbol& sym) { return apply_multiplier(theta, sym); }

// ---- frequency and energy levels ----

struct FrequencyEnergyLevels {
    double Xi = 2, e_v = 1, e_R = 1, e_J = 1;
    int L = 2;

    void validate() const {
        if (!(Xi >= 2)) throw ScheduleError("levels need Xi >= 2");
        if (!(e_J > 0 && e_J <= e_R * (1 + 1e-12) && e_R <= e_v * (1 + 1e-12)))
            throw ScheduleError("levels need 0 < e_J <= e_R <= e_v");
        if (L < 1) throw ScheduleError("order L must be >= 1");
    }
};

// sup_x |grad^k f| with the full (ordered-index) derivative tensor, k <= 2
inline double derivative_norm(const Field& f, int k) {
    if (k == 0) return sup(f);
    if (k == 1) return sup(gradient(f));
    if (k == 2) {
        auto h = hessian(f);
        double m = 0;
        for (std::size_t p = 0; p < f.size(); ++p)
            m = std::max(m, std::sqrt(h[0].v[p] * h[0].v[p] + 2 * h[1].v[p] * h[1].v[p] + h[2].v[p] * h[2].v[p]));
        return m;
    }
    throw ScheduleError("derivative_norm supports k <= 2");
}

inline double derivative_norm(const VectorField& u, int k) {
    if (k == 0) return sup(u);
    double a = derivative_norm(u[0], k), b = derivative_norm(u[1], k);
    return std::sqrt(a * a + b * b);
}

// (d_t + u.grad) f at slice i with the shared time stencil
inline Field advective_derivative(const std::vector<Field>& f, const TimeAxis& ax, int i, const VectorField& u) {
    Field d = ddt(f, ax, i);
    VectorField g = gradient(f[i]);
    for (std::size_t p = 0; p < d.size(); ++p) d.v[p] += u[0].v[p] * g[0].v[p] + u[1].v[p] * g[1].v[p];
    return d;
}

// One Def.-style bound Q <= Xi^power * E; the smallest admissible Xi.
struct LevelBound {
    std::string name;
    int power = 0;
    double measured = 0, energy = 0;
    double xi_needed() const {
        if (measured <= 0) return 0;
        if (power == 0) return measured <= energy * (1 + 1e-12) ? 0 : INFINITY;
        return std::pow(measured / energy, 1.0 / power);
    }
};

struct LevelMeasurement {
    std::vector<LevelBound> bounds;
    double Xi = 2;     // smallest Xi >= 2 meeting every bound with power > 0
    bool zero_order_ok = true;
};

// Measures the derivative and advective-derivative norms of a state (on the
// slices in `which`, all slices if empty) and the smallest Xi with which the
// level bounds hold for the given energies.
inline LevelMeasurement measure_levels(const CompoundState& s, const Symbol& sym, double e_v, double e_R, double e_J,
                                       int L = 2, std::vector<int> which = {}) {
    s.check_shape();
    if (which.empty())
        for (int i = 0; i < s.slices(); ++i) which.push_back(i);
    const int n = s.slices();
    std::vector<double> th(L + 1), uu(L + 1), ca(L + 1), rj(L + 1), dtu(L), dtc(L), dtr(L);
    // u is needed on neighbouring slices for its time derivative
    std::vector<VectorField> u(n);
    std::vector<char> need(n, 0);
    for (int i : which)
        for (auto [j, w] : ddt_stencil(s.axis, i)) need[j] = 1;
    for (int i : which) need[i] = 1;
    for (int i = 0; i < n; ++i)
        if (need[i]) u[i] = velocity(s.theta[i], sym);
    for (int i : which) {
        for (int k = 0; k <= L && k <= 2; ++k) {
            th[k] = std::max(th[k], derivative_norm(s.theta[i], k));
            uu[k] = std::max(uu[k], derivative_norm(u[i], k));
            ca[k] = std::max(ca[k], derivative_norm(s.c[i], k));
            rj[k] = std::max(rj[k], derivative_norm(s.R[i], k));
        }
        // advective derivatives
        VectorField Du = zero_vector(s.grid());
        {
            auto st = ddt_stencil(s.axis, i);
            for (int c = 0; c < 2; ++c) {
                Field d(s.grid());
                for (auto [j, w] : st)
                    for (std::size_t p = 0; p < d.size(); ++p) d.v[p] += w * u[j][c].v[p];
                VectorField g = gradient(u[i][c]);
                for (std::size_t p = 0; p < d.size(); ++p)
                    d.v[p] += u[i][0].v[p] * g[0].v[p] + u[i][1].v[p] * g[1].v[p];
                Du[c] = d;
            }
        }
        Field Dc = advective_derivative(s.c, s.axis, i, u[i]);
        VectorField DR;
        for (int c = 0; c < 2; ++c) {
            Field d = apply_stencil(ddt_stencil(s.axis, i), [&](int j) -> const Field& { return s.R[j][c]; });
            VectorField g = gradient(s.R[i][c]);
            for (std::size_t p = 0; p < d.size(); ++p) d.v[p] += u[i][0].v[p] * g[0].v[p] + u[i][1].v[p] * g[1].v[p];
            DR[c] = d;
        }
        for (int k = 0; k < L && k <= 2; ++k) {
            dtu[k] = std::max(dtu[k], derivative_norm(Du, k));
            dtc[k] = std::max(dtc[k], derivative_norm(Dc, k));
            dtr[k] = std::max(dtr[k], derivative_norm(DR, k));
        }
    }
    LevelMeasurement m;
    const double sv = std::sqrt(e_v);
    for (int k = 1; k <= std::min(L, 2); ++k) m.bounds.push_back({"grad^" + std::to_string(k) + " (theta, u)", k, th[k] + uu[k], sv});
    for (int k = 0; k < std::min(L, 3); ++k) m.bounds.push_back({"grad^" + std::to_string(k) + " Dt u", k + 1, dtu[k], e_v});
    for (int k = 0; k <= std::min(L, 2); ++k) m.bounds.push_back({"grad^" + std::to_string(k) + " c", k, ca[k], e_R});
    for (int k = 0; k < std::min(L, 3); ++k) m.bounds.push_back({"grad^" + std::to_string(k) + " Dt c", k + 1, dtc[k], sv * e_R});
    for (int k = 0; k <= std::min(L, 2); ++k) m.bounds.push_back({"grad^" + std::to_string(k) + " R", k, rj[k], e_J});
    for (int k = 0; k < std::min(L, 3); ++k) m.bounds.push_back({"grad^" + std::to_string(k) + " Dt R", k + 1, dtr[k], sv * e_J});
    m.Xi = 2;
    for (const auto& b : m.bounds) {
        if (b.power == 0) {
            m.zero_order_ok = m.zero_order_ok && b.xi_needed() == 0;
            continue;
        }
        m.Xi = std::max(m.Xi, b.xi_needed());
    }
    return m;
}

} // namespace sf
