#pragma once

#include <map>
#include <optional>

#include <json.hpp>

#include "diagnostics.hpp"
#include "energy.hpp"
#include "phase.hpp"
#include "regularization.hpp"

namespace sf {

// ---- step parameters ----

struct StepParameters {
    double N = 1, b = 1, B_lambda = 1, tau = 0, tau_hat = 0, e_J_next = 0;
    int lambda = 1;
};

inline StepParameters step_parameters(const FrequencyEnergyLevels& lv, double N, double B_lambda) {
    lv.validate();
    const double Nmin = std::pow(lv.e_v / lv.e_R, 1.5);
    if (N < Nmin * (1 - 1e-12)) throw ScaleInvariant("N must be at least (e_v/e_R)^{3/2}");
    if (!(B_lambda > 0)) throw ScaleInvariant("B_lambda must be positive");
    StepParameters p;
    p.N = N;
    p.B_lambda = B_lambda;
    p.tau_hat = 1.0 / (lv.Xi * std::sqrt(lv.e_v));
    p.b = std::sqrt(std::sqrt(lv.e_v) / (std::sqrt(lv.e_R) * N));
    p.lambda = int(std::ceil(B_lambda * N * lv.Xi - 1e-9));
    p.tau = p.b * p.tau_hat / std::sqrt(B_lambda);
    p.e_J_next = p.b * lv.e_R;
    return p;
}

// ---- waves on one slice ----

struct SliceWaves {
    std::vector<int> ks;
    std::vector<CField> Theta_k;          // Theta_(k,+)
    std::vector<CVectorField> U_k;        // T[Theta_(k,+)]
    Field Theta;                          // sum over +- of Theta_I
    VectorField U;
};

inline void require_wave_resolution(const Grid& g, int lambda, const std::array<int, 2>& dir) {
    double r = 40.0 * lambda * norm2(vec2{double(dir[0]), double(dir[1])});
    if (r >= g.n() / 2.0)
        throw BandUnresolved("lambda = " + std::to_string(lambda) + " needs 40 lambda |xi| = " + std::to_string(r) +
                             " < n/2 = " + std::to_string(g.n() / 2));
}

// Theta_I = P_I[e^{i lambda xi_I} theta_I], U_I = T[Theta_I]; the (k,-)
// waves are the conjugates, so Theta = sum_k 2 Re Theta_(k,+).
inline SliceWaves assemble_waves(const SliceAmplitudes& a, const std::map<int, PhaseFunction>& phases, int slice,
                                 int lambda, const std::array<int, 2>& dir, const Symbol& sym) {
    const Grid& g = a.eps.grid;
    SliceWaves w;
    w.Theta = Field(g);
    w.U = zero_vector(g);
    const auto& tab = sym.table(g);
    for (std::size_t j = 0; j < a.ks.size(); ++j) {
        int k = a.ks[j];
        const PhaseFunction& ph = phases.at(k);
        BandSpec band = BandSpec::wave(lambda, dir, k, 1);
        band.require_resolved(g);
        WavePacket p = ph.packet(slice, to_complex(a.theta[j]), lambda);
        Spectrum s = project_band(fft(mul(phase_factor(p), p.amplitude)), band);
        Spectrum u0(g), u1(g);
        for (std::size_t q = 0; q < s.c.size(); ++q) {
            u0.c[q] = tab[q][0] * s.c[q];
            u1.c[q] = tab[q][1] * s.c[q];
        }
        CField Th = ifft(s);
        CVectorField U{ifft(u0), ifft(u1)};
        for (std::size_t q = 0; q < g.size(); ++q) {
            w.Theta.v[q] += 2 * Th.v[q].real();
            w.U[0].v[q] += 2 * U[0].v[q].real();
            w.U[1].v[q] += 2 * U[1].v[q].real();
        }
        w.ks.push_back(k);
        w.Theta_k.push_back(std::move(Th));
        w.U_k.push_back(std::move(U));
    }
    return w;
}

// W with div W = Theta (W = grad Delta^-1 Theta)
inline VectorField wave_potential(const Field& Theta) { return grad_inv_laplacian(fft(Theta)); }

// ---- report ----

struct StepAttempt {
    double B_lambda = 0;
    int lambda = 0;
    double R1 = -1;
    std::string status;
};

struct StepReport {
    int stage = 0;
    std::string tag_in, tag_out;
    FrequencyEnergyLevels levels;
    StepParameters params;
    double K0 = 0, K1 = 0, energy_unit = 0;
    MollificationScales scales;
    int B_doublings = 0;
    bool mollify_capped = false, mollify_targets_met = false;
    double theta_err = 0, u_err = 0, c_err = 0, R_err = 0, state_target = 0, stress_target = 0;
    double eps_max = 0, amplitude_identity_err = 0;
    double norm_RT = 0, norm_RL = 0, norm_RH = 0, norm_RS = 0, norm_RM = 0, norm_RMprime = 0, norm_R1 = 0;
    double norm_RJ_in = 0, norm_c_in = 0, norm_c_out = 0, c_out_bound = 0;
    double energy_increment_worst = 0, energy_increment_bound_worst = 0;   // ratio |...| / bound, worst slice
    bool energy_increment_ok = true;
    double pre_delta_sum_rel = 0, pre_delta_plancherel_rel = 0;
    double self_interference_max = 0;
    bool band_disjoint = true;
    double annulus_leak_max = 0;
    double delta_theta_max = 0, delta_u_max = 0;
    double ratio_Theta = 0, ratio_gradTheta = 0, ratio_DtTheta = 0, ratio_W = 0, divW_err = 0;
    double norm_Theta = 0, norm_W = 0;
    double phase_drift_max = 0;
    int waves = 0;
    double profile_M1 = 0, profile_M2 = 0;
    double mean_drift = 0;
    double support_lo = 0, support_hi = 0;
    DefectReport defect;
    bool defect_checked = false;
    std::vector<StepAttempt> attempts;
    bool lambda_capped = false, target_met = false;
    std::string note;
};

inline nlohmann::json to_json(const StepReport& r) {
    using nlohmann::json;
    json a = json::array();
    for (const auto& t : r.attempts)
        a.push_back({{"B_lambda", t.B_lambda}, {"lambda", t.lambda}, {"R1", t.R1}, {"status", t.status}});
    return {
        {"stage", r.stage},
        {"tag_in", r.tag_in},
        {"tag_out", r.tag_out},
        {"levels", {{"Xi", r.levels.Xi}, {"e_v", r.levels.e_v}, {"e_R", r.levels.e_R}, {"e_J", r.levels.e_J}, {"L", r.levels.L}}},
        {"parameters",
         {{"N", r.params.N}, {"b", r.params.b}, {"B_lambda", r.params.B_lambda}, {"lambda", r.params.lambda},
          {"tau", r.params.tau}, {"tau_hat", r.params.tau_hat}, {"e_J_next", r.params.e_J_next}, {"K0", r.K0},
          {"K1", r.K1}, {"energy_unit", r.energy_unit}}},
        {"mollification",
         {{"B", r.scales.B}, {"eps_theta", r.scales.eps_theta}, {"eps_x", r.scales.eps_x}, {"eps_t", r.scales.eps_t},
          {"q", r.scales.q}, {"B_doublings", r.B_doublings}, {"capped", r.mollify_capped},
          {"targets_met", r.mollify_targets_met}, {"theta_err", r.theta_err}, {"u_err", r.u_err},
          {"c_err", r.c_err}, {"R_err", r.R_err}, {"state_target", r.state_target},
          {"stress_target", r.stress_target}}},
        {"amplitudes", {{"eps_max", r.eps_max}, {"identity_err", r.amplitude_identity_err}, {"waves", r.waves},
                        {"profile_M1", r.profile_M1}, {"profile_M2", r.profile_M2}}},
        {"stress",
         {{"R_T", r.norm_RT}, {"R_L", r.norm_RL}, {"R_H", r.norm_RH}, {"R_S", r.norm_RS}, {"R_M", r.norm_RM},
          {"R_M_prime", r.norm_RMprime}, {"R_1", r.norm_R1}, {"R_J_in", r.norm_RJ_in}, {"c_in", r.norm_c_in},
          {"c_out", r.norm_c_out}, {"c_out_bound", r.c_out_bound}, {"target", r.params.e_J_next},
          {"target_met", r.target_met}, {"annulus_leak_max", r.annulus_leak_max}}},
        {"energy",
         {{"increment_worst", r.energy_increment_worst}, {"increment_ratio_worst", r.energy_increment_bound_worst},
          {"increment_ok", r.energy_increment_ok}, {"pre_delta_sum_rel", r.pre_delta_sum_rel},
          {"pre_delta_plancherel_rel", r.pre_delta_plancherel_rel}}},
        {"waves",
         {{"self_interference_max", r.self_interference_max}, {"band_disjoint", r.band_disjoint},
          {"delta_theta_max", r.delta_theta_max}, {"delta_u_max", r.delta_u_max},
          {"phase_drift_max", r.phase_drift_max}, {"ratio_Theta", r.ratio_Theta},
          {"ratio_gradTheta", r.ratio_gradTheta}, {"ratio_DtTheta", r.ratio_DtTheta}, {"ratio_W", r.ratio_W},
          {"Theta", r.norm_Theta}, {"W", r.norm_W}, {"divW_err", r.divW_err}}},
        {"defect",
         {{"checked", r.defect_checked}, {"hminus1", r.defect.hminus1}, {"relative", r.defect.relative},
          {"l2", r.defect.l2}, {"reference", r.defect.reference}}},
        {"mean_drift", r.mean_drift},
        {"support", {r.support_lo, r.support_hi}},
        {"attempts", a},
        {"lambda_capped", r.lambda_capped},
        {"note", r.note},
    };
}

// ---- regularisation with B auto-doubling ----

struct Regularization {
    MollificationScales scales;
    std::vector<VectorField> u_eps;
    RegularizedStress stress;
    double theta_err = 0, u_err = 0;
    int doublings = 0;
    bool capped = false, targets_met = false;
};

inline Regularization regularize(const CompoundState& s, const Symbol& sym, const FrequencyEnergyLevels& lv, double N,
                                 double B0, int max_doublings) {
    std::optional<Regularization> last;
    for (int d = 0; d <= max_doublings; ++d) {
        MollificationScales sc = compute_scales(lv, N, B0 * std::ldexp(1.0, d));
        try {
            require_low_pass_resolved(s.grid(), sc.q);
        } catch (const ResolutionError&) {
            if (!last) throw;
            last->capped = true;
            break;
        }
        Regularization r;
        r.scales = sc;
        r.doublings = d;
        r.u_eps.resize(s.slices());
        std::vector<double> te(s.slices()), ue(s.slices());
        parallel_for(std::size_t(s.slices()), [&](std::size_t i) {
            MollifiedState m = mollify_state(s.theta[i], sym, sc);
            r.u_eps[i] = std::move(m.u_eps);
            te[i] = m.theta_err;
            ue[i] = m.u_err;
        });
        for (int i = 0; i < s.slices(); ++i) {
            r.theta_err = std::max(r.theta_err, te[i]);
            r.u_err = std::max(r.u_err, ue[i]);
        }
        last.reset();   // release the previous attempt before the flow averages
        r.stress = regularize_stress(s.c, s.R, VelocityHistory(s.axis, r.u_eps), sc);
        r.targets_met = r.theta_err <= state_target(lv, N) && r.u_err <= state_target(lv, N) &&
                        r.stress.c_err <= stress_target(lv, N) && r.stress.R_err <= stress_target(lv, N);
        last = std::move(r);
        if (last->targets_met) break;
    }
    return std::move(*last);
}

// ---- the step ----

struct StepConfig {
    double N = 1;
    double B_lambda_init = 1;
    int max_lambda_doublings = 8;
    double B_init = 10;
    int max_B_doublings = 8;
    double energy_unit = -1;        // s in the profile; default e_R / K1
    PhaseOptions phase;
    bool check_defect = true;
    int delta_stride = 8;           // slices between microlocal error samples
};

struct StepResult {
    CompoundState state;
    StepReport report;
};

namespace detail {

struct AttemptOutput {
    std::vector<Field> theta1, c1;
    std::vector<VectorField> R1;
    StepReport rep;
};

inline AttemptOutput run_attempt(const CompoundState& s, const Symbol& sym, const DirectionPair& pair,
                                 const FrequencyEnergyLevels& lv, const StepParameters& P, const EnergyProfile& prof,
                                 const Regularization& reg, const StepConfig& cfg, StepReport base) {
    const Grid& g = s.grid();
    const TimeAxis& ax = s.axis;
    const int n = ax.count;
    const bool tagA = s.tag == VectorTag::A;
    const vec2 V = tagA ? pair.A : pair.B;
    const std::array<int, 2> dir = tagA ? pair.xi1 : pair.xi2;
    const vec2 row_J = tagA ? pair.inv_rows[0] : pair.inv_rows[1];
    const vec2 row_O = tagA ? pair.inv_rows[1] : pair.inv_rows[0];
    const int lambda = P.lambda;
    require_wave_resolution(g, lambda, dir);

    AttemptOutput out;
    StepReport& rep = out.rep;
    rep = base;
    rep.params = P;

    TimePartition part{P.tau};
    std::map<int, PhaseFunction> phases;
    if (!prof.zero()) {
        auto [k0, k1] = part.range(std::max(prof.lo(), ax.t0), std::min(prof.hi(), ax.t_end()));
        VelocityHistory uh(ax, reg.u_eps);
        for (int k = k0; k <= k1; ++k) {
            phases.emplace(k, solve_phase(uh, k, 1, dir, k * P.tau, 2 * P.tau / 3, cfg.phase));
            const auto& ph = phases.at(k);
            for (const auto& f : ph.xi)
                rep.phase_drift_max = std::max(rep.phase_drift_max, sup(gradient(f)) / norm2(ph.base_gradient()));
        }
        // consecutive waves live in disjoint frequency balls
        BandSpec b0 = BandSpec::wave(lambda, dir, 0, 1), b1 = BandSpec::wave(lambda, dir, 1, 1);
        rep.band_disjoint = norm2(b1.center) - b1.support > norm2(b0.center) + b0.support;
        if (!rep.band_disjoint) throw BandUnresolved("consecutive wave bands overlap");
    }

    out.theta1.resize(n);
    out.c1.resize(n);
    out.R1.resize(n);
    std::vector<Field> Theta(n);

    struct SliceStats {
        double eps = 0, amp = 0, RL = 0, RH = 0, RS = 0, RM = 0, RMp = 0, leak = 0, selfint = 0, dth = 0, du = 0;
        double inc = 0, inc_ratio = 0, pre_sum = 0, pre_pl = 0, Th = 0, gTh = 0, W = 0, divW = 0, c1 = 0;
        int waves = 0;
        bool inc_ok = true;
    };
    std::vector<SliceStats> st(n);
    const double area = two_pi * two_pi;
    const double sqrt_eR = std::sqrt(lv.e_R);

    // pass 1: everything except the transport error
    parallel_for(std::size_t(n), [&](std::size_t is) {
        const int i = int(is);
        const double t = ax.t(i);
        SliceStats& S = st[i];
        const Field& ct = reg.stress.c[i];
        const VectorField& Re = reg.stress.R[i];
        Field cJ(g), cO(g);
        for (std::size_t p = 0; p < g.size(); ++p) {
            vec2 r{Re[0].v[p], Re[1].v[p]};
            cJ.v[p] = dot(row_J, r);
            cO.v[p] = dot(row_O, r);
        }
        const double se = prof.sqrt_e(t);
        std::vector<std::pair<int, double>> etas;
        if (se > 0)
            for (int k : part.active(t)) etas.push_back({k, part.eta(k, t)});
        SliceAmplitudes amp = solve_amplitudes(se, etas, ct, cJ);
        S.eps = amp.eps_max;
        S.waves = int(amp.ks.size());
        // sum theta_k^2 = e (1 + eps)
        {
            double worst = 0, ssum = 0, rsum = 0;
            for (std::size_t p = 0; p < g.size(); ++p) {
                double sum = 0;
                for (const auto& th : amp.theta) sum += th.v[p] * th.v[p];
                double rhs = se * se * (1 + amp.eps.v[p]);
                worst = std::max(worst, std::abs(sum - rhs));
                ssum += sum;
                rsum += rhs;
            }
            S.amp = worst;
            if (rsum > 0) S.pre_sum = std::abs(2 * ssum - 2 * rsum) / (2 * rsum);
        }

        SliceWaves w = assemble_waves(amp, phases, i, lambda, dir, sym);
        const Field th_eps = mollify(s.theta[i], reg.scales.q);
        const VectorField u = velocity(s.theta[i], sym);
        const VectorField& ue = reg.u_eps[i];

        // pre-delta identity in Plancherel form: Theta0 = sum_I e^{i lambda xi_I} theta_I
        if (!amp.ks.empty()) {
            Field T0(g);
            double rsum = 0;
            for (std::size_t j = 0; j < amp.ks.size(); ++j) {
                CField E = phase_factor(phases.at(amp.ks[j]).packet(i, CField(g), lambda));
                for (std::size_t p = 0; p < g.size(); ++p) T0.v[p] += 2 * (E.v[p] * amp.theta[j].v[p]).real();
            }
            for (std::size_t p = 0; p < g.size(); ++p) rsum += 2 * se * se * (1 + amp.eps.v[p]);
            double lhs = 0;
            for (double x : T0.v) lhs += x * x;
            S.pre_pl = std::abs(lhs - rsum) / rsum;
        }

        // pairwise pieces
        Field ThU_diag0(g), ThU_diag1(g);     // sum_k 2 Re(Theta_k conj U_k)
        VectorField RS = zero_vector(g), RMp = zero_vector(g);
        for (std::size_t j = 0; j < w.ks.size(); ++j) {
            const PhaseFunction& ph = phases.at(w.ks[j]);
            const Field& th = amp.theta[j];
            const CField& Tk = w.Theta_k[j];
            const CVectorField& Uk = w.U_k[j];
            Field xi = ph.at(i);
            VectorField gx;
            if (!xi.v.empty()) gx = gradient(xi);
            const vec2 L = ph.base_gradient();
            cvec2 m0 = sym(L);
            for (std::size_t p = 0; p < g.size(); ++p) {
                vec2 G = L;
                cvec2 m = m0;
                if (!xi.v.empty()) {
                    G = {L[0] + gx[0].v[p], L[1] + gx[1].v[p]};
                    m = sym(G);
                }
                S.selfint = std::max(S.selfint, std::abs(m[0] * G[0] + m[1] * G[1]) / norm2(G));
                double th2 = th.v[p] * th.v[p];
                double d0 = 2 * (Tk.v[p] * std::conj(Uk[0].v[p])).real();
                double d1 = 2 * (Tk.v[p] * std::conj(Uk[1].v[p])).real();
                ThU_diag0.v[p] += d0;
                ThU_diag1.v[p] += d1;
                RS[0].v[p] += th2 * (2 * m[0].real() - V[0]);
                RS[1].v[p] += th2 * (2 * m[1].real() - V[1]);
                RMp[0].v[p] += d0 - 2 * th2 * m[0].real();
                RMp[1].v[p] += d1 - 2 * th2 * m[1].real();
            }
            if (cfg.delta_stride > 0 && i % cfg.delta_stride == 0) {
                WavePacket pk = ph.packet(i, to_complex(th), lambda);
                auto eb = expand_exact(BandSpec::wave(lambda, dir, w.ks[j], 1), pk);
                auto eu = expand_exact(sym, pk);
                S.dth = std::max(S.dth, sup(eb.error[0]));
                S.du = std::max({S.du, sup(eu.error[0]), sup(eu.error[1])});
            }
        }

        // R_L = grad Delta^-1 div(theta_eps U), R_H = grad Delta^-1 div(Theta U - diagonal)
        double leak = 0;
        VectorField RL = zero_vector(g), RH = zero_vector(g);
        if (!w.ks.empty()) {
            RL = inverse_divergence(divergence(scalar_times(th_eps, w.U)), lambda, &leak);
            S.leak = std::max(S.leak, leak);
            VectorField hi = scalar_times(w.Theta, w.U);
            hi[0] -= ThU_diag0;
            hi[1] -= ThU_diag1;
            RH = inverse_divergence(divergence(hi), lambda, &leak);
            S.leak = std::max(S.leak, leak);
        }
        // R_M = (u - u_eps) Theta + (theta - theta_eps) U + (c - c_tilde) V + (R_J - R_eps) + R_M'
        VectorField RM = scalar_times(w.Theta, u - ue) + scalar_times(s.theta[i] - th_eps, w.U) +
                         times_vector(s.c[i] - ct, V) + (s.R[i] - Re) + RMp;

        S.RL = sup(RL);
        S.RH = sup(RH);
        S.RS = sup(RS);
        S.RM = sup(RM);
        S.RMp = sup(RMp);
        out.R1[i] = RL + RH + RS + RM;
        out.c1[i] = std::move(cO);
        S.c1 = sup(out.c1[i]);

        // energy increment against the profile
        if (se > 0) {
            double e2 = 0;
            for (double x : w.Theta.v) e2 += x * x;
            e2 *= area / double(g.size());
            double ie = area * se * se;
            S.inc = std::abs(e2 / 2 - ie);
            double bound = ie / 2 + area * lv.e_R / P.N;
            S.inc_ratio = S.inc / bound;
            S.inc_ok = S.inc <= bound;
        }
        S.Th = sup(w.Theta);
        if (!w.ks.empty()) {
            S.gTh = sup(gradient(w.Theta));
            VectorField W = wave_potential(w.Theta);
            S.W = sup(W);
            S.divW = sup(divergence(W) - w.Theta);
        }
        out.theta1[i] = s.theta[i] + w.Theta;
        Theta[i] = std::move(w.Theta);
    });

    // pass 2: R_T = grad Delta^-1 [D_t Theta + div(u_eps Theta)] with the shared time stencil
    std::vector<double> rt(n), dtt(n);
    parallel_for(std::size_t(n), [&](std::size_t is) {
        const int i = int(is);
        Field dt = ddt(Theta, ax, i);
        if (sup(dt) == 0 && sup(Theta[i]) == 0) return;
        Field f = dt + divergence(scalar_times(Theta[i], reg.u_eps[i]));
        // the mean of f is roundoff of the stencil inputs, not of f itself
        double scale = 0;
        for (auto [j, w] : ddt_stencil(ax, i)) scale += std::abs(w) * sup(Theta[j]);
        Spectrum fs = fft(f);
        if (std::abs(fs.c[0]) > 1e-12 * std::max(scale, 1e-300))
            throw NonzeroMean("transport error has mean " + std::to_string(std::abs(fs.c[0])));
        fs.c[0] = 0;
        VectorField RT = grad_inv_laplacian(fs);
        rt[i] = sup(RT);
        out.R1[i] += RT;
        VectorField u = velocity(s.theta[i], sym);
        VectorField gT = gradient(Theta[i]);
        for (std::size_t p = 0; p < dt.size(); ++p) dt.v[p] += u[0].v[p] * gT[0].v[p] + u[1].v[p] * gT[1].v[p];
        dtt[i] = sup(dt);
    });

    const double sv = std::sqrt(lv.e_v);
    double mean0 = 0;
    for (int i = 0; i < n; ++i) {
        const SliceStats& S = st[i];
        rep.eps_max = std::max(rep.eps_max, S.eps);
        rep.amplitude_identity_err = std::max(rep.amplitude_identity_err, S.amp);
        rep.norm_RT = std::max(rep.norm_RT, rt[i]);
        rep.norm_RL = std::max(rep.norm_RL, S.RL);
        rep.norm_RH = std::max(rep.norm_RH, S.RH);
        rep.norm_RS = std::max(rep.norm_RS, S.RS);
        rep.norm_RM = std::max(rep.norm_RM, S.RM);
        rep.norm_RMprime = std::max(rep.norm_RMprime, S.RMp);
        rep.norm_R1 = std::max(rep.norm_R1, sup(out.R1[i]));
        rep.norm_c_out = std::max(rep.norm_c_out, S.c1);
        rep.annulus_leak_max = std::max(rep.annulus_leak_max, S.leak);
        rep.self_interference_max = std::max(rep.self_interference_max, S.selfint);
        rep.delta_theta_max = std::max(rep.delta_theta_max, S.dth);
        rep.delta_u_max = std::max(rep.delta_u_max, S.du);
        rep.energy_increment_worst = std::max(rep.energy_increment_worst, S.inc);
        rep.energy_increment_bound_worst = std::max(rep.energy_increment_bound_worst, S.inc_ratio);
        rep.energy_increment_ok = rep.energy_increment_ok && S.inc_ok;
        rep.pre_delta_sum_rel = std::max(rep.pre_delta_sum_rel, S.pre_sum);
        rep.pre_delta_plancherel_rel = std::max(rep.pre_delta_plancherel_rel, S.pre_pl);
        rep.ratio_Theta = std::max(rep.ratio_Theta, S.Th / sqrt_eR);
        rep.ratio_gradTheta = std::max(rep.ratio_gradTheta, S.gTh / (P.N * lv.Xi * sqrt_eR));
        rep.ratio_DtTheta = std::max(rep.ratio_DtTheta, dtt[i] / (lv.Xi * sv * sqrt_eR / P.b));
        rep.ratio_W = std::max(rep.ratio_W, S.W / (sqrt_eR / (lv.Xi * P.N)));
        rep.norm_W = std::max(rep.norm_W, S.W);
        rep.norm_Theta = std::max(rep.norm_Theta, S.Th);
        rep.divW_err = std::max(rep.divW_err, S.divW);
        rep.waves = std::max(rep.waves, S.waves);
        double m = mean(out.theta1[i]) - mean(s.theta[i]);
        if (i == 0) mean0 = m;
        rep.mean_drift = std::max(rep.mean_drift, std::abs(m));
    }
    (void)mean0;
    rep.target_met = rep.norm_R1 <= P.e_J_next;
    return out;
}

} // namespace detail

// One step of the construction: removes the V-component of the stress with
// waves oscillating along the matching direction, returns the state with
// the other vector and the new stress R_1 = R_T + R_L + R_H + R_S + R_M.
inline StepResult main_lemma_step(const CompoundState& s, const Symbol& sym, const DirectionPair& pair,
                                  const FrequencyEnergyLevels& lv, const StepConfig& cfg) {
    s.check_shape();
    lv.validate();
    if (s.slices() < 5) throw TimeRange("a step needs at least 5 time slices");
    const ConstructionConstants cc = decomposition_constants(pair);
    StepReport base;
    base.tag_in = tag_name(s.tag);
    base.tag_out = tag_name(other(s.tag));
    base.levels = lv;
    base.K0 = cc.K0;
    base.K1 = cc.K1;
    base.energy_unit = cfg.energy_unit >= 0 ? cfg.energy_unit : lv.e_R / cc.K1;
    for (int i = 0; i < s.slices(); ++i) {
        base.norm_RJ_in = std::max(base.norm_RJ_in, sup(s.R[i]));
        base.norm_c_in = std::max(base.norm_c_in, sup(s.c[i]));
    }
    base.c_out_bound = cc.K1 * lv.e_J;

    Regularization reg = regularize(s, sym, lv, cfg.N, cfg.B_init, cfg.max_B_doublings);
    base.scales = reg.scales;
    base.B_doublings = reg.doublings;
    base.mollify_capped = reg.capped;
    base.mollify_targets_met = reg.targets_met;
    base.theta_err = reg.theta_err;
    base.u_err = reg.u_err;
    base.c_err = reg.stress.c_err;
    base.R_err = reg.stress.R_err;
    base.state_target = state_target(lv, cfg.N);
    base.stress_target = stress_target(lv, cfg.N);

    StepParameters P0 = step_parameters(lv, cfg.N, cfg.B_lambda_init);
    // the time stencil of R_T reaches a few slices past supp e
    int reach = 0;
    for (auto [j, w] : ddt_stencil(s.axis, s.slices() / 2)) reach = std::max(reach, std::abs(j - s.slices() / 2));
    EnergyProfile prof =
        build_energy_profile(s.I_lo, s.I_hi, P0.tau_hat, base.energy_unit, cc.K0, reach * s.axis.dt);
    bool any_stress = base.norm_RJ_in > 0 || base.norm_c_in > 0;
    if (!any_stress) prof.level = 0;
    auto M = profile_derivative_constants(prof, lv.Xi, lv.e_v, lv.e_R);
    base.profile_M1 = M[0];
    base.profile_M2 = M[1];
    const double new_lo = s.I_lo - 4 * prof.tau_hat, new_hi = s.I_hi + 4 * prof.tau_hat;
    if (!prof.zero() && (new_lo < s.axis.t0 - 1e-12 || new_hi > s.axis.t_end() + 1e-12))
        throw TimeRange("new support [" + std::to_string(new_lo) + ", " + std::to_string(new_hi) +
                        "] leaves the stored window");

    std::vector<StepAttempt> attempts;
    std::optional<detail::AttemptOutput> last;
    int best = -1;
    double best_R1 = INFINITY;
    std::string last_error;
    const std::array<int, 2> dir = s.tag == VectorTag::A ? pair.xi1 : pair.xi2;
    bool capped = false;
    for (int d = 0; d <= cfg.max_lambda_doublings; ++d) {
        StepParameters P = step_parameters(lv, cfg.N, cfg.B_lambda_init * std::ldexp(1.0, d));
        StepAttempt at{P.B_lambda, P.lambda, -1, "ok"};
        try {
            require_wave_resolution(s.grid(), P.lambda, dir);
        } catch (const BandUnresolved& e) {
            if (d == 0) throw;
            at.status = std::string("BandUnresolved: ") + e.what();
            attempts.push_back(at);
            capped = true;
            break;
        }
        try {
            last.reset();
            last = detail::run_attempt(s, sym, pair, lv, P, prof, reg, cfg, base);
        } catch (const PhaseEscape& e) {
            at.status = std::string("PhaseEscape: ") + e.what();
            attempts.push_back(at);
            last_error = e.what();
            continue;
        }
        at.R1 = last->rep.norm_R1;
        attempts.push_back(at);
        if (at.R1 < best_R1) {
            best_R1 = at.R1;
            best = int(attempts.size()) - 1;
        }
        if (last->rep.target_met) break;
    }
    if (best < 0) throw PhaseEscape("no B_lambda attempt kept the phases close: " + last_error);
    if (!last || attempts[best].R1 != last->rep.norm_R1 || attempts[best].B_lambda != last->rep.params.B_lambda) {
        last.reset();
        last = detail::run_attempt(s, sym, pair, lv, step_parameters(lv, cfg.N, attempts[best].B_lambda), prof, reg,
                                   cfg, base);
    }
    StepResult res;
    res.report = std::move(last->rep);
    res.report.attempts = attempts;
    res.report.lambda_capped = capped || !res.report.target_met;
    if (!res.report.target_met)
        res.report.note = capped ? "stress target not reached before the grid resolution cap on lambda"
                                 : "stress target not reached within the B_lambda doubling budget";

    CompoundState& o = res.state;
    o.axis = s.axis;
    o.theta = std::move(last->theta1);
    o.c = std::move(last->c1);
    o.R = std::move(last->R1);
    o.tag = other(s.tag);
    if (prof.zero()) {
        o.I_lo = s.I_lo;
        o.I_hi = s.I_hi;
    } else {
        o.I_lo = new_lo;
        o.I_hi = new_hi;
    }
    res.report.support_lo = o.I_lo;
    res.report.support_hi = o.I_hi;
    last.reset();
    if (cfg.check_defect && o.slices() >= 3) {
        res.report.defect = residual_defect(o, sym, o.tag == VectorTag::A ? pair.A : pair.B);
        res.report.defect_checked = true;
    }
    return res;
}

} // namespace sf
