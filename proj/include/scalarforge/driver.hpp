#pragma once

#include <functional>

#include "schedule.hpp"
#include "step.hpp"

namespace sf {

// ---- seed ----

struct SeedState {
    CompoundState state;
    double e_J0 = 0;
    double mean_drift = 0;
    double Xi_bar = 2;
};

// R = grad Lap^-1 [d_t f + div(f u)], c = 0, vector A. The interval is the
// hull of the slices where f differs from its mean or R is nonzero.
inline SeedState init_from_function(const std::vector<Field>& f, const TimeAxis& ax, const Symbol& sym,
                                    double mean_tol = 1e-12) {
    if (int(f.size()) != ax.count) throw SizeMismatch("seed does not match its time axis");
    if (ax.count < 3) throw TimeRange("seed needs at least 3 slices");
    const Grid& g = f[0].grid;
    SeedState out;
    double m0 = mean(f[0]), scale = 0;
    for (const auto& s : f) scale = std::max(scale, sup(s));
    for (const auto& s : f) out.mean_drift = std::max(out.mean_drift, std::abs(mean(s) - m0));
    if (out.mean_drift > mean_tol * std::max(scale, 1.0))
        throw MeanDrift("integral of the seed changes in time by " + std::to_string(out.mean_drift));

    CompoundState& st = out.state;
    st = CompoundState::zero(g, ax, 0, 0);
    st.theta = f;
    st.tag = VectorTag::A;
    parallel_for(std::size_t(ax.count), [&](std::size_t is) {
        const int i = int(is);
        Spectrum src = fft(ddt(f, ax, i));
        Spectrum d = divergence_spectrum(scalar_times(f[i], velocity(f[i], sym)));
        for (std::size_t p = 0; p < src.c.size(); ++p) src.c[p] += d.c[p];
        src.c[0] = 0;   // the mean is conserved, the stencil only leaves roundoff here
        st.R[i] = grad_inv_laplacian(src);
    });
    int lo = -1, hi = -1;
    for (int i = 0; i < ax.count; ++i) {
        out.e_J0 = std::max(out.e_J0, sup(st.R[i]));
        double dev = 0;
        for (double v : f[i].v) dev = std::max(dev, std::abs(v - m0));
        if (dev > 0 || sup(st.R[i]) > 0) {
            if (lo < 0) lo = i;
            hi = i;
        }
    }
    if (lo < 0) lo = hi = ax.count / 2;
    st.I_lo = ax.t(lo);
    st.I_hi = ax.t(hi);
    if (out.e_J0 > 0) out.Xi_bar = measure_levels(st, sym, out.e_J0, out.e_J0, out.e_J0, 2).Xi;
    return out;
}

// ---- the outer loop ----

struct DriverConfig {
    double alpha = 0.1;
    rational Z = 64, Y = 1, C0 = 2;
    rational K1 = 0;             // 0: take K1 from the direction pair
    int k_max = 2;
    double N_override = 0;       // > 0: use this N (at least (e_v/e_R)^{3/2}) instead of the schedule's
    StepConfig step;
    std::vector<Field> probe;    // optional test function phi for the weak pairing, one field per slice
};

struct StageRecord {
    int k = 0;
    FrequencyEnergyLevels levels;
    double N = 0;
    StepReport report;
    double R_J_in = 0, R_J_out = 0, c_out = 0;
    double ratio = 0, scheduled_ratio = 0;   // ||R_J,k+1|| / ||R_J,k|| and e_J,k+1 / e_J,k
    double mean_dev = 0;                     // max |mean theta_k+1 - mean f| over slices
    double energy_variation = 0;             // (max E - min E) / max E over the window
    double C0 = 0;                           // |grad Theta| / (|Theta| N Xi)
    double interval_lo = 0, interval_hi = 0;
    double scheduled_lo = 0, scheduled_hi = 0;
    double pairing = 0, pairing_bound = 0;
};

struct RunResult {
    IterationSchedule schedule;
    SeedState seed;
    std::vector<StageRecord> stages;
    CompoundState state;                 // last stage
    std::vector<double> energy, mean;    // E(t), mean(t) of the last stage
    double C0_measured = 0;
    double holder_ratio_measured = 0;
    bool tags_alternate = true;
};

using StageObserver = std::function<void(const StageRecord&, const CompoundState&)>;

inline RunResult run(const SeedState& seed, const std::vector<Field>& f, const Symbol& sym, const DirectionPair& pair,
                     const DriverConfig& cfg, const StageObserver& observer = {}) {
    RunResult out;
    out.seed = seed;
    const ConstructionConstants cc = decomposition_constants(pair);
    ScheduleInputs in;
    in.e_J0 = seed.e_J0 > 0 ? rational(seed.e_J0) : rational(1);
    in.K1 = cfg.K1 > 0 ? cfg.K1 : rational(cc.K1);
    in.Z = cfg.Z;
    in.Y = cfg.Y;
    in.C0 = cfg.C0;
    in.Xi_bar = rational(seed.Xi_bar);
    in.alpha = cfg.alpha;
    in.k_max = cfg.k_max;
    in.I_lo = seed.state.I_lo;
    in.I_hi = seed.state.I_hi;
    out.schedule = build_schedule(in);
    out.state = seed.state;
    out.energy = energy_series(out.state.theta);
    out.mean = mean_series(out.state.theta);
    if (seed.e_J0 == 0) return out;   // nothing to remove

    const double f_mean = mean(f[0]);
    double Xi = to_double(out.schedule.stages[0].Xi);
    std::vector<double> w_norms;
    for (int k = 0; k < cfg.k_max; ++k) {
        const Stage& sc = out.schedule.stages[k];
        StageRecord rec;
        rec.k = k;
        rec.levels = sc.levels();
        rec.levels.Xi = Xi;
        const double Nmin = std::pow(rec.levels.e_v / rec.levels.e_R, 1.5);
        rec.N = cfg.N_override > 0 ? std::max(cfg.N_override, Nmin) : to_double(sc.N);
        rec.scheduled_ratio = 1 / to_double(in.Z);
        for (int i = 0; i < out.state.slices(); ++i) rec.R_J_in = std::max(rec.R_J_in, sup(out.state.R[i]));
        StepConfig scfg = cfg.step;
        scfg.N = rec.N;
        StepResult r;
        try {
            r = main_lemma_step(out.state, sym, pair, rec.levels, scfg);
        } catch (const Error& e) {
            throw Error(e.kind(), "stage " + std::to_string(k) + ": " + e.what());
        }
        rec.report = std::move(r.report);
        rec.report.stage = k;
        if (r.state.tag == out.state.tag) out.tags_alternate = false;
        out.state = std::move(r.state);
        rec.R_J_out = rec.report.norm_R1;
        rec.c_out = rec.report.norm_c_out;
        rec.ratio = rec.R_J_in > 0 ? rec.R_J_out / rec.R_J_in : 0;
        rec.interval_lo = out.state.I_lo;
        rec.interval_hi = out.state.I_hi;
        rec.scheduled_lo = sc.I_lo - 4 * sc.tau_hat;
        rec.scheduled_hi = sc.I_hi + 4 * sc.tau_hat;
        out.energy = energy_series(out.state.theta);
        out.mean = mean_series(out.state.theta);
        for (double m : out.mean) rec.mean_dev = std::max(rec.mean_dev, std::abs(m - f_mean));
        double emax = *std::max_element(out.energy.begin(), out.energy.end());
        double emin = *std::min_element(out.energy.begin(), out.energy.end());
        rec.energy_variation = emax > 0 ? (emax - emin) / emax : 0;
        w_norms.push_back(rec.report.norm_W);
        if (!cfg.probe.empty()) {
            WeakPairing wp = weak_pairing(out.state.axis, f, out.state.theta, cfg.probe, w_norms);
            rec.pairing = wp.pairing;
            rec.pairing_bound = wp.bound;
        }
        // Xi' = C0 N Xi with the configured C0; the C0 the corrections actually
        // show is reported next to it
        if (rec.report.ratio_Theta > 0) rec.C0 = rec.report.ratio_gradTheta / rec.report.ratio_Theta;
        out.C0_measured = std::max(out.C0_measured, rec.C0);
        Xi = to_double(in.C0) * rec.N * Xi;
        if (observer) observer(rec, out.state);
        out.stages.push_back(std::move(rec));
    }
    if (out.C0_measured > 0)
        out.holder_ratio_measured = std::pow(out.C0_measured, cfg.alpha) * std::pow(to_double(in.K1), 2 * cfg.alpha) *
                                    std::pow(to_double(in.Z), 4.5 * cfg.alpha - 0.5);
    return out;
}

inline nlohmann::json to_json(const StageRecord& s) {
    return {{"k", s.k},
            {"levels", {{"Xi", s.levels.Xi}, {"e_v", s.levels.e_v}, {"e_R", s.levels.e_R}, {"e_J", s.levels.e_J}}},
            {"N", s.N},
            {"R_J_in", s.R_J_in},
            {"R_J_out", s.R_J_out},
            {"c_out", s.c_out},
            {"ratio", s.ratio},
            {"scheduled_ratio", s.scheduled_ratio},
            {"mean_dev", s.mean_dev},
            {"energy_variation", s.energy_variation},
            {"C0", s.C0},
            {"interval", {s.interval_lo, s.interval_hi}},
            {"scheduled_interval", {s.scheduled_lo, s.scheduled_hi}},
            {"pairing", s.pairing},
            {"pairing_bound", s.pairing_bound},
            {"report", to_json(s.report)}};
}

inline nlohmann::json to_json(const RunResult& r) {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : r.stages) st.push_back(to_json(s));
    return {{"schedule", to_json(r.schedule)},
            {"seed",
             {{"e_J0", r.seed.e_J0},
              {"Xi_bar", r.seed.Xi_bar},
              {"mean_drift", r.seed.mean_drift},
              {"interval", {r.seed.state.I_lo, r.seed.state.I_hi}}}},
            {"stages", st},
            {"C0_measured", r.C0_measured},
            {"holder_ratio_measured", r.holder_ratio_measured},
            {"tags_alternate", r.tags_alternate}};
}

} // namespace sf
