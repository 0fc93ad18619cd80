// scalarforge: run / step / validate-microlocal / smooth-run / diagnose / glue
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "scalarforge/scalarforge.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
    std::string config, out, state;
    int threads = -1;
    long long seed = -1;
    int k_max = -1, resolution = -1;
    bool save_state = false;
    std::string symbol;
    std::vector<double> alphas{0.05, 0.1};
    std::vector<std::string> paths;
};

// Collects named checks; the exit code is 0 iff all of them pass.
struct Checks {
    json list = json::array();
    bool ok = true;

    void add(const std::string& name, bool pass, double value, double limit) {
        list.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"limit", limit}});
        ok = ok && pass;
    }
};

sf::ExperimentConfig configure(const Options& o) {
    sf::ExperimentConfig c = o.config.empty() ? sf::ExperimentConfig{} : sf::load_config(o.config);
    if (!o.out.empty()) c.output = o.out;
    if (o.seed >= 0) c.rng_seed = std::uint64_t(o.seed);
    if (o.k_max >= 0) c.k_max = o.k_max;
    if (o.resolution > 0) c.n = o.resolution;
    if (o.threads >= 0) c.threads = o.threads;
    sf::validate(c);
    sf::set_threads(c.threads);   // 0 falls back to SCALARFORGE_THREADS, then the hardware
    fs::create_directories(c.output);
    return c;
}

json levels_json(const sf::FrequencyEnergyLevels& l, double N) {
    return {{"Xi", l.Xi}, {"e_v", l.e_v}, {"e_R", l.e_R}, {"e_J", l.e_J}, {"N", N}};
}

// levels of the following stage: e_v' = e_R, e_R' = K1 e_J, e_J' = e_J / Z, Xi' = C0 N Xi
json next_levels(const sf::FrequencyEnergyLevels& l, double N, double K1, const sf::ExperimentConfig& c) {
    sf::FrequencyEnergyLevels nx = l;
    const double Z = sf::to_double(sf::parse_rational(c.Z));
    nx.e_v = l.e_R;
    nx.e_R = K1 * l.e_J;
    nx.e_J = l.e_J / Z;
    nx.Xi = sf::to_double(sf::parse_rational(c.C0)) * N * l.Xi;
    const double Nn = std::sqrt(nx.e_v / nx.e_R) * std::pow(nx.e_R / nx.e_J, 2) * Z * Z;
    return levels_json(nx, Nn);
}

std::vector<sf::Field> probe_series(const sf::ExperimentConfig& c, const sf::TimeAxis& ax) {
    if (c.probe.empty()) return {};
    return sf::sample_series(c, c.probe, ax);
}

void step_checks(Checks& ck, const std::string& pre, const sf::StepReport& r, double in_lo, double in_hi,
                 double lo, double hi) {
    if (r.defect_checked) ck.add(pre + "defect", r.defect.relative <= 1e-6, r.defect.relative, 1e-6);
    ck.add(pre + "amplitude_identity", r.amplitude_identity_err <= 1e-12, r.amplitude_identity_err, 1e-12);
    ck.add(pre + "energy_increment", r.energy_increment_ok, r.energy_increment_bound_worst, 1);
    ck.add(pre + "pre_delta_identity", r.pre_delta_sum_rel <= 1e-10, r.pre_delta_sum_rel, 1e-10);
    const double g = 4 * r.params.tau_hat;
    double err = std::max(std::abs(lo - (in_lo - g)), std::abs(hi - (in_hi + g)));
    ck.add(pre + "interval_growth", lo == in_lo - g && hi == in_hi + g, err, 0);
}

// ---- run ----

int cmd_run(const Options& o) {
    auto c = configure(o);
    auto sym = c.make_symbol();
    auto pair = sf::select_direction_pair(sym);
    auto f = sf::seed_series(c);
    auto ax = sf::seed_axis(c);
    auto seed = sf::init_from_function(f, ax, sym);
    auto dc = sf::driver_config(c);
    dc.probe = probe_series(c, ax);
    const double K1 = dc.K1 > 0 ? sf::to_double(dc.K1) : sf::decomposition_constants(pair).K1;

    Checks ck;
    json manifest = {{"command", "run"}, {"config", sf::to_json(c)}, {"stages", json::array()}};
    double in_lo = seed.state.I_lo, in_hi = seed.state.I_hi;
    auto observer = [&](const sf::StageRecord& rec, const sf::CompoundState& st) {
        const std::string name = "stage_" + std::to_string(rec.k) + ".json";
        sf::write_json(c.output + "/" + name, sf::to_json(rec));
        const std::string pre = "stage" + std::to_string(rec.k) + ".";
        step_checks(ck, pre, rec.report, in_lo, in_hi, rec.interval_lo, rec.interval_hi);
        ck.add(pre + "mean", rec.mean_dev <= 1e-13, rec.mean_dev, 1e-13);
        in_lo = rec.interval_lo;
        in_hi = rec.interval_hi;
        manifest["stages"].push_back({{"k", rec.k}, {"report", name}, {"R_J_in", rec.R_J_in},
                                      {"R_J_out", rec.R_J_out}, {"ratio", rec.ratio}});
        if (o.save_state) {
            json meta = {{"next", next_levels(rec.levels, rec.N, K1, c)}};
            sf::save_state(c.output + "/state_" + std::to_string(rec.k + 1), st, meta);
        }
        std::cerr << "stage " << rec.k << ": R_J " << rec.R_J_in << " -> " << rec.R_J_out << "\n";
    };
    try {
        auto res = sf::run(seed, f, sym, pair, dc, observer);
        json rj = sf::to_json(res);
        manifest["schedule"] = rj["schedule"];
        manifest["seed"] = rj["seed"];
        manifest["C0_measured"] = res.C0_measured;
        manifest["tags_alternate"] = res.tags_alternate;
        std::vector<double> t;
        for (int i = 0; i < res.state.slices(); ++i) t.push_back(res.state.axis.t(i));
        sf::write_csv(c.output + "/energy.csv", {"t", "E", "mean"}, {t, res.energy, res.mean});
        manifest["status"] = "ok";
    } catch (const sf::Error& e) {
        manifest["status"] = "error";
        manifest["error"] = {{"kind", e.kind()}, {"message", e.what()}};
        manifest["checks"] = ck.list;
        sf::write_json(c.output + "/manifest.json", manifest);
        throw;
    }
    manifest["checks"] = ck.list;
    sf::write_json(c.output + "/manifest.json", manifest);
    std::cout << json{{"status", "ok"}, {"checks_passed", ck.ok}, {"manifest", c.output + "/manifest.json"}} << "\n";
    return ck.ok ? 0 : 1;
}

// ---- step ----

int cmd_step(const Options& o) {
    auto c = configure(o);
    auto sym = c.make_symbol();
    auto pair = sf::select_direction_pair(sym);
    const auto cc = sf::decomposition_constants(pair);
    auto dc = sf::driver_config(c);
    const double K1 = dc.K1 > 0 ? sf::to_double(dc.K1) : cc.K1;

    sf::CompoundState st;
    json meta;
    if (o.state.empty()) {
        auto f = sf::seed_series(c);
        st = sf::init_from_function(f, sf::seed_axis(c), sym).state;
    } else {
        auto stored = sf::load_state(o.state);
        st = std::move(stored.state);
        meta = stored.meta;
    }
    if (st.grid().n() != c.n) throw sf::ConfigError("state grid differs from the configured grid");

    sf::FrequencyEnergyLevels lv;
    double N = 0;
    if (meta.contains("next")) {
        const auto& nx = meta["next"];
        lv = {nx.at("Xi").get<double>(), nx.at("e_v").get<double>(), nx.at("e_R").get<double>(),
              nx.at("e_J").get<double>(), 2};
        N = nx.at("N").get<double>();
    } else {
        double eJ = 0;
        for (const auto& r : st.R) eJ = std::max(eJ, sf::sup(r));
        if (eJ == 0) throw sf::ConfigError("state carries no stress; nothing to step");
        sf::ScheduleInputs in;
        in.e_J0 = eJ;
        in.K1 = K1;
        in.Z = dc.Z;
        in.Y = dc.Y;
        in.C0 = dc.C0;
        in.Xi_bar = sf::measure_levels(st, sym, eJ, eJ, eJ, 2).Xi;
        in.alpha = dc.alpha;
        in.k_max = 0;
        in.I_lo = st.I_lo;
        in.I_hi = st.I_hi;
        auto sch = sf::build_schedule(in);
        lv = sch.stages[0].levels();
        N = sf::to_double(sch.stages[0].N);
    }
    if (c.N > 0) N = std::max(c.N, std::pow(lv.e_v / lv.e_R, 1.5));
    sf::StepConfig scfg = dc.step;
    scfg.N = N;
    auto r = sf::main_lemma_step(st, sym, pair, lv, scfg);

    Checks ck;
    step_checks(ck, "", r.report, st.I_lo, st.I_hi, r.state.I_lo, r.state.I_hi);
    json meta_out = {{"next", next_levels(lv, N, K1, c)}};
    sf::save_state(c.output + "/state", r.state, meta_out);
    json rep = sf::to_json(r.report);
    rep["checks"] = ck.list;
    sf::write_json(c.output + "/step_report.json", rep);
    std::cout << json{{"status", "ok"}, {"checks_passed", ck.ok}, {"R_1", r.report.norm_R1},
                      {"state", c.output + "/state"}}
              << "\n";
    return ck.ok ? 0 : 1;
}

// ---- validate-microlocal ----

int cmd_microlocal(const Options& o) {
    auto c = configure(o);
    auto sym = c.make_symbol();
    sf::Grid g{c.microlocal.n};
    sf::Field phase = sf::sample(g, sf::Expression(c.microlocal.phase, {"x1", "x2"}));
    sf::CField amp = sf::to_complex(sf::sample(g, sf::Expression(c.microlocal.amplitude, {"x1", "x2"})));
    auto d = sf::decay_study(sym, c.microlocal.direction, phase, amp, c.microlocal.lambdas);

    std::vector<double> lam(d.lambdas.begin(), d.lambdas.end());
    std::vector<double> st(lam.size(), d.slope_theta), su(lam.size(), d.slope_u);
    sf::write_csv(c.output + "/decay.csv", {"lambda", "delta_theta", "delta_u", "slope_theta", "slope_u"},
                  {lam, d.dtheta, d.du, st, su});
    Checks ck;
    ck.add("slope_u", d.exact_u || (d.slope_u >= -1.3 && d.slope_u <= -0.7), d.slope_u, -1);
    json rep = {{"lambdas", d.lambdas},  {"delta_theta", d.dtheta},   {"delta_u", d.du},
                {"slope_theta", d.slope_theta}, {"slope_u", d.slope_u}, {"exact_theta", d.exact_theta},
                {"exact_u", d.exact_u},  {"checks", ck.list}};
    sf::write_json(c.output + "/decay.json", rep);
    std::cout << json{{"status", "ok"}, {"checks_passed", ck.ok}, {"slope_u", d.slope_u},
                      {"slope_theta", d.slope_theta}}
              << "\n";
    return ck.ok ? 0 : 1;
}

// ---- smooth-run ----

double rel_drift(const std::vector<double>& v) {
    double m = 0, s = std::abs(v.front());
    for (double x : v) m = std::max(m, std::abs(x - v.front()));
    return s > 0 ? m / s : m;
}

double variation(const std::vector<double>& v) {
    double hi = *std::max_element(v.begin(), v.end()), lo = *std::min_element(v.begin(), v.end());
    return hi > 0 ? (hi - lo) / hi : 0;
}

int cmd_smooth(const Options& o) {
    auto c = configure(o);
    auto sym = c.make_symbol();
    auto tr = sf::evolve(sf::smooth_initial(c), sym, c.smooth.solver);
    sf::sfld::save(c.output + "/trajectory.sfld", tr.theta);

    std::vector<double> t, E = sf::energy_series(tr.theta), M = sf::mean_series(tr.theta), H;
    for (int i = 0; i < tr.axis.count; ++i) t.push_back(tr.axis.t(i));
    const bool odd = sf::check_flags(sym).odd;
    if (odd) H = sf::hamiltonian_series(tr.theta, sym);
    sf::write_csv(c.output + "/conservation.csv", {"t", "E", "H", "mean"}, {t, E, H, M});

    Checks ck;
    if (c.smooth.solver.nu_h == 0) {
        const double span = std::max(1.0, c.smooth.solver.t_end);
        ck.add("energy_drift", rel_drift(E) <= 1e-8 * span, rel_drift(E), 1e-8 * span);
        if (odd) ck.add("hamiltonian_drift", rel_drift(H) <= 1e-6 * span, rel_drift(H), 1e-6 * span);
    }
    json rep = {{"axis", {{"t0", tr.axis.t0}, {"dt", tr.axis.dt}, {"count", tr.axis.count}}},
                {"steps", tr.steps},
                {"cfl", tr.cfl},
                {"warnings", tr.warnings},
                {"odd", odd},
                {"checks", ck.list}};
    sf::write_json(c.output + "/smooth_run.json", rep);
    std::cout << json{{"status", "ok"}, {"checks_passed", ck.ok}, {"snapshots", tr.axis.count}} << "\n";
    return ck.ok ? 0 : 1;
}

// ---- diagnose ----

json field_report(const sf::Field& f, const sf::Symbol* sym, const std::vector<double>& alphas) {
    auto n = sf::norms(f, alphas);
    json h = json::object(), hi = json::object();
    for (auto [a, v] : n.holder) h[std::to_string(a)] = v;
    for (auto [a, v] : n.holder_interpolation) hi[std::to_string(a)] = v;
    json r = {{"c0", n.c0}, {"grad_c0", n.grad_c0}, {"mean", sf::mean(f)}, {"energy", 0.5 * sf::integral(sf::mul(f, f))},
              {"holder", h}, {"holder_interpolation", hi}};
    if (sym) r["hamiltonian"] = sf::hamiltonian(f, *sym);
    return r;
}

int cmd_diagnose(const Options& o) {
    if (o.paths.empty()) throw sf::ConfigError("diagnose needs at least one snapshot path");
    sf::ExperimentConfig c = o.config.empty() ? sf::ExperimentConfig{} : sf::load_config(o.config);
    if (!o.symbol.empty()) c.symbol = o.symbol, c.m1.clear(), c.m2.clear();
    if (o.threads >= 0) c.threads = o.threads;
    sf::set_threads(c.threads);
    auto sym = c.make_symbol();
    const bool odd = sf::check_flags(sym).odd;

    json out = json::array();
    for (const auto& p : o.paths) {
        json item = {{"path", p}};
        if (fs::is_directory(p)) {
            auto stored = sf::load_state(p);
            const auto& s = stored.state;
            sf::vec2 V{0, 0};
            bool has_c = false;
            for (const auto& ci : s.c) has_c = has_c || sf::sup(ci) > 0;
            if (has_c) {
                auto pair = sf::select_direction_pair(sym);
                V = s.tag == sf::VectorTag::A ? pair.A : pair.B;
            }
            auto d = sf::residual_defect(s, sym, V);
            double R = 0, cs = 0;
            for (int i = 0; i < s.slices(); ++i) R = std::max(R, sf::sup(s.R[i])), cs = std::max(cs, sf::sup(s.c[i]));
            auto E = sf::energy_series(s.theta);
            item["state"] = {{"defect", {{"hminus1", d.hminus1}, {"relative", d.relative}, {"l2", d.l2}}},
                             {"R_c0", R},
                             {"c_c0", cs},
                             {"support_violation", s.support_violation()},
                             {"energy_variation", variation(E)}};
        } else {
            auto recs = sf::sfld::load(p);
            json rs = json::array();
            for (const auto& f : recs) rs.push_back(field_report(f, odd ? &sym : nullptr, o.alphas));
            item["records"] = rs;
            if (recs.size() > 1) {
                item["energy_drift"] = rel_drift(sf::energy_series(recs));
                if (odd) item["hamiltonian_drift"] = rel_drift(sf::hamiltonian_series(recs, sym));
            }
        }
        out.push_back(item);
    }
    json rep = {{"symbol", sym.name()}, {"reports", out}};
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        sf::write_json(o.out + "/diagnose.json", rep);
    }
    std::cout << rep.dump(2) << "\n";
    return 0;
}

// ---- glue ----

int cmd_glue(const Options& o) {
    auto c = configure(o);
    auto sym = c.make_symbol();
    const double T = c.glue_T;
    sf::SolverConfig sc = c.smooth.solver;
    sc.t_end = 2 * T;
    const int steps = int(std::llround(sc.t_end / sc.dt));
    if (sc.save_every <= 0) {
        // a stride dividing the step count, so the last snapshot lands on t = T
        int every = std::max(1, (steps + 255) / 256);
        while (steps % every) ++every;
        sc.save_every = every;
    }
    auto tr = sf::evolve(sf::smooth_initial(c), sym, sc);
    sf::TimeAxis ax = tr.axis;
    ax.t0 = -T;   // the equation is autonomous: shift the trajectory to (-T, T)
    auto s = sf::glue_solution(tr.theta, ax, sym, T);
    const double viol = sf::glue_support_violation(s, T);
    double R = 0;
    for (const auto& r : s.R) R = std::max(R, sf::sup(r));

    Checks ck;
    ck.add("support", viol == 0, viol, 0);
    ck.add("interval", s.support_violation() == 0, s.support_violation(), 0);
    sf::save_state(c.output + "/glued", s, {{"T", T}});
    json rep = {{"T", T}, {"slices", ax.count}, {"R_c0", R}, {"support_violation", viol}, {"checks", ck.list}};
    sf::write_json(c.output + "/glue.json", rep);
    std::cout << json{{"status", "ok"}, {"checks_passed", ck.ok}, {"R_c0", R}, {"state", c.output + "/glued"}} << "\n";
    return ck.ok ? 0 : 1;
}

void report_error(const std::string& kind, const std::string& msg) {
    std::cout << json{{"status", "error"}, {"error", {{"kind", kind}, {"message", msg}}}} << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scalarforge - convex-integration experiments for active scalar equations"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
        s->add_option("--out", o.out, "output directory");
        s->add_option("--threads", o.threads, "worker threads (0: SCALARFORGE_THREADS or hardware)");
        s->add_option("--seed", o.seed, "RNG seed");
        s->add_option("--k-max", o.k_max, "number of stages");
        s->add_option("--resolution", o.resolution, "grid size n");
    };
    auto* run = app.add_subcommand("run", "full iteration from the seed");
    common(run);
    run->add_flag("--save-state", o.save_state, "write the compound state after every stage");
    auto* step = app.add_subcommand("step", "one step on a stored state (or on the seed)");
    common(step);
    step->add_option("--state", o.state, "state directory from run --save-state or a previous step");
    auto* micro = app.add_subcommand("validate-microlocal", "decay of the microlocal errors in lambda");
    common(micro);
    auto* smooth = app.add_subcommand("smooth-run", "pseudo-spectral trajectory and conservation series");
    common(smooth);
    auto* diag = app.add_subcommand("diagnose", "norms, defect and Hamiltonian of snapshots or states");
    diag->add_option("paths", o.paths, "SFLD files or state directories")->required();
    diag->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    diag->add_option("--symbol", o.symbol, "symbol name (overrides the config)");
    diag->add_option("--alphas", o.alphas, "Hölder exponents");
    diag->add_option("--out", o.out, "also write diagnose.json here");
    diag->add_option("--threads", o.threads, "worker threads");
    auto* glue = app.add_subcommand("glue", "glue a smooth trajectory to its mean");
    common(glue);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        report_error("UsageError", e.what());
        return 2;
    }
    try {
        if (*run) return cmd_run(o);
        if (*step) return cmd_step(o);
        if (*micro) return cmd_microlocal(o);
        if (*smooth) return cmd_smooth(o);
        if (*diag) return cmd_diagnose(o);
        if (*glue) return cmd_glue(o);
    } catch (const sf::Error& e) {
        report_error(e.kind(), e.what());
        return 2;
    } catch (const std::exception& e) {
        report_error("InternalError", e.what());
        return 3;
    }
    return 2;
}
