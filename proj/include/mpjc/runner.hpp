#pragma once

#include "ensemble.hpp"
#include "scenario.hpp"
#include "tomography.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace mpjc {

// One output file, held in memory until the whole task has succeeded.
struct Artifact {
    std::string suffix;  // appended to the output prefix, e.g. "_g2.csv"
    std::string content;
};

struct RunResult {
    std::vector<Artifact> artifacts;
    std::string summary;  // single line for the terminal
    std::vector<std::string> warnings;
};

struct ManifestEntry {
    std::string file;
    std::size_t bytes = 0;
    std::string sha256;
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

namespace detail {

class Emitter {
public:
    Emitter(const Scenario& s, RunResult& r) : json_(s.get("run.format") == "json"), header_(s.header_lines()), r_(r) {}

    void series(const std::string& name, const CorrelationSeries& s) {
        for (const auto& w : s.warnings) r_.warnings.push_back(name + ": " + w);
        std::ostringstream os;
        if (json_) os << io::series_json(s, header_).dump(1) << '\n';
        else io::write_series_csv(os, s, header_);
        add(name, os.str());
    }
    void table(const std::string& name, const io::Table& t) {
        std::ostringstream os;
        if (json_) os << io::table_json(t, header_).dump(1) << '\n';
        else io::write_table_csv(os, t, header_);
        add(name, os.str());
    }
    void record(const std::string& name, const TrajectoryRecord& rec) {
        std::ostringstream os;
        if (json_) os << io::record_json(rec, header_).dump(1) << '\n';
        else io::write_record(os, rec, header_);
        add(name, os.str());
    }
    void wigner(const std::string& name, const WignerGrid& w) {
        for (const auto& s : w.warnings) r_.warnings.push_back(name + ": " + s);
        std::ostringstream os;
        if (json_) os << io::wigner_json(w, header_).dump(1) << '\n';
        else io::write_wigner_csv(os, w, header_);
        add(name, os.str());
    }
    void marginal(const std::string& name, const Marginal& m) {
        std::ostringstream os;
        if (json_) os << io::marginal_json(m, header_).dump(1) << '\n';
        else io::write_marginal_csv(os, m, header_);
        add(name, os.str());
    }

private:
    void add(const std::string& name, std::string content) {
        r_.artifacts.push_back({"_" + name + (json_ ? ".json" : ".csv"), std::move(content)});
    }

    bool json_;
    io::Header header_;
    RunResult& r_;
};

inline std::vector<double> tau_grid(const Scenario& s, const SystemParams& p, const std::string& sec) {
    return make_tau_grid(p, s.num(sec + ".tau_min"), s.num(sec + ".tau_max"),
                         static_cast<int>(s.integer(sec + ".tau_points")));
}

inline Mat cavity_state(const Scenario::StateSpec& sp, const SystemParams& p) {
    const int d = p.n_max + 1;
    if (sp.kind == "steady") return partial_trace_atom(CorrelationEngine(p).rho_ss());
    Vec v = Vec::Zero(d);
    if (sp.kind == "vacuum") v(0) = 1;
    else if (sp.kind == "fock") {
        if (sp.n > p.n_max) throw ValidationError({"state: photon number exceeds n_max"});
        v(sp.n) = 1;
    } else if (sp.kind == "coherent") {
        for (int n = 0; n < d; ++n)
            v(n) = std::exp(-0.5 * std::norm(sp.alpha)) * std::pow(sp.alpha, n) / std::sqrt(std::tgamma(n + 1.0));
        if (std::abs(v.norm() - 1.0) > 1e-6) throw ValidationError({"state: coherent amplitude too large for n_max"});
        v.normalize();
    } else {
        throw ValidationError({"state: '" + sp.kind + "' is not available here"});
    }
    return projector(v);
}

inline double zero_delay_g2(const CorrelationEngine& eng) {
    if (!(eng.n_ss() > 1e-12)) return std::numeric_limits<double>::quiet_NaN();
    const auto& o = eng.ops();
    return expect(o.a_dag * o.a_dag * o.a * o.a, eng.rho_ss()) / (eng.n_ss() * eng.n_ss());
}

inline std::string fixed(double x, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << x;
    return os.str();
}

inline io::Table observation_table(const TrajectoryRecord& rec) {
    io::Table t{{"t", "photon_number", "quadrature", "excitation", "field_re", "field_im"}, {}};
    for (const auto& o : rec.observations)
        t.rows.push_back({o.t, o.photon_number, o.quadrature, o.excitation, o.field.real(), o.field.imag()});
    return t;
}

inline void waiting_artifacts(Emitter& e, RunResult& r, const std::vector<TrajectoryRecord>& recs) {
    for (auto ch : {Channel::cavity, Channel::spontaneous}) {
        try {
            auto h = waiting_histogram(recs, ch);
            e.series(std::string("wait_") + to_string(ch), h.series);
        } catch (const InsufficientData&) {
            r.warnings.push_back(std::string("no ") + to_string(ch) + " waiting intervals recorded");
        }
    }
}

// Per-task computations; everything stays in memory.
inline void run_steady(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    CorrelationEngine eng(p);
    const double th = s.angle("steady.theta");
    const double a = eng.a_theta_ss(th);
    const double g20 = zero_delay_g2(eng);
    e.table("steady", {{"n_ss", "s_ss", "theta", "a_theta_ss", "g2_0", "top_level_population"},
                       {{eng.n_ss(), eng.s_ss(), th, a, g20, eng.top_level_population()}}});
    if (eng.truncation_flagged()) r.warnings.push_back("top Fock level population exceeds tolerance; raise n_max");
    r.summary = "<a+a>_ss = " + fixed(eng.n_ss()) + "  <s+s->_ss = " + fixed(eng.s_ss()) + "  <A_theta>_ss = " +
                fixed(a) + " (theta = " + fixed(th) + ")  g2(0) = " + fixed(g20);
}

inline void run_correlate(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    CorrelationEngine eng(p);
    const auto tau = tau_grid(s, p, "correlate");
    const std::string kind = s.get("correlate.kind");
    CorrelationSeries out;
    if (kind == "g2") out = eng.g2(tau);
    else if (kind == "g2ab") out = eng.g2_cross(tau);
    else if (kind == "htheta")
        out = eng.h_theta(s.angle("correlate.theta"), tau, h_normalization_from_string(s.get("correlate.normalization")));
    else
        out = eng.waiting_time(s.get("correlate.channel") == "side" ? WaitChannel::side : WaitChannel::forward, tau);
    e.series(kind, out);
    r.summary = kind + "(" + fixed(out.tau.front()) + ") = " + fixed(out.values.front()) + "  points = " +
                std::to_string(out.size());
    if (kind == "wait") {
        const auto st = eng.waiting_stats(s.get("correlate.channel") == "side" ? WaitChannel::side : WaitChannel::forward);
        r.summary += "  mass = " + fixed(st.mass) + "  mean = " + fixed(st.mean);
    }
}

inline void run_fourlevel(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    const std::string kind = s.get("fourlevel.kind");
    const double tmax = s.num("fourlevel.tau_max");
    const int pts = static_cast<int>(s.integer("fourlevel.tau_points"));
    if (kind == "resonant") {
        io::Table t{{"tau", "full", "approx", "envelope"}, {}};
        for (double tau : make_tau_grid(p, -tmax, tmax, pts)) {
            const auto v = g2_ab_resonant(p.g, p.gamma, tau);
            t.rows.push_back({tau, v.full, v.approx, v.envelope});
        }
        e.table("resonant", t);
        r.summary = "resonant envelope at 0+ = " + fixed(g2_ab_resonant_envelope_zero(p.g, p.gamma, 1)) +
                    "  (2g/gamma)^2 = " + fixed(std::pow(2 * p.g / p.gamma, 2));
        return;
    }
    const auto f = effective_params(p);
    for (const auto& w : f.warnings) r.warnings.push_back(w);
    if (kind == "params") {
        e.table("fourlevel", {{"Omega", "nu", "Gamma31", "Gamma32", "Gamma", "p3", "n_ss", "s_ss", "g2ab_0"},
                              {{f.Omega, f.nu, f.Gamma31, f.Gamma32, f.Gamma, f.p3, f.n_ss(), f.s_ss(),
                                g2_ab_zero_delay(f)}}});
        r.summary = "Omega = " + fixed(f.Omega) + "  nu = " + fixed(f.nu) + "  Gamma31/Gamma32 = " +
                    fixed(f.Gamma31 / f.Gamma32) + "  n_ss = " + fixed(f.n_ss());
        return;
    }
    CorrelationSeries out;
    out.kind = CorrelationKind::g2_AB;
    out.normalization = "four-level analytic";
    out.params = p;
    out.tau = make_tau_grid(p, -tmax, tmax, pts);
    for (double tau : out.tau) out.values.push_back(g2_ab_analytic(f, tau));
    e.series("g2ab_fourlevel", out);
    r.summary = "g2_AB(0) = " + fixed(g2_ab_zero_delay(f));
}

inline void run_compare(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    CorrelationEngine eng(p);
    const double tmax = s.num("correlate.tau_max");
    const auto tau = make_tau_grid(p, -tmax, tmax, static_cast<int>(s.integer("correlate.tau_points")));
    const auto num = eng.g2_cross(tau);
    const auto f = effective_params(p);
    io::Table t{{"tau", "master_equation", "four_level"}, {}};
    double worst = 0;
    for (std::size_t k = 0; k < tau.size(); ++k) {
        const double a = g2_ab_analytic(f, tau[k]);
        worst = std::max(worst, std::abs(a - num.values[k]));
        t.rows.push_back({tau[k], num.values[k], a});
    }
    e.table("compare", t);
    r.summary = "max |ME - four-level| = " + fixed(worst) + " over " + std::to_string(tau.size()) + " delays";
}

inline std::string click_summary(const std::vector<TrajectoryRecord>& recs) {
    std::size_t cav = 0, sp = 0;
    for (const auto& x : recs) cav += x.count(Channel::cavity), sp += x.count(Channel::spontaneous);
    return "cavity clicks = " + std::to_string(cav) + "  spontaneous clicks = " + std::to_string(sp);
}

inline void run_single(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    const auto rec = run_trajectory(p, s.unraveling(), s.initial_state(p));
    e.record("record", rec);
    if (!rec.observations.empty()) e.table("observations", observation_table(rec));
    if (rec.max_top_population > truncation_tolerance)
        r.warnings.push_back("top Fock level population reached " + std::to_string(rec.max_top_population));
    r.summary = click_summary({rec}) + "  steps = " + std::to_string(rec.steps);
}

inline EnsembleResult ensemble_for(const Scenario& s) {
    const auto p = s.params();
    return run_ensemble(p, s.unraveling(), s.initial_state(p),
                        static_cast<std::size_t>(s.integer("trajectory.n_trajectories")));
}

inline void run_ensemble_task(const Scenario& s, RunResult& r, Emitter& e) {
    const auto res = ensemble_for(s);
    io::Table counts{{"index", "cavity", "spontaneous"}, {}};
    for (std::size_t i = 0; i < res.records.size(); ++i)
        counts.rows.push_back({static_cast<double>(i), static_cast<double>(res.records[i].count(Channel::cavity)),
                               static_cast<double>(res.records[i].count(Channel::spontaneous))});
    e.table("counts", counts);
    if (!res.stats.t.empty()) {
        const auto& st = res.stats;
        io::Table t{{"t", "mean_n", "se_n", "mean_quadrature", "se_quadrature", "mean_excitation", "se_excitation"}, {}};
        for (std::size_t k = 0; k < st.t.size(); ++k)
            t.rows.push_back({st.t[k], st.mean_n[k], st.se_n[k], st.mean_quadrature[k], st.se_quadrature[k],
                              st.mean_excitation[k], st.se_excitation[k]});
        e.table("ensemble", t);
    }
    waiting_artifacts(e, r, res.records);
    if (s.flag("trajectory.write_records"))
        for (std::size_t i = 0; i < res.records.size(); ++i) e.record("record_" + std::to_string(i), res.records[i]);
    r.summary = "trajectories = " + std::to_string(res.records.size()) + "  " + click_summary(res.records);
}

inline void run_sample_h(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    const auto res = ensemble_for(s);
    const auto tau = make_tau_grid(SystemParams{}, s.num("sample_h.tau_min"), s.num("sample_h.tau_max"),
                                   static_cast<int>(s.integer("sample_h.tau_points")));
    auto h = sample_h_operational(res.records, tau, s.num("sample_h.burn"));
    e.series("h_sampled", h);
    CorrelationEngine eng(p);
    const auto cfg = s.unraveling();
    const double th = cfg.theta(0.0);
    const auto pred = filtered_h_prediction(eng, th, cfg.r, cfg.bandwidth, tau);
    const double noise = series_value(h, "noise_scale");
    io::Table t{{"tau", "sampled", "prediction", "noise_scale"}, {}};
    double worst = 0;
    for (std::size_t k = 0; k < tau.size(); ++k) {
        t.rows.push_back({tau[k], h.values[k], pred[k], noise});
        worst = std::max(worst, std::abs(h.values[k] - pred[k]) / noise);
    }
    e.table("h_compare", t);
    r.summary = "N_s = " + std::to_string(series_count(h, "N_s")) + "  max deviation = " + fixed(worst) +
                " noise scales";
}

inline void run_wigner(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    const Mat rho = cavity_state(Scenario::state_spec(s.get("wigner.state"), false), p);
    WignerGridSpec spec;
    spec.extent = s.num("wigner.extent");
    spec.points = static_cast<int>(s.integer("wigner.points"));
    const auto w = wigner_auto(rho, spec);
    e.wigner("wigner", w);
    e.marginal("marginal", marginal(w, s.angle("wigner.theta")));
    r.summary = "normalization = " + fixed(w.normalization(), 8) + "  min W = " + fixed(w.min_value()) +
                "  peaks = " + std::to_string(count_peaks(w));
}

inline Mat conditioned_cavity_state(const Scenario& s, const SystemParams& p, int k) {
    auto cfg = s.unraveling();
    cfg.record_jump_states = true;
    const auto rec = run_trajectory(p, cfg, s.initial_state(p));
    int seen = 0;
    for (std::size_t j = 0; j < rec.jumps.size(); ++j)
        if (rec.jumps[j].channel == Channel::cavity && ++seen == k)
            return partial_trace_atom(projector(rec.jump_states[j].psi));
    throw InsufficientData("conditioning trajectory recorded " + std::to_string(seen) + " cavity clicks, needed " +
                           std::to_string(k));
}

inline void run_tomography(const Scenario& s, RunResult& r, Emitter& e) {
    const auto p = s.params();
    const auto sp = Scenario::state_spec(s.get("tomography.state"), true);
    const Mat rho = sp.kind == "conditioned" ? conditioned_cavity_state(s, p, sp.n) : cavity_state(sp, p);
    TomographyConfig c;
    c.theta = s.angle("tomography.theta");
    c.n_samples = static_cast<std::size_t>(s.integer("tomography.n_samples"));
    c.seed = s.seed();
    c.dt = s.num("tomography.dt");
    const auto res = free_decay_tomography(rho, c, static_cast<std::size_t>(s.integer("tomography.bins")));
    const auto& h = res.histogram;
    io::Table t{{"lo", "hi", "centre", "density", "exact_marginal"}, {}};
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b)
        t.rows.push_back({h.edges[b], h.edges[b + 1], h.centre(b), h.density[b],
                          quadrature_probability(rho, c.theta, h.centre(b))});
    e.table("histogram", t);
    io::Table q{{"Q"}, {}};
    for (double x : res.samples) q.rows.push_back({x});
    e.table("samples", q);
    r.summary = "mean Q = " + fixed(res.mean) + "  var Q = " + fixed(res.variance) +
                "  L1 vs marginal = " + fixed(marginal_l1(h, rho, c.theta));
}

inline void run_scan(const Scenario& s, RunResult& r, Emitter& e) {
    const std::string par = s.get("scan.parameter");
    const double a = s.num("scan.from"), b = s.num("scan.to");
    const auto n = s.integer("scan.points");
    const double th = s.angle("scan.theta");
    io::Table t{{par, "delta_over_g", "n_ss", "s_ss", "a_theta_ss", "g2_0"}, {}};
    for (long long k = 0; k < n; ++k) {
        const double x = n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
        Scenario v = s;
        v.set("params." + par, io::fmt(x));
        const auto p = v.params();
        CorrelationEngine eng(p);
        const double g20 = zero_delay_g2(eng);
        t.rows.push_back({x, v.delta_over_g(), eng.n_ss(), eng.s_ss(), eng.a_theta_ss(th), g20});
        if (eng.truncation_flagged()) r.warnings.push_back(par + " = " + io::fmt(x) + ": truncation flagged");
    }
    e.table("scan", t);
    r.summary = "scan of " + par + ": " + std::to_string(n) + " points";
}

}  // namespace detail

// Runs the task and returns artifacts without touching the filesystem.
inline RunResult compute(const Scenario& s) {
    s.validate();
    RunResult r;
    detail::Emitter e(s, r);
    switch (s.task()) {
        case Task::steady: detail::run_steady(s, r, e); break;
        case Task::correlate: detail::run_correlate(s, r, e); break;
        case Task::fourlevel: detail::run_fourlevel(s, r, e); break;
        case Task::compare: detail::run_compare(s, r, e); break;
        case Task::trajectory: detail::run_single(s, r, e); break;
        case Task::ensemble: detail::run_ensemble_task(s, r, e); break;
        case Task::sample_h: detail::run_sample_h(s, r, e); break;
        case Task::wigner: detail::run_wigner(s, r, e); break;
        case Task::tomography: detail::run_tomography(s, r, e); break;
        case Task::scan: detail::run_scan(s, r, e); break;
    }
    r.artifacts.push_back({"_scenario.ini", s.echo()});
    return r;
}

inline std::string manifest_text(const std::vector<ManifestEntry>& m) {
    std::ostringstream os;
    for (const auto& x : m) os << x.sha256 << "  " << x.bytes << "  " << x.file << '\n';
    return os.str();
}

// Writes every artifact and then the manifest (sorted by file name). Returns the manifest entries.
inline std::vector<ManifestEntry> write_artifacts(const std::string& out, const RunResult& r) {
    const std::filesystem::path prefix(out);
    if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
    std::vector<ManifestEntry> m;
    for (const auto& a : r.artifacts) {
        const std::string file = out + a.suffix;
        std::ofstream f(file, std::ios::binary);
        if (!(f << a.content)) throw Error("cannot write " + file);
        m.push_back({std::filesystem::path(file).filename().string(), a.content.size(), sha256_hex(a.content)});
    }
    std::sort(m.begin(), m.end(), [](const auto& x, const auto& y) { return x.file < y.file; });
    std::ofstream f(out + "_manifest.txt", std::ios::binary);
    if (!(f << manifest_text(m))) throw Error("cannot write " + out + "_manifest.txt");
    return m;
}

// Full run: compute, then write. Errors surface before anything is written; returns the process status.
inline int run(const Scenario& s, std::ostream& out, std::ostream& err) {
    try {
        const auto r = compute(s);
        const auto m = write_artifacts(s.get("run.out"), r);
        out << r.summary << '\n';
        for (const auto& w : r.warnings) err << "warning: " << w << '\n';
        for (const auto& x : m) err << "wrote " << x.file << '\n';
        return 0;
    } catch (const ValidationError& e) {
        err << "invalid scenario (task " << s.get("run.task") << "):\n";
        for (const auto& v : e.violations) err << "  " << v << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error in task " << s.get("run.task") << ": " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mpjc
