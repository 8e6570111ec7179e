#pragma once

#include "four_level.hpp"
#include "io.hpp"
#include "trajectory.hpp"

#include <map>
#include <set>

namespace mpjc {

// Scenario files are "key = value" lines grouped in [sections]. At this boundary rates are ratios to kappa,
// times are kappa*t, drive and detuning are ratios to g. Internally kappa = 1.

enum class Task { steady, correlate, fourlevel, compare, trajectory, ensemble, sample_h, wigner, tomography, scan };

inline const char* to_string(Task t) {
    switch (t) {
        case Task::steady: return "steady";
        case Task::correlate: return "correlate";
        case Task::fourlevel: return "fourlevel";
        case Task::compare: return "compare";
        case Task::trajectory: return "trajectory";
        case Task::ensemble: return "ensemble";
        case Task::sample_h: return "sample-h";
        case Task::wigner: return "wigner";
        case Task::tomography: return "tomography";
        case Task::scan: return "scan";
    }
    return "?";
}

inline std::optional<Task> parse_task(const std::string& s) {
    for (auto t : {Task::steady, Task::correlate, Task::fourlevel, Task::compare, Task::trajectory, Task::ensemble,
                   Task::sample_h, Task::wigner, Task::tomography, Task::scan})
        if (s == to_string(t)) return t;
    return std::nullopt;
}

struct ScenarioKey {
    const char* name;  // "section.key"
    const char* def;
    const char* help;
};

inline const std::vector<ScenarioKey>& scenario_schema() {
    static const std::vector<ScenarioKey> s = {
        {"run.task", "steady", "steady|correlate|fourlevel|compare|trajectory|ensemble|sample-h|wigner|tomography|scan"},
        {"run.preset", "", "named bundle applied before the file's own keys"},
        {"run.seed", "1", "64-bit seed for stochastic tasks"},
        {"run.out", "mpjc", "output path prefix"},
        {"run.format", "csv", "csv|json"},
        {"params.g_over_kappa", "200", "coupling g/kappa"},
        {"params.gamma_over_kappa", "2", "spontaneous rate gamma/kappa"},
        {"params.eps_over_g", "0.08", "drive eps_d/g"},
        {"params.delta_over_g", "two-photon", "detuning Delta/g, or two-photon to follow the two-photon peak"},
        {"params.n_max", "14", "Fock truncation"},
        {"steady.theta", "pi/4", "quadrature angle for <A_theta>"},
        {"correlate.kind", "g2", "g2|g2ab|htheta|wait"},
        {"correlate.tau_min", "auto", "kappa*tau; auto is 0 for g2/wait and -tau_max otherwise"},
        {"correlate.tau_max", "8", "kappa*tau"},
        {"correlate.tau_points", "801", "grid points (refined to resolve the quantum beat)"},
        {"correlate.theta", "pi/4", "LO phase for htheta"},
        {"correlate.normalization", "per_photon", "raw|per_photon|unit"},
        {"correlate.channel", "forward", "forward|side (wait)"},
        {"fourlevel.kind", "params", "params|g2ab|resonant"},
        {"fourlevel.tau_max", "8", "kappa*tau"},
        {"fourlevel.tau_points", "801", "grid points"},
        {"trajectory.scheme", "direct", "direct|wave_particle|heterodyne"},
        {"trajectory.r", "0.5", "APD branching fraction"},
        {"trajectory.theta", "pi/4", "LO phase, or schedule t:v, t:v, ..."},
        {"trajectory.detuning_over_g", "", "optional detuning schedule t:Delta/g, ..."},
        {"trajectory.bandwidth", "10", "detector bandwidth B/kappa"},
        {"trajectory.dt", "0", "kappa*dt; 0 picks the largest admissible step"},
        {"trajectory.duration", "10", "kappa*T"},
        {"trajectory.n_trajectories", "1", "ensemble size"},
        {"trajectory.integrator", "weak2", "weak2|euler-maruyama"},
        {"trajectory.snapshot_stride", "0", "steps between state snapshots (0 = none)"},
        {"trajectory.current_stride", "0", "steps between current samples (0 = ceil(1/(4 B dt)))"},
        {"trajectory.checkpoints", "0", "equally spaced observation times over the run"},
        {"trajectory.initial", "ground", "ground | fock:N | fock:N:excited"},
        {"trajectory.write_records", "false", "ensemble: also write every record"},
        {"sample_h.tau_min", "-3", "kappa*tau"},
        {"sample_h.tau_max", "3", "kappa*tau"},
        {"sample_h.tau_points", "61", "grid points"},
        {"sample_h.burn", "5", "clicks before this kappa*t are not used"},
        {"wigner.state", "steady", "steady | vacuum | fock:N | coherent:RE:IM"},
        {"wigner.extent", "3.5", "half-width of the initial grid"},
        {"wigner.points", "141", "points per axis"},
        {"wigner.theta", "pi/4", "marginal direction"},
        {"tomography.state", "steady", "steady | vacuum | fock:N | coherent:RE:IM | conditioned:K"},
        {"tomography.theta", "0", "LO phase"},
        {"tomography.n_samples", "10000", "charge samples"},
        {"tomography.bins", "16", "histogram bins"},
        {"tomography.dt", "0.01", "kappa*dt of the decay integration"},
        {"scan.parameter", "eps_over_g", "eps_over_g|delta_over_g"},
        {"scan.from", "0.02", "first value"},
        {"scan.to", "0.14", "last value"},
        {"scan.points", "7", "number of values"},
        {"scan.theta", "pi/4", "quadrature angle for <A_theta>"},
    };
    return s;
}

// "pi/4", "3pi/4", "-pi/2", "0.5*pi", or a plain number.
inline double parse_angle(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    const auto at = s.find("pi");
    if (at == std::string::npos) return io::parse_double(s);
    std::string pre = s.substr(0, at), post = s.substr(at + 2);
    if (!pre.empty() && pre.back() == '*') pre.pop_back();
    double coef = 1.0;
    if (pre == "-") coef = -1.0;
    else if (!pre.empty() && pre != "+") coef = io::parse_double(pre);
    double den = 1.0;
    if (!post.empty()) {
        if (post[0] != '/') throw Error("not an angle: '" + text + "'");
        den = io::parse_double(post.substr(1));
    }
    return coef * pi / den;
}

// "v" or "t0:v0, t1:v1, ..." (',' or ';' separated); values parsed as angles.
inline Schedule parse_schedule(const std::string& text, double scale = 1.0) {
    std::string t = text;
    std::replace(t.begin(), t.end(), ';', ',');
    if (t.find(':') == std::string::npos) return Schedule(scale * parse_angle(t));
    std::vector<std::pair<double, double>> k;
    for (const auto& item : io::split(t, ',')) {
        const auto c = item.find(':');
        if (c == std::string::npos) throw Error("not a schedule entry: '" + item + "'");
        k.emplace_back(io::parse_double(item.substr(0, c)), scale * parse_angle(item.substr(c + 1)));
    }
    return Schedule(std::move(k));
}

inline const std::map<std::string, std::map<std::string, std::string>>& scenario_presets() {
    static const std::map<std::string, std::map<std::string, std::string>> m = {
        {"two-photon", {{"params.eps_over_g", "0.08"}}},
        {"fig1",
         {{"run.task", "wigner"}, {"params.eps_over_g", "0.5"}, {"params.n_max", "16"}, {"wigner.theta", "pi/4"}}},
        {"fig2",
         {{"run.task", "trajectory"},
          {"params.g_over_kappa", "1000"},
          {"params.eps_over_g", "0.14"},
          {"params.delta_over_g", "0.35"},
          {"params.n_max", "16"},
          {"trajectory.scheme", "direct"},
          {"trajectory.duration", "20"},
          {"trajectory.detuning_over_g", "0:0.35, 20:1"},
          {"trajectory.checkpoints", "400"}}},
        {"fig3-panelI",
         {{"run.task", "correlate"}, {"params.g_over_kappa", "1000"}, {"params.eps_over_g", "0.075"},
          {"params.delta_over_g", "0.5824"}, {"params.n_max", "12"}}},
        {"fig3-panelII",
         {{"run.task", "correlate"}, {"params.g_over_kappa", "1000"}, {"params.eps_over_g", "0.12"},
          {"params.delta_over_g", "0.5903"}, {"params.n_max", "14"}}},
        {"fig3-panelIII",
         {{"run.task", "correlate"}, {"params.g_over_kappa", "1000"}, {"params.eps_over_g", "0.14"},
          {"params.delta_over_g", "0.38674"}, {"params.n_max", "16"}}},
        {"fig4",
         {{"run.task", "tomography"}, {"params.g_over_kappa", "1000"}, {"params.eps_over_g", "0.14"},
          {"params.delta_over_g", "0.38674"}, {"params.n_max", "16"}, {"trajectory.initial", "fock:2"},
          {"trajectory.duration", "7"}, {"tomography.state", "conditioned:1"}, {"tomography.theta", "0"}}},
        {"fig5",
         {{"run.task", "trajectory"}, {"params.g_over_kappa", "1000"}, {"params.eps_over_g", "0.14"},
          {"params.delta_over_g", "0.38674"}, {"params.n_max", "16"}, {"trajectory.initial", "fock:2"},
          {"trajectory.duration", "30"}, {"trajectory.checkpoints", "600"}}},
        {"fig7",
         {{"run.task", "trajectory"}, {"trajectory.scheme", "wave_particle"}, {"trajectory.r", "0.5"},
          {"trajectory.theta", "0:pi/4, 20:3pi/4"}, {"trajectory.duration", "20"},
          {"trajectory.checkpoints", "400"}}},
        {"fig8",
         {{"run.task", "trajectory"}, {"trajectory.scheme", "wave_particle"}, {"trajectory.r", "0.95"},
          {"trajectory.theta", "pi/4"}, {"trajectory.duration", "50"}, {"trajectory.checkpoints", "500"}}},
        {"fig8-panelIII",
         {{"run.task", "ensemble"}, {"trajectory.scheme", "wave_particle"}, {"trajectory.r", "0.95"},
          {"trajectory.theta", "pi/4"}, {"trajectory.duration", "200"}, {"trajectory.n_trajectories", "8"}}},
        {"fig8-h",
         {{"run.task", "sample-h"}, {"trajectory.scheme", "wave_particle"}, {"trajectory.r", "0.5"},
          {"trajectory.theta", "pi/4"}, {"trajectory.bandwidth", "10"}, {"trajectory.duration", "110"},
          {"trajectory.n_trajectories", "10"}}},
        {"fig9",
         {{"run.task", "trajectory"}, {"trajectory.scheme", "wave_particle"}, {"trajectory.r", "0.5"},
          {"trajectory.theta", "pi/4"}, {"trajectory.duration", "40"}, {"trajectory.checkpoints", "800"}}},
    };
    return m;
}

class Scenario {
public:
    Scenario() {
        for (const auto& k : scenario_schema()) v_[k.name] = k.def;
    }

    const std::string& get(const std::string& key) const {
        auto it = v_.find(key);
        if (it == v_.end()) throw Error("scenario: no key '" + key + "'");
        return it->second;
    }
    void set(const std::string& key, const std::string& value) {
        if (!v_.count(key)) throw ValidationError({"unknown key '" + key + "'"});
        v_[key] = io::trim(value);
    }
    bool has(const std::string& key) const { return v_.count(key) > 0; }

    double num(const std::string& k) const { return io::parse_double(get(k)); }
    long long integer(const std::string& k) const { return io::parse_int(get(k)); }
    double angle(const std::string& k) const { return parse_angle(get(k)); }
    bool flag(const std::string& k) const { return get(k) == "true"; }

    bool two_photon_rule() const { return get("params.delta_over_g") == "two-photon"; }
    double delta_over_g() const {
        return two_photon_rule() ? effective_detuning_ratio(num("params.eps_over_g")) : num("params.delta_over_g");
    }

    // Lines for artifact headers; prefixed so they never collide with a reader's own metadata keys.
    std::vector<std::string> header_lines() const {
        std::vector<std::string> h;
        for (const auto& k : scenario_schema()) h.push_back(std::string("scenario.") + k.name + " = " + get(k.name));
        try {
            h.push_back("resolved.delta_over_g = " + io::fmt(delta_over_g()));
        } catch (const Error&) {
        }
        return h;
    }

    Task task() const { return *parse_task(get("run.task")); }
    std::uint64_t seed() const { return io::parse_u64(get("run.seed")); }

    SystemParams params() const {
        SystemParams p;
        p.kappa = 1.0;
        p.g = num("params.g_over_kappa");
        p.gamma = num("params.gamma_over_kappa");
        p.eps_d = num("params.eps_over_g") * p.g;
        p.delta_omega_d = delta_over_g() * p.g;
        p.n_max = static_cast<int>(integer("params.n_max"));
        p.impedance_matched = p.gamma == 2.0 * p.kappa;
        return p;
    }

    UnravelingConfig unraveling() const {
        UnravelingConfig c;
        c.scheme = parse_scheme(get("trajectory.scheme"));
        c.r = num("trajectory.r");
        c.theta = parse_schedule(get("trajectory.theta"));
        if (!get("trajectory.detuning_over_g").empty())
            c.detuning = parse_schedule(get("trajectory.detuning_over_g"), num("params.g_over_kappa"));
        c.bandwidth = num("trajectory.bandwidth");
        c.dt = num("trajectory.dt");
        c.duration = num("trajectory.duration");
        c.seed = seed();
        c.integrator = get("trajectory.integrator") == "weak2" ? SdeScheme::weak2 : SdeScheme::euler_maruyama;
        c.snapshot_stride = static_cast<int>(integer("trajectory.snapshot_stride"));
        c.current_stride = static_cast<int>(integer("trajectory.current_stride"));
        const auto n = integer("trajectory.checkpoints");
        for (long long k = 1; k <= n; ++k) c.observe_times.push_back(c.duration * static_cast<double>(k) / n);
        return c;
    }

    // Collects every violation; an empty list means the scenario can run.
    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        auto check = [&](const std::string& key, auto&& parse) {
            try {
                parse(get(key));
            } catch (const Error&) {
                v.push_back(key + ": cannot parse '" + get(key) + "'");
                return false;
            }
            return true;
        };
        auto number = [](const std::string& s) { io::parse_double(s); };
        auto integer_ = [](const std::string& s) { io::parse_int(s); };
        auto one_of = [&](const std::string& key, std::initializer_list<const char*> opts) {
            for (const char* o : opts)
                if (get(key) == o) return;
            std::string list;
            for (const char* o : opts) list += (list.empty() ? "" : "|") + std::string(o);
            v.push_back(key + ": must be one of " + list + " (got '" + get(key) + "')");
        };

        if (!parse_task(get("run.task"))) v.push_back("run.task: unknown task '" + get("run.task") + "'");
        check("run.seed", [](const std::string& s) { io::parse_u64(s); });
        one_of("run.format", {"csv", "json"});
        if (get("run.out").empty()) v.push_back("run.out: must not be empty");

        bool params_ok = true;
        for (const char* k : {"params.g_over_kappa", "params.gamma_over_kappa", "params.eps_over_g"})
            params_ok &= check(k, number);
        if (!two_photon_rule()) params_ok &= check("params.delta_over_g", number);
        params_ok &= check("params.n_max", integer_);
        if (params_ok)
            for (const auto& s : params().violations()) v.push_back("params." + s);

        for (const char* k : {"steady.theta", "correlate.theta", "wigner.theta", "tomography.theta", "scan.theta"})
            check(k, parse_angle);
        one_of("correlate.kind", {"g2", "g2ab", "htheta", "wait"});
        one_of("correlate.normalization", {"raw", "per_photon", "unit"});
        one_of("correlate.channel", {"forward", "side"});
        grid(v, "correlate");
        one_of("fourlevel.kind", {"params", "g2ab", "resonant"});
        if (check("fourlevel.tau_max", number) && !(num("fourlevel.tau_max") > 0))
            v.push_back("fourlevel.tau_max: must be positive");
        if (check("fourlevel.tau_points", integer_) && integer("fourlevel.tau_points") < 2)
            v.push_back("fourlevel.tau_points: must be >= 2");

        bool traj_ok = true;
        traj_ok &= check("trajectory.scheme", [](const std::string& s) { parse_scheme(s); });
        if (traj_ok && parse_scheme(get("trajectory.scheme")) == UnravelingScheme::free_decay)
            v.push_back("trajectory.scheme: free_decay is run through task=tomography"), traj_ok = false;
        for (const char* k : {"trajectory.r", "trajectory.bandwidth", "trajectory.dt", "trajectory.duration"})
            traj_ok &= check(k, number);
        traj_ok &= check("trajectory.theta", [](const std::string& s) { parse_schedule(s); });
        if (!get("trajectory.detuning_over_g").empty())
            traj_ok &= check("trajectory.detuning_over_g", [](const std::string& s) { parse_schedule(s); });
        for (const char* k : {"trajectory.n_trajectories", "trajectory.snapshot_stride", "trajectory.current_stride",
                              "trajectory.checkpoints"})
            traj_ok &= check(k, integer_);
        one_of("trajectory.integrator", {"weak2", "euler-maruyama"});
        one_of("trajectory.write_records", {"true", "false"});
        check("trajectory.initial", [&](const std::string& s) { initial_spec(s); });
        const bool traj_task = parse_task(get("run.task")) &&
                               (task() == Task::trajectory || task() == Task::ensemble || task() == Task::sample_h ||
                                (task() == Task::tomography && get("tomography.state").rfind("conditioned", 0) == 0));
        if (traj_ok && params_ok) {
            for (const auto& s : unraveling().violations(params())) v.push_back("trajectory." + s);
        } else if (traj_ok) {
            // the remaining checks need valid parameters; the branching fraction does not
            const double r = num("trajectory.r");
            if (!(r >= 0.0 && r <= 1.0)) v.push_back("trajectory.r: must lie in [0, 1] (got " + get("trajectory.r") + ")");
        }
        if (traj_ok && params_ok && traj_task) {
            if (integer("trajectory.n_trajectories") < 1) v.push_back("trajectory.n_trajectories: must be >= 1");
            if (integer("trajectory.checkpoints") < 0) v.push_back("trajectory.checkpoints: must be >= 0");
            if (task() == Task::sample_h) {
                const double r = num("trajectory.r");
                if (parse_scheme(get("trajectory.scheme")) != UnravelingScheme::wave_particle || !(r > 0 && r < 1))
                    v.push_back("trajectory.scheme: sample-h needs wave_particle with 0 < r < 1");
            }
        }
        grid(v, "sample_h");
        check("sample_h.burn", number);

        check("wigner.state", [&](const std::string& s) { state_spec(s, false); });
        if (check("wigner.extent", number) && !(num("wigner.extent") > 0)) v.push_back("wigner.extent: must be positive");
        if (check("wigner.points", integer_) && integer("wigner.points") < 3) v.push_back("wigner.points: must be >= 3");
        check("tomography.state", [&](const std::string& s) { state_spec(s, true); });
        if (check("tomography.n_samples", integer_) && integer("tomography.n_samples") < 1)
            v.push_back("tomography.n_samples: must be >= 1");
        if (check("tomography.bins", integer_) && integer("tomography.bins") < 1) v.push_back("tomography.bins: must be >= 1");
        if (check("tomography.dt", number) && !(num("tomography.dt") > 0 && num("tomography.dt") <= 0.05))
            v.push_back("tomography.dt: must lie in (0, 0.05]");

        one_of("scan.parameter", {"eps_over_g", "delta_over_g"});
        check("scan.from", number);
        check("scan.to", number);
        if (check("scan.points", integer_) && integer("scan.points") < 1) v.push_back("scan.points: must be >= 1");
        return v;
    }

    void validate() const {
        auto v = violations();
        if (!v.empty()) throw ValidationError(std::move(v));
    }

    // Resolved scenario in the input format; parsing it back gives the same scenario.
    std::string echo() const {
        std::ostringstream os;
        std::string section;
        for (const auto& k : scenario_schema()) {
            const std::string name = k.name;
            const auto dot = name.find('.');
            const std::string sec = name.substr(0, dot);
            if (sec != section) {
                os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
                section = sec;
            }
            os << name.substr(dot + 1) << " = " << get(name) << '\n';
        }
        return os.str();
    }

    // Fill automatic delay grids. The two-photon detuning rule stays symbolic so scans follow it.
    void resolve() {
        if (get("correlate.tau_min") == "auto") {
            const std::string k = get("correlate.kind");
            try {
                v_["correlate.tau_min"] = (k == "g2" || k == "wait") ? "0" : io::fmt(-num("correlate.tau_max"));
            } catch (const Error&) {
            }
        }
    }

    struct Initial {
        int n = 0;
        Atom atom = Atom::ground;
    };
    static Initial initial_spec(const std::string& s) {
        if (s == "ground") return {};
        const auto parts = io::split(s, ':');
        if (parts.size() < 2 || parts.size() > 3 || parts[0] != "fock") throw Error("bad initial state");
        Initial i;
        i.n = static_cast<int>(io::parse_int(parts[1]));
        if (i.n < 0) throw Error("bad initial state");
        if (parts.size() == 3) {
            if (parts[2] == "excited") i.atom = Atom::excited;
            else if (parts[2] != "ground") throw Error("bad initial state");
        }
        return i;
    }

    Vec initial_state(const SystemParams& p) const {
        const auto i = initial_spec(get("trajectory.initial"));
        if (i.n > p.n_max) throw ValidationError({"trajectory.initial: photon number exceeds n_max"});
        return basis_state(i.n, i.atom, p.n_max);
    }

    struct StateSpec {
        std::string kind;  // steady | vacuum | fock | coherent | conditioned
        int n = 0;
        cplx alpha = 0;
    };
    static StateSpec state_spec(const std::string& s, bool allow_conditioned) {
        const auto parts = io::split(s, ':');
        StateSpec sp;
        sp.kind = parts.at(0);
        if ((sp.kind == "steady" || sp.kind == "vacuum") && parts.size() == 1) return sp;
        if ((sp.kind == "fock" || (sp.kind == "conditioned" && allow_conditioned)) && parts.size() == 2) {
            sp.n = static_cast<int>(io::parse_int(parts[1]));
            if (sp.n < 0 || (sp.kind == "conditioned" && sp.n < 1)) throw Error("bad state");
            return sp;
        }
        if (sp.kind == "coherent" && parts.size() == 3) {
            sp.alpha = cplx(io::parse_double(parts[1]), io::parse_double(parts[2]));
            return sp;
        }
        throw Error("bad state '" + s + "'");
    }

private:
    void grid(std::vector<std::string>& v, const std::string& sec) const {
        const std::string lo = sec + ".tau_min", hi = sec + ".tau_max", n = sec + ".tau_points";
        bool ok = true;
        for (const auto& k : {lo, hi}) {
            if (get(k) == "auto") continue;
            try {
                io::parse_double(get(k));
            } catch (const Error&) {
                v.push_back(k + ": cannot parse '" + get(k) + "'");
                ok = false;
            }
        }
        try {
            if (io::parse_int(get(n)) < 2) v.push_back(n + ": must be >= 2");
        } catch (const Error&) {
            v.push_back(n + ": cannot parse '" + get(n) + "'");
        }
        if (ok && get(lo) != "auto" && !(num(hi) > num(lo))) v.push_back(hi + ": must exceed " + lo);
    }

    std::map<std::string, std::string> v_;
};

// Parses scenario text. Unknown sections or keys are errors in strict mode; all problems are reported together.
inline Scenario parse_scenario(const std::string& text, bool strict = true,
                               const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    std::vector<std::string> errors;
    std::vector<std::pair<std::string, std::string>> kv;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = io::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(ln) + ": malformed section header");
                continue;
            }
            section = io::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(ln) + ": expected key = value");
            continue;
        }
        const std::string key = io::trim(line.substr(0, eq));
        kv.emplace_back(section.empty() ? key : section + "." + key, io::trim(line.substr(eq + 1)));
    }
    kv.insert(kv.end(), overrides.begin(), overrides.end());

    Scenario s;
    std::string preset;
    for (const auto& [k, v] : kv)
        if (k == "run.preset") preset = v;
    if (!preset.empty()) {
        auto it = scenario_presets().find(preset);
        if (it == scenario_presets().end()) errors.push_back("run.preset: unknown preset '" + preset + "'");
        else
            for (const auto& [k, v] : it->second) s.set(k, v);
    }
    for (const auto& [k, v] : kv) {
        if (!s.has(k)) {
            if (strict) errors.push_back("unknown key '" + k + "'");
            continue;
        }
        s.set(k, v);
    }
    s.resolve();
    for (auto& e : s.violations()) errors.push_back(std::move(e));
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return s;
}

}  // namespace mpjc
