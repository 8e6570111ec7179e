#pragma once

#include "estimators.hpp"
#include "phase_space.hpp"
#include "trajectory.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace mpjc::io {

// ---------------------------------------------------------------------------
// Text primitives. Floating point is written as the shortest decimal that round-trips.

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& text) {
    const std::string s = trim(text);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || s.empty()) throw Error("not a number: '" + text + "'");
    return v;
}

inline long long parse_int(const std::string& text) {
    const std::string s = trim(text);
    long long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) throw Error("not an integer: '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& text) {
    const std::string s = trim(text);
    std::uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
        throw Error("not an unsigned integer: '" + text + "'");
    return v;
}

// ---------------------------------------------------------------------------
// Parameters as key/value pairs (raw rates).

inline std::vector<std::pair<std::string, std::string>> params_kv(const SystemParams& p) {
    return {{"g", fmt(p.g)},
            {"kappa", fmt(p.kappa)},
            {"gamma", fmt(p.gamma)},
            {"eps_d", fmt(p.eps_d)},
            {"delta_omega_d", fmt(p.delta_omega_d)},
            {"n_max", std::to_string(p.n_max)},
            {"impedance_matched", p.impedance_matched ? "true" : "false"}};
}

inline bool set_param(SystemParams& p, const std::string& k, const std::string& v) {
    if (k == "g") p.g = parse_double(v);
    else if (k == "kappa") p.kappa = parse_double(v);
    else if (k == "gamma") p.gamma = parse_double(v);
    else if (k == "eps_d") p.eps_d = parse_double(v);
    else if (k == "delta_omega_d") p.delta_omega_d = parse_double(v);
    else if (k == "n_max") p.n_max = static_cast<int>(parse_int(v));
    else if (k == "impedance_matched") p.impedance_matched = (v == "true");
    else return false;
    return true;
}

inline nlohmann::json params_json(const SystemParams& p) {
    return {{"g", p.g},         {"kappa", p.kappa},
            {"gamma", p.gamma}, {"eps_d", p.eps_d},
            {"delta_omega_d", p.delta_omega_d}, {"n_max", p.n_max},
            {"impedance_matched", p.impedance_matched}};
}

inline SystemParams params_from_json(const nlohmann::json& j) {
    SystemParams p;
    p.g = j.at("g");
    p.kappa = j.at("kappa");
    p.gamma = j.at("gamma");
    p.eps_d = j.at("eps_d");
    p.delta_omega_d = j.at("delta_omega_d");
    p.n_max = j.at("n_max");
    p.impedance_matched = j.at("impedance_matched");
    return p;
}

// Header lines ("# ..." in CSV) carrying the resolved scenario or other context.
using Header = std::vector<std::string>;

inline void write_header(std::ostream& os, const Header& h) {
    for (const auto& line : h) os << "# " << line << '\n';
}

// ---------------------------------------------------------------------------
// Correlation series. CSV: '#'-prefixed metadata, header 'tau,value[,value_imag]', one row per delay.

inline void write_series_csv(std::ostream& os, const CorrelationSeries& s, const Header& h = {}) {
    write_header(os, h);
    os << "# kind = " << to_string(s.kind) << '\n';
    os << "# normalization = " << s.normalization << '\n';
    if (s.theta) os << "# theta = " << fmt(*s.theta) << '\n';
    for (const auto& [k, v] : params_kv(s.params)) os << "# param." << k << " = " << v << '\n';
    for (const auto& [k, v] : s.meta) os << "# meta." << k << " = " << v << '\n';
    for (const auto& w : s.warnings) os << "# warning = " << w << '\n';
    const bool cplx_series = !s.values_imag.empty();
    os << (cplx_series ? "tau,value,value_imag\n" : "tau,value\n");
    for (std::size_t k = 0; k < s.tau.size(); ++k) {
        os << fmt(s.tau[k]) << ',' << fmt(s.values[k]);
        if (cplx_series) os << ',' << fmt(s.values_imag[k]);
        os << '\n';
    }
}

inline CorrelationSeries read_series_csv(std::istream& is) {
    CorrelationSeries s;
    std::string line;
    bool header_seen = false, cplx_series = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) continue;
            const std::string k = trim(line.substr(1, eq - 1)), v = line.substr(eq + 3);
            if (k == "kind") s.kind = correlation_kind_from_string(v);
            else if (k == "normalization") s.normalization = v;
            else if (k == "theta") s.theta = parse_double(v);
            else if (k.rfind("param.", 0) == 0) set_param(s.params, k.substr(6), v);
            else if (k.rfind("meta.", 0) == 0) s.meta.emplace_back(k.substr(5), v);
            else if (k == "warning") s.warnings.push_back(v);
            continue;
        }
        if (!header_seen) {
            const auto cols = split(line, ',');
            if (cols.size() < 2 || cols[0] != "tau" || cols[1] != "value") throw Error("series CSV: bad header");
            cplx_series = cols.size() == 3;
            header_seen = true;
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != (cplx_series ? 3u : 2u)) throw Error("series CSV: bad row '" + line + "'");
        s.tau.push_back(parse_double(cols[0]));
        s.values.push_back(parse_double(cols[1]));
        if (cplx_series) s.values_imag.push_back(parse_double(cols[2]));
    }
    if (!header_seen) throw Error("series CSV: missing header");
    return s;
}

inline nlohmann::json series_json(const CorrelationSeries& s, const Header& h = {}) {
    nlohmann::json j;
    j["header"] = h;
    j["kind"] = to_string(s.kind);
    j["normalization"] = s.normalization;
    j["theta"] = s.theta ? nlohmann::json(*s.theta) : nlohmann::json(nullptr);
    j["params"] = params_json(s.params);
    nlohmann::json meta = nlohmann::json::array();
    for (const auto& [k, v] : s.meta) meta.push_back({k, v});
    j["meta"] = meta;
    j["warnings"] = s.warnings;
    j["tau"] = s.tau;
    j["value"] = s.values;
    if (!s.values_imag.empty()) j["value_imag"] = s.values_imag;
    return j;
}

inline CorrelationSeries series_from_json(const nlohmann::json& j) {
    CorrelationSeries s;
    s.kind = correlation_kind_from_string(j.at("kind"));
    s.normalization = j.at("normalization");
    if (!j.at("theta").is_null()) s.theta = j.at("theta").get<double>();
    s.params = params_from_json(j.at("params"));
    for (const auto& m : j.at("meta")) s.meta.emplace_back(m.at(0), m.at(1));
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    s.tau = j.at("tau").get<std::vector<double>>();
    s.values = j.at("value").get<std::vector<double>>();
    if (j.contains("value_imag")) s.values_imag = j.at("value_imag").get<std::vector<double>>();
    return s;
}

// ---------------------------------------------------------------------------
// Tables: generic named columns (scan results, ensemble statistics, tomography histograms).

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write_table_csv(std::ostream& os, const Table& t, const Header& h = {}) {
    write_header(os, h);
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << fmt(r[c]);
        os << '\n';
    }
}

inline Table read_table_csv(std::istream& is) {
    Table t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (t.columns.empty()) {
            t.columns = split(line, ',');
            continue;
        }
        std::vector<double> r;
        for (const auto& c : split(line, ',')) r.push_back(parse_double(c));
        if (r.size() != t.columns.size()) throw Error("table CSV: row width differs from header");
        t.rows.push_back(std::move(r));
    }
    if (t.columns.empty()) throw Error("table CSV: missing header");
    return t;
}

inline nlohmann::json table_json(const Table& t, const Header& h = {}) {
    return {{"header", h}, {"columns", t.columns}, {"rows", t.rows}};
}

inline Table table_from_json(const nlohmann::json& j) {
    return {j.at("columns").get<std::vector<std::string>>(), j.at("rows").get<std::vector<std::vector<double>>>()};
}

// ---------------------------------------------------------------------------
// Wigner grid: axis header lines, then one CSV row per x with values along y.
//   # x = x0,x1,...   # y = y0,y1,...   then rows "W(x_i, y_0),...,W(x_i, y_m)"

inline std::string join(const RVec& v) {
    std::string s;
    for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt(v(k));
    return s;
}

inline void write_wigner_csv(std::ostream& os, const WignerGrid& w, const Header& h = {}) {
    write_header(os, h);
    for (const auto& s : w.warnings) os << "# warning = " << s << '\n';
    os << "# cell_area = " << fmt(w.cell_area) << '\n';
    os << "# x = " << join(w.x) << '\n';
    os << "# y = " << join(w.y) << '\n';
    for (Eigen::Index i = 0; i < w.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.values.cols(); ++j) os << (j ? "," : "") << fmt(w.values(i, j));
        os << '\n';
    }
}

inline WignerGrid read_wigner_csv(std::istream& is) {
    WignerGrid w;
    std::string line;
    std::vector<std::vector<double>> rows;
    auto axis = [](const std::string& s) {
        const auto parts = split(s, ',');
        RVec v(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t k = 0; k < parts.size(); ++k) v(static_cast<Eigen::Index>(k)) = parse_double(parts[k]);
        return v;
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) continue;
            const std::string k = trim(line.substr(1, eq - 1)), v = line.substr(eq + 3);
            if (k == "x") w.x = axis(v);
            else if (k == "y") w.y = axis(v);
            else if (k == "cell_area") w.cell_area = parse_double(v);
            else if (k == "warning") w.warnings.push_back(v);
            continue;
        }
        std::vector<double> r;
        for (const auto& c : split(line, ',')) r.push_back(parse_double(c));
        rows.push_back(std::move(r));
    }
    if (static_cast<Eigen::Index>(rows.size()) != w.x.size()) throw Error("wigner CSV: row count differs from x axis");
    w.values.resize(w.x.size(), w.y.size());
    for (Eigen::Index i = 0; i < w.x.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != w.y.size()) throw Error("wigner CSV: ragged row");
        for (Eigen::Index j = 0; j < w.y.size(); ++j) w.values(i, j) = rows[i][j];
    }
    return w;
}

inline nlohmann::json wigner_json(const WignerGrid& w, const Header& h = {}) {
    std::vector<std::vector<double>> vals(w.values.rows(), std::vector<double>(w.values.cols()));
    for (Eigen::Index i = 0; i < w.values.rows(); ++i)
        for (Eigen::Index j = 0; j < w.values.cols(); ++j) vals[i][j] = w.values(i, j);
    return {{"header", h},
            {"x", std::vector<double>(w.x.data(), w.x.data() + w.x.size())},
            {"y", std::vector<double>(w.y.data(), w.y.data() + w.y.size())},
            {"cell_area", w.cell_area},
            {"warnings", w.warnings},
            {"values", vals}};
}

inline WignerGrid wigner_from_json(const nlohmann::json& j) {
    WignerGrid w;
    const auto x = j.at("x").get<std::vector<double>>(), y = j.at("y").get<std::vector<double>>();
    w.x = Eigen::Map<const RVec>(x.data(), static_cast<Eigen::Index>(x.size()));
    w.y = Eigen::Map<const RVec>(y.data(), static_cast<Eigen::Index>(y.size()));
    w.cell_area = j.at("cell_area");
    w.warnings = j.at("warnings").get<std::vector<std::string>>();
    const auto vals = j.at("values").get<std::vector<std::vector<double>>>();
    w.values.resize(w.x.size(), w.y.size());
    for (Eigen::Index i = 0; i < w.x.size(); ++i)
        for (Eigen::Index k = 0; k < w.y.size(); ++k) w.values(i, k) = vals.at(i).at(k);
    return w;
}

// Marginal: two columns q,p.
inline void write_marginal_csv(std::ostream& os, const Marginal& m, const Header& h = {}) {
    write_header(os, h);
    os << "# theta = " << fmt(m.theta) << '\n';
    os << "q,p\n";
    for (Eigen::Index k = 0; k < m.q.size(); ++k) os << fmt(m.q(k)) << ',' << fmt(m.p(k)) << '\n';
}

inline Marginal read_marginal_csv(std::istream& is) {
    Marginal m;
    std::string line;
    std::vector<double> q, p;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# theta = ", 0) == 0) m.theta = parse_double(line.substr(10));
            continue;
        }
        if (!header_seen) {
            if (trim(line) != "q,p") throw Error("marginal CSV: bad header");
            header_seen = true;
            continue;
        }
        const auto c = split(line, ',');
        if (c.size() != 2) throw Error("marginal CSV: bad row");
        q.push_back(parse_double(c[0]));
        p.push_back(parse_double(c[1]));
    }
    m.q = Eigen::Map<RVec>(q.data(), static_cast<Eigen::Index>(q.size()));
    m.p = Eigen::Map<RVec>(p.data(), static_cast<Eigen::Index>(p.size()));
    return m;
}

inline nlohmann::json marginal_json(const Marginal& m, const Header& h = {}) {
    return {{"header", h},
            {"theta", m.theta},
            {"q", std::vector<double>(m.q.data(), m.q.data() + m.q.size())},
            {"p", std::vector<double>(m.p.data(), m.p.data() + m.p.size())}};
}

inline Marginal marginal_from_json(const nlohmann::json& j) {
    Marginal m;
    m.theta = j.at("theta");
    const auto q = j.at("q").get<std::vector<double>>(), p = j.at("p").get<std::vector<double>>();
    if (q.size() != p.size()) throw Error("marginal JSON: q and p differ in length");
    m.q = Eigen::Map<const RVec>(q.data(), static_cast<Eigen::Index>(q.size()));
    m.p = Eigen::Map<const RVec>(p.data(), static_cast<Eigen::Index>(p.size()));
    return m;
}

// ---------------------------------------------------------------------------
// Trajectory record file: [config] echo, [jumps] t,channel, [current] t,re[,im].

inline std::vector<std::pair<std::string, std::string>> config_kv(const TrajectoryRecord& r) {
    const auto& c = r.config;
    std::vector<std::pair<std::string, std::string>> kv = params_kv(r.params);
    std::string obs;
    for (std::size_t k = 0; k < c.observe_times.size(); ++k) obs += (k ? ";" : "") + fmt(c.observe_times[k]);
    auto sched = [](const Schedule& s) {
        if (s.constant()) return fmt(s(0.0));
        std::string out;
        for (std::size_t k = 0; k < s.knots().size(); ++k)
            out += (k ? ";" : "") + fmt(s.knots()[k].first) + ":" + fmt(s.knots()[k].second);
        return out;
    };
    kv.insert(kv.end(), {{"scheme", to_string(c.scheme)},
                         {"r", fmt(c.r)},
                         {"theta", sched(c.theta)},
                         {"detuning", c.detuning ? sched(*c.detuning) : ""},
                         {"bandwidth_B", fmt(c.bandwidth)},
                         {"dt_requested", fmt(c.dt)},
                         {"duration", fmt(c.duration)},
                         {"seed", std::to_string(c.seed)},
                         {"index", std::to_string(c.index)},
                         {"integrator", to_string(c.integrator)},
                         {"snapshot_stride", std::to_string(c.snapshot_stride)},
                         {"current_stride", std::to_string(c.current_stride)},
                         {"observe_times", obs},
                         {"max_jump_probability", fmt(c.max_jump_probability)},
                         {"record_jump_states", c.record_jump_states ? "true" : "false"},
                         {"dt", fmt(r.dt)},
                         {"steps", std::to_string(r.steps)},
                         {"cadence", std::to_string(r.cadence)},
                         {"complex_current", r.complex_current ? "true" : "false"}});
    return kv;
}

namespace detail {

inline Schedule parse_schedule_field(const std::string& v) {
    if (v.find(':') == std::string::npos) return Schedule(parse_double(v));
    std::vector<std::pair<double, double>> k;
    for (const auto& item : split(v, ';')) {
        const auto c = item.find(':');
        if (c == std::string::npos) throw Error("bad schedule '" + v + "'");
        k.emplace_back(parse_double(item.substr(0, c)), parse_double(item.substr(c + 1)));
    }
    return Schedule(std::move(k));
}

inline void set_record_field(TrajectoryRecord& r, const std::string& k, const std::string& v) {
    auto& c = r.config;
    if (set_param(r.params, k, v)) return;
    if (k == "scheme") c.scheme = parse_scheme(v);
    else if (k == "r") c.r = parse_double(v);
    else if (k == "theta") c.theta = parse_schedule_field(v);
    else if (k == "detuning") c.detuning = v.empty() ? std::nullopt : std::optional<Schedule>(parse_schedule_field(v));
    else if (k == "bandwidth_B") c.bandwidth = parse_double(v);
    else if (k == "dt_requested") c.dt = parse_double(v);
    else if (k == "duration") c.duration = parse_double(v);
    else if (k == "seed") c.seed = parse_u64(v);
    else if (k == "index") c.index = parse_u64(v);
    else if (k == "integrator") c.integrator = v == "weak2" ? SdeScheme::weak2 : SdeScheme::euler_maruyama;
    else if (k == "snapshot_stride") c.snapshot_stride = static_cast<int>(parse_int(v));
    else if (k == "current_stride") c.current_stride = static_cast<int>(parse_int(v));
    else if (k == "observe_times") {
        c.observe_times.clear();
        if (!v.empty())
            for (const auto& x : split(v, ';')) c.observe_times.push_back(parse_double(x));
    } else if (k == "max_jump_probability") c.max_jump_probability = parse_double(v);
    else if (k == "record_jump_states") c.record_jump_states = v == "true";
    else if (k == "dt") r.dt = parse_double(v);
    else if (k == "steps") r.steps = parse_int(v);
    else if (k == "cadence") r.cadence = static_cast<int>(parse_int(v));
    else if (k == "complex_current") r.complex_current = v == "true";
    else throw Error("record: unknown config key '" + k + "'");
}

}  // namespace detail

inline void write_record(std::ostream& os, const TrajectoryRecord& r, const Header& h = {}) {
    write_header(os, h);
    os << "[config]\n";
    for (const auto& [k, v] : config_kv(r)) os << k << " = " << v << '\n';
    os << "[jumps]\nt,channel\n";
    for (const auto& j : r.jumps) os << fmt(j.t) << ',' << to_string(j.channel) << '\n';
    os << "[current]\n" << (r.complex_current ? "t,re,im\n" : "t,re\n");
    for (const auto& s : r.current) {
        os << fmt(s.t) << ',' << fmt(s.i.real());
        if (r.complex_current) os << ',' << fmt(s.i.imag());
        os << '\n';
    }
}

inline TrajectoryRecord read_record(std::istream& is) {
    TrajectoryRecord r;
    std::string line, section;
    bool table_header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            section = trim(line);
            table_header = false;
            continue;
        }
        if (section == "[config]") {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw Error("record: bad config line '" + line + "'");
            detail::set_record_field(r, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } else if (section == "[jumps]" || section == "[current]") {
            if (!table_header) {
                table_header = true;
                continue;
            }
            const auto c = split(line, ',');
            if (section == "[jumps]") {
                if (c.size() != 2) throw Error("record: bad jump row");
                r.jumps.push_back({parse_double(c[0]), parse_channel(c[1])});
            } else {
                if (c.size() != (r.complex_current ? 3u : 2u)) throw Error("record: bad current row");
                r.current.push_back({parse_double(c[0]), cplx(parse_double(c[1]), r.complex_current ? parse_double(c[2]) : 0.0)});
            }
        } else {
            throw Error("record: content outside a section");
        }
    }
    return r;
}

inline nlohmann::json record_json(const TrajectoryRecord& r, const Header& h = {}) {
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_kv(r)) cfg[k] = v;
    nlohmann::json jumps = nlohmann::json::array(), cur = nlohmann::json::array();
    for (const auto& j : r.jumps) jumps.push_back({j.t, to_string(j.channel)});
    for (const auto& s : r.current) {
        if (r.complex_current) cur.push_back({s.t, s.i.real(), s.i.imag()});
        else cur.push_back({s.t, s.i.real()});
    }
    return {{"header", h}, {"config", cfg}, {"jumps", jumps}, {"current", cur}};
}

inline TrajectoryRecord record_from_json(const nlohmann::json& j) {
    TrajectoryRecord r;
    // complex_current first: row widths depend on it
    for (const auto& [k, v] : j.at("config").items()) detail::set_record_field(r, k, v.get<std::string>());
    for (const auto& x : j.at("jumps")) r.jumps.push_back({x.at(0).get<double>(), parse_channel(x.at(1))});
    for (const auto& x : j.at("current"))
        r.current.push_back({x.at(0).get<double>(), cplx(x.at(1).get<double>(), r.complex_current ? x.at(2).get<double>() : 0.0)});
    return r;
}

}  // namespace mpjc::io
