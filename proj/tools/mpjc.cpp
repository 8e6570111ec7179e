// Command-line front end: builds a scenario from a file, a preset and flags, then runs it.
#include <mpjc/runner.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw mpjc::Error("cannot read " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven dissipative Jaynes-Cummings model at multiphoton resonance"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config, preset, out, format;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_max;
    std::vector<std::string> sets;
    bool lenient = false;
    app.add_option("--config", config, "scenario file (key = value in [sections])")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "named scenario bundle");
    app.add_option("--seed", seed, "64-bit seed");
    app.add_option("--out", out, "output path prefix");
    app.add_option("--n-max", n_max, "Fock truncation");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--set", sets, "override section.key=value (repeatable)");
    app.add_flag("--lenient", lenient, "ignore unknown keys in the scenario file");

    std::vector<std::pair<std::string, std::string>> ov;
    auto verb = [&](const std::string& name, const std::string& help, const std::string& task) {
        auto* c = app.add_subcommand(name, help);
        c->callback([&ov, task] { ov.emplace_back("run.task", task); });
        return c;
    };

    verb("run", "run the task named in the scenario", "")->callback([] {});
    verb("steady", "steady-state observables", "steady");
    verb("compare", "master equation vs four-level g2_AB", "compare");
    verb("wigner", "Wigner grid and quadrature marginal", "wigner");
    verb("tomography", "free-decay quadrature tomography", "tomography");
    verb("scan", "steady-state scan over drive or detuning", "scan");
    verb("presets", "list presets", "")->callback([] {
        for (const auto& [name, keys] : mpjc::scenario_presets()) {
            std::cout << name << '\n';
            for (const auto& [k, v] : keys) std::cout << "  " << k << " = " << v << '\n';
        }
        std::exit(0);
    });

    std::string corr_kind, four_kind, traj_mode;
    auto* corr = verb("correlate", "two-time correlations", "correlate");
    corr->add_option("kind", corr_kind, "g2|g2ab|htheta|wait")->required()->check(CLI::IsMember({"g2", "g2ab", "htheta", "wait"}));
    auto* four = verb("fourlevel", "effective four-level model", "fourlevel");
    four->add_option("kind", four_kind, "params|g2ab|resonant")->required()->check(CLI::IsMember({"params", "g2ab", "resonant"}));
    auto* traj = app.add_subcommand("trajectory", "quantum trajectories");
    traj->add_option("mode", traj_mode, "run|ensemble|sample-h")->required()->check(CLI::IsMember({"run", "ensemble", "sample-h"}));

    CLI11_PARSE(app, argc, argv);

    if (!corr_kind.empty()) ov.emplace_back("correlate.kind", corr_kind);
    if (!four_kind.empty()) ov.emplace_back("fourlevel.kind", four_kind);
    if (!traj_mode.empty()) ov.emplace_back("run.task", traj_mode == "run" ? "trajectory" : traj_mode == "ensemble" ? "ensemble" : "sample-h");
    std::erase_if(ov, [](const auto& kv) { return kv.first == "run.task" && kv.second.empty(); });
    if (!preset.empty()) ov.emplace_back("run.preset", preset);
    if (seed) ov.emplace_back("run.seed", std::to_string(*seed));
    if (!out.empty()) ov.emplace_back("run.out", out);
    if (n_max) ov.emplace_back("params.n_max", std::to_string(*n_max));
    if (!format.empty()) ov.emplace_back("run.format", format);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "--set expects section.key=value, got '" << s << "'\n";
            return 2;
        }
        ov.emplace_back(mpjc::io::trim(s.substr(0, eq)), mpjc::io::trim(s.substr(eq + 1)));
    }

    try {
        const auto scenario = mpjc::parse_scenario(config.empty() ? "" : slurp(config), !lenient, ov);
        return mpjc::run(scenario, std::cout, std::cerr);
    } catch (const mpjc::ValidationError& e) {
        std::cerr << "invalid scenario:\n";
        for (const auto& v : e.violations) std::cerr << "  " << v << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
