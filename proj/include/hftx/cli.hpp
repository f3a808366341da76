#pragma once

// Command-line front end. `run` parses flags, resolves the config, executes
// one command and writes its artifacts; the return value is the exit status.

#include "hftx/ac_link.hpp"
#include "hftx/catalog.hpp"
#include "hftx/config.hpp"
#include "hftx/design.hpp"
#include "hftx/error.hpp"
#include "hftx/reluctance.hpp"
#include "hftx/report.hpp"
#include "hftx/transient.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef HFTX_DATA_DIR
#define HFTX_DATA_DIR "data"
#endif

namespace hftx::cli {

enum ExitCode : int { ok = 0, infeasible = 1, nonconvergence = 2, config_error = 3 };

inline std::string default_catalog_path() { return std::string(HFTX_DATA_DIR) + "/catalog.txt"; }

/// Files produced by one command, written only after the command succeeds.
struct Artifacts {
    std::map<std::string, std::string> files;
    std::string stdout_text;
};

namespace detail {

struct Context {
    RunConfig cfg;
    Catalog catalog;
};

inline DesignResult run_design(const Context& c, std::size_t ports) {
    if (c.cfg.spec.ports() != ports) {
        throw ConfigError("this command needs " + std::to_string(ports) + " port voltages, config has " +
                          std::to_string(c.cfg.spec.ports()));
    }
    return design_transformer(c.cfg.spec, c.catalog);
}

struct Magnetics {
    CoreRecord core;
    MaterialRecord material;
    WindingPlacement placement;
    std::optional<DesignResult> design;
};

/// Core and turns for the reluctance commands: taken from the config when
/// both are given, otherwise from a design run.
inline Magnetics resolve_magnetics(const Context& c) {
    Magnetics m;
    std::vector<int> turns;
    if (c.cfg.layout == Layout::custom) {
        if (c.cfg.regions.empty()) throw ConfigError("custom layout needs placement.winding1.. entries");
        for (const auto& w : c.cfg.regions) turns.push_back(w.turns);
    }
    const bool need_design = (!c.cfg.core || (c.cfg.layout != Layout::custom && !c.cfg.turns));
    if (need_design) {
        const auto k = c.cfg.spec.ports();
        if (k != 2 && k != 3) throw ConfigError("spec.port_voltages must list 2 or 3 ports");
        m.design = run_design(c, k);
    }
    m.core = c.cfg.core ? c.catalog.core(*c.cfg.core) : m.design->core;
    m.material = c.catalog.material_of(m.core);
    if (c.cfg.layout == Layout::custom) {
        m.placement = WindingPlacement{Layout::custom, c.cfg.regions};
    } else {
        turns = c.cfg.turns ? *c.cfg.turns : m.design->turns;
        m.placement = preset_placement(c.cfg.layout, m.core, turns);
    }
    return m;
}

inline LinkAnalysis analyze(const Context& c, const Magnetics& m) {
    const auto net = build_ee_network(m.core, m.material, m.placement, c.cfg.mesh);
    LinkAnalysis a;
    a.layout = to_string(c.cfg.layout);
    a.current = c.cfg.analysis_current;
    a.excitation = c.cfg.excitation;
    const auto currents = operating_currents(c.cfg.excitation, c.cfg.analysis_current, net.turns);
    a.matrix = inductance_matrix(net, currents, c.cfg.inductance, c.cfg.solver);
    validate(a.matrix);
    if (a.matrix.size() == 2) {
        a.leakage = leakage_two_winding(a.matrix);
        a.magnetizing = magnetizing_inductance(a.matrix);
    } else if (a.matrix.size() == 3) {
        a.network = port_network_from_star(star_from_matrix(a.matrix));
    }
    return a;
}

inline std::string matrix_csv(const InductanceMatrix& m) {
    std::string out = "winding,turns";
    for (int j = 0; j < m.size(); ++j) out += ",l" + std::to_string(j + 1) + "_h";
    out += "\n";
    for (int i = 0; i < m.size(); ++i) {
        out += std::to_string(i + 1) + "," + std::to_string(m.turns[i]);
        for (int j = 0; j < m.size(); ++j) out += "," + format_g(m(i, j));
        out += "\n";
    }
    return out;
}

inline std::string trace_csv(const WaveformTrace& tr) {
    std::ostringstream ss;
    write_trace_csv(tr, ss);
    return ss.str();
}

inline WaveformTrace simulate_dab_design(const Context& c, const DesignResult& d, const std::optional<LinkAnalysis>& link) {
    DabSimulation s;
    s.V1 = d.spec.port_voltages[0];
    s.V2 = d.spec.port_voltages[1];
    s.n = d.turns_ratios[1];
    s.fs = d.spec.switching_frequency;
    s.L = d.spec.target_link_inductance;
    s.phi = c.cfg.phi2.value_or(d.rated_phase_shift);
    s.samples_per_period = c.cfg.samples_per_period;
    s.core = CoreFluxInfo{d.turns[0], d.core.Ac};
    if (link && link->leakage) {
        s.L = link->leakage->total;
        s.magnetizing_inductance = link->magnetizing;
    }
    return simulate_dab(s);
}

inline WaveformTrace simulate_tab_design(const Context& c, const DesignResult& d, const std::optional<LinkAnalysis>& link) {
    StarNetwork star;
    if (link && link->network) {
        star = link->network->star;
    } else {
        const double l = d.spec.target_link_inductance;
        star = star_from_delta(DeltaNetwork{{l, l, l}});
    }
    const double phi = d.rated_phase_shift;
    const auto& v = d.spec.port_voltages;
    return simulate_tab(star, {d.turns[0], d.turns[1], d.turns[2]}, {v[0], v[1], v[2]}, d.spec.switching_frequency,
                        c.cfg.phi2.value_or(phi), c.cfg.phi3.value_or(phi), c.cfg.steps_per_period,
                        CoreFluxInfo{d.turns[0], d.core.Ac});
}

inline Artifacts execute(const Context& c) {
    const auto& cmd = c.cfg.command;
    Artifacts art;
    ReportData rep;
    rep.balance_tolerance = c.cfg.balance_tolerance;
    rep.target_link_inductance = c.cfg.spec.target_link_inductance;

    if (cmd == "design-dab" || cmd == "design-tab") {
        rep.design = run_design(c, cmd == "design-dab" ? 2 : 3);
        art.files["design.kv"] = design_kv(*rep.design);
        art.stdout_text = report(rep);
        art.files["design.txt"] = art.stdout_text;
    } else if (cmd == "analyze-inductance") {
        const auto m = resolve_magnetics(c);
        rep.link = analyze(c, m);
        art.files["inductance.csv"] = matrix_csv(rep.link->matrix);
        art.stdout_text = report(rep);
        art.files["inductance.txt"] = art.stdout_text;
    } else if (cmd == "sweep-rms") {
        const auto m = resolve_magnetics(c);
        const auto net = build_ee_network(m.core, m.material, m.placement, c.cfg.mesh);
        SweepOptions o;
        o.excitation = c.cfg.excitation;
        o.method = c.cfg.inductance;
        o.solver = c.cfg.solver;
        o.threads = std::max(1u, std::thread::hardware_concurrency());
        const auto grid = c.cfg.grid.points();
        rep.sweep = sweep_rms(net, grid, o);
        std::ostringstream csv;
        write_sweep_csv(rep.sweep, csv);
        art.files["sweep.csv"] = csv.str();
        art.stdout_text = "layout: " + to_string(c.cfg.layout) + ", excitation: " + to_string(c.cfg.excitation) +
                          ", inductance: " + to_string(c.cfg.inductance) + "\n" + report(rep);
        art.files["sweep.txt"] = art.stdout_text;
        const auto bad = std::count_if(rep.sweep.begin(), rep.sweep.end(), [](const SweepRow& r) { return !r.converged; });
        if (bad > 0) {
            art.files["sweep.txt"] += std::to_string(bad) + " grid point(s) did not converge\n";
            art.stdout_text = art.files["sweep.txt"];
        }
    } else if (cmd == "simulate-dab" || cmd == "simulate-tab") {
        const bool dab = cmd == "simulate-dab";
        rep.design = run_design(c, dab ? 2 : 3);
        std::optional<LinkAnalysis> link;
        if (c.cfg.link == LinkSource::reluctance) {
            RunConfig r = c.cfg;
            r.core = rep.design->core.name;
            if (!r.turns && r.layout != Layout::custom) r.turns = rep.design->turns;
            link = analyze(Context{r, c.catalog}, resolve_magnetics(Context{r, c.catalog}));
            rep.link = link;
        }
        rep.trace = dab ? simulate_dab_design(c, *rep.design, link) : simulate_tab_design(c, *rep.design, link);
        art.files["trace.csv"] = trace_csv(rep.trace);
        art.stdout_text = report(rep);
        art.files["simulate.txt"] = art.stdout_text;
    } else if (cmd == "report") {
        const auto k = c.cfg.spec.ports();
        if (k != 2 && k != 3) throw ConfigError("spec.port_voltages must list 2 or 3 ports");
        rep.design = run_design(c, k);
        RunConfig r = c.cfg;
        r.core = rep.design->core.name;
        if (!r.turns && r.layout != Layout::custom) r.turns = rep.design->turns;
        const Context rc{r, c.catalog};
        rep.link = analyze(rc, resolve_magnetics(rc));
        std::optional<LinkAnalysis> target_link;  // waveforms use the designed link
        rep.trace = k == 2 ? simulate_dab_design(c, *rep.design, target_link) : simulate_tab_design(c, *rep.design, target_link);
        art.files["design.kv"] = design_kv(*rep.design);
        art.files["trace.csv"] = trace_csv(rep.trace);
        art.stdout_text = report(rep);
        art.files["report.txt"] = art.stdout_text;
    } else {
        throw ConfigError("unknown command `" + cmd + "`");
    }
    return art;
}

inline void write_artifacts(const std::string& dir, const Artifacts& art) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory `" + dir + "`: " + ec.message());
    for (const auto& [name, content] : art.files) {
        const auto path = std::filesystem::path(dir) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write `" + path.string() + "`");
        f << content;
    }
}

}  // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"High-frequency transformer design and AC-link analysis for DAB/TAB converters", "hftx"};
    std::string command, config_path, layout, grid, excitation, mesh, out_dir, rms_currents, inductance, catalog;
    bool print_config = false, allow_ratio_error = false;
    app.add_option("command", command, "design-dab | design-tab | analyze-inductance | sweep-rms | simulate-dab | simulate-tab | report");
    app.add_option("--config", config_path, "run configuration file");
    app.add_option("--layout", layout, "concentric | center-stacked | outer-legs | custom");
    app.add_option("--rms-grid", grid, "current grid lo:hi:n in A");
    app.add_option("--excitation", excitation, "primary-only | balanced");
    app.add_option("--mesh", mesh, "window mesh NXxNY");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--rms-currents", rms_currents, "comma-separated port RMS currents in A");
    app.add_option("--inductance", inductance, "frozen | incremental");
    app.add_option("--catalog", catalog, "catalog data file");
    app.add_flag("--allow-ratio-error", allow_ratio_error, "round secondary turns independently");
    app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }

    try {
        if (config_path.empty()) throw ConfigError("--config is required");
        detail::Context ctx;
        ctx.cfg = load_config(config_path);
        auto& cfg = ctx.cfg;
        if (!command.empty()) cfg.command = command;
        if (!layout.empty()) cfg.layout = parse_layout(layout);
        if (!grid.empty()) cfg.grid = parse_rms_grid(grid);
        if (!excitation.empty()) cfg.excitation = parse_excitation(excitation);
        if (!mesh.empty()) cfg.mesh = parse_mesh(mesh, cfg.mesh);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (!rms_currents.empty()) cfg.spec.port_rms_currents = parse_currents(rms_currents);
        if (!inductance.empty()) cfg.inductance = parse_inductance_method(inductance);
        if (!catalog.empty()) cfg.catalog_path = catalog;
        if (allow_ratio_error) cfg.spec.exact_turns_ratio = false;

        if (print_config) {
            out << serialize_config(cfg);
            return ok;
        }
        if (cfg.command.empty()) throw ConfigError("no command given");
        if (std::find(known_commands().begin(), known_commands().end(), cfg.command) == known_commands().end())
            throw ConfigError("unknown command `" + cfg.command + "`");

        ctx.catalog = load_catalog(cfg.catalog_path.empty() ? default_catalog_path() : cfg.catalog_path);
        const auto art = detail::execute(ctx);
        detail::write_artifacts(cfg.output_dir, art);
        out << art.stdout_text;
        return ok;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return infeasible;
    } catch (const SolverError& e) {
        err << "solver: " << e.what() << "\n";
        return nonconvergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }
}

}  // namespace hftx::cli
