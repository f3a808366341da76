#pragma once

// Run configuration: strict `section.key = value` schema, flag overrides and
// a canonical echo of the resolved values.

#include "hftx/design.hpp"
#include "hftx/error.hpp"
#include "hftx/kv.hpp"
#include "hftx/reluctance.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hftx {

inline const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> c{"design-dab", "design-tab",   "analyze-inductance", "sweep-rms",
                                            "simulate-dab", "simulate-tab", "report"};
    return c;
}

struct RmsGrid {
    double lo = 1.0;
    double hi = 10.0;
    int n = 10;

    std::vector<double> points() const { return linear_grid(lo, hi, n); }
};

enum class LinkSource { target, reluctance };

struct RunConfig {
    std::string command;
    std::string output_dir = "out";
    std::string catalog_path;  ///< empty selects the bundled catalog

    DesignSpec spec;

    Layout layout = Layout::center_stacked;
    std::optional<std::string> core;          ///< defaults to the designed core
    std::optional<std::vector<int>> turns;    ///< defaults to the designed turns
    std::vector<WindingRegion> regions;       ///< custom layout only

    MeshOptions mesh{};
    SolverOptions solver{};
    InductanceMethod inductance = InductanceMethod::frozen;

    double analysis_current = 5.0;
    Excitation excitation = Excitation::balanced;
    RmsGrid grid{};
    double balance_tolerance = 0.10;

    std::optional<double> phi2;  ///< rad; defaults to the rated-power phase shift
    std::optional<double> phi3;
    int samples_per_period = 512;
    int steps_per_period = 4096;
    LinkSource link = LinkSource::target;
};

namespace detail {

inline bool parse_bool(std::string_view s, std::size_t line) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ParseError(line, "not a boolean: `" + std::string(s) + "`");
}

inline std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_double(v[k]);
    return out;
}

inline std::string join(const std::vector<int>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + std::to_string(v[k]);
    return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto at = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos)));
        if (at == std::string_view::npos) break;
        pos = at + 1;
    }
    return out;
}

}  // namespace detail

/// `lo:hi:n`
inline RmsGrid parse_rms_grid(std::string_view s, std::size_t line = 0) {
    const auto parts = detail::split(s, ':');
    if (parts.size() != 3) throw ConfigError("rms grid must be `lo:hi:n`, got `" + std::string(s) + "`");
    RmsGrid g{parse_double(parts[0], line), parse_double(parts[1], line), static_cast<int>(parse_int(parts[2], line))};
    if (!(g.lo > 0.0) || !(g.hi >= g.lo) || g.n < 1) throw ConfigError("rms grid needs 0 < lo <= hi and n >= 1");
    return g;
}

/// `NXxNY`
inline MeshOptions parse_mesh(std::string_view s, MeshOptions base = {}, std::size_t line = 0) {
    const auto parts = detail::split(s, 'x');
    if (parts.size() != 2) throw ConfigError("mesh must be `NXxNY`, got `" + std::string(s) + "`");
    base.nx = static_cast<int>(parse_int(parts[0], line));
    base.ny = static_cast<int>(parse_int(parts[1], line));
    if (base.nx < 1 || base.ny < 1) throw ConfigError("mesh counts must be at least 1");
    return base;
}

inline InductanceMethod parse_inductance_method(std::string_view s) {
    if (s == "frozen") return InductanceMethod::frozen;
    if (s == "incremental") return InductanceMethod::incremental;
    throw ConfigError("unknown inductance method `" + std::string(s) + "`");
}

inline std::string to_string(InductanceMethod m) { return m == InductanceMethod::incremental ? "incremental" : "frozen"; }

/// `leg, u0, u1, v0, v1, turns`
inline WindingRegion parse_region(std::string_view s, std::size_t line) {
    const auto parts = detail::split(s, ',');
    if (parts.size() != 6) throw ParseError(line, "winding region must be `leg, u0, u1, v0, v1, turns`");
    WindingRegion w;
    w.leg = parse_leg(parts[0]);
    w.u0 = parse_double(parts[1], line);
    w.u1 = parse_double(parts[2], line);
    w.v0 = parse_double(parts[3], line);
    w.v1 = parse_double(parts[4], line);
    w.turns = static_cast<int>(parse_int(parts[5], line));
    return w;
}

inline std::vector<double> parse_currents(std::string_view s, std::size_t line = 0) {
    auto v = parse_double_list(s, line);
    for (double x : v)
        if (x < 0.0) throw ConfigError("RMS currents must be non-negative");
    return v;
}

/// Applies one `key = value` pair. Unknown keys raise ConfigError.
inline void apply_config_entry(RunConfig& c, const KvEntry& e) {
    const auto& k = e.key;
    const auto& v = e.value;
    const auto line = e.line;
    auto positive_int = [&] {
        const long x = parse_int(v, line);
        if (x < 1) throw ParseError(line, "`" + k + "` must be a positive integer");
        return static_cast<int>(x);
    };

    if (k == "run.command") c.command = v;
    else if (k == "run.output_dir") c.output_dir = v;
    else if (k == "run.catalog") c.catalog_path = v;
    else if (k == "spec.power_rating") c.spec.power_rating = parse_double(v, line);
    else if (k == "spec.port_voltages") c.spec.port_voltages = parse_double_list(v, line);
    else if (k == "spec.switching_frequency") c.spec.switching_frequency = parse_double(v, line);
    else if (k == "spec.duty") c.spec.duty = parse_double(v, line);
    else if (k == "spec.loss_fraction") c.spec.loss_fraction = parse_double(v, line);
    else if (k == "spec.fill_factor") c.spec.fill_factor = parse_double(v, line);
    else if (k == "spec.target_link_inductance") c.spec.target_link_inductance = parse_double(v, line);
    else if (k == "spec.port_rms_currents") c.spec.port_rms_currents = parse_currents(v, line);
    else if (k == "spec.exact_turns_ratio") c.spec.exact_turns_ratio = detail::parse_bool(v, line);
    else if (k == "placement.layout") c.layout = parse_layout(v);
    else if (k == "placement.core") c.core = v;
    else if (k == "placement.turns") {
        std::vector<int> t;
        for (auto p : detail::split(v, ',')) t.push_back(static_cast<int>(parse_int(p, line)));
        c.turns = t;
    } else if (k.starts_with("placement.winding")) {
        const auto idx = parse_int(std::string_view(k).substr(std::string_view("placement.winding").size()), line);
        if (idx < 1 || idx > 3) throw ParseError(line, "winding index must be 1, 2 or 3");
        if (c.regions.size() < static_cast<std::size_t>(idx)) c.regions.resize(static_cast<std::size_t>(idx));
        c.regions[static_cast<std::size_t>(idx - 1)] = parse_region(v, line);
    } else if (k == "solver.mesh") c.mesh = parse_mesh(v, c.mesh, line);
    else if (k == "solver.air_depth") c.mesh.air_depth_cm = parse_double(v, line);
    else if (k == "solver.tolerance") c.solver.tolerance = parse_double(v, line);
    else if (k == "solver.max_iterations") c.solver.max_iterations = positive_int();
    else if (k == "solver.max_halvings") c.solver.max_halvings = static_cast<int>(parse_int(v, line));
    else if (k == "solver.inductance") c.inductance = parse_inductance_method(v);
    else if (k == "analysis.current") c.analysis_current = parse_double(v, line);
    else if (k == "analysis.excitation") c.excitation = parse_excitation(v);
    else if (k == "analysis.rms_grid") c.grid = parse_rms_grid(v, line);
    else if (k == "analysis.balance_tolerance") c.balance_tolerance = parse_double(v, line);
    else if (k == "simulate.phi2") c.phi2 = parse_double(v, line);
    else if (k == "simulate.phi3") c.phi3 = parse_double(v, line);
    else if (k == "simulate.samples_per_period") c.samples_per_period = positive_int();
    else if (k == "simulate.steps_per_period") c.steps_per_period = positive_int();
    else if (k == "simulate.link") {
        if (v == "target") c.link = LinkSource::target;
        else if (v == "reluctance") c.link = LinkSource::reluctance;
        else throw ParseError(line, "simulate.link must be `target` or `reluctance`");
    } else throw ConfigError("line " + std::to_string(line) + ": unknown key `" + k + "`");
}

inline RunConfig parse_config(std::string_view text) {
    RunConfig c;
    for (const auto& e : parse_kv(text)) apply_config_entry(c, e);
    return c;
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

/// Canonical text of every resolved setting; parses back to the same config.
inline std::string serialize_config(const RunConfig& c) {
    std::string out;
    auto put = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    if (!c.command.empty()) put("run.command", c.command);
    put("run.output_dir", c.output_dir);
    if (!c.catalog_path.empty()) put("run.catalog", c.catalog_path);
    put("spec.power_rating", format_double(c.spec.power_rating));
    if (!c.spec.port_voltages.empty()) put("spec.port_voltages", detail::join(c.spec.port_voltages));
    put("spec.switching_frequency", format_double(c.spec.switching_frequency));
    put("spec.duty", format_double(c.spec.duty));
    put("spec.loss_fraction", format_double(c.spec.loss_fraction));
    put("spec.fill_factor", format_double(c.spec.fill_factor));
    put("spec.target_link_inductance", format_double(c.spec.target_link_inductance));
    if (c.spec.port_rms_currents) put("spec.port_rms_currents", detail::join(*c.spec.port_rms_currents));
    put("spec.exact_turns_ratio", c.spec.exact_turns_ratio ? "true" : "false");
    put("placement.layout", to_string(c.layout));
    if (c.core) put("placement.core", *c.core);
    if (c.turns) put("placement.turns", detail::join(*c.turns));
    for (std::size_t k = 0; k < c.regions.size(); ++k) {
        const auto& w = c.regions[k];
        put("placement.winding" + std::to_string(k + 1),
            to_string(w.leg) + ", " + format_double(w.u0) + ", " + format_double(w.u1) + ", " + format_double(w.v0) +
                ", " + format_double(w.v1) + ", " + std::to_string(w.turns));
    }
    put("solver.mesh", std::to_string(c.mesh.nx) + "x" + std::to_string(c.mesh.ny));
    if (c.mesh.air_depth_cm > 0.0) put("solver.air_depth", format_double(c.mesh.air_depth_cm));
    put("solver.tolerance", format_double(c.solver.tolerance));
    put("solver.max_iterations", std::to_string(c.solver.max_iterations));
    put("solver.max_halvings", std::to_string(c.solver.max_halvings));
    put("solver.inductance", to_string(c.inductance));
    put("analysis.current", format_double(c.analysis_current));
    put("analysis.excitation", to_string(c.excitation));
    put("analysis.rms_grid", format_double(c.grid.lo) + ":" + format_double(c.grid.hi) + ":" + std::to_string(c.grid.n));
    put("analysis.balance_tolerance", format_double(c.balance_tolerance));
    if (c.phi2) put("simulate.phi2", format_double(*c.phi2));
    if (c.phi3) put("simulate.phi3", format_double(*c.phi3));
    put("simulate.samples_per_period", std::to_string(c.samples_per_period));
    put("simulate.steps_per_period", std::to_string(c.steps_per_period));
    put("simulate.link", c.link == LinkSource::reluctance ? "reluctance" : "target");
    return out;
}

}  // namespace hftx
