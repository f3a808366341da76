#pragma once

// Core, ferrite and wire-gauge data loaded from the bundled text catalog.
//
// Units follow the mixed cgs convention used throughout the design equations:
// lengths in cm, areas in cm^2, flux density in T, resistivity in ohm*cm.

#include "hftx/error.hpp"
#include "hftx/kv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hftx {

struct MaterialRecord {
    std::string name;
    double Kfe = 0.0;           ///< W/cm^3/T^beta
    double beta = 0.0;          ///< core-loss exponent
    double Bsat = 0.0;          ///< T, saturation limit used for design checks
    double mu_r_initial = 0.0;  ///< relative initial permeability

    bool operator==(const MaterialRecord&) const = default;
};

struct CoreRecord {
    std::string name;
    double Ac = 0.0;    ///< cross-section of the centre leg, cm^2
    double WA = 0.0;    ///< usable winding window, cm^2
    double MLT = 0.0;   ///< mean length per turn, cm
    double lm = 0.0;    ///< magnetic path length, cm
    double Kgfe = 0.0;  ///< core geometrical constant
    // EE cross-section used by the reluctance mesh, cm.
    double window_width = 0.0;
    double window_height = 0.0;
    double center_leg_width = 0.0;
    double outer_leg_width = 0.0;
    double yoke_height = 0.0;
    double depth = 0.0;
    std::string material;

    bool operator==(const CoreRecord&) const = default;
};

struct WireGauge {
    int awg = 0;
    double area = 0.0;               ///< bare copper, cm^2
    double resistance_per_cm = 0.0;  ///< ohm/cm at 20 degC

    bool operator==(const WireGauge&) const = default;
};

/// Copper resistivity at 20 degC, ohm*cm.
inline constexpr double kCopperResistivity = 1.724e-6;

struct Catalog {
    double resistivity = kCopperResistivity;
    std::vector<CoreRecord> cores;
    std::vector<MaterialRecord> materials;
    std::vector<WireGauge> wires;  ///< sorted by increasing AWG (decreasing area)

    bool empty() const { return cores.empty() && materials.empty() && wires.empty(); }

    const CoreRecord& core(std::string_view name) const {
        for (const auto& c : cores)
            if (c.name == name) return c;
        throw Error("catalog has no core named `" + std::string(name) + "`");
    }

    const MaterialRecord& material(std::string_view name) const {
        for (const auto& m : materials)
            if (m.name == name) return m;
        throw Error("catalog has no material named `" + std::string(name) + "`");
    }

    const MaterialRecord& material_of(const CoreRecord& c) const { return material(c.material); }

    bool operator==(const Catalog&) const = default;
};

/// Erickson-style core geometrical constant of a core for loss exponent beta.
inline double core_geometrical_constant(const CoreRecord& c, double beta) {
    const double u = std::pow(std::pow(beta / 2.0, -beta / (beta + 2.0)) + std::pow(beta / 2.0, 2.0 / (beta + 2.0)),
                              -(beta + 2.0) / beta);
    return c.WA * std::pow(c.Ac, 2.0 * (beta - 1.0) / beta) / (c.MLT * std::pow(c.lm, 2.0 / beta)) * u;
}

namespace detail {

struct PendingRecord {
    std::map<std::string, KvEntry> fields;
    std::size_t first_line = 0;
};

inline double require_positive(const std::string& record, const PendingRecord& r, const std::string& field) {
    const auto it = r.fields.find(field);
    if (it == r.fields.end()) throw InvariantError(record, field, "missing");
    const double v = parse_double(it->second.value, it->second.line);
    if (!(v > 0.0) || !std::isfinite(v)) throw InvariantError(record, field, "must be strictly positive");
    return v;
}

inline void reject_unknown(const std::string& record, const PendingRecord& r,
                           std::initializer_list<std::string_view> known) {
    for (const auto& [field, entry] : r.fields) {
        if (std::find(known.begin(), known.end(), field) == known.end()) {
            throw ParseError(entry.line, "unknown field `" + field + "` for " + record);
        }
    }
}

}  // namespace detail

/// Parses catalog text. An empty text yields an empty catalog.
inline Catalog parse_catalog(std::string_view text) {
    const auto entries = parse_kv(text);

    std::map<std::string, detail::PendingRecord> cores, materials;
    std::map<int, detail::PendingRecord> wires;
    std::vector<std::string> core_order, material_order;
    Catalog cat;

    for (const auto& e : entries) {
        const auto first = e.key.find('.');
        const auto last = e.key.rfind('.');
        if (first == std::string::npos) throw ParseError(e.line, "key `" + e.key + "` has no section");
        const std::string kind = e.key.substr(0, first);
        if (kind == "catalog") {
            if (e.key != "catalog.resistivity") throw ParseError(e.line, "unknown key `" + e.key + "`");
            cat.resistivity = parse_double(e.value, e.line);
            if (!(cat.resistivity > 0.0)) throw InvariantError("catalog", "resistivity", "must be strictly positive");
            continue;
        }
        if (first == last) throw ParseError(e.line, "expected `" + kind + ".<name>.<field>`");
        const std::string name = e.key.substr(first + 1, last - first - 1);
        const std::string field = e.key.substr(last + 1);
        if (name.empty() || field.empty()) throw ParseError(e.line, "malformed key `" + e.key + "`");

        auto add = [&](detail::PendingRecord& r) {
            if (r.fields.empty()) r.first_line = e.line;
            r.fields.emplace(field, e);
        };
        if (kind == "core") {
            if (!cores.count(name)) core_order.push_back(name);
            add(cores[name]);
        } else if (kind == "material") {
            if (!materials.count(name)) material_order.push_back(name);
            add(materials[name]);
        } else if (kind == "wire") {
            add(wires[static_cast<int>(parse_int(name, e.line))]);
        } else {
            throw ParseError(e.line, "unknown section `" + kind + "`");
        }
    }

    for (const auto& name : material_order) {
        const auto& r = materials.at(name);
        const std::string rec = "material." + name;
        detail::reject_unknown(rec, r, {"Kfe", "beta", "Bsat", "mu_r_initial"});
        MaterialRecord m;
        m.name = name;
        m.Kfe = detail::require_positive(rec, r, "Kfe");
        m.beta = detail::require_positive(rec, r, "beta");
        m.Bsat = detail::require_positive(rec, r, "Bsat");
        m.mu_r_initial = detail::require_positive(rec, r, "mu_r_initial");
        if (!(m.mu_r_initial > 1.0)) throw InvariantError(rec, "mu_r_initial", "must exceed 1");
        cat.materials.push_back(std::move(m));
    }

    for (const auto& name : core_order) {
        const auto& r = cores.at(name);
        const std::string rec = "core." + name;
        detail::reject_unknown(rec, r,
                               {"Ac", "WA", "MLT", "lm", "Kgfe", "window_width", "window_height", "center_leg_width",
                                "outer_leg_width", "yoke_height", "depth", "material"});
        CoreRecord c;
        c.name = name;
        c.Ac = detail::require_positive(rec, r, "Ac");
        c.WA = detail::require_positive(rec, r, "WA");
        c.MLT = detail::require_positive(rec, r, "MLT");
        c.lm = detail::require_positive(rec, r, "lm");
        c.Kgfe = detail::require_positive(rec, r, "Kgfe");
        c.window_width = detail::require_positive(rec, r, "window_width");
        c.window_height = detail::require_positive(rec, r, "window_height");
        c.center_leg_width = detail::require_positive(rec, r, "center_leg_width");
        c.outer_leg_width = detail::require_positive(rec, r, "outer_leg_width");
        c.yoke_height = detail::require_positive(rec, r, "yoke_height");
        c.depth = detail::require_positive(rec, r, "depth");
        const auto mat = r.fields.find("material");
        if (mat == r.fields.end()) throw InvariantError(rec, "material", "missing");
        c.material = mat->second.value;
        if (c.window_width * c.window_height < c.WA) {
            throw InvariantError(rec, "WA", "exceeds window_width * window_height");
        }
        if (std::none_of(cat.materials.begin(), cat.materials.end(),
                         [&](const MaterialRecord& m) { return m.name == c.material; })) {
            throw InvariantError(rec, "material", "unknown material `" + c.material + "`");
        }
        cat.cores.push_back(std::move(c));
    }

    for (const auto& [awg, r] : wires) {  // std::map keeps AWG order
        const std::string rec = "wire." + std::to_string(awg);
        detail::reject_unknown(rec, r, {"area", "resistance_per_cm"});
        WireGauge w;
        w.awg = awg;
        w.area = detail::require_positive(rec, r, "area");
        w.resistance_per_cm = detail::require_positive(rec, r, "resistance_per_cm");
        if (!cat.wires.empty() && !(w.area < cat.wires.back().area)) {
            throw InvariantError(rec, "area", "must decrease as AWG increases");
        }
        cat.wires.push_back(w);
    }
    return cat;
}

inline Catalog load_catalog(const std::string& path) { return parse_catalog(read_text_file(path)); }

/// Writes a catalog in the same format `parse_catalog` reads.
inline std::string serialize_catalog(const Catalog& cat) {
    std::string out;
    auto put = [&](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
    put("catalog.resistivity", format_double(cat.resistivity));
    for (const auto& m : cat.materials) {
        const std::string p = "material." + m.name + ".";
        put(p + "Kfe", format_double(m.Kfe));
        put(p + "beta", format_double(m.beta));
        put(p + "Bsat", format_double(m.Bsat));
        put(p + "mu_r_initial", format_double(m.mu_r_initial));
    }
    for (const auto& c : cat.cores) {
        const std::string p = "core." + c.name + ".";
        put(p + "Ac", format_double(c.Ac));
        put(p + "WA", format_double(c.WA));
        put(p + "MLT", format_double(c.MLT));
        put(p + "lm", format_double(c.lm));
        put(p + "Kgfe", format_double(c.Kgfe));
        put(p + "window_width", format_double(c.window_width));
        put(p + "window_height", format_double(c.window_height));
        put(p + "center_leg_width", format_double(c.center_leg_width));
        put(p + "outer_leg_width", format_double(c.outer_leg_width));
        put(p + "yoke_height", format_double(c.yoke_height));
        put(p + "depth", format_double(c.depth));
        put(p + "material", c.material);
    }
    for (const auto& w : cat.wires) {
        const std::string p = "wire." + std::to_string(w.awg) + ".";
        put(p + "area", format_double(w.area));
        put(p + "resistance_per_cm", format_double(w.resistance_per_cm));
    }
    return out;
}

/// Largest cataloged wire whose area does not exceed `area_max`.
inline const WireGauge& smallest_wire_at_most(const Catalog& cat, double area_max) {
    if (!(area_max > 0.0)) throw Error("wire area bound must be positive");
    // wires are ordered by decreasing area, so the first fit is the largest.
    for (const auto& w : cat.wires)
        if (w.area <= area_max) return w;
    throw InfeasibleError("no gauge fits an area of " + format_g(area_max, 6) + " cm^2");
}

}  // namespace hftx
