#pragma once

// Core-geometrical-constant transformer design for K = 2 or 3 windings.
//
// Mixed units: Ac, WA in cm^2; MLT, lm in cm; volt-seconds in V*s; B in T;
// resistivity in ohm*cm. The 1e4 and 1e8 factors convert those to SI.

#include "hftx/ac_link.hpp"
#include "hftx/catalog.hpp"
#include "hftx/error.hpp"
#include "hftx/transient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hftx {

struct DesignSpec {
    double power_rating = 0.0;           ///< W
    std::vector<double> port_voltages;   ///< square-wave amplitudes, V; port 1 first
    double switching_frequency = 0.0;    ///< Hz
    double duty = 0.5;                   ///< positive-portion fraction of the period
    double loss_fraction = 0.0;          ///< allowed total loss / rating
    double fill_factor = 0.0;            ///< Ku
    double target_link_inductance = 0.0; ///< H referred to port 1 (per delta branch for three ports)
    std::optional<std::vector<double>> port_rms_currents;  ///< A, port frame
    bool exact_turns_ratio = true;

    std::size_t ports() const { return port_voltages.size(); }
    double loss_budget() const { return loss_fraction * power_rating; }
};

inline void validate(const DesignSpec& s) {
    if (s.ports() < 2 || s.ports() > 3) throw Error("design needs 2 or 3 ports");
    for (double v : s.port_voltages)
        if (!(v > 0.0)) throw Error("port voltages must be positive");
    if (!(s.power_rating > 0.0)) throw Error("power rating must be positive");
    if (!(s.switching_frequency > 0.0)) throw Error("switching frequency must be positive");
    if (!(s.duty > 0.0 && s.duty < 1.0)) throw Error("duty must lie in (0, 1)");
    if (!(s.loss_fraction > 0.0)) throw Error("loss fraction must be positive");
    if (!(s.fill_factor > 0.0 && s.fill_factor <= 1.0)) throw Error("fill factor must lie in (0, 1]");
    if (!(s.target_link_inductance > 0.0)) throw Error("target link inductance must be positive");
    if (s.port_rms_currents && s.port_rms_currents->size() != s.ports())
        throw Error("need one RMS current per port");
}

/// V1 / Vk for every port (1 for port 1).
inline std::vector<double> voltage_ratios(const DesignSpec& s) {
    std::vector<double> r;
    for (double v : s.port_voltages) r.push_back(s.port_voltages.front() / v);
    return r;
}

/// Volt-seconds on the primary during the positive portion.
inline double compute_volt_seconds(const DesignSpec& s) { return s.port_voltages.front() * s.duty / s.switching_frequency; }

/// Sum of port RMS currents referred to port 1, using voltage ratios for turns ratios.
inline double total_referred_rms(std::span<const double> voltages, std::span<const double> currents) {
    if (voltages.size() != currents.size()) throw Error("need one RMS current per port");
    double total = 0.0;
    for (std::size_t k = 0; k < voltages.size(); ++k) total += voltages[k] / voltages[0] * currents[k];
    return total;
}

inline double total_referred_rms(const DesignSpec& s) {
    if (!s.port_rms_currents) throw Error("port RMS currents are not populated");
    return total_referred_rms(s.port_voltages, *s.port_rms_currents);
}

/// Minimum core geometrical constant for the loss budget, cm^5.
inline double required_kgfe(const DesignSpec& s, double volt_seconds, double irms_total, const MaterialRecord& m,
                            double resistivity = kCopperResistivity) {
    const double ploss = s.loss_budget();
    if (!(ploss > 0.0)) throw Error("loss budget must be positive");
    return resistivity * volt_seconds * volt_seconds * irms_total * irms_total * std::pow(m.Kfe, 2.0 / m.beta) /
           (4.0 * s.fill_factor * std::pow(ploss, (m.beta + 2.0) / m.beta)) * 1e8;
}

/// Smallest-Kgfe core meeting the bound; ties go to smaller Ac, then name.
inline const CoreRecord& select_core(double kgfe_min, const Catalog& cat) {
    if (cat.cores.empty()) throw Error("catalog has no cores");
    const CoreRecord* best = nullptr;
    for (const auto& c : cat.cores) {
        if (c.Kgfe < kgfe_min) continue;
        if (!best || c.Kgfe < best->Kgfe || (c.Kgfe == best->Kgfe && (c.Ac < best->Ac || (c.Ac == best->Ac && c.name < best->name))))
            best = &c;
    }
    if (!best) throw InfeasibleError("no core satisfies the bound Kgfe >= " + format_g(kgfe_min, 6));
    return *best;
}

/// Copper loss at peak flux density B with the window fully used, W.
inline double copper_loss(double B, double volt_seconds, double irms_total, const CoreRecord& c, double Ku,
                          double resistivity = kCopperResistivity) {
    return resistivity * volt_seconds * volt_seconds * irms_total * irms_total * c.MLT /
           (4.0 * Ku * c.WA * c.Ac * c.Ac * B * B) * 1e8;
}

inline double core_loss(double B, const CoreRecord& c, const MaterialRecord& m) {
    return m.Kfe * std::pow(B, m.beta) * c.Ac * c.lm;
}

/// Peak flux density that minimizes copper plus core loss.
inline double optimal_bmax(double volt_seconds, double irms_total, const CoreRecord& c, const MaterialRecord& m,
                           double Ku, double resistivity = kCopperResistivity) {
    if (!(irms_total > 0.0)) throw Error("total RMS current must be positive");
    if (!(volt_seconds > 0.0)) throw Error("volt-seconds must be positive");
    const double arg = resistivity * volt_seconds * volt_seconds * irms_total * irms_total * c.MLT * 1e8 /
                       (2.0 * Ku * c.WA * std::pow(c.Ac, 3.0) * c.lm * m.beta * m.Kfe);
    const double b = std::pow(arg, 1.0 / (m.beta + 2.0));
    if (!(b < m.Bsat)) {
        throw InfeasibleError("design infeasible at this core: optimal Bmax " + format_g(b, 5) + " T reaches Bsat " +
                              format_g(m.Bsat, 5) + " T");
    }
    return b;
}

/// Integer turns. N1 is rounded up; in exact mode it is raised further until
/// every N1 / ratio_k is an integer.
inline std::vector<int> compute_turns(double volt_seconds, double bmax, const CoreRecord& c,
                                      std::span<const double> ratios, bool exact = true) {
    if (!(bmax > 0.0)) throw Error("Bmax must be positive");
    const double raw = volt_seconds * 1e4 / (2.0 * bmax * c.Ac);
    long n1 = std::max(1L, static_cast<long>(std::ceil(raw - 1e-9)));

    auto secondary = [&](long n, double ratio) { return static_cast<double>(n) / ratio; };
    if (exact) {
        const long limit = n1 + 100000;
        long n = n1;
        for (; n <= limit; ++n) {
            bool ok = true;
            for (double r : ratios) {
                const double nk = secondary(n, r);
                if (nk < 1.0 - 1e-9 || std::abs(nk - std::round(nk)) > 1e-9 * std::max(1.0, nk)) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        if (n > limit) throw InfeasibleError("no integer turns reproduce the voltage ratios; allow a ratio error");
        n1 = n;
    }
    std::vector<int> turns;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        if (k == 0) {
            turns.push_back(static_cast<int>(n1));
            continue;
        }
        turns.push_back(static_cast<int>(std::max(1.0, std::round(secondary(n1, ratios[k])))));
    }
    if (turns.empty()) turns.push_back(static_cast<int>(n1));
    return turns;
}

/// Window fractions N_k I_k / (N1 I_total), with I_total referred through the actual turns.
inline std::vector<double> allocate_window(std::span<const int> turns, std::span<const double> currents) {
    if (turns.size() != currents.size()) throw Error("need one RMS current per winding");
    double total = 0.0;
    for (std::size_t k = 0; k < turns.size(); ++k) total += turns[k] * currents[k];
    if (!(total > 0.0)) throw Error("total ampere-turns must be positive");
    std::vector<double> alpha;
    for (std::size_t k = 0; k < turns.size(); ++k) alpha.push_back(turns[k] * currents[k] / total);
    return alpha;
}

struct WireChoice {
    WireGauge gauge;
    double area_bound = 0.0;  ///< cm^2
    bool clamped = false;     ///< bound exceeded the largest wire, or the winding carries no current
};

inline std::vector<WireChoice> size_wires(std::span<const double> alpha, double Ku, const CoreRecord& c,
                                          std::span<const int> turns, const Catalog& cat) {
    if (cat.wires.empty()) throw Error("catalog has no wire gauges");
    std::vector<WireChoice> out;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        WireChoice w;
        w.area_bound = alpha[k] * Ku * c.WA / turns[k];
        if (!(w.area_bound > 0.0)) {
            w.gauge = cat.wires.back();
            w.clamped = true;
        } else {
            w.gauge = smallest_wire_at_most(cat, w.area_bound);
            w.clamped = w.area_bound > cat.wires.front().area;
        }
        out.push_back(w);
    }
    return out;
}

/// Port RMS currents at rated power when each port exchanges the full rating
/// with port 1 over the target link inductance.
inline std::vector<double> rated_port_currents(const DesignSpec& s) {
    const double v1 = s.port_voltages.front();
    std::vector<double> currents(s.ports(), 0.0);
    for (std::size_t k = 1; k < s.ports(); ++k) {
        const double vk = s.port_voltages[k];
        LinkParams link{v1, vk, v1 / vk, s.switching_frequency, s.target_link_inductance, 0.0};
        DabSimulation sim{v1, vk, v1 / vk, s.target_link_inductance, s.switching_frequency,
                          solve_phase_shift(s.power_rating, link)};
        const auto tr = simulate_dab(sim);
        currents[0] = std::max(currents[0], tr.rms_currents[0]);
        currents[k] = tr.rms_currents[1];
    }
    return currents;
}

struct DesignResult {
    DesignSpec spec;  ///< inputs as resolved, with port currents filled in
    CoreRecord core;
    MaterialRecord material;
    double volt_seconds = 0.0;
    std::vector<double> port_rms_currents;
    double total_referred_rms = 0.0;
    double kgfe_required = 0.0;
    double bmax_optimal = 0.0;   ///< loss-optimal peak flux density, T
    double bmax = 0.0;           ///< peak flux density at the integer turns, T
    std::vector<int> turns;
    std::vector<double> turns_ratios;  ///< N1 / Nk
    std::vector<double> window_fractions;
    std::vector<WireChoice> wires;
    double copper_loss = 0.0;    ///< at bmax_optimal, W
    double core_loss = 0.0;      ///< at bmax_optimal, W
    double rated_phase_shift = 0.0;  ///< rad, rated power over one link branch from port 1
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string(name) + ": " + e.what());
    } catch (const SolverError& e) {
        throw SolverError(std::string(name) + ": " + e.what());
    } catch (const Error& e) {
        throw Error(std::string(name) + ": " + e.what());
    }
}

}  // namespace detail

inline DesignResult design_transformer(const DesignSpec& spec_in, const Catalog& cat) {
    DesignSpec spec = spec_in;
    detail::stage("spec", [&] { validate(spec); return 0; });

    DesignResult r;
    if (!spec.port_rms_currents) spec.port_rms_currents = detail::stage("rms-currents", [&] { return rated_port_currents(spec); });
    r.port_rms_currents = *spec.port_rms_currents;
    r.spec = spec;

    r.volt_seconds = compute_volt_seconds(spec);
    r.total_referred_rms = detail::stage("total-rms", [&] { return total_referred_rms(spec); });
    if (!(r.total_referred_rms > 0.0)) throw Error("total-rms: port currents must not all be zero");

    // Kgfe_min depends on the material; evaluate per material and keep the cores it admits.
    r.kgfe_required = detail::stage("kgfe", [&] {
        double kmax = 0.0;
        for (const auto& m : cat.materials)
            kmax = std::max(kmax, required_kgfe(spec, r.volt_seconds, r.total_referred_rms, m, cat.resistivity));
        if (cat.materials.empty()) throw Error("catalog has no materials");
        return kmax;
    });
    r.core = detail::stage("select-core", [&] { return select_core(r.kgfe_required, cat); });
    r.material = cat.material_of(r.core);
    r.kgfe_required = required_kgfe(spec, r.volt_seconds, r.total_referred_rms, r.material, cat.resistivity);

    r.bmax_optimal = detail::stage("bmax", [&] {
        return optimal_bmax(r.volt_seconds, r.total_referred_rms, r.core, r.material, spec.fill_factor, cat.resistivity);
    });
    const auto ratios = voltage_ratios(spec);
    r.turns = detail::stage("turns", [&] {
        return compute_turns(r.volt_seconds, r.bmax_optimal, r.core, ratios, spec.exact_turns_ratio);
    });
    for (int n : r.turns) r.turns_ratios.push_back(static_cast<double>(r.turns.front()) / n);
    r.bmax = r.volt_seconds * 1e4 / (2.0 * r.turns.front() * r.core.Ac);
    r.window_fractions = detail::stage("window", [&] { return allocate_window(r.turns, r.port_rms_currents); });
    r.wires = detail::stage("wires", [&] {
        return size_wires(r.window_fractions, spec.fill_factor, r.core, r.turns, cat);
    });
    r.copper_loss = copper_loss(r.bmax_optimal, r.volt_seconds, r.total_referred_rms, r.core, spec.fill_factor, cat.resistivity);
    r.core_loss = core_loss(r.bmax_optimal, r.core, r.material);
    r.rated_phase_shift = solve_phase_shift(spec.power_rating, {spec.port_voltages[0], spec.port_voltages[1], r.turns_ratios[1],
                                                                spec.switching_frequency, spec.target_link_inductance, 0.0});

    // result invariants
    const double alpha_sum = std::accumulate(r.window_fractions.begin(), r.window_fractions.end(), 0.0);
    if (alpha_sum > 1.0 + 1e-12) throw Error("window fractions exceed the window");
    if (!(r.bmax < r.material.Bsat)) throw InfeasibleError("flux density at the chosen turns reaches Bsat");
    return r;
}

}  // namespace hftx
