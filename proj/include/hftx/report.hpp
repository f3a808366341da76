#pragma once

// Plain-text report tables and the machine-readable design summary.

#include "hftx/ac_link.hpp"
#include "hftx/design.hpp"
#include "hftx/kv.hpp"
#include "hftx/reluctance.hpp"
#include "hftx/transient.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hftx {

/// Inductance extraction at one operating point.
struct LinkAnalysis {
    std::string layout;
    double current = 0.0;
    Excitation excitation = Excitation::balanced;
    InductanceMatrix matrix;
    std::optional<TwoWindingLeakage> leakage;  ///< two windings
    double magnetizing = 0.0;                  ///< two windings, H
    std::optional<PortNetwork> network;        ///< three windings
};

struct ReportData {
    std::optional<DesignResult> design;
    std::optional<LinkAnalysis> link;
    WaveformTrace trace;                     ///< empty for design-only runs
    std::optional<MaterialRecord> material;  ///< for the trace saturation line when no design is given
    std::vector<SweepRow> sweep;
    double balance_tolerance = 0.10;
    double target_link_inductance = 0.0;     ///< H, 0 hides the comparison line
};

namespace detail {

class Table {
public:
    explicit Table(std::string title) : title_(std::move(title)) {}
    void row(std::string label, std::string value) { rows_.emplace_back(std::move(label), std::move(value)); }

    std::string str() const {
        std::size_t w = 9;  // "Parameter"
        for (const auto& [l, v] : rows_) w = std::max(w, l.size());
        std::string out = title_ + "\n";
        auto line = [&](const std::string& l, const std::string& v) { out += "  " + l + std::string(w - l.size() + 2, ' ') + v + "\n"; };
        line("Parameter", "Value");
        line(std::string(w, '-'), "-----");
        for (const auto& [l, v] : rows_) line(l, v);
        return out;
    }

private:
    std::string title_;
    std::vector<std::pair<std::string, std::string>> rows_;
};

inline std::string percent(double x, int decimals = 1) { return format_fixed(100.0 * x, decimals) + "%"; }
inline std::string mh(double h) { return format_g(h * 1e3, 6) + " mH"; }
inline std::string port_label(std::size_t k) { return "Port " + std::to_string(k + 1); }

inline std::string saturation_line(const std::string& what, double b, const MaterialRecord& m) {
    const auto s = saturation_check(b, m);
    return "saturation (" + what + " " + format_g(b, 5) + " T vs Bsat " + format_g(m.Bsat, 4) +
           " T): " + (s.pass ? "pass" : "FAIL") + ", margin " + percent(s.margin) + "\n";
}

}  // namespace detail

inline std::string render_design(const DesignResult& d) {
    detail::Table t("Transformer specifications");
    const std::size_t K = d.turns.size();
    t.row("Core Type", d.core.name);
    t.row("Core Material", "Ferrite " + d.material.name);
    t.row("Winding Fill Factor", detail::percent(d.spec.fill_factor, 0));
    t.row("Core Maximum Flux Density", format_fixed(d.bmax, 4) + " T");
    t.row("Loss-Optimal Flux Density", format_fixed(d.bmax_optimal, 4) + " T");
    for (std::size_t k = 0; k < K; ++k) t.row(detail::port_label(k) + " Winding Number of Turns", std::to_string(d.turns[k]));
    for (std::size_t k = 1; k < K; ++k) t.row("Turns Ratio N1/N" + std::to_string(k + 1), format_g(d.turns_ratios[k], 6));
    for (std::size_t k = 0; k < K; ++k)
        t.row(detail::port_label(k) + " Fraction of Winding Area", detail::percent(d.window_fractions[k]));
    for (std::size_t k = 0; k < K; ++k) {
        const auto& w = d.wires[k];
        t.row(detail::port_label(k) + " Winding AWG#",
              std::to_string(w.gauge.awg) + (w.clamped ? " (clamped, bound " + format_g(w.area_bound, 4) + " cm^2)" : ""));
    }
    for (std::size_t k = 0; k < K; ++k)
        t.row(detail::port_label(k) + " RMS Current", format_g(d.port_rms_currents[k], 5) + " A");
    t.row("Total Referred RMS Current", format_g(d.total_referred_rms, 5) + " A");
    t.row("Required Kgfe", format_g(d.kgfe_required, 4) + " cm^5");
    t.row("Core Kgfe", format_g(d.core.Kgfe, 4) + " cm^5");
    t.row("Copper Loss at Optimum", format_g(d.copper_loss, 4) + " W");
    t.row("Core Loss at Optimum", format_g(d.core_loss, 4) + " W");
    t.row("Rated Phase Shift", format_fixed(d.rated_phase_shift, 4) + " rad");
    std::string out = t.str();
    out += detail::saturation_line("design Bmax", d.bmax, d.material);
    for (std::size_t k = 0; k < K; ++k)
        if (d.wires[k].clamped) out += "warning: " + detail::port_label(k) + " wire clamped to AWG " + std::to_string(d.wires[k].gauge.awg) + "\n";
    return out;
}

inline std::string render_link(const LinkAnalysis& a, double balance_tolerance, double target) {
    std::string out;
    {
        detail::Table t("Inductance matrix (" + a.layout + ", " + to_string(a.excitation) + ", I1 = " +
                        format_g(a.current, 6) + " A)");
        const int K = a.matrix.size();
        for (int i = 0; i < K; ++i)
            for (int j = i; j < K; ++j)
                t.row("L" + std::to_string(i + 1) + std::to_string(j + 1), detail::mh(a.matrix(i, j)));
        out += t.str();
    }
    if (a.leakage) {
        detail::Table t("Leakage inductances");
        t.row("Primary Leakage Ll1", detail::mh(a.leakage->primary));
        t.row("Secondary Leakage Ll2", detail::mh(a.leakage->secondary));
        t.row("Total Leakage LlT", detail::mh(a.leakage->total));
        t.row("Magnetizing Inductance", detail::mh(a.magnetizing));
        out += t.str();
        if (target > 0.0) out += "total leakage / target link inductance: " + format_g(a.leakage->total / target, 4) + "\n";
    }
    if (a.network) {
        const auto& s = a.network->star.legs;
        const auto& d = a.network->delta.branches;
        detail::Table st("Star equivalent referred to port 1");
        st.row("L1", detail::mh(s[0]));
        st.row("L2'", detail::mh(s[1]));
        st.row("L3'", detail::mh(s[2]));
        out += st.str();
        detail::Table dt("Delta equivalent referred to port 1");
        const char* names[3] = {"L12", "L13", "L23"};
        for (int k = 0; k < 3; ++k) dt.row(names[k], d[k] ? detail::mh(*d[k]) : std::string("open"));
        out += dt.str();
        if (a.network->delta.finite()) {
            int hi = 0;
            for (int k = 1; k < 3; ++k)
                if (*d[k] > *d[hi]) hi = k;
            out += std::string("largest delta branch: ") + names[hi] + "\n";
            const auto b = check_balance(a.network->delta, balance_tolerance);
            out += std::string("balanced: ") + (b.balanced ? "yes" : "no") + " (spread " + format_g(b.spread, 4) +
                   ", tolerance " + detail::percent(balance_tolerance) + ")\n";
        }
    }
    return out;
}

inline std::string render_trace(const WaveformTrace& tr, const std::optional<MaterialRecord>& material) {
    detail::Table t("Steady-state waveforms (" + std::to_string(tr.samples()) + " samples, " + std::to_string(tr.cycles) +
                    " cycle" + (tr.cycles == 1 ? "" : "s") + ")");
    for (std::size_t k = 0; k < tr.ports(); ++k) {
        t.row(detail::port_label(k) + " RMS Current", format_g(tr.rms_currents[k], 6) + " A");
        t.row(detail::port_label(k) + " Peak Current", format_g(tr.peak_currents[k], 6) + " A");
        t.row(detail::port_label(k) + " Average Power", format_g(tr.avg_port_powers[k], 6) + " W");
    }
    double bpk = 0.0;
    for (double b : tr.b) bpk = std::max(bpk, std::abs(b));
    if (bpk > 0.0) t.row("Peak Flux Density", format_fixed(bpk, 4) + " T");
    std::string out = t.str();
    if (bpk > 0.0 && material) out += detail::saturation_line("trace peak", bpk, *material);
    return out;
}

inline std::string render_sweep(const std::vector<SweepRow>& rows) {
    std::string out = "RMS sweep\n  i_rms_a      llt_mH       lm_mH  converged\n";
    for (const auto& r : rows) {
        auto col = [](std::string s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
        out += "  " + col(format_g(r.i_rms, 6), 7) + col(r.converged ? format_g(r.llt * 1e3, 6) : "nan", 12) +
               col(r.converged ? format_g(r.lm * 1e3, 6) : "nan", 12) + col(r.converged ? "yes" : "no", 11) + "\n";
    }
    return out;
}

/// Full report; sections without data are omitted.
inline std::string report(const ReportData& r) {
    std::string out;
    auto section = [&](const std::string& s) {
        if (!out.empty()) out += "\n";
        out += s;
    };
    if (r.design) section(render_design(*r.design));
    if (r.link) section(render_link(*r.link, r.balance_tolerance, r.target_link_inductance));
    if (!r.sweep.empty()) section(render_sweep(r.sweep));
    if (r.trace.samples() > 0) {
        std::optional<MaterialRecord> m = r.material;
        if (!m && r.design) m = r.design->material;
        section(render_trace(r.trace, m));
    }
    return out;
}

/// `key = value` summary of a design, one field per line.
inline std::string design_kv(const DesignResult& d) {
    std::string out;
    auto put = [&](const std::string& k, const std::string& v) { out += "design." + k + " = " + v + "\n"; };
    auto list = [](const auto& v, auto fmt) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
        return s;
    };
    auto num = [](double x) { return format_g(x, 10); };
    put("core", d.core.name);
    put("material", d.material.name);
    put("volt_seconds", num(d.volt_seconds));
    put("port_rms_currents_a", list(d.port_rms_currents, num));
    put("total_referred_rms_a", num(d.total_referred_rms));
    put("kgfe_required", num(d.kgfe_required));
    put("bmax_optimal_t", num(d.bmax_optimal));
    put("bmax_t", num(d.bmax));
    put("turns", list(d.turns, [](int n) { return std::to_string(n); }));
    put("turns_ratios", list(d.turns_ratios, num));
    put("window_fractions", list(d.window_fractions, num));
    put("awg", list(d.wires, [](const WireChoice& w) { return std::to_string(w.gauge.awg); }));
    put("wire_clamped", list(d.wires, [](const WireChoice& w) { return std::string(w.clamped ? "1" : "0"); }));
    put("copper_loss_w", num(d.copper_loss));
    put("core_loss_w", num(d.core_loss));
    put("rated_phase_shift_rad", num(d.rated_phase_shift));
    return out;
}

}  // namespace hftx
