#pragma once

// Periodic steady-state AC-link waveforms for square-wave bridges.
//
// Time origin is the rising edge of the port-1 voltage; other ports are
// delayed by their phase shift. Port currents flow from the bridge into the
// link, so a positive average port power means power leaving that bridge.

#include "hftx/ac_link.hpp"
#include "hftx/catalog.hpp"
#include "hftx/error.hpp"
#include "hftx/kv.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

namespace hftx {

struct WaveformTrace {
    double period = 0.0;
    std::vector<double> t;                    ///< one period, t_k = k T / samples
    std::vector<std::vector<double>> v;       ///< [port][sample], V, port frame
    std::vector<std::vector<double>> i;       ///< [port][sample], A, port frame
    std::vector<double> b;                    ///< core flux density, T (zeros when no core given)
    std::vector<double> rms_currents;         ///< per port, A, port frame
    std::vector<double> peak_currents;        ///< per port, A, port frame
    std::vector<double> avg_port_powers;      ///< per port, W
    bool converged = true;
    int cycles = 1;

    std::size_t ports() const { return v.size(); }
    std::size_t samples() const { return t.size(); }
};

/// Core data needed to add a flux-density column to a trace.
struct CoreFluxInfo {
    int primary_turns = 0;
    double Ac_cm2 = 0.0;
};

namespace detail {

/// +1 on [0, duty*T), then -duty/(1-duty) so that the period has no DC.
inline double square_unit(double t, double period, double duty = 0.5) {
    double x = std::fmod(t, period);
    if (x < 0.0) x += period;
    return x < duty * period ? 1.0 : -duty / (1.0 - duty);
}

/// Exact integral of square_unit over [0, t] for t in [0, period].
inline double square_unit_integral(double t, double period, double duty = 0.5) {
    const double on = duty * period;
    if (t <= on) return t;
    return on - (t - on) * duty / (1.0 - duty);
}

/// Exact average of the delayed 50% square wave over [a, b].
inline double square_average(double a, double b, double delay, double period) {
    auto prim = [&](double x) {
        x -= delay;
        const double k = std::floor(x / period);
        return square_unit_integral(x - k * period, period);  // each whole period integrates to 0
    };
    return (prim(b) - prim(a)) / (b - a);
}

/// Continuous piecewise-linear function on one period.
struct PiecewiseLinear {
    std::vector<double> knots;   // 0 = t0 < ... < tm = T
    std::vector<double> values;  // value at each knot

    double operator()(double t) const {
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        if (it == knots.begin()) return values.front();
        if (it == knots.end()) return values.back();
        const auto k = static_cast<std::size_t>(it - knots.begin()) - 1;
        const double w = (t - knots[k]) / (knots[k + 1] - knots[k]);
        return values[k] + w * (values[k + 1] - values[k]);
    }

    double mean() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k)
            s += 0.5 * (values[k] + values[k + 1]) * (knots[k + 1] - knots[k]);
        return s / (knots.back() - knots.front());
    }

    double rms() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            const double a = values[k], b = values[k + 1];
            s += (a * a + a * b + b * b) / 3.0 * (knots[k + 1] - knots[k]);
        }
        return std::sqrt(s / (knots.back() - knots.front()));
    }

    double peak() const {
        double p = 0.0;
        for (double v : values) p = std::max(p, std::abs(v));
        return p;
    }

    /// Average of g(t) * f(t) where g is constant on each segment.
    template <class SegmentValue>
    double weighted_mean(SegmentValue g) const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            const double mid = 0.5 * (knots[k] + knots[k + 1]);
            s += g(mid) * 0.5 * (values[k] + values[k + 1]) * (knots[k + 1] - knots[k]);
        }
        return s / (knots.back() - knots.front());
    }

    void shift(double offset) {
        for (double& v : values) v += offset;
    }
};

/// Integrates a piecewise-constant slope over the given knots, removing the mean.
template <class Slope>
PiecewiseLinear integrate_zero_mean(const std::vector<double>& knots, Slope slope) {
    PiecewiseLinear f;
    f.knots = knots;
    f.values.assign(knots.size(), 0.0);
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double mid = 0.5 * (knots[k] + knots[k + 1]);
        f.values[k + 1] = f.values[k] + slope(mid) * (knots[k + 1] - knots[k]);
    }
    f.shift(-f.mean());
    return f;
}

inline std::vector<double> flux_column(const std::vector<double>& t, double V1, double period, double duty,
                                       const std::optional<CoreFluxInfo>& core) {
    std::vector<double> b(t.size(), 0.0);
    if (!core || core->primary_turns <= 0 || !(core->Ac_cm2 > 0.0)) return b;
    const double area = core->Ac_cm2 * 1e-4;
    const double lambda = V1 * duty * period;
    // Zero-mean flux: the integral minus its period average. For the bipolar
    // wave the flux is a triangle between -lambda/2 and +lambda/2.
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double x = std::fmod(t[k], period);
        b[k] = (V1 * square_unit_integral(x, period, duty) - 0.5 * lambda) / (core->primary_turns * area);
    }
    return b;
}

}  // namespace detail

struct DabSimulation {
    double V1 = 0.0, V2 = 0.0;  ///< V
    double n = 1.0;             ///< N1/N2
    double L = 0.0;             ///< series link inductance referred to port 1, H
    double fs = 0.0;            ///< Hz
    double phi = 0.0;           ///< rad, port 2 delay
    int samples_per_period = 512;
    std::optional<double> magnetizing_inductance;  ///< H referred to port 1; none means infinite
    std::optional<CoreFluxInfo> core;
};

/// Exact steady state of the two-level link: the current is piecewise linear
/// between the four bridge edges.
inline WaveformTrace simulate_dab(const DabSimulation& s) {
    if (!(s.L > 0.0)) throw Error("link inductance must be positive");
    if (!(s.fs > 0.0)) throw Error("switching frequency must be positive");
    if (s.samples_per_period < 8) throw Error("need at least 8 samples per period");
    if (s.magnetizing_inductance && !(*s.magnetizing_inductance > 0.0))
        throw Error("magnetizing inductance must be positive");

    const double T = 1.0 / s.fs;
    const double phi = normalize_phase(s.phi);
    double delay = phi / (2.0 * pi) * T;
    if (delay < 0.0) delay += T;

    std::vector<double> knots{0.0, 0.5 * T, std::fmod(delay, T), std::fmod(delay + 0.5 * T, T), T};
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(), [T](double a, double b) { return std::abs(a - b) <= 1e-15 * T; }),
                knots.end());

    const double v2r = s.n * s.V2;
    auto v1 = [&](double t) { return s.V1 * detail::square_unit(t, T); };
    auto v2ref = [&](double t) { return v2r * detail::square_unit(t - delay, T); };

    const auto link = detail::integrate_zero_mean(knots, [&](double t) { return (v1(t) - v2ref(t)) / s.L; });
    detail::PiecewiseLinear mag;
    if (s.magnetizing_inductance) {
        const double lm = *s.magnetizing_inductance;
        mag = detail::integrate_zero_mean(knots, [&](double t) { return v2ref(t) / lm; });
    } else {
        mag.knots = knots;
        mag.values.assign(knots.size(), 0.0);
    }
    // Port-2 current into the link, referred to port 1.
    detail::PiecewiseLinear port2 = link;
    for (std::size_t k = 0; k < port2.values.size(); ++k) port2.values[k] = -(link.values[k] - mag.values[k]);

    WaveformTrace tr;
    tr.period = T;
    const auto ns = static_cast<std::size_t>(s.samples_per_period);
    tr.t.resize(ns);
    tr.v.assign(2, std::vector<double>(ns));
    tr.i.assign(2, std::vector<double>(ns));
    for (std::size_t k = 0; k < ns; ++k) {
        const double t = T * static_cast<double>(k) / static_cast<double>(ns);
        tr.t[k] = t;
        tr.v[0][k] = v1(t);
        tr.v[1][k] = s.V2 * detail::square_unit(t - delay, T);
        tr.i[0][k] = link(t);
        tr.i[1][k] = s.n * port2(t);
    }
    tr.rms_currents = {link.rms(), s.n * port2.rms()};
    tr.peak_currents = {link.peak(), s.n * port2.peak()};
    tr.avg_port_powers = {link.weighted_mean(v1), port2.weighted_mean(v2ref)};
    tr.b = detail::flux_column(tr.t, s.V1, T, 0.5, s.core);
    return tr;
}

struct StarSimulation {
    std::vector<double> legs;                ///< star leakages referred to port 1, H
    std::vector<double> voltages;            ///< square-wave amplitudes, port frame, V
    std::vector<double> referral;            ///< N1/Nk per port (1 for port 1)
    std::vector<double> phases;              ///< delay of each port behind port 1, rad (phases[0] = 0)
    double fs = 0.0;
    int steps_per_period = 4096;
    int max_cycles = 200;
    double rms_tolerance = 1e-6;
    std::optional<CoreFluxInfo> core;
};

/// Fixed-step trapezoidal integration of K square-wave sources feeding a star
/// of inductors. Voltages are cell-averaged over each step so that a period of
/// forcing has exactly zero mean.
inline WaveformTrace simulate_star(const StarSimulation& s) {
    const std::size_t k_ports = s.legs.size();
    if (k_ports < 2) throw Error("star simulation needs at least two ports");
    if (s.voltages.size() != k_ports || s.referral.size() != k_ports || s.phases.size() != k_ports)
        throw Error("star simulation inputs have inconsistent port counts");
    for (double l : s.legs)
        if (!(l > 0.0)) throw Error("star leakages must be positive");
    if (!(s.fs > 0.0)) throw Error("switching frequency must be positive");
    if (s.steps_per_period < 8) throw Error("need at least 8 steps per period");

    const double T = 1.0 / s.fs;
    const auto steps = static_cast<std::size_t>(s.steps_per_period);
    const double h = T / static_cast<double>(steps);

    std::vector<double> delay(k_ports);
    for (std::size_t k = 0; k < k_ports; ++k) {
        delay[k] = normalize_phase(s.phases[k]) / (2.0 * pi) * T;
        if (delay[k] < 0.0) delay[k] += T;
    }
    // Referred, cell-averaged source voltages at every step point (periodic).
    std::vector<std::vector<double>> vref(k_ports, std::vector<double>(steps + 1));
    for (std::size_t k = 0; k < k_ports; ++k)
        for (std::size_t n = 0; n <= steps; ++n) {
            const double t = h * static_cast<double>(n);
            vref[k][n] = s.referral[k] * s.voltages[k] * detail::square_average(t - 0.5 * h, t + 0.5 * h, delay[k], T);
        }

    double inv_sum = 0.0;
    for (double l : s.legs) inv_sum += 1.0 / l;
    // di_k/dt at step n
    std::vector<std::vector<double>> slope(k_ports, std::vector<double>(steps + 1));
    for (std::size_t n = 0; n <= steps; ++n) {
        double vs = 0.0;
        for (std::size_t k = 0; k < k_ports; ++k) vs += vref[k][n] / s.legs[k];
        vs /= inv_sum;
        for (std::size_t k = 0; k < k_ports; ++k) slope[k][n] = (vref[k][n] - vs) / s.legs[k];
    }

    std::vector<std::vector<double>> cur(k_ports, std::vector<double>(steps + 1));
    std::vector<double> start(k_ports, 0.0), prev_rms(k_ports, -1.0), rms(k_ports);
    bool converged = false;
    int cycle = 0;
    while (cycle < s.max_cycles) {
        ++cycle;
        for (std::size_t k = 0; k < k_ports; ++k) {
            cur[k][0] = start[k];
            for (std::size_t n = 0; n < steps; ++n)
                cur[k][n + 1] = cur[k][n] + 0.5 * h * (slope[k][n] + slope[k][n + 1]);
        }
        double scale = 0.0;
        for (std::size_t k = 0; k < k_ports; ++k) {
            double mean = 0.0;
            for (std::size_t n = 0; n < steps; ++n) mean += 0.5 * (cur[k][n] + cur[k][n + 1]);
            mean /= static_cast<double>(steps);
            for (double& x : cur[k]) x -= mean;
            double sq = 0.0;
            for (std::size_t n = 0; n < steps; ++n) sq += cur[k][n] * cur[k][n];
            rms[k] = std::sqrt(sq / static_cast<double>(steps));
            scale = std::max(scale, rms[k]);
            start[k] = cur[k][steps];
        }
        double change = 0.0;
        for (std::size_t k = 0; k < k_ports; ++k) change = std::max(change, std::abs(rms[k] - prev_rms[k]));
        prev_rms = rms;
        if (cycle > 1 && change <= s.rms_tolerance * std::max(scale, 1e-300)) {
            converged = true;
            break;
        }
        if (scale == 0.0 && cycle > 1) {
            converged = true;
            break;
        }
    }

    WaveformTrace tr;
    tr.period = T;
    tr.converged = converged;
    tr.cycles = cycle;
    tr.t.resize(steps);
    for (std::size_t n = 0; n < steps; ++n) tr.t[n] = h * static_cast<double>(n);
    tr.v.assign(k_ports, std::vector<double>(steps));
    tr.i.assign(k_ports, std::vector<double>(steps));
    tr.rms_currents.assign(k_ports, 0.0);
    tr.peak_currents.assign(k_ports, 0.0);
    tr.avg_port_powers.assign(k_ports, 0.0);
    for (std::size_t k = 0; k < k_ports; ++k) {
        double sq = 0.0, p = 0.0, peak = 0.0;
        for (std::size_t n = 0; n < steps; ++n) {
            tr.v[k][n] = s.voltages[k] * detail::square_unit(tr.t[n] - delay[k], T);
            tr.i[k][n] = s.referral[k] * cur[k][n];
            sq += cur[k][n] * cur[k][n];
            peak = std::max(peak, std::abs(cur[k][n]));
            // step-midpoint product keeps the stored-energy balance exact
            p += 0.25 * (vref[k][n] + vref[k][n + 1]) * (cur[k][n] + cur[k][n + 1]);
        }
        tr.rms_currents[k] = s.referral[k] * std::sqrt(sq / static_cast<double>(steps));
        tr.peak_currents[k] = s.referral[k] * peak;
        tr.avg_port_powers[k] = p / static_cast<double>(steps);
    }
    tr.b = detail::flux_column(tr.t, s.voltages[0], T, 0.5, s.core);
    return tr;
}

/// Three-port wrapper around `simulate_star`.
inline WaveformTrace simulate_tab(const StarNetwork& star, const std::array<int, 3>& turns,
                                  const std::array<double, 3>& voltages, double fs, double phi2, double phi3,
                                  int steps_per_period = 4096, std::optional<CoreFluxInfo> core = std::nullopt) {
    StarSimulation s;
    s.legs.assign(star.legs.begin(), star.legs.end());
    s.voltages.assign(voltages.begin(), voltages.end());
    for (int n : turns) s.referral.push_back(static_cast<double>(turns[0]) / n);
    s.phases = {0.0, phi2, phi3};
    s.fs = fs;
    s.steps_per_period = steps_per_period;
    s.core = core;
    auto tr = simulate_star(s);
    if (!tr.converged) throw SolverError("TAB steady state not reached after " + std::to_string(s.max_cycles) + " cycles");
    return tr;
}

struct FluxTrace {
    double peak = 0.0;  ///< T
    std::vector<double> t;
    std::vector<double> b;
};

/// Core flux density driven by the primary voltage (positive portion V1 for a
/// fraction `duty` of the period, volt-second balanced remainder).
inline FluxTrace flux_density_trace(double V1, int N1, double Ac_cm2, double fs, double duty = 0.5,
                                    int samples = 512) {
    if (V1 < 0.0 || N1 <= 0 || !(Ac_cm2 > 0.0) || !(fs > 0.0) || !(duty > 0.0 && duty < 1.0))
        throw Error("flux trace needs V1 >= 0 and positive turns, area, frequency with 0 < duty < 1");
    const double T = 1.0 / fs;
    FluxTrace f;
    f.peak = V1 * duty * T / (2.0 * N1 * Ac_cm2 * 1e-4);
    f.t.resize(static_cast<std::size_t>(samples));
    for (std::size_t k = 0; k < f.t.size(); ++k) f.t[k] = T * static_cast<double>(k) / static_cast<double>(samples);
    f.b = detail::flux_column(f.t, V1, T, duty, CoreFluxInfo{N1, Ac_cm2});
    return f;
}

struct SaturationCheck {
    bool pass = false;
    double margin = 0.0;  ///< (Bsat - B) / Bsat
};

inline SaturationCheck saturation_check(double peak_b, const MaterialRecord& material) {
    if (peak_b < 0.0) throw Error("peak flux density must be non-negative");
    return {peak_b < material.Bsat, (material.Bsat - peak_b) / material.Bsat};
}

/// CSV columns: t_s, v1_v.., i1_a.., b_t
inline void write_trace_csv(const WaveformTrace& tr, std::ostream& out) {
    out << "t_s";
    for (std::size_t k = 0; k < tr.ports(); ++k) out << ",v" << k + 1 << "_v";
    for (std::size_t k = 0; k < tr.ports(); ++k) out << ",i" << k + 1 << "_a";
    out << ",b_t\n";
    for (std::size_t n = 0; n < tr.samples(); ++n) {
        out << format_g(tr.t[n]);
        for (std::size_t k = 0; k < tr.ports(); ++k) out << ',' << format_g(tr.v[k][n]);
        for (std::size_t k = 0; k < tr.ports(); ++k) out << ',' << format_g(tr.i[k][n]);
        out << ',' << format_g(tr.b[n]) << '\n';
    }
}

}  // namespace hftx
