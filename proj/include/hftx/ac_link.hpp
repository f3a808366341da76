#pragma once

// AC-link algebra for dual and triple active bridges: phase-shift power
// transfer, its inversion, leakage extraction from self/mutual inductances and
// the three-port star/delta equivalents referred to port 1.

#include "hftx/error.hpp"
#include "hftx/kv.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace hftx {

using std::numbers::pi;

/// Two-port link seen from port 1.
struct LinkParams {
    double V1 = 0.0;   ///< port-1 square-wave amplitude, V
    double V2 = 0.0;   ///< port-2 square-wave amplitude, V
    double n = 1.0;    ///< turns ratio N1/N2
    double fs = 0.0;   ///< switching frequency, Hz
    double L = 0.0;    ///< link inductance referred to port 1, H
    double phi = 0.0;  ///< phase shift of port 2 behind port 1, rad
};

/// Maps any angle into (-pi, pi].
inline double normalize_phase(double phi) {
    double r = std::remainder(phi, 2.0 * pi);  // [-pi, pi]
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

inline void validate(const LinkParams& p) {
    if (!(p.L > 0.0)) throw Error("link inductance must be positive");
    if (!(p.fs > 0.0)) throw Error("switching frequency must be positive");
}

/// nV1V2 / (2 pi fs L): the prefactor of the phase-shift power law.
inline double power_scale(const LinkParams& p) { return p.n * p.V1 * p.V2 / (2.0 * pi * p.fs * p.L); }

/// Largest transferable power, reached at phi = pi/2.
inline double max_power(const LinkParams& p) { return p.n * p.V1 * p.V2 / (8.0 * p.fs * p.L); }

/// Average power out of port 1 for single-phase-shift square-wave operation.
inline double power_transfer(const LinkParams& p) {
    validate(p);
    const double phi = normalize_phase(p.phi);
    return power_scale(p) * phi * (1.0 - std::abs(phi) / pi);
}

/// Phase shift on the |phi| <= pi/2 branch that transfers `power`. `p.phi` is ignored.
inline double solve_phase_shift(double power, const LinkParams& p) {
    validate(p);
    const double pmax = max_power(p);
    if (std::abs(power) > pmax * (1.0 + 1e-12)) {
        throw InfeasibleError("requested " + format_g(power, 6) + " W exceeds the link maximum of " +
                              format_g(pmax, 6) + " W");
    }
    const double k = power_scale(p);
    const double disc = std::max(0.0, pi * pi - 4.0 * pi * std::abs(power) / k);
    // pi - sqrt(disc) loses digits for small power; use the conjugate form.
    const double mag = 2.0 * pi * std::abs(power) / k / (pi + std::sqrt(disc));
    return std::copysign(mag, power);
}

/// Symmetric self/mutual inductance matrix with per-winding turns.
struct InductanceMatrix {
    Eigen::MatrixXd L;       ///< H
    std::vector<int> turns;  ///< N_1..N_K

    int size() const { return static_cast<int>(turns.size()); }
    double operator()(int i, int j) const { return L(i, j); }
};

/// Checks symmetry and passivity (coupling coefficient <= 1) to a relative tolerance.
inline void validate(const InductanceMatrix& m, double rel_tol = 1e-9) {
    const int k = m.size();
    if (m.L.rows() != k || m.L.cols() != k) throw Error("inductance matrix size does not match winding count");
    const double scale = m.L.cwiseAbs().maxCoeff();
    for (int i = 0; i < k; ++i) {
        if (m.turns[i] > 0 && !(m.L(i, i) > 0.0)) throw Error("self inductance must be positive");
        for (int j = i + 1; j < k; ++j) {
            if (std::abs(m.L(i, j) - m.L(j, i)) > rel_tol * scale) throw Error("inductance matrix is not symmetric");
            const double minor = m.L(i, i) * m.L(j, j) - m.L(i, j) * m.L(j, i);
            if (minor < -rel_tol * scale * scale) throw Error("coupling coefficient exceeds 1");
        }
    }
}

struct TwoWindingLeakage {
    double primary = 0.0;    ///< H, in the primary frame
    double secondary = 0.0;  ///< H, in the secondary frame
    double total = 0.0;      ///< H, referred to the primary
};

/// Turns-ratio split of the two-winding leakage.
inline TwoWindingLeakage leakage_two_winding(const InductanceMatrix& m) {
    if (m.size() != 2) throw Error("two-winding leakage needs a 2x2 matrix");
    const double a = static_cast<double>(m.turns[0]) / m.turns[1];
    const double mutual = 0.5 * (m.L(0, 1) + m.L(1, 0));
    TwoWindingLeakage r;
    r.primary = m.L(0, 0) - a * mutual;
    r.secondary = m.L(1, 1) - mutual / a;
    r.total = r.primary + r.secondary * a * a;
    return r;
}

/// Magnetizing inductance (N1/N2) L12 seen from the primary.
inline double magnetizing_inductance(const InductanceMatrix& m) {
    const double a = static_cast<double>(m.turns[0]) / m.turns[1];
    return a * 0.5 * (m.L(0, 1) + m.L(1, 0));
}

/// Star leakages (L1, L2', L3') referred to port 1.
struct StarNetwork {
    std::array<double, 3> legs{};
};

/// Delta branch inductances (L12, L13, L23) referred to port 1. An empty branch
/// is open (infinite inductance, no power transfer).
struct DeltaNetwork {
    std::array<std::optional<double>, 3> branches{};

    bool finite() const {
        return std::all_of(branches.begin(), branches.end(), [](const auto& b) { return b.has_value(); });
    }
};

struct PortNetwork {
    StarNetwork star;
    DeltaNetwork delta;
};

/// Each winding's leakage in its own frame, ports 2 and 3 then referred to
/// port 1 by (N1/Nk)^2. Only the mutuals to winding 1 enter.
inline StarNetwork star_from_matrix(const InductanceMatrix& m) {
    if (m.size() != 3) throw Error("star model needs a 3x3 matrix");
    const double n1 = m.turns[0];
    const double a2 = n1 / m.turns[1];
    const double a3 = n1 / m.turns[2];
    const double m12 = 0.5 * (m.L(0, 1) + m.L(1, 0));
    const double m13 = 0.5 * (m.L(0, 2) + m.L(2, 0));
    StarNetwork s;
    s.legs[0] = m.L(0, 0) - a2 * m12;
    s.legs[1] = a2 * a2 * (m.L(1, 1) - m12 / a2);
    s.legs[2] = a3 * a3 * (m.L(2, 2) - m13 / a3);
    const double floor = -1e-12 * m.L(0, 0);
    for (double& leg : s.legs) {
        if (leg < floor) throw Error("non-physical matrix: negative star leakage " + format_g(leg, 6) + " H");
        leg = std::max(leg, 0.0);
    }
    return s;
}

inline DeltaNetwork delta_from_star(const StarNetwork& star) {
    const auto& [l1, l2, l3] = star.legs;
    if (l1 < 0.0 || l2 < 0.0 || l3 < 0.0) throw Error("star leakages must be non-negative");
    const int nonzero = (l1 > 0.0) + (l2 > 0.0) + (l3 > 0.0);
    if (nonzero < 2) throw Error("star needs at least two nonzero legs");
    const double s = l1 * l2 + l1 * l3 + l2 * l3;
    auto branch = [s](double denom) -> std::optional<double> {
        if (denom == 0.0) return std::nullopt;
        return s / denom;
    };
    return DeltaNetwork{{branch(l3), branch(l2), branch(l1)}};
}

/// Inverse of `delta_from_star` for a finite delta.
inline StarNetwork star_from_delta(const DeltaNetwork& delta) {
    if (!delta.finite()) throw Error("star_from_delta needs finite branches");
    const double l12 = *delta.branches[0], l13 = *delta.branches[1], l23 = *delta.branches[2];
    const double sum = l12 + l13 + l23;
    return StarNetwork{{l12 * l13 / sum, l12 * l23 / sum, l13 * l23 / sum}};
}

inline PortNetwork port_network_from_star(const StarNetwork& star) { return {star, delta_from_star(star)}; }

struct TabPowerFlows {
    double p12 = 0.0, p13 = 0.0, p23 = 0.0;  ///< branch powers, W (positive from lower to higher index)

    double port1() const { return p12 + p13; }
    double port2() const { return -p12 + p23; }
    double port3() const { return -p13 - p23; }
};

/// Applies the two-port phase-shift law on each delta branch. Voltages are
/// referred to port 1; phi2/phi3 are the delays of ports 2/3 behind port 1.
inline TabPowerFlows tab_power_flows(const DeltaNetwork& delta, std::array<double, 3> referred_voltages, double fs,
                                     double phi2, double phi3) {
    auto branch = [&](int idx, double va, double vb, double theta) {
        if (!delta.branches[idx]) return 0.0;
        return power_transfer({va, vb, 1.0, fs, *delta.branches[idx], theta});
    };
    const auto& v = referred_voltages;
    TabPowerFlows p;
    p.p12 = branch(0, v[0], v[1], phi2);
    p.p13 = branch(1, v[0], v[2], phi3);
    p.p23 = branch(2, v[1], v[2], phi3 - phi2);
    return p;
}

struct BalanceCheck {
    bool balanced = false;
    double spread = 0.0;  ///< (max - min) / mean
};

inline BalanceCheck check_balance(const DeltaNetwork& delta, double tol) {
    if (!delta.finite()) throw Error("balance check needs finite delta branches");
    const double a = *delta.branches[0], b = *delta.branches[1], c = *delta.branches[2];
    const double hi = std::max({a, b, c});
    const double lo = std::min({a, b, c});
    const double mean = (a + b + c) / 3.0;
    BalanceCheck r;
    r.spread = hi == lo ? 0.0 : (hi - lo) / mean;
    r.balanced = r.spread <= tol;
    return r;
}

}  // namespace hftx
