#pragma once

// Nonlinear magnetic reluctance network for an EE core: mesh builder, Newton
// solver on nodal magnetic potentials, inductance extraction and RMS sweeps.
//
// Geometry arrives in cm; the solver works in SI (m, Wb, A).

#include "hftx/ac_link.hpp"
#include "hftx/catalog.hpp"
#include "hftx/error.hpp"
#include "hftx/kv.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace hftx {

inline constexpr double kMu0 = 4e-7 * std::numbers::pi;

/// Anhysteretic arctan B-H curve.
struct BhCurve {
    double Bsat = 0.35;
    double mu_r = 2500.0;

    double knee() const { return std::numbers::pi * (mu_r - 1.0) * kMu0 / (2.0 * Bsat); }
    double B(double H) const { return kMu0 * H + 2.0 * Bsat / std::numbers::pi * std::atan(knee() * H); }
    double dBdH(double H) const {
        const double k = knee();
        return kMu0 + 2.0 * Bsat / std::numbers::pi * k / (1.0 + k * k * H * H);
    }
    /// B/H, continuous at H = 0.
    double secant(double H) const {
        if (std::abs(H) * knee() < 1e-8) return kMu0 * mu_r;
        return B(H) / H;
    }
};

enum class MediumKind { air, ferrite, linear };

struct Medium {
    MediumKind kind = MediumKind::air;
    BhCurve curve{};
    double mu_r = 1.0;  ///< used by `linear`

    static Medium air() { return {}; }
    static Medium ferrite(BhCurve c) { return {MediumKind::ferrite, c, c.mu_r}; }
    static Medium linear(double mu_r) { return {MediumKind::linear, {}, mu_r}; }

    double B(double H) const {
        switch (kind) {
            case MediumKind::ferrite: return curve.B(H);
            case MediumKind::linear: return kMu0 * mu_r * H;
            default: return kMu0 * H;
        }
    }
    double dBdH(double H) const {
        switch (kind) {
            case MediumKind::ferrite: return curve.dBdH(H);
            case MediumKind::linear: return kMu0 * mu_r;
            default: return kMu0;
        }
    }
    double secant(double H) const {
        switch (kind) {
            case MediumKind::ferrite: return curve.secant(H);
            case MediumKind::linear: return kMu0 * mu_r;
            default: return kMu0;
        }
    }
};

/// Ferrite part a branch lies in, for EE-built networks.
enum class CorePart { none, yoke, left_leg, center_leg, right_leg };

struct Branch {
    int from = 0;
    int to = 0;
    double length_cm = 0.0;
    double area_cm2 = 0.0;
    Medium medium{};
    CorePart part = CorePart::none;
};

/// Flux through a branch and its derivative for an MMF drop `mmf` (A) along it.
struct BranchFlux {
    double flux = 0.0;   ///< Wb
    double dflux = 0.0;  ///< Wb/A
};

inline BranchFlux branch_flux(const Branch& b, double mmf) {
    const double len = b.length_cm * 1e-2;
    const double area = b.area_cm2 * 1e-4;
    const double H = mmf / len;
    return {b.medium.B(H) * area, b.medium.dBdH(H) * area / len};
}

struct MagneticNetwork {
    int node_count = 0;
    std::vector<Branch> branches;
    std::vector<std::vector<double>> incidence;  ///< [winding][branch] signed turns threading the branch
    std::vector<int> turns;

    int windings() const { return static_cast<int>(turns.size()); }
};

inline void validate(const MagneticNetwork& net) {
    if (net.node_count < 2) throw Error("network needs at least two nodes");
    if (net.incidence.size() != net.turns.size()) throw Error("incidence rows must match the winding count");
    for (const auto& row : net.incidence)
        if (row.size() != net.branches.size()) throw Error("incidence row length must match the branch count");
    std::vector<int> parent(net.node_count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& b : net.branches) {
        if (b.from < 0 || b.to < 0 || b.from >= net.node_count || b.to >= net.node_count)
            throw Error("branch references a missing node");
        if (!(b.length_cm > 0.0) || !(b.area_cm2 > 0.0)) throw Error("branch length and area must be positive");
        parent[find(b.from)] = find(b.to);
    }
    const int root = find(0);
    for (int n = 1; n < net.node_count; ++n)
        if (find(n) != root) throw Error("magnetic network is not connected");
}

struct SolverOptions {
    int max_iterations = 100;
    double tolerance = 1e-9;
    int max_halvings = 20;
};

struct MagneticSolution {
    Eigen::VectorXd potential;  ///< A, node 0 grounded
    Eigen::VectorXd mmf;        ///< A, drop along each branch including sources
    Eigen::VectorXd flux;       ///< Wb
    int iterations = 0;
    double residual = 0.0;      ///< max node flux imbalance, Wb
};

namespace detail {

// Reduced incidence (branches x non-ground nodes) and source MMF per branch.
struct NetworkOperator {
    const MagneticNetwork* net = nullptr;
    Eigen::SparseMatrix<double> A;
    Eigen::SparseMatrix<double> At;
    Eigen::MatrixXd N;  ///< branches x windings

    explicit NetworkOperator(const MagneticNetwork& n) : net(&n) {
        validate(n);
        const int nb = static_cast<int>(n.branches.size());
        std::vector<Eigen::Triplet<double>> trip;
        for (int b = 0; b < nb; ++b) {
            const auto& br = n.branches[b];
            if (br.from != 0) trip.emplace_back(b, br.from - 1, 1.0);
            if (br.to != 0) trip.emplace_back(b, br.to - 1, -1.0);
        }
        A.resize(nb, n.node_count - 1);
        A.setFromTriplets(trip.begin(), trip.end());
        At = A.transpose();
        N.resize(nb, n.windings());
        for (int k = 0; k < n.windings(); ++k)
            for (int b = 0; b < nb; ++b) N(b, k) = n.incidence[k][b];
    }

    Eigen::VectorXd source(std::span<const double> currents) const {
        if (static_cast<int>(currents.size()) != net->windings()) throw Error("need one current per winding");
        Eigen::VectorXd i(currents.size());
        for (std::size_t k = 0; k < currents.size(); ++k) {
            if (!std::isfinite(currents[k])) throw Error("winding currents must be finite");
            i[static_cast<Eigen::Index>(k)] = currents[k];
        }
        return N * i;
    }

    void evaluate(const Eigen::VectorXd& F, Eigen::VectorXd& phi, Eigen::VectorXd& d) const {
        const auto nb = static_cast<Eigen::Index>(net->branches.size());
        phi.resize(nb);
        d.resize(nb);
        for (Eigen::Index b = 0; b < nb; ++b) {
            const auto r = branch_flux(net->branches[b], F[b]);
            phi[b] = r.flux;
            d[b] = r.dflux;
        }
    }

    Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& d) const {
        Eigen::SparseMatrix<double> J = At * d.asDiagonal() * A;
        return J;
    }
};

inline void factorize(Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>& ldlt, const Eigen::SparseMatrix<double>& J) {
    ldlt.compute(J);
    if (ldlt.info() != Eigen::Success) throw SingularJacobianError();
    const auto& D = ldlt.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    if (!(D.minCoeff() > 1e-14 * dmax)) throw SingularJacobianError();
}

inline MagneticSolution solve(const NetworkOperator& op, const Eigen::VectorXd& M, const SolverOptions& opts) {
    const auto nb = static_cast<Eigen::Index>(op.net->branches.size());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::VectorXd phi, d, phin, dn;

    // linear start at initial permeability
    op.evaluate(Eigen::VectorXd::Zero(nb), phi, d);
    factorize(ldlt, op.jacobian(d));
    Eigen::VectorXd U = ldlt.solve(-(op.At * (d.asDiagonal() * M)));

    double rn_max = 0.0;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        Eigen::VectorXd F = op.A * U + M;
        op.evaluate(F, phi, d);
        const Eigen::VectorXd r = op.At * phi;
        factorize(ldlt, op.jacobian(d));
        const Eigen::VectorXd dU = ldlt.solve(-r);

        double s = 1.0;
        Eigen::VectorXd Un, rn;
        for (int h = 0;; ++h) {
            Un = U + s * dU;
            op.evaluate(op.A * Un + M, phin, dn);
            rn = op.At * phin;
            if (rn.norm() <= r.norm() || h >= opts.max_halvings) break;
            s *= 0.5;
        }
        U = Un;
        const double scale = phin.cwiseAbs().maxCoeff();
        const double update = (phin - phi).cwiseAbs().maxCoeff();
        rn_max = rn.size() ? rn.cwiseAbs().maxCoeff() : 0.0;
        if (update <= opts.tolerance * scale && rn_max <= opts.tolerance * scale) {
            MagneticSolution sol;
            sol.potential = Eigen::VectorXd::Zero(op.net->node_count);
            sol.potential.tail(op.net->node_count - 1) = U;
            sol.mmf = op.A * U + M;
            sol.flux = phin;
            sol.iterations = it;
            sol.residual = rn_max;
            return sol;
        }
    }
    throw NonConvergenceError(opts.max_iterations, rn_max);
}

}  // namespace detail

/// Newton-Raphson solve of the node flux balance for the given winding currents (A).
inline MagneticSolution solve_nonlinear(const MagneticNetwork& net, std::span<const double> currents,
                                        const SolverOptions& opts = {}) {
    const detail::NetworkOperator op(net);
    return detail::solve(op, op.source(currents), opts);
}

/// lambda_k = sum_b incidence_kb * flux_b, Wb-turns.
inline std::vector<double> flux_linkage(const MagneticNetwork& net, const Eigen::VectorXd& flux) {
    std::vector<double> out(net.windings(), 0.0);
    for (int k = 0; k < net.windings(); ++k)
        for (std::size_t b = 0; b < net.branches.size(); ++b) out[k] += net.incidence[k][b] * flux[static_cast<Eigen::Index>(b)];
    return out;
}

enum class InductanceMethod {
    frozen,       ///< permeability frozen at B/H of the operating point, then linear
    incremental,  ///< central differences of flux linkage
};

inline InductanceMatrix inductance_matrix(const MagneticNetwork& net, std::span<const double> currents,
                                          InductanceMethod method = InductanceMethod::frozen,
                                          const SolverOptions& opts = {}) {
    const detail::NetworkOperator op(net);
    const int K = net.windings();
    InductanceMatrix out{Eigen::MatrixXd::Zero(K, K), net.turns};

    if (method == InductanceMethod::incremental) {
        std::vector<double> ip(currents.begin(), currents.end());
        for (int k = 0; k < K; ++k) {
            const double di = std::max(1e-3 * std::abs(currents[k]), 1e-3);
            auto im = ip;
            ip[k] = currents[k] + di;
            im[k] = currents[k] - di;
            const auto lp = flux_linkage(net, detail::solve(op, op.source(ip), opts).flux);
            const auto lm = flux_linkage(net, detail::solve(op, op.source(im), opts).flux);
            ip[k] = currents[k];
            for (int j = 0; j < K; ++j) out.L(j, k) = (lp[j] - lm[j]) / (2.0 * di);
        }
    } else {
        const auto sol = detail::solve(op, op.source(currents), opts);
        const auto nb = static_cast<Eigen::Index>(net.branches.size());
        Eigen::VectorXd g(nb);
        for (Eigen::Index b = 0; b < nb; ++b) {
            const auto& br = net.branches[b];
            const double len = br.length_cm * 1e-2;
            g[b] = br.medium.secant(sol.mmf[b] / len) * br.area_cm2 * 1e-4 / len;
        }
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
        detail::factorize(ldlt, op.jacobian(g));
        const Eigen::MatrixXd GN = g.asDiagonal() * op.N;
        const Eigen::MatrixXd X = ldlt.solve(Eigen::MatrixXd(op.At * GN));
        out.L = op.N.transpose() * GN - GN.transpose() * (op.A * X);
    }
    out.L = 0.5 * (out.L + out.L.transpose()).eval();
    return out;
}

// ---------------------------------------------------------------- EE geometry

enum class Leg { center, left, right };

/// Rectangular winding cross-section in one window. u is the distance from the
/// centre-leg surface, v the height above the bottom yoke, both in cm. A centre
/// winding is drawn in the left window and mirrored into the right one.
struct WindingRegion {
    Leg leg = Leg::center;
    double u0 = 0.0, u1 = 0.0;
    double v0 = 0.0, v1 = 0.0;
    int turns = 0;
};

enum class Layout { concentric, center_stacked, outer_legs, custom };

inline std::string to_string(Layout l) {
    switch (l) {
        case Layout::concentric: return "concentric";
        case Layout::center_stacked: return "center-stacked";
        case Layout::outer_legs: return "outer-legs";
        default: return "custom";
    }
}

inline Layout parse_layout(std::string_view s) {
    if (s == "concentric") return Layout::concentric;
    if (s == "center-stacked" || s == "center-leg-stacked") return Layout::center_stacked;
    if (s == "outer-legs") return Layout::outer_legs;
    if (s == "custom") return Layout::custom;
    throw ConfigError("unknown layout `" + std::string(s) + "`");
}

inline std::string to_string(Leg l) {
    switch (l) {
        case Leg::left: return "left";
        case Leg::right: return "right";
        default: return "center";
    }
}

inline Leg parse_leg(std::string_view s) {
    if (s == "center") return Leg::center;
    if (s == "left") return Leg::left;
    if (s == "right") return Leg::right;
    throw ConfigError("unknown leg `" + std::string(s) + "`");
}

struct WindingPlacement {
    Layout layout = Layout::custom;
    std::vector<WindingRegion> windings;

    std::vector<int> turns() const {
        std::vector<int> t;
        for (const auto& w : windings) t.push_back(w.turns);
        return t;
    }
};

/// Standard arrangements expressed as fractions of the window box.
inline WindingPlacement preset_placement(Layout layout, const CoreRecord& core, std::span<const int> turns) {
    const double ww = core.window_width, wh = core.window_height;
    const double vb = 0.035, vt = 0.965;  // bobbin clearance top and bottom
    WindingPlacement p{layout, {}};
    const std::size_t K = turns.size();
    if (K < 2) throw Error("a layout needs at least two windings");
    switch (layout) {
        case Layout::concentric: {
            // innermost winding first, equal radial build, one gap between layers
            const double u_lo = 0.05, u_hi = 0.85, gap = 0.1;
            const double w = (u_hi - u_lo - gap * (K - 1)) / K;
            for (std::size_t k = 0; k < K; ++k) {
                const double a = u_lo + k * (w + gap);
                p.windings.push_back({Leg::center, a * ww, (a + w) * ww, vb * wh, vt * wh, turns[k]});
            }
            break;
        }
        case Layout::center_stacked: {
            const double gap = K == 2 ? 0.034 : 0.017;
            const double h = (vt - vb - gap * (K - 1)) / K;
            for (std::size_t k = 0; k < K; ++k) {
                const double a = vb + k * (h + gap);
                p.windings.push_back({Leg::center, 0.05 * ww, 0.95 * ww, a * wh, (a + h) * wh, turns[k]});
            }
            break;
        }
        case Layout::outer_legs: {
            if (K != 2) throw Error("outer-legs layout takes exactly two windings");
            p.windings.push_back({Leg::left, 0.534 * ww, 0.922 * ww, vb * wh, vt * wh, turns[0]});
            p.windings.push_back({Leg::right, 0.534 * ww, 0.922 * ww, vb * wh, vt * wh, turns[1]});
            break;
        }
        default: throw Error("custom placement has no preset");
    }
    return p;
}

inline void validate(const WindingPlacement& p, const CoreRecord& core) {
    if (p.windings.empty()) throw Error("placement has no windings");
    constexpr double eps = 1e-12;
    for (std::size_t k = 0; k < p.windings.size(); ++k) {
        const auto& w = p.windings[k];
        const std::string id = "winding " + std::to_string(k + 1);
        if (w.turns < 0) throw Error(id + ": turns must be non-negative");
        if (!(w.u1 > w.u0) || !(w.v1 > w.v0)) throw Error(id + ": region must have positive extent");
        if (w.u0 < -eps || w.u1 > core.window_width + eps || w.v0 < -eps || w.v1 > core.window_height + eps)
            throw Error(id + ": region lies outside the window");
    }
    // A centre winding occupies both windows.
    auto windows = [](Leg l) { return l == Leg::center ? 3 : l == Leg::left ? 1 : 2; };
    for (std::size_t a = 0; a < p.windings.size(); ++a) {
        for (std::size_t b = a + 1; b < p.windings.size(); ++b) {
            const auto& x = p.windings[a];
            const auto& y = p.windings[b];
            if ((windows(x.leg) & windows(y.leg)) == 0) continue;
            const bool overlap = std::min(x.u1, y.u1) - std::max(x.u0, y.u0) > eps &&
                                 std::min(x.v1, y.v1) - std::max(x.v0, y.v0) > eps;
            if (overlap)
                throw Error("windings " + std::to_string(a + 1) + " and " + std::to_string(b + 1) + " overlap");
        }
    }
}

struct MeshOptions {
    int nx = 8;                ///< cells across each window
    int ny = 12;               ///< cells along the window height
    double air_depth_cm = 0.0; ///< depth of window air tubes; 0 selects MLT / 2
};

/// Cell-vertex reluctance mesh over the full EE cross-section. Each cell edge
/// carries two parallel half-tubes, one per adjacent cell, in that cell's medium.
inline MagneticNetwork build_ee_network(const CoreRecord& core, const MaterialRecord& material,
                                        const WindingPlacement& placement, const MeshOptions& mesh = {}) {
    if (mesh.nx < 1 || mesh.ny < 1) throw Error("mesh needs at least one cell per window direction");
    validate(placement, core);
    const double ow = core.outer_leg_width, ww = core.window_width, cw = core.center_leg_width;
    const double wh = core.window_height, yh = core.yoke_height;
    const double air_depth = mesh.air_depth_cm > 0.0 ? mesh.air_depth_cm : 0.5 * core.MLT;
    const BhCurve curve{material.Bsat, material.mu_r_initial};

    auto segment = [](std::vector<double>& v, double a, double b, int n) {
        for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / n);
    };
    std::vector<double> xs, ys;
    segment(xs, 0.0, ow, 2);
    segment(xs, ow, ow + ww, mesh.nx);
    segment(xs, ow + ww, ow + ww + cw, 2);
    segment(xs, ow + ww + cw, ow + 2 * ww + cw, mesh.nx);
    segment(xs, ow + 2 * ww + cw, 2 * ow + 2 * ww + cw, 2);
    xs.push_back(2 * ow + 2 * ww + cw);
    segment(ys, 0.0, yh, 2);
    segment(ys, yh, yh + wh, mesh.ny);
    segment(ys, yh + wh, 2 * yh + wh, 2);
    ys.push_back(2 * yh + wh);

    const int NX = static_cast<int>(xs.size()) - 1;
    const int NY = static_cast<int>(ys.size()) - 1;
    const int left0 = 2, left1 = 2 + mesh.nx;   // left window cell columns [left0, left1)
    const int right0 = left1 + 2, right1 = right0 + mesh.nx;
    const int win0 = 2, win1 = 2 + mesh.ny;

    auto is_air = [&](int i, int j) {
        return ((i >= left0 && i < left1) || (i >= right0 && i < right1)) && j >= win0 && j < win1;
    };
    auto part_of = [&](int i, int j) {
        if (is_air(i, j)) return CorePart::none;
        if (j < win0 || j >= win1) return CorePart::yoke;
        if (i < left0) return CorePart::left_leg;
        if (i >= right1) return CorePart::right_leg;
        return CorePart::center_leg;
    };
    auto vid = [&](int i, int j) { return i * (NY + 1) + j; };

    MagneticNetwork net;
    net.node_count = (NX + 1) * (NY + 1);
    const int K = static_cast<int>(placement.windings.size());
    net.turns = placement.turns();

    // first half-tube index of each vertical edge, for winding cuts
    std::vector<std::vector<std::pair<int, int>>> vertical(NX + 1, std::vector<std::pair<int, int>>(NY, {-1, -1}));

    auto add_tube = [&](int a, int b, double len, double width, int ci, int cj) {
        Branch br;
        br.from = a;
        br.to = b;
        br.length_cm = len;
        const bool air = is_air(ci, cj);
        br.area_cm2 = width * (air ? air_depth : core.depth);
        br.medium = air ? Medium::air() : Medium::ferrite(curve);
        br.part = part_of(ci, cj);
        net.branches.push_back(br);
        return static_cast<int>(net.branches.size()) - 1;
    };

    for (int i = 0; i < NX; ++i) {
        for (int j = 0; j <= NY; ++j) {
            const double len = xs[i + 1] - xs[i];
            if (j > 0) add_tube(vid(i, j), vid(i + 1, j), len, 0.5 * (ys[j] - ys[j - 1]), i, j - 1);
            if (j < NY) add_tube(vid(i, j), vid(i + 1, j), len, 0.5 * (ys[j + 1] - ys[j]), i, j);
        }
    }
    for (int i = 0; i <= NX; ++i) {
        for (int j = 0; j < NY; ++j) {
            const double len = ys[j + 1] - ys[j];
            int first = -1, second = -1;
            if (i > 0) first = add_tube(vid(i, j), vid(i, j + 1), len, 0.5 * (xs[i] - xs[i - 1]), i - 1, j);
            if (i < NX) second = add_tube(vid(i, j), vid(i, j + 1), len, 0.5 * (xs[i + 1] - xs[i]), i, j);
            vertical[i][j] = {first, second};
        }
    }

    net.incidence.assign(K, std::vector<double>(net.branches.size(), 0.0));
    auto thread = [&](int k, int i, int j, double t) {
        for (int idx : {vertical[i][j].first, vertical[i][j].second})
            if (idx >= 0) net.incidence[k][idx] += t;
    };
    auto overlap = [](double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); };

    for (int k = 0; k < K; ++k) {
        const auto& w = placement.windings[k];
        const double area = (w.u1 - w.u0) * (w.v1 - w.v0);
        for (int j = win0; j < win1; ++j) {
            const double ov = overlap(ys[j] - yh, ys[j + 1] - yh, w.v0, w.v1);
            if (ov <= 0.0) continue;
            if (w.leg == Leg::right) {
                for (int i = right0; i < right1; ++i) {
                    const double ou = overlap(xs[i] - (ow + ww + cw), xs[i + 1] - (ow + ww + cw), w.u0, w.u1);
                    if (ou <= 0.0) continue;
                    const double t = w.turns * ou * ov / area;
                    for (int ii = i + 1; ii <= NX; ++ii) thread(k, ii, j, t);
                }
                continue;
            }
            for (int i = left0; i < left1; ++i) {
                const double ou = overlap(ow + ww - xs[i + 1], ow + ww - xs[i], w.u0, w.u1);
                if (ou <= 0.0) continue;
                const double t = w.turns * ou * ov / area;
                if (w.leg == Leg::center) {
                    const int mirror = right0 + (left1 - 1 - i);
                    for (int ii = i + 1; ii <= mirror; ++ii) thread(k, ii, j, t);
                } else {
                    for (int ii = 0; ii <= i; ++ii) thread(k, ii, j, -t);
                }
            }
        }
    }
    return net;
}

// ---------------------------------------------------------------- sweeps

enum class Excitation { primary_only, balanced };

inline std::string to_string(Excitation e) { return e == Excitation::balanced ? "balanced" : "primary-only"; }

inline Excitation parse_excitation(std::string_view s) {
    if (s == "primary-only") return Excitation::primary_only;
    if (s == "balanced" || s == "balanced-mmf") return Excitation::balanced;
    throw ConfigError("unknown excitation `" + std::string(s) + "`");
}

/// Winding currents for primary current I. Balanced mode splits the opposing
/// ampere-turns equally over the other windings.
inline std::vector<double> operating_currents(Excitation mode, double I, std::span<const int> turns) {
    std::vector<double> i(turns.size(), 0.0);
    if (i.empty()) return i;
    i[0] = I;
    if (mode == Excitation::balanced && turns.size() > 1) {
        for (std::size_t k = 1; k < turns.size(); ++k) {
            if (turns[k] == 0) continue;
            i[k] = -static_cast<double>(turns[0]) / turns[k] * I / static_cast<double>(turns.size() - 1);
        }
    }
    return i;
}

struct SweepRow {
    double i_rms = 0.0;
    double llt = std::numeric_limits<double>::quiet_NaN();  ///< H, referred to the primary
    double lm = std::numeric_limits<double>::quiet_NaN();   ///< H
    bool converged = false;
    std::string error;
};

struct SweepOptions {
    Excitation excitation = Excitation::balanced;
    InductanceMethod method = InductanceMethod::frozen;
    SolverOptions solver{};
    unsigned threads = 1;
};

/// Two-winding leakage and magnetizing inductance at each grid current. Rows
/// come back in grid order whatever the thread count.
inline std::vector<SweepRow> sweep_rms(const MagneticNetwork& net, std::span<const double> grid, const SweepOptions& opts = {}) {
    if (grid.empty()) throw Error("current grid is empty");
    for (double g : grid)
        if (!(g > 0.0) || !std::isfinite(g)) throw Error("grid currents must be positive");
    if (net.windings() != 2) throw Error("RMS sweep needs a two-winding network");
    validate(net);

    std::vector<SweepRow> rows(grid.size());
    auto work = [&](std::size_t idx) {
        SweepRow& row = rows[idx];
        row.i_rms = grid[idx];
        try {
            const auto currents = operating_currents(opts.excitation, grid[idx], net.turns);
            const auto m = inductance_matrix(net, currents, opts.method, opts.solver);
            row.llt = leakage_two_winding(m).total;
            row.lm = magnetizing_inductance(m);
            row.converged = true;
        } catch (const SolverError& e) {
            row.error = e.what();
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(grid.size())));
    if (n == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) work(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < grid.size(); i = next++) work(i);
        });
    }
    pool.clear();
    return rows;
}

/// `n` evenly spaced currents from lo to hi inclusive.
inline std::vector<double> linear_grid(double lo, double hi, int n) {
    if (n < 1) throw Error("grid needs at least one point");
    if (n == 1) return {lo};
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
    return g;
}

inline void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
    out << "i_rms_a,llt_h,lm_h,converged\n";
    for (const auto& r : rows) {
        out << format_g(r.i_rms) << ',' << (r.converged ? format_g(r.llt) : "nan") << ','
            << (r.converged ? format_g(r.lm) : "nan") << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

}  // namespace hftx
