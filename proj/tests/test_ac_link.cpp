#include "hftx/ac_link.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace hftx;
using Catch::Approx;

namespace {

LinkParams table1(double phi = 0.0) { return {270, 27, 10, 20e3, 0.227e-3, phi}; }

InductanceMatrix two(double l11, double l22, double l12, int n1, int n2) {
    InductanceMatrix m{Eigen::MatrixXd(2, 2), {n1, n2}};
    m.L << l11, l12, l12, l22;
    return m;
}

// Random physical 2-winding matrix: magnetizing plus leakages in each frame.
InductanceMatrix random_two(test::Rng& rng) {
    const int n1 = rng.integer(1, 100), n2 = rng.integer(1, 100);
    const double a = static_cast<double>(n1) / n2;
    const double lm = rng.uniform(1e-4, 1e-1), l1 = rng.uniform(1e-7, 1e-3), l2 = rng.uniform(1e-7, 1e-3);
    return two(lm + l1, lm / (a * a) + l2, lm / a, n1, n2);
}

}  // namespace

TEST_CASE("leakage equals the direct referral identity") {
    test::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = random_two(rng);
        const double a = static_cast<double>(m.turns[0]) / m.turns[1];
        const double direct = m(0, 0) + a * a * m(1, 1) - 2.0 * a * m(0, 1);
        CHECK(test::rel_err(leakage_two_winding(m).total, direct) <= 1e-12);
    }
}

TEST_CASE("leakage is invariant under referral to the secondary") {
    test::Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = random_two(rng);
        // swap the windings: now seen from winding 2, then refer back by (N1/N2)^2
        const auto swapped = two(m(1, 1), m(0, 0), m(0, 1), m.turns[1], m.turns[0]);
        const double a = static_cast<double>(m.turns[0]) / m.turns[1];
        CHECK(test::rel_err(leakage_two_winding(swapped).total * a * a, leakage_two_winding(m).total) <= 1e-12);
    }
}

TEST_CASE("star to delta to star round trip") {
    test::Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const StarNetwork s{{rng.uniform(1e-6, 1e-3), rng.uniform(1e-6, 1e-3), rng.uniform(1e-6, 1e-3)}};
        const auto back = star_from_delta(delta_from_star(s));
        for (int k = 0; k < 3; ++k) CHECK(test::rel_err(back.legs[k], s.legs[k]) <= 1e-12);
    }
}

TEST_CASE("power transfer examples") {
    CHECK(power_transfer(table1(0.4581)) == Approx(1000.0).margin(0.5));
    CHECK(power_transfer(table1(0.0)) == 0.0);
    CHECK(power_transfer(table1(pi / 2)) == Approx(2007.0).margin(1.0));
    CHECK(power_transfer(table1(pi / 2)) == Approx(max_power(table1())).epsilon(1e-14));
    CHECK_THROWS_AS(power_transfer({270, 27, 10, 20e3, 0.0, 0.1}), Error);
    CHECK_THROWS_AS(power_transfer({270, 27, 10, 0.0, 1e-3, 0.1}), Error);
}

TEST_CASE("power transfer is odd and periodic") {
    test::Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const double phi = rng.uniform(-pi, pi);
        CHECK(power_transfer(table1(-phi)) == Approx(-power_transfer(table1(phi))).margin(1e-9));
        CHECK(power_transfer(table1(phi + 2.0 * pi)) == Approx(power_transfer(table1(phi))).margin(1e-9));
    }
    CHECK(normalize_phase(pi) == Approx(pi));
    CHECK(normalize_phase(-pi) == Approx(pi));
    CHECK(normalize_phase(3.0 * pi / 2.0) == Approx(-pi / 2.0));
}

TEST_CASE("phase-shift inversion") {
    CHECK(solve_phase_shift(1000.0, table1()) == Approx(0.4581).margin(1e-3));
    CHECK(solve_phase_shift(0.0, table1()) == 0.0);
    CHECK(solve_phase_shift(max_power(table1()), table1()) == Approx(pi / 2).epsilon(1e-12));
    CHECK(solve_phase_shift(-1000.0, table1()) == Approx(-0.4581).margin(1e-3));
    CHECK_THROWS_WITH(solve_phase_shift(2100.0, table1()), Catch::Matchers::ContainsSubstring("maximum"));
    CHECK_THROWS_AS(solve_phase_shift(2100.0, table1()), InfeasibleError);
    for (int k = 0; k <= 1000; ++k) {
        const double phi = pi / 2.0 * k / 1000.0;
        const double back = solve_phase_shift(power_transfer(table1(phi)), table1());
        CHECK(std::abs(back - phi) <= 1e-10 * std::max(phi, 1e-300));
    }
}

TEST_CASE("two-winding leakage examples") {
    const auto r = leakage_two_winding(two(10e-3, 0.1e-3, 0.95e-3, 10, 1));
    CHECK(r.primary == Approx(0.5e-3).epsilon(1e-12));
    CHECK(r.secondary == Approx(0.005e-3).epsilon(1e-12));
    CHECK(r.total == Approx(1.0e-3).epsilon(1e-12));
    const auto ideal = leakage_two_winding(two(10e-3, 10e-3 / 100, 10e-3 / 10, 10, 1));
    CHECK(ideal.primary == Approx(0.0).margin(1e-18));
    CHECK(ideal.secondary == Approx(0.0).margin(1e-18));
    CHECK(ideal.total == Approx(0.0).margin(1e-18));
    const auto open = leakage_two_winding(two(10e-3, 0.1e-3, 0.0, 10, 1));
    CHECK(open.total == Approx(10e-3 + 100 * 0.1e-3));
    CHECK(magnetizing_inductance(two(10e-3, 0.1e-3, 0.95e-3, 10, 1)) == Approx(9.5e-3));
}

TEST_CASE("inductance matrix validation") {
    CHECK_NOTHROW(validate(two(10e-3, 0.1e-3, 0.95e-3, 10, 1)));
    CHECK_THROWS_AS(validate(two(10e-3, 0.1e-3, 2e-3, 10, 1)), Error);  // k > 1
    auto asym = two(1e-3, 1e-3, 0.5e-3, 1, 1);
    asym.L(0, 1) = 0.6e-3;
    CHECK_THROWS_AS(validate(asym), Error);
    CHECK_THROWS_AS(validate(two(-1e-3, 1e-3, 0.0, 1, 1)), Error);
    CHECK_THROWS_AS(leakage_two_winding(InductanceMatrix{Eigen::MatrixXd::Identity(3, 3), {1, 1, 1}}), Error);
}

TEST_CASE("star from a matrix") {
    InductanceMatrix diag{Eigen::MatrixXd::Zero(3, 3), {50, 5, 25}};
    diag.L.diagonal() << 2e-3, 3e-5, 4e-4;
    const auto s = star_from_matrix(diag);
    CHECK(s.legs[0] == Approx(2e-3));
    CHECK(s.legs[1] == Approx(100 * 3e-5));
    CHECK(s.legs[2] == Approx(4 * 4e-4));

    InductanceMatrix sym{Eigen::MatrixXd::Constant(3, 3, 0.9e-3), {10, 10, 10}};
    sym.L.diagonal().setConstant(1e-3);
    const auto e = star_from_matrix(sym);
    CHECK(e.legs[0] == Approx(e.legs[1]));
    CHECK(e.legs[1] == Approx(e.legs[2]));

    InductanceMatrix bad{Eigen::MatrixXd::Constant(3, 3, 2e-3), {10, 10, 10}};
    bad.L.diagonal().setConstant(1e-3);
    CHECK_THROWS_WITH(star_from_matrix(bad), Catch::Matchers::ContainsSubstring("non-physical"));
    CHECK_THROWS_AS(star_from_matrix(two(1e-3, 1e-3, 0, 1, 1)), Error);
}

TEST_CASE("two-winding star split reduces to the leakage split") {
    test::Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_two(rng);
        // a third winding with no coupling and tiny self inductance leaves legs 1 and 2 unchanged
        InductanceMatrix m3{Eigen::MatrixXd::Zero(3, 3), {m.turns[0], m.turns[1], 1}};
        m3.L.topLeftCorner(2, 2) = m.L;
        m3.L(2, 2) = 1e-9;
        const auto s = star_from_matrix(m3);
        const auto l = leakage_two_winding(m);
        const double a = static_cast<double>(m.turns[0]) / m.turns[1];
        CHECK(s.legs[0] == Approx(l.primary).epsilon(1e-10));
        CHECK(s.legs[1] == Approx(l.secondary * a * a).epsilon(1e-10));
    }
}

TEST_CASE("delta from star examples") {
    const double L = 1e-4;
    const auto sym = delta_from_star({{L, L, L}});
    for (const auto& b : sym.branches) CHECK(*b == Approx(3 * L));
    const auto d = delta_from_star({{0.04e-3, 0.03e-3, 0.09e-3}});
    CHECK(*d.branches[0] == Approx(0.08333333e-3).epsilon(1e-6));
    CHECK(*d.branches[1] == Approx(0.25e-3).epsilon(1e-12));
    CHECK(*d.branches[2] == Approx(0.1875e-3).epsilon(1e-12));
    const auto open = delta_from_star({{L, L, 0.0}});
    CHECK_FALSE(open.branches[0].has_value());
    CHECK(*open.branches[1] == Approx(L));
    CHECK(*open.branches[2] == Approx(L));
    CHECK_FALSE(open.finite());
    CHECK_THROWS_AS(delta_from_star({{L, 0.0, 0.0}}), Error);
    CHECK_THROWS_AS(delta_from_star({{L, -L, L}}), Error);
}

TEST_CASE("TAB power flows") {
    const std::array<double, 3> v{270, 270, 270};
    const DeltaNetwork bal{{0.227e-3, 0.227e-3, 0.227e-3}};
    const auto zero = tab_power_flows(bal, v, 20e3, 0.0, 0.0);
    CHECK(zero.p12 == 0.0);
    CHECK(zero.p13 == 0.0);
    CHECK(zero.p23 == 0.0);
    const auto eq = tab_power_flows(bal, v, 20e3, 0.4581, 0.4581);
    CHECK(eq.p23 == 0.0);
    CHECK(eq.p12 == Approx(eq.p13));
    CHECK(eq.port1() == Approx(2000.0).margin(2.0));
    const DeltaNetwork unequal{{0.208612e-3, 0.576136e-3, 0.39146e-3}};
    const auto u = tab_power_flows(unequal, v, 20e3, 0.2, 0.2);
    CHECK(std::abs(u.p12 - u.p13) > 0.1 * std::abs(u.p12));
    const auto open = tab_power_flows(DeltaNetwork{{std::nullopt, 0.2e-3, 0.2e-3}}, v, 20e3, 0.3, 0.1);
    CHECK(open.p12 == 0.0);

    test::Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const DeltaNetwork d{{rng.uniform(1e-5, 1e-3), rng.uniform(1e-5, 1e-3), rng.uniform(1e-5, 1e-3)}};
        const std::array<double, 3> vv{rng.uniform(100, 300), rng.uniform(100, 300), rng.uniform(100, 300)};
        const auto p = tab_power_flows(d, vv, 20e3, rng.uniform(-pi, pi), rng.uniform(-pi, pi));
        const double scale = std::max({std::abs(p.port1()), std::abs(p.port2()), std::abs(p.port3()), 1e-300});
        CHECK(std::abs(p.port1() + p.port2() + p.port3()) <= 1e-9 * scale);
    }
}

TEST_CASE("balance check") {
    const auto b = check_balance(DeltaNetwork{{0.227e-3, 0.227e-3, 0.227e-3}}, 0.01);
    CHECK(b.balanced);
    CHECK(b.spread == 0.0);
    const auto t5 = check_balance(DeltaNetwork{{0.208612e-3, 0.576136e-3, 0.39146e-3}}, 0.10);
    CHECK_FALSE(t5.balanced);
    CHECK(t5.spread == Approx(0.94).margin(0.01));
    CHECK_THROWS_AS(check_balance(DeltaNetwork{{std::nullopt, 1e-3, 1e-3}}, 0.1), Error);
}
