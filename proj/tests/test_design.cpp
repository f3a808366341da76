#include "hftx/design.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace hftx;
using Catch::Approx;

namespace {

const Catalog& bundled() {
    static const Catalog cat = load_catalog(test::catalog_path());
    return cat;
}

DesignSpec table1() {
    DesignSpec s;
    s.power_rating = 1000;
    s.port_voltages = {270, 27};
    s.switching_frequency = 20e3;
    s.duty = 0.5;
    s.loss_fraction = 0.02;
    s.fill_factor = 0.5;
    s.target_link_inductance = 0.227e-3;
    return s;
}

DesignSpec table3() {
    auto s = table1();
    s.port_voltages = {270, 27, 135};
    s.fill_factor = 0.75;
    return s;
}

// Loss terms written out independently of the library.
double total_loss(double B, double lambda, double irms, const CoreRecord& c, const MaterialRecord& m, double Ku, double rho) {
    const double copper = rho * lambda * lambda * irms * irms * c.MLT / (4.0 * Ku * c.WA * c.Ac * c.Ac * B * B * 1e-8);
    const double core = m.Kfe * std::pow(B, m.beta) * c.Ac * c.lm;
    return copper + core;
}

}  // namespace

TEST_CASE("optimal Bmax matches a brute-force loss minimum") {
    const auto& cat = bundled();
    test::Rng rng(11);
    const double lambda = compute_volt_seconds(table1());
    for (const auto& core : cat.cores) {
        const auto& m = cat.material_of(core);
        for (int trial = 0; trial < 20; ++trial) {
            const double irms = rng.uniform(1.0, 14.0);
            const double Ku = rng.uniform(0.3, 0.8);
            double b_opt = 0.0;
            try {
                b_opt = optimal_bmax(lambda, irms, core, m, Ku, cat.resistivity);
            } catch (const InfeasibleError&) {
                continue;
            }
            const int n = 10000;
            const double step = m.Bsat / n;
            double best_b = step, best = std::numeric_limits<double>::infinity();
            for (int k = 1; k < n; ++k) {
                const double b = k * step;
                const double p = total_loss(b, lambda, irms, core, m, Ku, cat.resistivity);
                if (p < best) best = p, best_b = b;
            }
            CHECK(std::abs(b_opt - best_b) <= step);
        }
    }
}

TEST_CASE("Kgfe scaling against an independent re-derivation") {
    const auto& m = bundled().materials.front();
    auto s = table1();
    const double lambda = compute_volt_seconds(s);
    const double base = required_kgfe(s, lambda, 8.0, m);
    for (double c : {0.5, 1.7, 3.0}) {
        auto scaled = s;
        scaled.power_rating *= c * c;
        CHECK(required_kgfe(scaled, lambda, 8.0 * c, m) == Approx(base * std::pow(c, -4.0 / m.beta)).epsilon(1e-12));
    }
    CHECK(required_kgfe(s, 2.0 * lambda, 8.0, m) == Approx(4.0 * base).epsilon(1e-12));
    CHECK(required_kgfe(s, lambda, 0.0, m) == 0.0);
    const double direct = bundled().resistivity * lambda * lambda * 64.0 * std::pow(m.Kfe, 2.0 / m.beta) /
                          (4.0 * s.fill_factor * std::pow(s.loss_budget(), (m.beta + 2.0) / m.beta)) * 1e8;
    CHECK(base == Approx(direct).epsilon(1e-12));
}

TEST_CASE("volt-seconds") {
    CHECK(compute_volt_seconds(table1()) == Approx(6.75e-3));
    auto s = table1();
    s.port_voltages = {1, 1};
    s.switching_frequency = 0.5;
    CHECK(compute_volt_seconds(s) == Approx(1.0));
    s = table1();
    s.duty = 1e-9;
    CHECK(compute_volt_seconds(s) < 1e-9);
}

TEST_CASE("total referred RMS current") {
    const std::vector<double> v{270, 27}, i{3.9, 39};
    CHECK(total_referred_rms(v, i) == Approx(7.8));
    const std::vector<double> v1{270}, i1{5};
    CHECK(total_referred_rms(v1, i1) == 5.0);
    const std::vector<double> z{0, 0};
    CHECK(total_referred_rms(v, z) == 0.0);
    CHECK_THROWS_AS(total_referred_rms(table1()), Error);
}

TEST_CASE("core selection") {
    const auto& cat = bundled();
    CHECK(select_core(0.0, cat).name == "PC47EE57/47-Z");
    CHECK(select_core(0.06, cat).name == "PC47EE65/32/27-Z");
    CHECK_THROWS_AS(select_core(1e6, cat), InfeasibleError);
    Catalog tie = cat;
    tie.cores = {cat.cores[1], cat.cores[1]};
    tie.cores[0].name = "B";
    tie.cores[1].name = "A";
    CHECK(select_core(0.0, tie).name == "A");
    tie.cores[0].Ac -= 0.1;
    CHECK(select_core(0.0, tie).name == "B");
    CHECK_THROWS_AS(select_core(0.0, Catalog{}), Error);
}

TEST_CASE("optimal Bmax preconditions") {
    const auto& cat = bundled();
    const auto& c = cat.cores.front();
    const auto& m = cat.material_of(c);
    CHECK_THROWS_AS(optimal_bmax(6.75e-3, 0.0, c, m, 0.5), Error);
    CHECK_THROWS_WITH(optimal_bmax(6.75e-3, 1e4, c, m, 0.5), Catch::Matchers::ContainsSubstring("infeasible"));
}

TEST_CASE("turns") {
    const auto& c = bundled().core("PC47EE57/47-Z");
    const std::vector<double> dab{1, 10}, tab{1, 10, 2};
    CHECK(compute_turns(6.75e-3, 0.2088, c, dab) == std::vector<int>{50, 5});
    CHECK(compute_turns(6.75e-3, 0.228, c, tab) == std::vector<int>{50, 5, 25});
    const std::vector<double> one{1};
    CHECK(compute_turns(0.0, 0.2, c, one) == std::vector<int>{1});
    // 47 primary turns cannot give an integer secondary at ratio 10
    CHECK(compute_turns(6.75e-3, 0.2088, c, dab, false) == std::vector<int>{47, 5});
    CHECK(compute_turns(1e-6, 0.2, c, dab) == std::vector<int>{10, 1});
    CHECK_THROWS_AS(compute_turns(6.75e-3, 0.0, c, dab), Error);
    const std::vector<double> irrational{1, std::numbers::pi};
    CHECK_THROWS_AS(compute_turns(6.75e-3, 0.2, c, irrational), InfeasibleError);
}

TEST_CASE("window allocation") {
    const std::vector<int> n2{50, 5}, n3{50, 5, 25};
    const std::vector<double> i2{4, 40}, i3{4, 40, 8}, zero{4, 0};
    CHECK_THAT(allocate_window(n2, i2), Catch::Matchers::Approx(std::vector<double>{0.5, 0.5}));
    const auto a3 = allocate_window(n3, i3);
    for (double a : a3) CHECK(a == Approx(1.0 / 3.0));
    CHECK(allocate_window(n2, zero)[1] == 0.0);
    CHECK(allocate_window(n2, zero)[0] == 1.0);
    const std::vector<double> none{0, 0};
    CHECK_THROWS_AS(allocate_window(n2, none), Error);
}

TEST_CASE("wire sizing and clamping") {
    const auto& cat = bundled();
    const auto& c = cat.core("PC47EE57/47-Z");
    const std::vector<int> n{50, 5};
    const std::vector<double> a{0.5, 0.5};
    const auto w = size_wires(a, 0.5, c, n, cat);
    CHECK(w[0].gauge.awg == 16);
    CHECK(w[1].gauge.awg == 6);
    for (const auto& x : w) {
        CHECK(x.gauge.area <= x.area_bound);
        CHECK_FALSE(x.clamped);
    }
    const std::vector<int> one{1, 1};
    const auto big = size_wires(a, 0.5, c, one, cat);
    CHECK(big[0].clamped);
    CHECK(big[0].gauge.awg == cat.wires.front().awg);
    const std::vector<double> idle{1.0, 0.0};
    CHECK(size_wires(idle, 0.5, c, n, cat)[1].clamped);
}

TEST_CASE("rated port currents give equal referred currents") {
    const auto i = rated_port_currents(table1());
    REQUIRE(i.size() == 2);
    CHECK(i[1] == Approx(10.0 * i[0]).epsilon(1e-12));
    CHECK(i[0] == Approx(4.1198).epsilon(1e-4));
    const auto t = rated_port_currents(table3());
    CHECK(t[1] == Approx(10.0 * t[0]).epsilon(1e-12));
    CHECK(t[2] == Approx(2.0 * t[0]).epsilon(1e-12));
}

TEST_CASE("DAB design reproduces the reference design") {
    const auto r = design_transformer(table1(), bundled());
    CHECK(r.core.name == "PC47EE57/47-Z");
    CHECK(r.turns == std::vector<int>{50, 5});
    CHECK(r.window_fractions[0] == Approx(0.5));
    CHECK(r.window_fractions[1] == Approx(0.5));
    CHECK(r.wires[0].gauge.awg == 16);
    CHECK(r.wires[1].gauge.awg == 6);
    CHECK(std::abs(r.bmax - 0.1962) <= 0.15 * 0.1962);
    CHECK(std::abs(r.bmax_optimal - 0.1962) <= 0.15 * 0.1962);
    CHECK(r.turns_ratios[1] == 10.0);
    CHECK(r.kgfe_required > 0.0);
    CHECK(r.kgfe_required <= r.core.Kgfe);
    CHECK(r.rated_phase_shift == Approx(0.4581).margin(1e-3));
    CHECK(r.copper_loss + r.core_loss <= table1().loss_budget() * (1 + 1e-9));
}

TEST_CASE("TAB design reproduces the reference design") {
    const auto r = design_transformer(table3(), bundled());
    CHECK(r.core.name == "PC47EE57/47-Z");
    CHECK(r.turns == std::vector<int>{50, 5, 25});
    for (double a : r.window_fractions) CHECK(a == Approx(1.0 / 3.0));
    CHECK(r.wires[0].gauge.awg == 16);
    CHECK(r.wires[1].gauge.awg == 6);
    CHECK(r.wires[2].gauge.awg == 13);
    CHECK(r.turns_ratios[1] == 10.0);
    CHECK(r.turns_ratios[2] == 2.0);
}

TEST_CASE("design errors name the failing stage") {
    auto s = table1();
    s.loss_fraction = 1e-9;
    CHECK_THROWS_WITH(design_transformer(s, bundled()),
                      Catch::Matchers::ContainsSubstring("select-core") && Catch::Matchers::ContainsSubstring("no core satisfies the bound"));
    CHECK_THROWS_AS(design_transformer(s, bundled()), InfeasibleError);
    s = table1();
    s.duty = 1.5;
    CHECK_THROWS_WITH(design_transformer(s, bundled()), Catch::Matchers::ContainsSubstring("spec"));
    s = table1();
    s.port_voltages = {270};
    CHECK_THROWS_AS(design_transformer(s, bundled()), Error);
    s = table1();
    s.port_rms_currents = std::vector<double>{0.0, 0.0};
    CHECK_THROWS_AS(design_transformer(s, bundled()), Error);
    s = table1();
    s.power_rating = 5000;  // above the link maximum at 0.227 mH
    CHECK_THROWS_WITH(design_transformer(s, bundled()), Catch::Matchers::ContainsSubstring("rms-currents"));
}

TEST_CASE("feasible designs satisfy the result invariants") {
    test::Rng rng(3);
    int feasible = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto s = table1();
        s.power_rating = rng.uniform(200, 1500);
        s.port_voltages = {rng.uniform(100, 400), rng.uniform(10, 100)};
        s.loss_fraction = rng.uniform(0.01, 0.05);
        s.fill_factor = rng.uniform(0.3, 0.8);
        s.exact_turns_ratio = false;
        s.target_link_inductance = s.port_voltages[0] * s.port_voltages[0] / (8 * s.switching_frequency * s.power_rating * 2.0);
        try {
            const auto r = design_transformer(s, bundled());
            ++feasible;
            double sum = 0.0;
            for (double a : r.window_fractions) sum += a;
            CHECK(sum <= 1.0 + 1e-12);
            CHECK(r.bmax < r.material.Bsat);
            for (std::size_t k = 0; k < r.turns.size(); ++k) {
                CHECK(r.turns[k] >= 1);
                if (!r.wires[k].clamped) CHECK(r.wires[k].gauge.area <= r.wires[k].area_bound);
            }
        } catch (const InfeasibleError&) {
        }
    }
    CHECK(feasible > 10);
}
