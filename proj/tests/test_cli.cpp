#include "hftx/cli.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace hftx;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run hftx_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hftx_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
    const auto path = dir / "run.cfg";
    std::ofstream(path) << text;
    return path.string();
}

std::string config_file(const std::string& name) { return test::source_path("configs/" + name); }

const std::string kDab = R"(spec.power_rating = 1000
spec.port_voltages = 270, 27
spec.switching_frequency = 20000
spec.loss_fraction = 0.02
spec.fill_factor = 0.5
spec.target_link_inductance = 0.227e-3
)";

}  // namespace

TEST_CASE("design-dab on the bundled DAB config") {
    const auto dir = scratch("design_dab");
    const auto r = hftx_run({"design-dab", "--config", config_file("table1_dab.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("Port 1 Winding Number of Turns"));
    CHECK_THAT(r.out, ContainsSubstring("Core Type"));
    CHECK_THAT(r.out, ContainsSubstring("saturation (design Bmax"));
    const auto kv = parse_kv(test::slurp((dir / "design.kv").string()));
    std::map<std::string, std::string> m;
    for (const auto& e : kv) m[e.key] = e.value;
    CHECK(m["design.turns"] == "50, 5");
    CHECK(m["design.window_fractions"] == "0.5, 0.5");
    CHECK(m["design.awg"] == "16, 6");
    CHECK(test::slurp((dir / "design.txt").string()) == r.out);
}

TEST_CASE("design-tab on the bundled TAB config") {
    const auto dir = scratch("design_tab");
    const auto r = hftx_run({"design-tab", "--config", config_file("table3_tab.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("Port 3 Fraction of Winding Area"));
    CHECK_THAT(test::slurp((dir / "design.kv").string()), ContainsSubstring("design.turns = 50, 5, 25"));
}

TEST_CASE("missing config file is a config error with no artifacts") {
    const auto dir = scratch("missing");
    const auto out = dir / "never";
    const auto r = hftx_run({"design-dab", "--config", (dir / "nope.cfg").string(), "--out", out.string()});
    CHECK(r.code == 3);
    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(r.err.empty());
    CHECK(hftx_run({"design-dab"}).code == 3);
    CHECK(hftx_run({"design-dab", "--bogus"}).code == 3);
}

TEST_CASE("unknown key is rejected") {
    const auto dir = scratch("unknown_key");
    const auto cfg = write_config(dir, kDab + "spec.colour = blue\nrun.output_dir = " + (dir / "o").string() + "\n");
    const auto r = hftx_run({"design-dab", "--config", cfg});
    CHECK(r.code == 3);
    CHECK_THAT(r.err, ContainsSubstring("unknown key"));
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("wrong port count and unknown command are config errors") {
    const auto dir = scratch("ports");
    const auto cfg = write_config(dir, kDab + "run.output_dir = " + (dir / "o").string() + "\n");
    CHECK(hftx_run({"design-tab", "--config", cfg}).code == 3);
    CHECK(hftx_run({"frobnicate", "--config", cfg}).code == 3);
    CHECK(hftx_run({"design-dab", "--config", cfg, "--layout", "sideways"}).code == 3);
    CHECK(hftx_run({"design-dab", "--config", cfg, "--rms-grid", "1:10"}).code == 3);
}

TEST_CASE("infeasible design exits 1") {
    const auto dir = scratch("infeasible");
    std::string text = kDab;
    text.replace(text.find("0.02"), 4, "0.002");
    const auto cfg = write_config(dir, text + "run.output_dir = " + (dir / "o").string() + "\n");
    const auto r = hftx_run({"design-dab", "--config", cfg});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("infeasible"));
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("solver non-convergence exits 2") {
    const auto dir = scratch("nonconv");
    const auto cfg = write_config(dir, kDab + "placement.layout = outer-legs\nplacement.core = PC47EE57/47-Z\n"
                                              "placement.turns = 50, 5\nanalysis.current = 10\n"
                                              "solver.max_iterations = 1\nrun.output_dir = " +
                                              (dir / "o").string() + "\n");
    const auto r = hftx_run({"analyze-inductance", "--config", cfg});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("print-config round trips and applies flags") {
    const auto dir = scratch("print");
    const auto first = hftx_run({"--config", config_file("layout_concentric.cfg"), "--print-config", "--layout",
                                 "outer-legs", "--mesh", "4x6", "--excitation", "primary-only", "--rms-grid", "2:4:3"});
    REQUIRE(first.code == 0);
    CHECK_THAT(first.out, ContainsSubstring("placement.layout = outer-legs"));
    CHECK_THAT(first.out, ContainsSubstring("solver.mesh = 4x6"));
    CHECK_THAT(first.out, ContainsSubstring("analysis.excitation = primary-only"));
    CHECK_THAT(first.out, ContainsSubstring("analysis.rms_grid = 2:4:3"));
    const auto cfg = write_config(dir, first.out);
    const auto second = hftx_run({"--config", cfg, "--print-config"});
    CHECK(second.code == 0);
    CHECK(second.out == first.out);
}

TEST_CASE("bundled configs all parse") {
    for (const auto& e : fs::directory_iterator(test::source_path("configs"))) {
        INFO(e.path().string());
        CHECK_NOTHROW(load_config(e.path().string()));
    }
}

TEST_CASE("repeated runs are byte-identical") {
    for (const std::string name : {"table1_dab.cfg", "layout_outer_legs.cfg"}) {
        INFO(name);
        const auto a = scratch("det_a"), b = scratch("det_b");
        const auto ra = hftx_run({"--config", config_file(name), "--out", a.string()});
        const auto rb = hftx_run({"--config", config_file(name), "--out", b.string()});
        REQUIRE(ra.code == 0);
        REQUIRE(rb.code == 0);
        CHECK(ra.out == rb.out);
        for (const auto& e : fs::directory_iterator(a))
            CHECK(test::slurp(e.path().string()) == test::slurp((b / e.path().filename()).string()));
    }
}

TEST_CASE("outer-legs sweep varies strongly across the grid") {
    const auto dir = scratch("sweep");
    const auto r = hftx_run({"sweep-rms", "--config", config_file("layout_center_stacked.cfg"), "--layout", "outer-legs",
                             "--out", dir.string()});
    REQUIRE(r.code == 0);
    std::istringstream csv(test::slurp((dir / "sweep.csv").string()));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "i_rms_a,llt_h,lm_h,converged");
    std::vector<double> llt;
    while (std::getline(csv, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        llt.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        CHECK(line.find(';') == std::string::npos);
    }
    REQUIRE(llt.size() == 10);
    const auto [lo, hi] = std::minmax_element(llt.begin(), llt.end());
    CHECK((*hi - *lo) / *hi > 0.20);
    CHECK_THAT(r.out, ContainsSubstring("layout: outer-legs"));
}

TEST_CASE("three-winding analysis reports the imbalance") {
    const auto dir = scratch("tab3");
    const auto r = hftx_run({"--config", config_file("tab_three_winding.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("largest delta branch: L13"));
    CHECK_THAT(r.out, ContainsSubstring("balanced: no"));
    CHECK_THAT(test::slurp((dir / "inductance.csv").string()), ContainsSubstring("winding,turns,l1_h,l2_h,l3_h\n"));
}

TEST_CASE("simulate and report commands") {
    const auto dir = scratch("simulate");
    auto r = hftx_run({"simulate-dab", "--config", config_file("table1_dab.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("Steady-state waveforms"));
    CHECK_THAT(test::slurp((dir / "trace.csv").string()), ContainsSubstring("t_s,v1_v,v2_v,i1_a,i2_a,b_t\n"));
    r = hftx_run({"simulate-tab", "--config", config_file("table3_tab.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(test::slurp((dir / "trace.csv").string()), ContainsSubstring("t_s,v1_v,v2_v,v3_v,i1_a,i2_a,i3_a,b_t\n"));
    r = hftx_run({"report", "--config", config_file("table1_dab.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("Transformer specifications"));
    CHECK_THAT(r.out, ContainsSubstring("Leakage inductances"));
    CHECK_THAT(r.out, ContainsSubstring("Steady-state waveforms"));
    CHECK(fs::exists(dir / "report.txt"));
}

TEST_CASE("report rendering") {
    const auto cat = load_catalog(test::catalog_path());
    DesignSpec spec;
    spec.power_rating = 1000;
    spec.port_voltages = {270, 27};
    spec.switching_frequency = 20e3;
    spec.loss_fraction = 0.02;
    spec.fill_factor = 0.5;
    spec.target_link_inductance = 0.227e-3;
    ReportData data;
    data.design = design_transformer(spec, cat);
    const auto text = report(data);
    CHECK_THAT(text, ContainsSubstring("Port 1 Fraction of Winding Area"));
    CHECK_THAT(text, !ContainsSubstring("Steady-state waveforms"));
    CHECK_THAT(text, ContainsSubstring(": pass, margin"));

    LinkAnalysis a;
    a.layout = "synthetic";
    a.matrix.turns = {50, 5, 25};
    a.matrix.L = Eigen::Matrix3d::Identity();
    const double l = 0.227e-3;
    a.network = port_network_from_star(star_from_delta(DeltaNetwork{{l, l, l}}));
    ReportData link_only;
    link_only.link = a;
    const auto t2 = report(link_only);
    CHECK_THAT(t2, ContainsSubstring("balanced: yes"));
    CHECK_THAT(t2, !ContainsSubstring("Transformer specifications"));
}
