#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "wharmonic/experiment.hpp"
#include "wharmonic/measures.hpp"

using namespace wharmonic;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json base_config(const std::string& out_dir) {
    json j;
    j["grid"] = {{"p", 1},
                 {"q", 1},
                 {"omega", {{0.0, 1.0}}},
                 {"d", {{0.0, 1.0}}},
                 {"n_omega", {9}},
                 {"n_d", {24}}};
    j["boundary"] = {{"kind", "constant"},
                     {"params", {{"density", {{"kind", "bump"}, {"center", {0.5}}, {"width", 0.08}}}}}};
    j["solver"] = {{"kind", "bb"}, {"options", {{"max_iters", 25000}}}};
    j["checks"] = json::array({"subharmonic-potential", "subharmonic-entropy"});
    j["out_dir"] = out_dir;
    return j;
}

std::string write_config(const TempDir& dir, const json& j, const std::string& name = "config.json") {
    const auto p = dir.path / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
}

}  // namespace

TEST_CASE("run: constant boundary data gives zero energy, exit 0, stable summary schema") {
    TempDir dir("wharmonic_test_run");
    const auto out = (dir.path / "out").string();
    const auto cfg = write_config(dir, base_config(out));
    CHECK(run_experiment(cfg) == 0);

    std::ifstream in(out + "/summary.json");
    REQUIRE(in.good());
    json summary;
    in >> summary;
    CHECK(summary["schema"] == "wharmonic/run/1");
    CHECK(summary["energy"].get<double>() <= 1e-8);
    for (const char* key : {"energy", "dual_bound", "gap", "residuals", "checks", "iters", "seconds"})
        CHECK(summary.contains(key));
    CHECK(summary["checks"]["subharmonic-potential"]["pass"].get<bool>());
    CHECK(fs::exists(out + "/mu.csv"));
}

TEST_CASE("run: malformed config exits 2") {
    TempDir dir("wharmonic_test_bad");
    const auto p = dir.path / "bad.json";
    std::ofstream(p) << "{ not json";
    CHECK(run_experiment(p.string()) == 2);

    // unknown solver kind also exits 2
    json j = base_config((dir.path / "out").string());
    j["solver"]["kind"] = "nonsense";
    CHECK(run_experiment(write_config(dir, j, "bad2.json")) == 2);
}

TEST_CASE("measure CSV round trip is bitwise") {
    TempDir dir("wharmonic_test_csv");
    GridSpec s;
    s.p = 1;
    s.q = 1;
    s.omega_extent[0] = {0.0, 1.0};
    s.d_extent[0] = {0.0, 1.0};
    s.n_omega[0] = 7;
    s.n_d[0] = 13;
    auto disc = build_discretization(s);
    MeasureField mu(disc.n_omega, disc.n_d);
    auto dens = random_smooth_density(disc, 5);
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = dens[d] * (1.0 + 0.01 * o);
    const auto path = (dir.path / "mu.csv").string();
    write_measure_csv(path, disc, mu);
    auto back = read_measure_csv(path, disc);
    CHECK(back.v == mu.v);
}

TEST_CASE("compare: a run against itself is all zeros") {
    TempDir dir("wharmonic_test_cmp");
    const auto out_a = (dir.path / "a").string();
    const auto out_b = (dir.path / "b").string();
    json ja = base_config(out_a);
    ja["boundary"] = {{"kind", "pair-geodesic"},
                      {"params",
                       {{"left", {{"kind", "random"}, {"seed", 1}}},
                        {"right", {{"kind", "random"}, {"seed", 2}}}}}};
    ja["checks"] = json::array();
    json jb = ja;
    jb["out_dir"] = out_b;
    CHECK(run_experiment(write_config(dir, ja, "a.json")) == 0);
    CHECK(run_experiment(write_config(dir, jb, "b.json")) == 0);
    CHECK(compare_runs(out_a, out_a) == 0);
    CHECK(compare_runs(out_a, out_b) == 0);
}

TEST_CASE("quantile and jost solver kinds run end to end") {
    TempDir dir("wharmonic_test_q");
    for (const std::string kind : {"quantile", "jost"}) {
        const auto out = (dir.path / ("out_" + kind)).string();
        json j = base_config(out);
        j["grid"]["n_omega"] = {17};
        j["grid"]["n_d"] = {33};
        j["boundary"] = {{"kind", "pair-geodesic"},
                         {"params",
                          {{"left", {{"kind", "random"}, {"seed", 3}}},
                           {"right", {{"kind", "random"}, {"seed", 4}}}}}};
        j["solver"] = {{"kind", kind}, {"options", {{"levels", 64}}}};
        j["checks"] = json::array({"subharmonic-potential"});
        CHECK(run_experiment(write_config(dir, j, kind + ".json")) == 0);
        CHECK(fs::exists(out + "/quantiles.csv"));
        CHECK(fs::exists(out + "/mu.csv"));
    }
}

TEST_CASE("bures solver kind runs end to end with principles") {
    TempDir dir("wharmonic_test_bures");
    const auto out = (dir.path / "out").string();
    json j;
    j["grid"] = {{"p", 1},
                 {"q", 2},
                 {"omega", {{0.0, 1.0}}},
                 {"d", {{-3.0, 3.0}, {-3.0, 3.0}}},
                 {"n_omega", {17}},
                 {"n_d", {33, 33}}};
    j["boundary"] = {{"kind", "elliptic"},
                     {"params",
                      {{"base", {{0.8, 0.1}, {0.1, 0.7}}},
                       {"slope", {{{0.3, -0.05}, {-0.05, 0.1}}}}}}};
    j["solver"] = {{"kind", "bures"}, {"options", json::object()}};
    j["checks"] = json::array({"det-min", "quadratic-max", "subharmonic-quadratic"});
    j["out_dir"] = out;
    CHECK(run_experiment(write_config(dir, j)) == 0);
    CHECK(fs::exists(out + "/afield.csv"));

    // check subcommand re-runs the checks on the stored artifacts
    CHECK(check_experiment((dir.path / "config.json").string()) == 0);

    std::ifstream in(out + "/summary.json");
    json summary;
    in >> summary;
    CHECK(summary["residuals"]["euler_lagrange"].get<double>() <= 1e-8);
    CHECK(summary["gap"].get<double>() / summary["energy"].get<double>() <= 0.05);
}

TEST_CASE("dir-eps subcommand evaluates the stored field") {
    TempDir dir("wharmonic_test_deps");
    const auto out = (dir.path / "out").string();
    json j = base_config(out);
    j["boundary"] = {{"kind", "pair-geodesic"},
                     {"params",
                      {{"left", {{"kind", "random"}, {"seed", 8}}},
                       {"right", {{"kind", "random"}, {"seed", 9}}}}}};
    j["checks"] = json::array();
    j["grid"]["n_omega"] = {17};
    const auto cfg = write_config(dir, j);
    CHECK(run_experiment(cfg) == 0);
    CHECK(dir_eps_experiment(cfg, {0.25, 0.5}) == 0);
}
