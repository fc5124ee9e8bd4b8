#include <CLI11.hpp>
#include <string>
#include <vector>

#include "wharmonic/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"harmonic mappings into the Wasserstein space: solvers and checks"};
    app.require_subcommand(1);

    std::string config_path, dir_a, dir_b;
    std::vector<double> eps_values;

    auto* run = app.add_subcommand("run", "solve an experiment config and emit artifacts");
    run->add_option("config", config_path, "config JSON path")->required();

    auto* check = app.add_subcommand("check", "run checks on a stored solution");
    check->add_option("config", config_path, "config JSON path")->required();

    auto* compare = app.add_subcommand("compare", "diff two run directories");
    compare->add_option("dir_a", dir_a)->required();
    compare->add_option("dir_b", dir_b)->required();

    auto* deps = app.add_subcommand("dir-eps", "approximate energies of a stored solution");
    deps->add_option("config", config_path, "config JSON path")->required();
    deps->add_option("--eps", eps_values, "eps values")->required()->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return wharmonic::run_experiment(config_path);
    if (check->parsed()) return wharmonic::check_experiment(config_path);
    if (compare->parsed()) return wharmonic::compare_runs(dir_a, dir_b);
    if (deps->parsed()) return wharmonic::dir_eps_experiment(config_path, eps_values);
    return 2;
}
