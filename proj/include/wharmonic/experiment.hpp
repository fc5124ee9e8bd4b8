#pragma once

#include <string>
#include <vector>

#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

// Field serialization: one row per node, columns = coordinates + values,
// full round-trip precision.
void write_measure_csv(const std::string& path, const Discretization& disc, const MeasureField& mu);
MeasureField read_measure_csv(const std::string& path, const Discretization& disc);
void write_spd_csv(const std::string& path, const Discretization& disc, const SpdField& a);
SpdField read_spd_csv(const std::string& path, const Discretization& disc);
void write_quantile_csv(const std::string& path, const Discretization& disc, const QuantileField& qf);

// Exit codes: 0 all checks pass, 1 check failure, 2 parse/validation error,
// 3 solver non-convergence.
int run_experiment(const std::string& config_path);
int check_experiment(const std::string& config_path);
int compare_runs(const std::string& dir_a, const std::string& dir_b);
int dir_eps_experiment(const std::string& config_path, const std::vector<double>& eps_values);

}  // namespace wharmonic
