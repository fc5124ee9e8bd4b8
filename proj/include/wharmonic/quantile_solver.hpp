#pragma once

#include <optional>
#include <vector>

#include "wharmonic/analysis.hpp"
#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

// Per-boundary-node monotone quantile vectors (ordered like
// Discretization::boundary), m levels each.
struct BoundaryQuantiles {
    int m = 0;
    std::vector<std::vector<double>> slices;

    void validate(const Discretization& disc) const;
};

// Exact solver for q = 1 through the quantile isometry: one Dirichlet Laplace
// solve per level; output monotone by the discrete maximum principle
// (asserted).
QuantileField solve_quantile(const Discretization& disc, const BoundaryQuantiles& bc);

// Levels-summed discrete Dirichlet energy of a quantile field, face-based:
//   1/2 * (1/m) * sum_levels sum_faces w_face |df/dxi|^2.
double quantile_dirichlet_energy(const Discretization& disc, const QuantileField& qf);

struct JostOptions {
    double eps = 0.0;         // ball radius, >= 2x min Omega spacing
    double lambda = 0.0;      // functional weight
    std::optional<FunctionalSpec> functional;  // potential kind only for lambda > 0
    int max_sweeps = 500;
    double tol = 1e-9;        // max level change per sweep
};

struct JostReport {
    int sweeps = 0;
    bool converged = false;
    double final_change = 0.0;
    double barycenter_residual = 0.0;  // max node distance to its exact minimizer
};

// One lexicographic Gauss-Seidel sweep: each interior node replaced by the exact
// minimizer of the local Jost functional (quantile average for lambda = 0).
QuantileField jost_step(const Discretization& disc, const QuantileField& field,
                        const JostOptions& opts);

std::pair<QuantileField, JostReport> jost_solve(const Discretization& disc,
                                                const BoundaryQuantiles& bc,
                                                const JostOptions& opts);

}  // namespace wharmonic
