#pragma once

#include <array>
#include <functional>
#include <vector>

#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

// Sparse transport plan between two discrete measures, plus its marginals.
struct DiscreteCoupling {
    struct Entry {
        int i, j;
        double mass;
    };
    std::vector<Entry> entries;
    std::vector<double> row_marginal;
    std::vector<double> col_marginal;

    double max_marginal_defect(const std::vector<double>& a, const std::vector<double>& b) const;
};

struct LpSolution {
    double cost = 0.0;  // optimal transport cost (sum c * flow)
    DiscreteCoupling coupling;
    std::vector<double> potential_row;  // dual potentials (complementary slackness)
    std::vector<double> potential_col;
};

// Exact transportation LP: min sum_ij c(i,j) pi_ij with prescribed marginals,
// solved by network simplex with lowest-index tie-breaking. Dense cost given
// by a callable. a and b must be nonnegative with equal total mass (1e-10).
LpSolution transport_lp(const std::vector<double>& a, const std::vector<double>& b,
                        const std::function<double(int, int)>& cost);

// W2 between two densities on the same D grid (masses per node). Throws if
// the supports exceed max_support (exact LP is desk scale only).
struct W2LpResult {
    double distance = 0.0;
    DiscreteCoupling coupling;           // indices into the support lists
    std::vector<int> support_a, support_b;  // D-node ids of the support atoms
};
W2LpResult w2_lp(const Discretization& disc, const std::vector<double>& mu,
                 const std::vector<double>& nu, int max_support = 6000);

// quantile transforms (q = 1) --------------------------------------------

// Left-continuous inverse distribution function of the discrete measure
// (atoms at the D-grid nodes), sampled at levels t_k = (k+1/2)/m.
std::vector<double> quantiles_of_density(const AxisGrid& axis, const std::vector<double>& mu, int m);

// Deposit mass 1/m per level, linearly split between adjacent grid nodes.
std::vector<double> density_of_quantiles(const AxisGrid& axis, const std::vector<double>& levels);

QuantileField to_quantiles(const Discretization& disc, const MeasureField& mu, int m);
MeasureField from_quantiles(const Discretization& disc, const QuantileField& qf);

// Level-averaged quantile distance; exact for the piecewise representation
// as m -> infinity.
double w2_quantile(const AxisGrid& axis, const std::vector<double>& mu,
                   const std::vector<double>& nu, int m = 256);

// Exact integral of |Fmu^{-1} - Fnu^{-1}|^2 over [0,1] (the m -> infinity
// limit of w2_quantile), by merging the two cumulative-mass breakpoint lists.
double w2_quantile_exact(const AxisGrid& axis, const std::vector<double>& mu,
                         const std::vector<double>& nu);

// Quantile-average barycenter: exact minimizer of sum_k w_k W2^2(., mu_k)
// among grid measures, for q = 1.
std::vector<double> barycenter_1d(const AxisGrid& axis,
                                  const std::vector<std::vector<double>>& densities,
                                  const std::vector<double>& weights, int m = 256);

}  // namespace wharmonic
