#pragma once

#include <vector>

#include "wharmonic/grid.hpp"

namespace wharmonic {

// Dirichlet Laplace solve on the Omega grid: classic 3/5-point stencil,
// boundary nodes fixed. `boundary_values` is indexed like
// Discretization::boundary; returns the full node field.
// Many right-hand sides share one factorization via LaplaceDirichlet.
class LaplaceDirichlet {
  public:
    explicit LaplaceDirichlet(const Discretization& disc);
    ~LaplaceDirichlet();
    LaplaceDirichlet(LaplaceDirichlet&&) noexcept;

    std::vector<double> solve(const std::vector<double>& boundary_values) const;

  private:
    struct Impl;
    Impl* impl_;
};

// One implicit Euler step of the Neumann heat semigroup on the D grid acting
// on masses per node: (W + dt L) u = W u_old in density variables. Mass is
// conserved exactly; output strictly positive for dt > 0.
class NeumannHeat {
  public:
    NeumannHeat(const Discretization& disc, double dt);
    ~NeumannHeat();
    NeumannHeat(NeumannHeat&&) noexcept;

    std::vector<double> step(const std::vector<double>& masses) const;

  private:
    struct Impl;
    Impl* impl_;
};

// Weighted Neumann Poisson solve on the D grid:
//   -div_D(rho grad_D phi) = rhs,  no-flux on the D boundary,
// with rho given as a density per node (arithmetic face averages). The rhs
// is projected onto zero weighted mean; phi returned with zero mean.
std::vector<double> weighted_neumann_poisson(const Discretization& disc,
                                             const std::vector<double>& rho_density,
                                             const std::vector<double>& rhs,
                                             double density_floor = 1e-6);

}  // namespace wharmonic
