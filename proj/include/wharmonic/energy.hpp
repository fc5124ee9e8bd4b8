#pragma once

#include <vector>

#include "wharmonic/continuity.hpp"
#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

struct EnergyValue {
    double value = 0.0;
    bool infinite = false;  // some cell carries momentum over zero mass
};

// Dir(mu, E) = sum_cells w_cell |e_c|^2 / (2 mu) with face-to-center averaged
// momentum; convex and jointly 1-homogeneous in (mu, E).
EnergyValue kinetic_energy(const Discretization& disc, const MeasureField& mu,
                           const MomentumField& e);
EnergyValue kinetic_energy_centered(const Discretization& disc, const MeasureField& mu,
                                    const CenteredMomentum& ec);

// v = E / mu with face-to-center averaging; cells with mu below the floor get
// v = 0 and are flagged when momentum is present there.
VelocityField tangent_velocity(const Discretization& disc, const MeasureField& mu,
                               const MomentumField& e, double mu_floor = 1e-12);

// Tangent velocity of a smooth strictly positive field: per Omega node and
// direction, solves the weighted Neumann Poisson problem
//   div_D(rho grad_D phi_alpha) = -d_alpha rho
// and returns grad_D phi (densities rho = mu / cell volume).
VelocityField tangent_velocity_elliptic(const Discretization& disc, const MeasureField& mu,
                                        double density_floor = 1e-6);

// C_p = (p+2) / vol(unit ball of R^p).
double c_p(int p);

struct ApproxEnergySpec {
    double eps = 0.0;
    double cp = 0.0;

    static ApproxEnergySpec make(const Discretization& disc, double eps);
};

// Korevaar-Schoen/Jost approximate energy:
//   C_p/(2 eps^{p+2}) * sum of W2^2(mu(xi), mu(eta)) over node pairs with
//   |xi - eta| <= eps, quadrature weights with exact ball/cell intersection
//   (subsampled for p = 2). q = 1 uses the exact quantile distance; q = 2
//   the transport LP.
double dir_eps(const Discretization& disc, const MeasureField& mu, double eps);

// Pair quadrature weight used by dir_eps: measure of cell_b intersected with
// the ball B(xi_a, eps). Exposed for the Jost scheme.
double ball_cell_weight(const Discretization& disc, int node_a, int node_b, double eps);

// BT quadrature: sum over boundary nodes of w(xi) n(xi) . int_D phi dmu(xi).
double boundary_term(const Discretization& disc, const BoundaryData& bc, const DualPotential& phi);

struct CertificateReport {
    double lower_bound = 0.0;       // BT(bc, phi)
    double feasibility_margin = 0.0;  // max over grid of div_Omega phi + |grad_D phi|^2/2
    double slack = 0.0;             // margin-induced slack on the bound
};

// Evaluates the dual constraint by finite differences (centered inside,
// one-sided first order on the Omega boundary, one-sided second order on the
// D boundary). Does not project infeasible phi.
CertificateReport dual_certificate(const Discretization& disc, const DualPotential& phi,
                                   const BoundaryData& bc);

// Finite-difference helpers shared with the analysis module.
// d/dxi_alpha of a per-(omega,d) scalar field, at a given omega node.
double omega_derivative(const Discretization& disc, const std::vector<double>& node_field,
                        int o, int alpha);
// gradient in D of a per-d scalar slice, at a given d node (2nd order sided).
double d_derivative(const Discretization& disc, const double* slice, int d, int i);

}  // namespace wharmonic
