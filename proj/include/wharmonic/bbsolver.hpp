#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "wharmonic/continuity.hpp"
#include "wharmonic/energy.hpp"
#include "wharmonic/fields.hpp"

namespace wharmonic {

struct SolverOptions {
    int max_iters = 30000;
    double tau = 0.0;        // primal step; 0 = auto from the operator norm
    double sigma = 0.0;      // dual step; 0 = auto
    double step_ratio = 1.0; // sigma/tau skew when auto
    double theta = 1.0;      // over-relaxation
    double tol_residual = 1e-6;  // on max|K z| * h_min
    double tol_energy = 1e-7;    // relative energy change over the window
    int energy_window = 50;
    int check_every = 25;
    double mu_floor = 1e-12;
    unsigned seed = 0;
    std::string init = "flat";  // "flat" | "radial"
};

struct SolveReport {
    double energy = 0.0;
    double continuity_residual = 0.0;  // normalized: max|K z| * h_min
    int iterations = 0;
    bool converged = false;
    std::vector<double> energy_trace;  // sampled every check_every iterations
    double renormalization = 0.0;      // slice-mass defect removed in cleanup
    bool has_certificate = false;
    double dual_bound = 0.0;
    double dual_margin = 0.0;
    double gap = 0.0;
};

// Exact proximal point of (m, e) -> |e|^2 / (2 m) (+inf for m < 0) with prox
// parameter lambda: scalar cubic solved by safeguarded Newton. Returns m' and
// the factor s with e' = s * e_tilde.
struct ProxKinetic {
    double m;
    double e_scale;
};
ProxKinetic prox_kinetic(double m_tilde, double e_norm2, double lambda);

// Initial iterate: "flat" = per-D-node harmonic extension of the boundary
// slices (renormalized); "radial" = boundary measures pushed toward a
// smoothed Dirac at x0 along T_r(x) = r x + (1-r) x0.
std::pair<MeasureField, MomentumField> initialize(const Discretization& disc,
                                                  const BoundaryData& bc,
                                                  const std::string& strategy,
                                                  const std::array<double, 2>& x0);

// Interpret the continuity multiplier as a dual potential sampled at nodes
// (face values unweighted and averaged).
DualPotential multiplier_potential(const Discretization& disc, const ConstraintField& lam);

// Primal-dual hybrid gradient solve of
//   min Dir(mu, E)  s.t. continuity, mu = bc on the Omega boundary.
std::tuple<MeasureField, MomentumField, SolveReport> solve_dirichlet(
    const Discretization& disc, const BoundaryData& bc, const SolverOptions& opts);

}  // namespace wharmonic
