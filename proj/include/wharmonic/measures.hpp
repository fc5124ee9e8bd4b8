#pragma once

#include <vector>

#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

// Neumann heat semigroup applied to one D slice (masses per node), by
// implicit Euler substeps. t = 0 is the identity; mass conserved to 1e-12.
std::vector<double> heat_flow(const Discretization& disc, const std::vector<double>& masses,
                              double t, int max_substeps = 64);

// Reference density rho for the elliptically contoured family: radial,
// compactly supported, unit mass, zero mean, identity covariance under grid
// quadrature (enforced by calibrating the radius of an antialiased ball).
struct ReferenceDensity {
    std::vector<double> masses;  // per D node
    bool radial = true;
    double radius = 0.0;                      // calibrated ball radius
    std::array<std::array<double, 2>, 2> cov{};  // recorded grid covariance

    static ReferenceDensity make_default(const Discretization& disc);
};

// Pushforward of rho by x -> Ax for SPD A (row-major q x q), sampled on the
// D grid and renormalized. Throws if the image support does not fit in D.
std::vector<double> elliptic_density(const Discretization& disc, const double* a_mat,
                                     const ReferenceDensity& rho);

// Mean and covariance of a D-slice under grid atoms.
std::array<double, 2> slice_mean(const Discretization& disc, const std::vector<double>& masses);
std::array<std::array<double, 2>, 2> slice_cov(const Discretization& disc,
                                               const std::vector<double>& masses);

// Smooth strictly positive random density: mixture of a few bumps, heat
// smoothed; deterministic in the seed. Used by tests and the CLI generators.
std::vector<double> random_smooth_density(const Discretization& disc, unsigned seed,
                                          int n_bumps = 3, double smoothing = -1.0);

// Density with mass 1 at the grid point nearest to x (bilinear split), then
// heat smoothed at grid scale t = k_min^2.
std::vector<double> smoothed_dirac(const Discretization& disc, const std::array<double, 2>& x);

// Bilinear splat of a point mass, no smoothing.
void splat_point(const Discretization& disc, const std::array<double, 2>& x, double mass,
                 std::vector<double>& into);

// Pushforward of a slice by the affine map y = scale * x + shift, bilinear
// splatting onto the same grid.
std::vector<double> pushforward_affine(const Discretization& disc, const std::vector<double>& masses,
                                       double scale, const std::array<double, 2>& shift);

}  // namespace wharmonic
