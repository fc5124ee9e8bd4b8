#pragma once

#include <string>
#include <vector>

#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

// Functionals on P(D) used for the maximum-principle checks.
struct FunctionalSpec {
    enum class Kind { Potential, Entropy, Interaction, QuadraticForm };
    Kind kind = Kind::Potential;
    std::vector<double> potential;      // V on the D grid
    std::vector<double> interaction;    // W on the D x D grid (row-major)
    std::array<double, 4> quad_form{};  // PSD q x q, row-major
    std::string convexity_class;        // metadata only

    static FunctionalSpec make_potential(std::vector<double> v);
    static FunctionalSpec make_entropy();
    static FunctionalSpec make_interaction(std::vector<double> w);
    static FunctionalSpec make_quadratic(const std::array<double, 4>& c, int q);
};

// Per-node quadrature evaluation of F(mu(xi)); entropy uses m ln(m / cell
// volume) with 0 ln 0 = 0.
std::vector<double> eval_functional(const Discretization& disc, const MeasureField& mu,
                                    const FunctionalSpec& f);

struct SubharmonicityReport {
    double min_interior_laplacian = 0.0;
    double max_gap = 0.0;  // max interior value - max boundary value
    double tol = 0.0;
    bool pass = false;
};

// Centered 3/5-point Laplacian on interior nodes plus the boundary-maximum
// gap; PASS iff min Laplacian >= -tol and gap <= tol.
SubharmonicityReport subharmonicity_check(const Discretization& disc,
                                          const std::vector<double>& field, double tol);

// Radial Lipschitz extension of boundary data into the box: the node at
// sup-norm radius r and boundary projection xi gets T_r # bc(xi) with
// T_r(x) = r x + (1-r) x0, boundary measures interpolated along the loop.
MeasureField radial_extension(const Discretization& disc, const BoundaryData& bc,
                              const std::array<double, 2>& x0);

// Boundary nodes of the p=2 box ordered counterclockwise as a loop, plus the
// arclength of each node along it. For p=1 the "loop" is {left, right}.
struct BoundaryLoop {
    std::vector<int> ranks;        // positions in Discretization::boundary
    std::vector<double> arclength; // per loop entry
    double perimeter = 0.0;
};
BoundaryLoop boundary_loop(const Discretization& disc);

// Square-root boundary data: node at loop parameter t in [0, 2pi) carries
// (delta_{e^{it/2}} + delta_{e^{i(t/2+pi)}})/2, heat-smoothed at grid scale.
// Requires q = 2 and the unit disc inside D.
BoundaryData sqrt_boundary(const Discretization& disc);

// mu-weighted L2 norm of the antisymmetric part of
//   d_alpha v^{beta i} + sum_j v^{alpha j} d_j v^{beta i}
// over the (alpha, beta) pair; p = 2 only.
double obstruction_defect(const Discretization& disc, const VelocityField& v,
                          const MeasureField& mu);

}  // namespace wharmonic
