#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

using Mat = Eigen::MatrixXd;

// Per Omega-node, per direction alpha, the symmetric matrix
// B^alpha = L_A L_{A^2}^{-1}(d_alpha A).
struct BField {
    int n_omega = 0, p = 0, q = 0;
    std::vector<double> v;  // [omega][alpha][q*q]

    BField() = default;
    BField(int no, int p_, int q_)
        : n_omega(no), p(p_), q(q_), v(size_t(no) * p_ * q_ * q_, 0.0) {}

    double* mat(int o, int alpha) { return v.data() + (size_t(o) * p + alpha) * q * q; }
    const double* mat(int o, int alpha) const { return v.data() + (size_t(o) * p + alpha) * q * q; }
};

// Unique symmetric PSD square root.
Mat sym_sqrt(const Mat& m);

// W2 between elliptically contoured measures with deviation matrices a, b:
// sqrt(Tr(a^2 + b^2 - 2 (a b^2 a)^{1/2})). Throws on non-SPD input.
double w2_bures(const Mat& a, const Mat& b);

// L_A(H) = AH + HA, and the solve S X + X S = H for SPD S.
Mat lyap_apply(const Mat& a, const Mat& h);
Mat lyap_solve(const Mat& s, const Mat& h, double eig_floor = 1e-12);

// g_A(H) = 1/2 L_A(L_A(L_{A^2}^{-1}(H))).
Mat metric_apply(const Mat& a, const Mat& h);

Mat spd_node(const SpdField& f, int o);
void set_node(SpdField& f, int o, const Mat& m);
double min_eigenvalue(const SpdField& f);

// d_alpha A by centered differences (one-sided first order on the boundary),
// then B^alpha per node.
BField b_fields(const Discretization& disc, const SpdField& afield);

// 1/2 sum_nodes w sum_alpha <d_alpha A, g_A(d_alpha A)>.
double riemannian_energy(const Discretization& disc, const SpdField& afield);

struct ElResidual {
    std::vector<double> field;  // per interior node: Frobenius norm of the residual matrix
    double max_norm = 0.0;
};

// sum_alpha d_alpha B^alpha + sum_alpha (B^alpha)^2 at interior nodes.
ElResidual el_residual(const Discretization& disc, const SpdField& afield);

// Boundary data: SPD matrix per boundary node, ordered like
// Discretization::boundary (an SpdField with n_omega = boundary count).
struct BuresOptions {
    int max_iters = 2000;          // descent iterations
    double grad_tol = 1e-10;       // on the descent gradient norm
    double el_tol = 1e-9;          // target EL residual max norm
    double spd_floor = 1e-8;       // relative eigenvalue floor
    int newton_max_iters = 60;
};

struct BuresReport {
    double energy = 0.0;
    double el_residual = 0.0;
    int descent_iterations = 0;
    int newton_iterations = 0;
    bool converged = false;
    bool floor_hit = false;
    std::vector<double> energy_trace;  // descent phase, nonincreasing
};

// Riemannian Dirichlet solve: preconditioned gradient descent with Armijo on
// the face-based energy, then a damped Newton polish that drives the
// node-centered Euler-Lagrange stencil to el_tol.
std::pair<SpdField, BuresReport> solve_bures(const Discretization& disc, const SpdField& bc,
                                             const BuresOptions& opts = {});

// phi^alpha(xi, x) = 1/2 x . B^alpha(xi) x sampled on the Omega x D grid.
DualPotential dual_from_bures(const Discretization& disc, const BField& bfield);

struct PrincipleReport {
    double min_interior_laplacian = 0.0;
    double max_gap = 0.0;
    double min_interior = 0.0;   // det principle: min interior det cov
    double min_boundary = 0.0;   // det principle: min boundary det cov
    bool pass = false;
};

// f(xi) = <A(xi)^2, C> is subharmonic for PSD C: reports the discrete
// Laplacian minimum and the interior-vs-boundary max gap.
PrincipleReport quadratic_max_principle(const Discretization& disc, const SpdField& afield,
                                        const Mat& c, double tol);

// Entropy-derived minimum principle: interior det cov >= boundary min.
PrincipleReport det_min_principle(const Discretization& disc, const SpdField& afield, double tol);

}  // namespace wharmonic
