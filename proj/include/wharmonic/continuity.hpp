#pragma once

#include <vector>

#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

namespace wharmonic {

// One scalar equation per Omega direction: values live at (alpha-face, D-node)
// pairs. Also the layout of the continuity multiplier.
struct ConstraintField {
    int p = 0;
    std::array<std::vector<double>, 2> r;  // [alpha][omega_face * n_d + d]

    ConstraintField() = default;
    explicit ConstraintField(const Discretization& disc) {
        p = disc.spec.p;
        for (int alpha = 0; alpha < p; ++alpha)
            r[alpha].assign(size_t(disc.omega_face_count(alpha)) * disc.n_d, 0.0);
    }
    void set_zero() {
        for (int alpha = 0; alpha < p; ++alpha)
            std::fill(r[alpha].begin(), r[alpha].end(), 0.0);
    }
    double max_norm() const {
        double m = 0.0;
        for (int alpha = 0; alpha < p; ++alpha)
            for (double x : r[alpha]) m = std::max(m, std::abs(x));
        return m;
    }
};

// Centered momentum: p*q components colocated with mu (same storage layout as
// VelocityField::v, without the flags).
struct CenteredMomentum {
    int p = 0, q = 0, n_omega = 0, n_d = 0;
    std::vector<double> v;  // [omega][d][alpha*q+i]

    CenteredMomentum() = default;
    explicit CenteredMomentum(const Discretization& disc)
        : p(disc.spec.p), q(disc.spec.q), n_omega(disc.n_omega), n_d(disc.n_d),
          v(size_t(disc.n_omega) * disc.n_d * p * q, 0.0) {}

    double& at(int o, int d, int alpha, int i) {
        return v[(size_t(o) * n_d + d) * (p * q) + alpha * q + i];
    }
    double at(int o, int d, int alpha, int i) const {
        return v[(size_t(o) * n_d + d) * (p * q) + alpha * q + i];
    }
};

// out^alpha[f, x] = (mu[a+e_alpha, x] - mu[a, x]) / h_alpha
//                 + sum_i (E[f, x_i+1] - E[f, x_i]) / k_i
void apply_continuity(const Discretization& disc, const MeasureField& mu,
                      const MomentumField& e, ConstraintField& out);

// Transpose of apply_continuity: accumulates into (gmu, ge); caller zeroes.
void apply_continuity_adjoint(const Discretization& disc, const ConstraintField& lam,
                              MeasureField& gmu, MomentumField& ge);

// Face-to-center averaging (linear) and its transpose.
void center_momentum(const Discretization& disc, const MomentumField& e, CenteredMomentum& out);
void center_momentum_adjoint(const Discretization& disc, const CenteredMomentum& z, MomentumField& ge);

struct ResidualReport {
    ConstraintField field;
    double max_norm = 0.0;
};

// Residual of the discrete continuity equation with mu clamped to bc on the
// Omega boundary and no-flux closure on the D boundary. Throws if momentum
// carries flux on a D-boundary face.
ResidualReport continuity_residual(const Discretization& disc, const MeasureField& mu,
                                   const MomentumField& e, const BoundaryData& bc);

// Operator norm estimates by power iteration (deterministic seed).
// norm_K: continuity operator alone. norm_L: stacked [K; center; id_mu].
double continuity_operator_norm(const Discretization& disc, int iters = 60, unsigned seed = 7);
double pdhg_operator_norm(const Discretization& disc, int iters = 60, unsigned seed = 7);

}  // namespace wharmonic
