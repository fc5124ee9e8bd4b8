#pragma once

#include <array>
#include <vector>

#include "wharmonic/grid.hpp"

namespace wharmonic {

// Discrete map xi -> probability vector on the D grid. Values are masses per
// D node (each Omega slice sums to 1), not densities.
struct MeasureField {
    int n_omega = 0;
    int n_d = 0;
    std::vector<double> v;  // [omega][d]

    MeasureField() = default;
    MeasureField(int no, int nd) : n_omega(no), n_d(nd), v(size_t(no) * nd, 0.0) {}

    double& at(int o, int d) { return v[size_t(o) * n_d + d]; }
    double at(int o, int d) const { return v[size_t(o) * n_d + d]; }
    double slice_mass(int o) const {
        double s = 0.0;
        for (int d = 0; d < n_d; ++d) s += at(o, d);
        return s;
    }
    void normalize_slices();
    // Largest |slice mass - 1| over Omega nodes.
    double max_slice_defect() const;
};

// Momentum E^{alpha i} on fully staggered faces: half-offset in xi_alpha and
// in x_i. Components on the D-boundary faces must be exactly zero (no flux).
struct MomentumField {
    int p = 0, q = 0;
    std::array<std::vector<double>, 4> comp;  // [alpha*q + i][omega_face][d_face]

    MomentumField() = default;
    explicit MomentumField(const Discretization& disc);

    std::vector<double>& c(int alpha, int i) { return comp[alpha * q + i]; }
    const std::vector<double>& c(int alpha, int i) const { return comp[alpha * q + i]; }

    // Max |value| over D-boundary face slots (should be 0).
    double boundary_flux_norm(const Discretization& disc) const;
    void zero_boundary_flux(const Discretization& disc);
};

// Velocity colocated with mu after face-to-center averaging; p*q components
// per (omega, d) node pair.
struct VelocityField {
    int p = 0, q = 0;
    int n_omega = 0, n_d = 0;
    std::vector<double> v;             // [omega][d][alpha*q+i]
    std::vector<char> flagged;         // cells where mu below floor but |E| above

    VelocityField() = default;
    VelocityField(int p_, int q_, int no, int nd)
        : p(p_), q(q_), n_omega(no), n_d(nd),
          v(size_t(no) * nd * p_ * q_, 0.0), flagged(size_t(no) * nd, 0) {}

    double& at(int o, int d, int alpha, int i) {
        return v[(size_t(o) * n_d + d) * (p * q) + alpha * q + i];
    }
    double at(int o, int d, int alpha, int i) const {
        return v[(size_t(o) * n_d + d) * (p * q) + alpha * q + i];
    }
};

// R^p-valued potential phi(xi, x) sampled on the Omega x D grid.
struct DualPotential {
    int p = 0;
    int n_omega = 0, n_d = 0;
    std::vector<double> v;  // [alpha][omega][d]

    DualPotential() = default;
    DualPotential(int p_, int no, int nd)
        : p(p_), n_omega(no), n_d(nd), v(size_t(p_) * no * nd, 0.0) {}

    double& at(int alpha, int o, int d) {
        return v[(size_t(alpha) * n_omega + o) * n_d + d];
    }
    double at(int alpha, int o, int d) const {
        return v[(size_t(alpha) * n_omega + o) * n_d + d];
    }
};

// Per boundary-node probability vector on the D grid, ordered like
// Discretization::boundary.
struct BoundaryData {
    std::vector<std::vector<double>> slices;

    void validate(const Discretization& disc) const;
};

// Per Omega-node monotone quantile vector: m uniformly spaced levels
// t_k = (k + 1/2)/m, values in D units (q = 1 only).
struct QuantileField {
    int n_omega = 0;
    int m = 0;
    std::vector<double> v;  // [omega][level]

    QuantileField() = default;
    QuantileField(int no, int m_) : n_omega(no), m(m_), v(size_t(no) * m_, 0.0) {}

    double& at(int o, int k) { return v[size_t(o) * m + k]; }
    double at(int o, int k) const { return v[size_t(o) * m + k]; }
    bool monotone(double tol = 0.0) const;
};

// Per Omega-node symmetric positive definite q x q matrix, row-major.
struct SpdField {
    int n_omega = 0;
    int q = 0;
    std::vector<double> v;  // [omega][q*q]

    SpdField() = default;
    SpdField(int no, int q_) : n_omega(no), q(q_), v(size_t(no) * q_ * q_, 0.0) {}

    double* mat(int o) { return v.data() + size_t(o) * q * q; }
    const double* mat(int o) const { return v.data() + size_t(o) * q * q; }
};

}  // namespace wharmonic
