#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace wharmonic {

// One uniformly spaced axis: n nodes on [lo, hi], spacing h = (hi-lo)/(n-1).
struct AxisGrid {
    double lo = 0.0;
    double hi = 1.0;
    int n = 0;
    double h = 0.0;

    double coord(int i) const { return lo + h * i; }
};

// Box discretization parameters for the source domain Omega in R^p and the
// target domain D in R^q. Only p, q in {1, 2} are supported.
struct GridSpec {
    int p = 1;
    int q = 1;
    std::array<std::array<double, 2>, 2> omega_extent{{{0.0, 1.0}, {0.0, 1.0}}};
    std::array<std::array<double, 2>, 2> d_extent{{{0.0, 1.0}, {0.0, 1.0}}};
    std::array<int, 2> n_omega{3, 3};
    std::array<int, 2> n_d{3, 3};

    void validate() const;
};

// Index sets, coordinates, boundary normals and quadrature weights derived
// from a GridSpec. Immutable after construction.
struct Discretization {
    GridSpec spec;
    std::vector<AxisGrid> omega_axes;  // size p
    std::vector<AxisGrid> d_axes;      // size q

    int n_omega = 0;  // total Omega nodes
    int n_d = 0;      // total D nodes

    std::vector<int> interior;            // interior Omega node ids
    std::vector<int> boundary;            // boundary Omega node ids
    std::vector<char> is_boundary;        // per Omega node
    std::vector<int> boundary_rank;       // node id -> position in `boundary`, -1 inside

    // Per Omega node: outward unit normal and boundary quadrature weight.
    // Zero for interior nodes. Corners carry the normalized sum of the
    // adjacent face normals; the weight is the magnitude of the summed
    // weighted normals, so weight * normal integrates fluxes correctly.
    std::vector<std::array<double, 2>> normal;
    std::vector<double> boundary_weight;

    std::vector<double> omega_cell_vol;  // trapezoid weight per Omega node
    std::vector<double> d_cell_vol;      // trapezoid weight per D node

    // --- index helpers -----------------------------------------------------
    int omega_index(const std::array<int, 2>& a) const {
        return spec.p == 1 ? a[0] : a[0] * spec.n_omega[1] + a[1];
    }
    std::array<int, 2> omega_multi(int idx) const {
        if (spec.p == 1) return {idx, 0};
        return {idx / spec.n_omega[1], idx % spec.n_omega[1]};
    }
    int d_index(const std::array<int, 2>& x) const {
        return spec.q == 1 ? x[0] : x[0] * spec.n_d[1] + x[1];
    }
    std::array<int, 2> d_multi(int idx) const {
        if (spec.q == 1) return {idx, 0};
        return {idx / spec.n_d[1], idx % spec.n_d[1]};
    }

    std::array<double, 2> omega_coord(int idx) const {
        auto a = omega_multi(idx);
        std::array<double, 2> c{omega_axes[0].coord(a[0]), 0.0};
        if (spec.p == 2) c[1] = omega_axes[1].coord(a[1]);
        return c;
    }
    std::array<double, 2> d_coord(int idx) const {
        auto x = d_multi(idx);
        std::array<double, 2> c{d_axes[0].coord(x[0]), 0.0};
        if (spec.q == 2) c[1] = d_axes[1].coord(x[1]);
        return c;
    }

    // Omega faces in direction alpha: nodes (a, a+e_alpha) pairs.
    // Count along alpha is n-1, full node count on the other axis.
    int omega_face_count(int alpha) const {
        int c = 1;
        for (int b = 0; b < spec.p; ++b)
            c *= (b == alpha) ? spec.n_omega[b] - 1 : spec.n_omega[b];
        return c;
    }
    int omega_face_index(int alpha, const std::array<int, 2>& f) const {
        if (spec.p == 1) return f[0];
        int n1 = (alpha == 1) ? spec.n_omega[1] - 1 : spec.n_omega[1];
        return f[0] * n1 + f[1];
    }

    // D positions for momentum component i: all faces orthogonal to axis i
    // including the two domain-boundary faces, so n+1 slots along axis i.
    // Slot f sits at x_{f-1/2}; slots 0 and n are the no-flux boundary faces.
    int d_face_count(int i) const {
        int c = 1;
        for (int j = 0; j < spec.q; ++j)
            c *= (j == i) ? spec.n_d[j] + 1 : spec.n_d[j];
        return c;
    }
    int d_face_index(int i, const std::array<int, 2>& f) const {
        if (spec.q == 1) return f[0];
        int n1 = (i == 1) ? spec.n_d[1] + 1 : spec.n_d[1];
        return f[0] * n1 + f[1];
    }
    std::array<int, 2> d_face_multi(int i, int idx) const {
        if (spec.q == 1) return {idx, 0};
        int n1 = (i == 1) ? spec.n_d[1] + 1 : spec.n_d[1];
        return {idx / n1, idx % n1};
    }
    std::array<int, 2> omega_face_multi(int alpha, int idx) const {
        if (spec.p == 1) return {idx, 0};
        int n1 = (alpha == 1) ? spec.n_omega[1] - 1 : spec.n_omega[1];
        return {idx / n1, idx % n1};
    }

    double min_omega_spacing() const;
    double min_d_spacing() const;
    double omega_volume() const;
};

// Builds node coordinates, interior/boundary index sets, outward normals and
// quadrature weights. Deterministic given the spec.
Discretization build_discretization(const GridSpec& spec);

}  // namespace wharmonic
