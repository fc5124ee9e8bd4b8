#include "wharmonic/pde.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace wharmonic {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// --- LaplaceDirichlet --------------------------------------------------------

struct LaplaceDirichlet::Impl {
    const Discretization disc;
    std::vector<int> node_to_unknown;  // -1 for boundary
    std::vector<int> unknown_to_node;
    Eigen::SimplicialLDLT<SpMat> solver;

    explicit Impl(const Discretization& d) : disc(d) {
        node_to_unknown.assign(disc.n_omega, -1);
        for (int o : disc.interior) {
            node_to_unknown[o] = int(unknown_to_node.size());
            unknown_to_node.push_back(o);
        }
        const int n = int(unknown_to_node.size());
        std::vector<Triplet> trips;
        for (int u = 0; u < n; ++u) {
            const int o = unknown_to_node[u];
            auto a = disc.omega_multi(o);
            double diag = 0.0;
            for (int b = 0; b < disc.spec.p; ++b) {
                const double inv_h2 = 1.0 / (disc.omega_axes[b].h * disc.omega_axes[b].h);
                diag += 2.0 * inv_h2;
                for (int s = -1; s <= 1; s += 2) {
                    auto an = a;
                    an[b] += s;
                    const int on = disc.omega_index(an);
                    if (node_to_unknown[on] >= 0)
                        trips.emplace_back(u, node_to_unknown[on], -inv_h2);
                }
            }
            trips.emplace_back(u, u, diag);
        }
        SpMat A(n, n);
        A.setFromTriplets(trips.begin(), trips.end());
        solver.compute(A);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("LaplaceDirichlet: factorization failed");
    }
};

LaplaceDirichlet::LaplaceDirichlet(const Discretization& disc) : impl_(new Impl(disc)) {}
LaplaceDirichlet::~LaplaceDirichlet() { delete impl_; }
LaplaceDirichlet::LaplaceDirichlet(LaplaceDirichlet&& o) noexcept : impl_(o.impl_) { o.impl_ = nullptr; }

std::vector<double> LaplaceDirichlet::solve(const std::vector<double>& boundary_values) const {
    const auto& disc = impl_->disc;
    if (boundary_values.size() != disc.boundary.size())
        throw std::invalid_argument("LaplaceDirichlet: boundary value count mismatch");
    const int n = int(impl_->unknown_to_node.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int u = 0; u < n; ++u) {
        const int o = impl_->unknown_to_node[u];
        auto a = disc.omega_multi(o);
        for (int b = 0; b < disc.spec.p; ++b) {
            const double inv_h2 = 1.0 / (disc.omega_axes[b].h * disc.omega_axes[b].h);
            for (int s = -1; s <= 1; s += 2) {
                auto an = a;
                an[b] += s;
                const int on = disc.omega_index(an);
                if (disc.is_boundary[on])
                    rhs[u] += inv_h2 * boundary_values[disc.boundary_rank[on]];
            }
        }
    }
    Eigen::VectorXd x = impl_->solver.solve(rhs);
    std::vector<double> out(disc.n_omega, 0.0);
    for (size_t b = 0; b < disc.boundary.size(); ++b) out[disc.boundary[b]] = boundary_values[b];
    for (int u = 0; u < n; ++u) out[impl_->unknown_to_node[u]] = x[u];
    return out;
}

// --- NeumannHeat --------------------------------------------------------------

struct NeumannHeat::Impl {
    const Discretization disc;
    double dt;
    Eigen::SimplicialLDLT<SpMat> solver;

    Impl(const Discretization& d, double dt_) : disc(d), dt(dt_) {
        const int n = disc.n_d;
        // (W + dt L) in density variables; L = graph Laplacian of the grid
        // with transmissibility (transverse cell width)/spacing per face.
        std::vector<Triplet> trips;
        std::vector<double> diag(n, 0.0);
        for (int x = 0; x < n; ++x) diag[x] = disc.d_cell_vol[x];
        for (int x = 0; x < n; ++x) {
            auto xm = disc.d_multi(x);
            for (int j = 0; j < disc.spec.q; ++j) {
                if (xm[j] + 1 >= disc.spec.n_d[j]) continue;
                auto ym = xm;
                ym[j] += 1;
                const int y = disc.d_index(ym);
                double trans = 1.0 / disc.d_axes[j].h;
                if (disc.spec.q == 2) {
                    const int other = 1 - j;
                    const auto& ax = disc.d_axes[other];
                    trans *= (xm[other] == 0 || xm[other] == ax.n - 1) ? ax.h / 2.0 : ax.h;
                }
                trips.emplace_back(x, y, -dt * trans);
                trips.emplace_back(y, x, -dt * trans);
                diag[x] += dt * trans;
                diag[y] += dt * trans;
            }
        }
        for (int x = 0; x < n; ++x) trips.emplace_back(x, x, diag[x]);
        SpMat A(n, n);
        A.setFromTriplets(trips.begin(), trips.end());
        solver.compute(A);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("NeumannHeat: factorization failed");
    }
};

NeumannHeat::NeumannHeat(const Discretization& disc, double dt) : impl_(new Impl(disc, dt)) {}
NeumannHeat::~NeumannHeat() { delete impl_; }
NeumannHeat::NeumannHeat(NeumannHeat&& o) noexcept : impl_(o.impl_) { o.impl_ = nullptr; }

std::vector<double> NeumannHeat::step(const std::vector<double>& masses) const {
    const auto& disc = impl_->disc;
    const int n = disc.n_d;
    if (int(masses.size()) != n) throw std::invalid_argument("NeumannHeat: size mismatch");
    Eigen::VectorXd rhs(n);
    for (int x = 0; x < n; ++x) rhs[x] = masses[x];  // W * u = masses
    Eigen::VectorXd u = impl_->solver.solve(rhs);
    std::vector<double> out(n);
    for (int x = 0; x < n; ++x) out[x] = u[x] * disc.d_cell_vol[x];
    return out;
}

// --- weighted Neumann Poisson --------------------------------------------------

std::vector<double> weighted_neumann_poisson(const Discretization& disc,
                                             const std::vector<double>& rho_density,
                                             const std::vector<double>& rhs,
                                             double density_floor) {
    const int n = disc.n_d;
    if (int(rho_density.size()) != n || int(rhs.size()) != n)
        throw std::invalid_argument("weighted_neumann_poisson: size mismatch");
    for (double r : rho_density)
        if (r < density_floor)
            throw std::invalid_argument("weighted_neumann_poisson: density below floor");

    // assemble -div(rho grad .) in finite-volume form plus a rank-one mean
    // constraint via diagonal shift of the projected system
    std::vector<Triplet> trips;
    std::vector<double> diag(n, 0.0);
    for (int x = 0; x < n; ++x) {
        auto xm = disc.d_multi(x);
        for (int j = 0; j < disc.spec.q; ++j) {
            if (xm[j] + 1 >= disc.spec.n_d[j]) continue;
            auto ym = xm;
            ym[j] += 1;
            const int y = disc.d_index(ym);
            double trans = 0.5 * (rho_density[x] + rho_density[y]) / disc.d_axes[j].h;
            if (disc.spec.q == 2) {
                const int other = 1 - j;
                const auto& ax = disc.d_axes[other];
                trans *= (xm[other] == 0 || xm[other] == ax.n - 1) ? ax.h / 2.0 : ax.h;
            }
            trips.emplace_back(x, y, -trans);
            trips.emplace_back(y, x, -trans);
            diag[x] += trans;
            diag[y] += trans;
        }
    }
    for (int x = 0; x < n; ++x) trips.emplace_back(x, x, diag[x]);
    SpMat A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());

    // project rhs to zero weighted mean; pin the nullspace by adding w w^T
    Eigen::VectorXd b(n), w(n);
    double vol = 0.0;
    for (int x = 0; x < n; ++x) {
        w[x] = disc.d_cell_vol[x];
        vol += w[x];
        b[x] = rhs[x] * disc.d_cell_vol[x];  // finite-volume weak rhs
    }
    const double mean = b.sum() / vol;
    for (int x = 0; x < n; ++x) b[x] -= mean * w[x];

    // singular Neumann system: pin node 0, re-center afterwards
    SpMat Apin = A;
    for (int k = 0; k < Apin.outerSize(); ++k)
        for (SpMat::InnerIterator it(Apin, k); it; ++it)
            if (it.row() == 0 || it.col() == 0) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    Eigen::VectorXd bpin = b;
    bpin[0] = 0.0;

    Eigen::SimplicialLDLT<SpMat> solver;
    solver.compute(Apin);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("weighted_neumann_poisson: factorization failed");
    Eigen::VectorXd phi = solver.solve(bpin);

    // re-center to zero weighted mean
    double pm = 0.0;
    for (int x = 0; x < n; ++x) pm += phi[x] * w[x];
    pm /= vol;
    std::vector<double> out(n);
    for (int x = 0; x < n; ++x) out[x] = phi[x] - pm;
    return out;
}

}  // namespace wharmonic
