#include "wharmonic/energy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wharmonic/pde.hpp"
#include "wharmonic/transport.hpp"

namespace wharmonic {

static double perspective(double m, const double* e, int n, bool& infinite) {
    double e2 = 0.0;
    for (int k = 0; k < n; ++k) e2 += e[k] * e[k];
    if (m <= 0.0) {
        if (e2 > 0.0) infinite = true;
        return 0.0;
    }
    return e2 / (2.0 * m);
}

EnergyValue kinetic_energy_centered(const Discretization& disc, const MeasureField& mu,
                                    const CenteredMomentum& ec) {
    EnergyValue out;
    const int pq = ec.p * ec.q;
    for (int o = 0; o < disc.n_omega; ++o) {
        const double w = disc.omega_cell_vol[o];
        double acc = 0.0;
        for (int d = 0; d < disc.n_d; ++d) {
            const double* e = &ec.v[(size_t(o) * disc.n_d + d) * pq];
            acc += perspective(mu.at(o, d), e, pq, out.infinite);
        }
        out.value += w * acc;
    }
    return out;
}

EnergyValue kinetic_energy(const Discretization& disc, const MeasureField& mu,
                           const MomentumField& e) {
    if (mu.n_omega != disc.n_omega || mu.n_d != disc.n_d)
        throw std::invalid_argument("kinetic_energy: mu shape mismatch");
    CenteredMomentum ec(disc);
    center_momentum(disc, e, ec);
    return kinetic_energy_centered(disc, mu, ec);
}

VelocityField tangent_velocity(const Discretization& disc, const MeasureField& mu,
                               const MomentumField& e, double mu_floor) {
    CenteredMomentum ec(disc);
    center_momentum(disc, e, ec);
    VelocityField v(disc.spec.p, disc.spec.q, disc.n_omega, disc.n_d);
    const int pq = disc.spec.p * disc.spec.q;
    for (int o = 0; o < disc.n_omega; ++o) {
        for (int d = 0; d < disc.n_d; ++d) {
            const double m = mu.at(o, d);
            const double* ev = &ec.v[(size_t(o) * disc.n_d + d) * pq];
            double* vv = &v.v[(size_t(o) * disc.n_d + d) * pq];
            if (m >= mu_floor) {
                for (int k = 0; k < pq; ++k) vv[k] = ev[k] / m;
            } else {
                double e2 = 0.0;
                for (int k = 0; k < pq; ++k) e2 += ev[k] * ev[k];
                if (e2 > mu_floor * mu_floor) v.flagged[size_t(o) * disc.n_d + d] = 1;
            }
        }
    }
    return v;
}

double omega_derivative(const Discretization& disc, const std::vector<double>& node_field,
                        int o, int alpha) {
    auto a = disc.omega_multi(o);
    const int n = disc.spec.n_omega[alpha];
    const double h = disc.omega_axes[alpha].h;
    auto at = [&](int shift) {
        auto an = a;
        an[alpha] += shift;
        return node_field[disc.omega_index(an)];
    };
    if (a[alpha] == 0) return (at(1) - at(0)) / h;
    if (a[alpha] == n - 1) return (at(0) - at(-1)) / h;
    return (at(1) - at(-1)) / (2.0 * h);
}

double d_derivative(const Discretization& disc, const double* slice, int d, int i) {
    auto x = disc.d_multi(d);
    const int n = disc.spec.n_d[i];
    const double k = disc.d_axes[i].h;
    auto at = [&](int shift) {
        auto xn = x;
        xn[i] += shift;
        return slice[disc.d_index(xn)];
    };
    if (x[i] == 0) return (-1.5 * at(0) + 2.0 * at(1) - 0.5 * at(2)) / k;
    if (x[i] == n - 1) return (1.5 * at(0) - 2.0 * at(-1) + 0.5 * at(-2)) / k;
    return (at(1) - at(-1)) / (2.0 * k);
}

VelocityField tangent_velocity_elliptic(const Discretization& disc, const MeasureField& mu,
                                        double density_floor) {
    VelocityField v(disc.spec.p, disc.spec.q, disc.n_omega, disc.n_d);
    const int nd = disc.n_d;
    std::vector<double> rho(nd), rhs(nd), phi;
    // per-Omega-node densities
    std::vector<double> dens(size_t(disc.n_omega) * nd);
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < nd; ++d) dens[size_t(o) * nd + d] = mu.at(o, d) / disc.d_cell_vol[d];

    std::vector<double> column(disc.n_omega);
    for (int o = 0; o < disc.n_omega; ++o) {
        for (int d = 0; d < nd; ++d) rho[d] = dens[size_t(o) * nd + d];
        for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
            // rhs = d_alpha rho  (so that -div(rho grad phi) = -d_alpha rho)
            for (int d = 0; d < nd; ++d) {
                for (int oo = 0; oo < disc.n_omega; ++oo) column[oo] = dens[size_t(oo) * nd + d];
                rhs[d] = omega_derivative(disc, column, o, alpha);
            }
            phi = weighted_neumann_poisson(disc, rho, rhs, density_floor);
            for (int d = 0; d < nd; ++d)
                for (int i = 0; i < disc.spec.q; ++i)
                    v.at(o, d, alpha, i) = d_derivative(disc, phi.data(), d, i);
        }
    }
    return v;
}

double c_p(int p) {
    if (p == 1) return 1.5;                        // 3 / (vol of [-1,1])
    if (p == 2) return 4.0 / std::numbers::pi;     // 4 / (vol of unit disc)
    throw std::invalid_argument("c_p: p must be 1 or 2");
}

ApproxEnergySpec ApproxEnergySpec::make(const Discretization& disc, double eps) {
    if (eps < 2.0 * disc.min_omega_spacing())
        throw std::invalid_argument("dir_eps: eps below 2x grid spacing");
    return {eps, c_p(disc.spec.p)};
}

double ball_cell_weight(const Discretization& disc, int node_a, int node_b, double eps) {
    const auto xa = disc.omega_coord(node_a);
    const auto b = disc.omega_multi(node_b);
    if (disc.spec.p == 1) {
        const auto& ax = disc.omega_axes[0];
        const double lo = std::max({ax.lo, ax.coord(b[0]) - ax.h / 2, xa[0] - eps});
        const double hi = std::min({ax.hi, ax.coord(b[0]) + ax.h / 2, xa[0] + eps});
        return std::max(0.0, hi - lo);
    }
    // p = 2: antialias the disc indicator over the cell with a fixed subgrid
    const auto& ax0 = disc.omega_axes[0];
    const auto& ax1 = disc.omega_axes[1];
    const double lo0 = std::max(ax0.lo, ax0.coord(b[0]) - ax0.h / 2);
    const double hi0 = std::min(ax0.hi, ax0.coord(b[0]) + ax0.h / 2);
    const double lo1 = std::max(ax1.lo, ax1.coord(b[1]) - ax1.h / 2);
    const double hi1 = std::min(ax1.hi, ax1.coord(b[1]) + ax1.h / 2);
    constexpr int ns = 6;
    int inside = 0;
    for (int s0 = 0; s0 < ns; ++s0)
        for (int s1 = 0; s1 < ns; ++s1) {
            const double x = lo0 + (hi0 - lo0) * (s0 + 0.5) / ns;
            const double y = lo1 + (hi1 - lo1) * (s1 + 0.5) / ns;
            const double dx = x - xa[0], dy = y - xa[1];
            if (dx * dx + dy * dy <= eps * eps) ++inside;
        }
    return (hi0 - lo0) * (hi1 - lo1) * double(inside) / double(ns * ns);
}

double dir_eps(const Discretization& disc, const MeasureField& mu, double eps) {
    const auto spec = ApproxEnergySpec::make(disc, eps);
    const int p = disc.spec.p;
    double half_diag = 0.0;
    for (int b = 0; b < p; ++b) half_diag += disc.omega_axes[b].h * disc.omega_axes[b].h;
    half_diag = 0.5 * std::sqrt(half_diag);
    std::vector<double> slice_a(disc.n_d), slice_b(disc.n_d);
    double acc = 0.0;
    for (int a = 0; a < disc.n_omega; ++a) {
        const auto xa = disc.omega_coord(a);
        const double wa = disc.omega_cell_vol[a];
        for (int b = 0; b < disc.n_omega; ++b) {
            if (b == a) continue;
            const auto xb = disc.omega_coord(b);
            const double dx = xa[0] - xb[0], dy = xa[1] - xb[1];
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist > eps + half_diag) continue;
            const double wb = ball_cell_weight(disc, a, b, eps);
            if (wb == 0.0) continue;
            for (int d = 0; d < disc.n_d; ++d) {
                slice_a[d] = mu.at(a, d);
                slice_b[d] = mu.at(b, d);
            }
            double w2;
            if (disc.spec.q == 1) {
                w2 = w2_quantile_exact(disc.d_axes[0], slice_a, slice_b);
            } else {
                w2 = w2_lp(disc, slice_a, slice_b).distance;
            }
            acc += wa * wb * w2 * w2;
        }
    }
    return spec.cp / (2.0 * std::pow(eps, p + 2)) * acc;
}

double boundary_term(const Discretization& disc, const BoundaryData& bc, const DualPotential& phi) {
    bc.validate(disc);
    if (phi.p != disc.spec.p || phi.n_omega != disc.n_omega || phi.n_d != disc.n_d)
        throw std::invalid_argument("boundary_term: phi shape mismatch");
    double acc = 0.0;
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        const int o = disc.boundary[r];
        const double w = disc.boundary_weight[o];
        const auto n = disc.normal[o];
        double integral = 0.0;
        for (int d = 0; d < disc.n_d; ++d) {
            double pn = phi.at(0, o, d) * n[0];
            if (disc.spec.p == 2) pn += phi.at(1, o, d) * n[1];
            integral += bc.slices[r][d] * pn;
        }
        acc += w * integral;
    }
    return acc;
}

CertificateReport dual_certificate(const Discretization& disc, const DualPotential& phi,
                                   const BoundaryData& bc) {
    CertificateReport rep;
    rep.lower_bound = boundary_term(disc, bc, phi);

    const int p = disc.spec.p, q = disc.spec.q;
    std::vector<double> node_field(disc.n_omega);
    double margin = -std::numeric_limits<double>::infinity();
    std::vector<double> divO(size_t(disc.n_omega) * disc.n_d, 0.0);
    for (int alpha = 0; alpha < p; ++alpha) {
        for (int d = 0; d < disc.n_d; ++d) {
            for (int o = 0; o < disc.n_omega; ++o) node_field[o] = phi.at(alpha, o, d);
            for (int o = 0; o < disc.n_omega; ++o)
                divO[size_t(o) * disc.n_d + d] += omega_derivative(disc, node_field, o, alpha);
        }
    }
    std::vector<double> slice(disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o) {
        for (int d = 0; d < disc.n_d; ++d) {
            double g2 = 0.0;
            for (int alpha = 0; alpha < p; ++alpha) {
                const double* sl = &phi.v[(size_t(alpha) * disc.n_omega + o) * disc.n_d];
                for (int i = 0; i < q; ++i) {
                    const double g = d_derivative(disc, sl, d, i);
                    g2 += g * g;
                }
            }
            margin = std::max(margin, divO[size_t(o) * disc.n_d + d] + 0.5 * g2);
        }
    }
    rep.feasibility_margin = margin;
    rep.slack = std::max(0.0, margin) * disc.omega_volume();
    return rep;
}

}  // namespace wharmonic
