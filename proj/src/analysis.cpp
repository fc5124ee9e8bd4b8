#include "wharmonic/analysis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wharmonic/energy.hpp"
#include "wharmonic/measures.hpp"

namespace wharmonic {

FunctionalSpec FunctionalSpec::make_potential(std::vector<double> v) {
    FunctionalSpec f;
    f.kind = Kind::Potential;
    f.potential = std::move(v);
    f.convexity_class = "potential";
    return f;
}
FunctionalSpec FunctionalSpec::make_entropy() {
    FunctionalSpec f;
    f.kind = Kind::Entropy;
    f.convexity_class = "internal";
    return f;
}
FunctionalSpec FunctionalSpec::make_interaction(std::vector<double> w) {
    FunctionalSpec f;
    f.kind = Kind::Interaction;
    f.interaction = std::move(w);
    f.convexity_class = "interaction";
    return f;
}
FunctionalSpec FunctionalSpec::make_quadratic(const std::array<double, 4>& c, int q) {
    FunctionalSpec f;
    f.kind = Kind::QuadraticForm;
    f.quad_form = c;
    f.convexity_class = "quadratic-form";
    if (q == 1) {
        if (c[0] < 0.0) throw std::invalid_argument("quadratic functional: C not PSD");
    } else {
        if (c[1] != c[2] || c[0] < 0.0 || c[3] < 0.0 || c[0] * c[3] - c[1] * c[2] < -1e-14)
            throw std::invalid_argument("quadratic functional: C not PSD");
    }
    return f;
}

std::vector<double> eval_functional(const Discretization& disc, const MeasureField& mu,
                                    const FunctionalSpec& f) {
    if (mu.n_omega != disc.n_omega || mu.n_d != disc.n_d)
        throw std::invalid_argument("eval_functional: shape mismatch");
    std::vector<double> out(disc.n_omega, 0.0);
    switch (f.kind) {
        case FunctionalSpec::Kind::Potential: {
            if (int(f.potential.size()) != disc.n_d)
                throw std::invalid_argument("eval_functional: potential size mismatch");
            for (int o = 0; o < disc.n_omega; ++o) {
                double s = 0.0;
                for (int d = 0; d < disc.n_d; ++d) s += f.potential[d] * mu.at(o, d);
                out[o] = s;
            }
            break;
        }
        case FunctionalSpec::Kind::Entropy: {
            for (int o = 0; o < disc.n_omega; ++o) {
                double s = 0.0;
                for (int d = 0; d < disc.n_d; ++d) {
                    const double m = mu.at(o, d);
                    if (m > 0.0) s += m * std::log(m / disc.d_cell_vol[d]);
                }
                out[o] = s;
            }
            break;
        }
        case FunctionalSpec::Kind::Interaction: {
            if (f.interaction.size() != size_t(disc.n_d) * disc.n_d)
                throw std::invalid_argument("eval_functional: interaction size mismatch");
            for (int o = 0; o < disc.n_omega; ++o) {
                double s = 0.0;
                for (int d = 0; d < disc.n_d; ++d) {
                    if (mu.at(o, d) == 0.0) continue;
                    for (int d2 = 0; d2 < disc.n_d; ++d2)
                        s += f.interaction[size_t(d) * disc.n_d + d2] * mu.at(o, d) * mu.at(o, d2);
                }
                out[o] = s;
            }
            break;
        }
        case FunctionalSpec::Kind::QuadraticForm: {
            for (int o = 0; o < disc.n_omega; ++o) {
                double s = 0.0;
                for (int d = 0; d < disc.n_d; ++d) {
                    const auto x = disc.d_coord(d);
                    double qf = f.quad_form[0] * x[0] * x[0];
                    if (disc.spec.q == 2)
                        qf += (f.quad_form[1] + f.quad_form[2]) * x[0] * x[1] +
                              f.quad_form[3] * x[1] * x[1];
                    s += qf * mu.at(o, d);
                }
                out[o] = s;
            }
            break;
        }
    }
    return out;
}

SubharmonicityReport subharmonicity_check(const Discretization& disc,
                                          const std::vector<double>& field, double tol) {
    if (int(field.size()) != disc.n_omega)
        throw std::invalid_argument("subharmonicity_check: field size mismatch");
    SubharmonicityReport rep;
    rep.tol = tol;
    double min_lap = std::numeric_limits<double>::infinity();
    for (int o : disc.interior) {
        auto a = disc.omega_multi(o);
        double lap = 0.0;
        for (int b = 0; b < disc.spec.p; ++b) {
            const double h2 = disc.omega_axes[b].h * disc.omega_axes[b].h;
            auto ap = a, am = a;
            ap[b] += 1;
            am[b] -= 1;
            lap += (field[disc.omega_index(ap)] - 2.0 * field[o] + field[disc.omega_index(am)]) / h2;
        }
        min_lap = std::min(min_lap, lap);
    }
    double max_int = -std::numeric_limits<double>::infinity();
    double max_bdy = -std::numeric_limits<double>::infinity();
    for (int o : disc.interior) max_int = std::max(max_int, field[o]);
    for (int o : disc.boundary) max_bdy = std::max(max_bdy, field[o]);
    rep.min_interior_laplacian = disc.interior.empty() ? 0.0 : min_lap;
    rep.max_gap = max_int - max_bdy;
    rep.pass = rep.min_interior_laplacian >= -tol && rep.max_gap <= tol;
    return rep;
}

BoundaryLoop boundary_loop(const Discretization& disc) {
    BoundaryLoop loop;
    if (disc.spec.p == 1) {
        loop.ranks = {disc.boundary_rank[0], disc.boundary_rank[disc.n_omega - 1]};
        loop.arclength = {0.0, disc.omega_axes[0].hi - disc.omega_axes[0].lo};
        loop.perimeter = 2.0 * (disc.omega_axes[0].hi - disc.omega_axes[0].lo);
        return loop;
    }
    const int n0 = disc.spec.n_omega[0], n1 = disc.spec.n_omega[1];
    const double h0 = disc.omega_axes[0].h, h1 = disc.omega_axes[1].h;
    double s = 0.0;
    auto push = [&](int i, int j, double step) {
        s += step;
        loop.ranks.push_back(disc.boundary_rank[disc.omega_index({i, j})]);
        loop.arclength.push_back(s);
    };
    // counterclockwise from (0,0): bottom, right, top, left
    loop.ranks.push_back(disc.boundary_rank[disc.omega_index({0, 0})]);
    loop.arclength.push_back(0.0);
    for (int i = 1; i < n0; ++i) push(i, 0, h0);
    for (int j = 1; j < n1; ++j) push(n0 - 1, j, h1);
    for (int i = n0 - 2; i >= 0; --i) push(i, n1 - 1, h0);
    for (int j = n1 - 2; j >= 1; --j) push(0, j, h1);
    loop.perimeter = s + h1;  // closing edge back to (0,0)
    return loop;
}

MeasureField radial_extension(const Discretization& disc, const BoundaryData& bc,
                              const std::array<double, 2>& x0) {
    bc.validate(disc);
    const int p = disc.spec.p;
    MeasureField mu(disc.n_omega, disc.n_d);

    std::array<double, 2> center{0.5 * (disc.omega_axes[0].lo + disc.omega_axes[0].hi), 0.0};
    std::array<double, 2> half{0.5 * (disc.omega_axes[0].hi - disc.omega_axes[0].lo), 1.0};
    if (p == 2) {
        center[1] = 0.5 * (disc.omega_axes[1].lo + disc.omega_axes[1].hi);
        half[1] = 0.5 * (disc.omega_axes[1].hi - disc.omega_axes[1].lo);
    }

    std::vector<double> slice(disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        double r;
        if (p == 1) {
            r = std::abs(xi[0] - center[0]) / half[0];
            const int rank = (xi[0] < center[0]) ? disc.boundary_rank[0]
                                                 : disc.boundary_rank[disc.n_omega - 1];
            for (int d = 0; d < disc.n_d; ++d) slice[d] = bc.slices[rank][d];
        } else {
            const double u0 = (xi[0] - center[0]) / half[0];
            const double u1 = (xi[1] - center[1]) / half[1];
            r = std::max(std::abs(u0), std::abs(u1));
            if (r < 1e-14) {
                std::fill(slice.begin(), slice.end(), 0.0);
                slice[0] = 1.0;  // irrelevant: scale 0 pushforward
            } else {
                // radial projection onto the box boundary, then linear
                // interpolation between the two neighboring boundary nodes
                const double px = center[0] + half[0] * u0 / r;
                const double py = center[1] + half[1] * u1 / r;
                int ia, ib;
                double w;
                const auto& ax0 = disc.omega_axes[0];
                const auto& ax1 = disc.omega_axes[1];
                auto clamp_cell = [](double s, int n) {
                    int i = int(std::floor(s));
                    return std::min(std::max(i, 0), n - 2);
                };
                if (std::abs(u0) >= std::abs(u1)) {
                    const int i0 = (u0 > 0) ? disc.spec.n_omega[0] - 1 : 0;
                    const double sj = (py - ax1.lo) / ax1.h;
                    const int j0 = clamp_cell(sj, disc.spec.n_omega[1]);
                    ia = disc.boundary_rank[disc.omega_index({i0, j0})];
                    ib = disc.boundary_rank[disc.omega_index({i0, j0 + 1})];
                    w = sj - j0;
                } else {
                    const int j0 = (u1 > 0) ? disc.spec.n_omega[1] - 1 : 0;
                    const double si = (px - ax0.lo) / ax0.h;
                    const int i0 = clamp_cell(si, disc.spec.n_omega[0]);
                    ia = disc.boundary_rank[disc.omega_index({i0, j0})];
                    ib = disc.boundary_rank[disc.omega_index({i0 + 1, j0})];
                    w = si - i0;
                }
                for (int d = 0; d < disc.n_d; ++d)
                    slice[d] = (1.0 - w) * bc.slices[ia][d] + w * bc.slices[ib][d];
            }
        }
        auto pushed = pushforward_affine(disc, slice, r, {(1.0 - r) * x0[0], (1.0 - r) * x0[1]});
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = pushed[d];
    }
    mu.normalize_slices();
    return mu;
}

BoundaryData sqrt_boundary(const Discretization& disc) {
    if (disc.spec.q != 2) throw std::invalid_argument("sqrt_boundary: q must be 2");
    for (int j = 0; j < 2; ++j)
        if (disc.d_axes[j].lo > -1.0 || disc.d_axes[j].hi < 1.0)
            throw std::invalid_argument("sqrt_boundary: unit disc does not fit in D");

    const auto loop = boundary_loop(disc);
    BoundaryData bc;
    bc.slices.assign(disc.boundary.size(), {});
    std::vector<double> m(disc.n_d);
    for (size_t k = 0; k < loop.ranks.size(); ++k) {
        const double t = 2.0 * std::numbers::pi * loop.arclength[k] / loop.perimeter;
        std::fill(m.begin(), m.end(), 0.0);
        splat_point(disc, {std::cos(t / 2), std::sin(t / 2)}, 0.5, m);
        splat_point(disc, {-std::cos(t / 2), -std::sin(t / 2)}, 0.5, m);
        const double k_min = disc.min_d_spacing();
        auto sm = heat_flow(disc, m, k_min * k_min);
        double s = 0.0;
        for (double x : sm) s += x;
        for (double& x : sm) x /= s;
        bc.slices[loop.ranks[k]] = std::move(sm);
    }
    return bc;
}

double obstruction_defect(const Discretization& disc, const VelocityField& v,
                          const MeasureField& mu) {
    if (disc.spec.p != 2) throw std::invalid_argument("obstruction_defect: p must be 2");
    const int q = disc.spec.q;
    const int pq = 2 * q;

    // node fields per component for Omega derivatives
    std::vector<std::vector<double>> comp(pq, std::vector<double>(size_t(disc.n_omega) * disc.n_d));
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < disc.n_d; ++d)
            for (int c = 0; c < pq; ++c)
                comp[c][size_t(o) * disc.n_d + d] = v.v[(size_t(o) * disc.n_d + d) * pq + c];

    double acc = 0.0;
    std::vector<double> node_field(disc.n_omega);
    std::vector<double> slice(disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o) {
        const double w = disc.omega_cell_vol[o];
        double node_acc = 0.0;
        for (int d = 0; d < disc.n_d; ++d) {
            const double mass = mu.at(o, d);
            if (mass <= 0.0) continue;
            double defect2 = 0.0;
            for (int i = 0; i < q; ++i) {
                // d_alpha v^{beta i} - d_beta v^{alpha i}  (alpha=0, beta=1)
                for (int oo = 0; oo < disc.n_omega; ++oo)
                    node_field[oo] = comp[1 * q + i][size_t(oo) * disc.n_d + d];
                double t = omega_derivative(disc, node_field, o, 0);
                for (int oo = 0; oo < disc.n_omega; ++oo)
                    node_field[oo] = comp[0 * q + i][size_t(oo) * disc.n_d + d];
                t -= omega_derivative(disc, node_field, o, 1);
                // + sum_j v^{0j} d_j v^{1i} - v^{1j} d_j v^{0i}
                for (int j = 0; j < q; ++j) {
                    const double* s1 = comp[1 * q + i].data() + size_t(o) * disc.n_d;
                    const double* s0 = comp[0 * q + i].data() + size_t(o) * disc.n_d;
                    t += v.at(o, d, 0, j) * d_derivative(disc, s1, d, j);
                    t -= v.at(o, d, 1, j) * d_derivative(disc, s0, d, j);
                }
                defect2 += t * t;
            }
            node_acc += mass * defect2;
        }
        acc += w * node_acc;
    }
    return std::sqrt(acc);
}

}  // namespace wharmonic
