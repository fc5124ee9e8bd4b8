#include "wharmonic/bbsolver.hpp"

#include <cmath>
#include <stdexcept>

#include "wharmonic/analysis.hpp"
#include "wharmonic/measures.hpp"
#include "wharmonic/pde.hpp"

namespace wharmonic {

ProxKinetic prox_kinetic(double m_tilde, double e_norm2, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("prox_kinetic: step must be positive");
    const double c = lambda * e_norm2 / 2.0;
    // prox = (0,0) iff P(0) = -m_tilde*lambda^2 - c >= 0
    if (-m_tilde * lambda * lambda - c >= 0.0) return {0.0, 0.0};

    // P(m) = (m - m_tilde)(m + lambda)^2 - c, unique root above max(0, m_tilde)
    auto P = [&](double m) {
        const double t = m + lambda;
        return (m - m_tilde) * t * t - c;
    };
    double lo = std::max(0.0, m_tilde);
    double hi = lo + std::cbrt(c) + 1e-30;
    while (P(hi) < 0.0) hi = 2.0 * hi + lambda;

    double m = 0.5 * (lo + hi);
    const double scale = std::max({1.0, std::abs(m_tilde), c});
    for (int it = 0; it < 200; ++it) {
        const double f = P(m);
        if (std::abs(f) < 1e-12 * scale) break;
        (f < 0.0 ? lo : hi) = m;
        const double t = m + lambda;
        const double df = t * t + 2.0 * (m - m_tilde) * t;
        double next = (df > 0.0) ? m - f / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        m = next;
    }
    return {m, m / (m + lambda)};
}

std::pair<MeasureField, MomentumField> initialize(const Discretization& disc,
                                                  const BoundaryData& bc,
                                                  const std::string& strategy,
                                                  const std::array<double, 2>& x0) {
    bc.validate(disc);
    MomentumField e(disc);
    if (strategy == "radial") {
        return {radial_extension(disc, bc, x0), std::move(e)};
    }
    if (strategy != "flat") throw std::invalid_argument("initialize: unknown strategy");

    MeasureField mu(disc.n_omega, disc.n_d);
    LaplaceDirichlet lap(disc);
    std::vector<double> bvals(disc.boundary.size());
    for (int d = 0; d < disc.n_d; ++d) {
        for (size_t r = 0; r < disc.boundary.size(); ++r) bvals[r] = bc.slices[r][d];
        auto field = lap.solve(bvals);
        for (int o = 0; o < disc.n_omega; ++o) mu.at(o, d) = std::max(0.0, field[o]);
    }
    mu.normalize_slices();
    return {std::move(mu), std::move(e)};
}

DualPotential multiplier_potential(const Discretization& disc, const ConstraintField& lam) {
    const int p = disc.spec.p;
    DualPotential phi(p, disc.n_omega, disc.n_d);
    for (int alpha = 0; alpha < p; ++alpha) {
        const int nd = disc.n_d;
        for (int o = 0; o < disc.n_omega; ++o) {
            auto a = disc.omega_multi(o);
            // transverse trapezoid weight and spacing were folded into the
            // unweighted pairing; undo both to read phi values off lambda.
            double wt = 1.0;
            if (p == 2) {
                const int other = 1 - alpha;
                const auto& ax = disc.omega_axes[other];
                wt = (a[other] == 0 || a[other] == ax.n - 1) ? ax.h / 2.0 : ax.h;
            }
            const double scale = 1.0 / (disc.omega_axes[alpha].h * wt);
            int faces[2];
            int nf = 0;
            if (a[alpha] - 1 >= 0) faces[nf++] = a[alpha] - 1;
            if (a[alpha] <= disc.spec.n_omega[alpha] - 2) faces[nf++] = a[alpha];
            for (int d = 0; d < nd; ++d) {
                double acc = 0.0;
                for (int t = 0; t < nf; ++t) {
                    auto fm = a;
                    fm[alpha] = faces[t];
                    acc += lam.r[alpha][size_t(disc.omega_face_index(alpha, fm)) * nd + d];
                }
                phi.at(alpha, o, d) = acc * scale / nf;
            }
        }
    }
    return phi;
}

namespace {

void clamp_primal(const Discretization& disc, const BoundaryData& bc, MeasureField& mu,
                  MomentumField& e) {
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        const int o = disc.boundary[r];
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = bc.slices[r][d];
    }
    for (int o : disc.interior)
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = std::max(0.0, mu.at(o, d));
    e.zero_boundary_flux(disc);
}

double finite_energy(const Discretization& disc, const MeasureField& mu,
                     const CenteredMomentum& ec, double mu_floor) {
    // energy of the running iterate; cells below the floor contribute 0
    double acc = 0.0;
    const int pq = ec.p * ec.q;
    for (int o = 0; o < disc.n_omega; ++o) {
        const double w = disc.omega_cell_vol[o];
        double s = 0.0;
        for (int d = 0; d < disc.n_d; ++d) {
            const double m = mu.at(o, d);
            if (m < mu_floor) continue;
            const double* e = &ec.v[(size_t(o) * disc.n_d + d) * pq];
            double e2 = 0.0;
            for (int k = 0; k < pq; ++k) e2 += e[k] * e[k];
            s += e2 / (2.0 * m);
        }
        acc += w * s;
    }
    return acc;
}

}  // namespace

std::tuple<MeasureField, MomentumField, SolveReport> solve_dirichlet(
    const Discretization& disc, const BoundaryData& bc, const SolverOptions& opts) {
    bc.validate(disc);
    for (const auto& s : bc.slices) {
        double m = 0.0;
        for (double x : s) m += x;
        if (m <= 0.0) throw std::invalid_argument("solve_dirichlet: zero-mass boundary slice");
    }

    auto [mu, e] = initialize(disc, bc, opts.init,
                              {0.5 * (disc.d_axes[0].lo + disc.d_axes[0].hi),
                               disc.spec.q == 2 ? 0.5 * (disc.d_axes[1].lo + disc.d_axes[1].hi) : 0.0});
    clamp_primal(disc, bc, mu, e);

    double tau = opts.tau, sigma = opts.sigma;
    if (tau <= 0.0 || sigma <= 0.0) {
        const double nrm = pdhg_operator_norm(disc, 80, 7 + opts.seed);
        const double base = 0.95 / nrm;
        sigma = base * opts.step_ratio;
        tau = base / opts.step_ratio;
    }

    // state
    MeasureField mu_bar = mu, mu_prev = mu, gmu(disc.n_omega, disc.n_d);
    MomentumField e_bar = e, e_prev = e, ge(disc);
    ConstraintField lam(disc), kz(disc);
    CenteredMomentum zc(disc), cbar(disc), zmom(disc);
    MeasureField zm(disc.n_omega, disc.n_d);  // dual of the identity block on mu

    SolveReport rep;
    const double h_min = disc.min_omega_spacing();
    double last_energy = std::numeric_limits<double>::infinity();
    std::vector<double> window;

    const int pq = disc.spec.p * disc.spec.q;
    for (int it = 0; it < opts.max_iters; ++it) {
        // dual ascent: multiplier for K z = 0
        apply_continuity(disc, mu_bar, e_bar, kz);
        for (int alpha = 0; alpha < disc.spec.p; ++alpha)
            for (size_t k2 = 0; k2 < lam.r[alpha].size(); ++k2)
                lam.r[alpha][k2] += sigma * kz.r[alpha][k2];

        // dual of the kinetic term via Moreau on the centered copy
        center_momentum(disc, e_bar, cbar);
        for (int o = 0; o < disc.n_omega; ++o) {
            const double w = disc.omega_cell_vol[o];
            for (int d = 0; d < disc.n_d; ++d) {
                const size_t cid = size_t(o) * disc.n_d + d;
                double zt_m = zm.v[cid] + sigma * mu_bar.v[cid];
                double* ze = &zc.v[cid * pq];
                const double* cb = &cbar.v[cid * pq];
                double e2 = 0.0;
                double zt_e[4];
                for (int k = 0; k < pq; ++k) {
                    zt_e[k] = ze[k] + sigma * cb[k];
                    e2 += zt_e[k] * zt_e[k];
                }
                const auto pr = prox_kinetic(zt_m / sigma, e2 / (sigma * sigma), w / sigma);
                zm.v[cid] = zt_m - sigma * pr.m;
                for (int k = 0; k < pq; ++k) ze[k] = zt_e[k] - sigma * (pr.e_scale * zt_e[k] / sigma);
            }
        }

        // primal descent
        std::fill(gmu.v.begin(), gmu.v.end(), 0.0);
        for (int c = 0; c < pq; ++c) std::fill(ge.comp[c].begin(), ge.comp[c].end(), 0.0);
        apply_continuity_adjoint(disc, lam, gmu, ge);
        center_momentum_adjoint(disc, zc, ge);
        for (size_t k = 0; k < gmu.v.size(); ++k) gmu.v[k] += zm.v[k];

        std::swap(mu_prev.v, mu.v);
        for (int c = 0; c < pq; ++c) std::swap(e_prev.comp[c], e.comp[c]);
        for (size_t k = 0; k < mu.v.size(); ++k) mu.v[k] = mu_prev.v[k] - tau * gmu.v[k];
        for (int c = 0; c < pq; ++c)
            for (size_t k = 0; k < e.comp[c].size(); ++k)
                e.comp[c][k] = e_prev.comp[c][k] - tau * ge.comp[c][k];
        clamp_primal(disc, bc, mu, e);

        // extrapolation
        for (size_t k = 0; k < mu.v.size(); ++k)
            mu_bar.v[k] = mu.v[k] + opts.theta * (mu.v[k] - mu_prev.v[k]);
        for (int c = 0; c < pq; ++c)
            for (size_t k = 0; k < e.comp[c].size(); ++k)
                e_bar.comp[c][k] = e.comp[c][k] + opts.theta * (e.comp[c][k] - e_prev.comp[c][k]);

        rep.iterations = it + 1;
        if ((it + 1) % opts.check_every == 0) {
            apply_continuity(disc, mu, e, kz);
            const double res = kz.max_norm() * h_min;
            center_momentum(disc, e, zmom);
            const double energy = finite_energy(disc, mu, zmom, opts.mu_floor);
            rep.energy_trace.push_back(energy);
            window.push_back(energy);
            const int wlen = std::max(1, opts.energy_window / opts.check_every);
            if (int(window.size()) > wlen) window.erase(window.begin());
            double rel_change = std::numeric_limits<double>::infinity();
            if (int(window.size()) == wlen) {
                const double lo = *std::min_element(window.begin(), window.end());
                const double hi = *std::max_element(window.begin(), window.end());
                rel_change = (hi - lo) / std::max(1e-12, std::abs(hi));
            }
            last_energy = energy;
            if (res <= opts.tol_residual && rel_change <= opts.tol_energy) {
                rep.converged = true;
                break;
            }
        }
    }

    // final cleanup: clamp, renormalize slices, restore bc exactly
    clamp_primal(disc, bc, mu, e);
    rep.renormalization = mu.max_slice_defect();
    mu.normalize_slices();
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        const int o = disc.boundary[r];
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = bc.slices[r][d];
    }

    apply_continuity(disc, mu, e, kz);
    rep.continuity_residual = kz.max_norm() * h_min;
    center_momentum(disc, e, zmom);
    rep.energy = finite_energy(disc, mu, zmom, opts.mu_floor);

    // duality-gap estimate from the accumulated multiplier
    const DualPotential phi = multiplier_potential(disc, lam);
    const CertificateReport cert = dual_certificate(disc, phi, bc);
    rep.has_certificate = true;
    rep.dual_bound = cert.lower_bound;
    rep.dual_margin = cert.feasibility_margin;
    rep.gap = rep.energy - (cert.lower_bound - cert.slack);

    return {std::move(mu), std::move(e), std::move(rep)};
}

}  // namespace wharmonic
