#include "wharmonic/continuity.hpp"

#include <cmath>
#include <random>

namespace wharmonic {

void apply_continuity(const Discretization& disc, const MeasureField& mu,
                      const MomentumField& e, ConstraintField& out) {
    const int p = disc.spec.p, q = disc.spec.q;
    const int nd = disc.n_d;
    for (int alpha = 0; alpha < p; ++alpha) {
        const double inv_h = 1.0 / disc.omega_axes[alpha].h;
        const int nof = disc.omega_face_count(alpha);
        auto& r = out.r[alpha];
        for (int of = 0; of < nof; ++of) {
            auto f = disc.omega_face_multi(alpha, of);
            auto a_lo = f;
            auto a_hi = f;
            a_hi[alpha] += 1;
            const int o_lo = disc.omega_index(a_lo);
            const int o_hi = disc.omega_index(a_hi);
            double* rr = r.data() + size_t(of) * nd;
            for (int x = 0; x < nd; ++x)
                rr[x] = (mu.at(o_hi, x) - mu.at(o_lo, x)) * inv_h;
            for (int i = 0; i < q; ++i) {
                const double inv_k = 1.0 / disc.d_axes[i].h;
                const int ndf = disc.d_face_count(i);
                const double* ee = e.c(alpha, i).data() + size_t(of) * ndf;
                for (int x = 0; x < nd; ++x) {
                    auto xm = disc.d_multi(x);
                    auto s_lo = xm;            // face at x_i - 1/2 -> slot x_i
                    auto s_hi = xm;
                    s_hi[i] += 1;              // face at x_i + 1/2 -> slot x_i + 1
                    rr[x] += (ee[disc.d_face_index(i, s_hi)] - ee[disc.d_face_index(i, s_lo)]) * inv_k;
                }
            }
        }
    }
}

void apply_continuity_adjoint(const Discretization& disc, const ConstraintField& lam,
                              MeasureField& gmu, MomentumField& ge) {
    const int p = disc.spec.p, q = disc.spec.q;
    const int nd = disc.n_d;
    for (int alpha = 0; alpha < p; ++alpha) {
        const double inv_h = 1.0 / disc.omega_axes[alpha].h;
        const int nof = disc.omega_face_count(alpha);
        const auto& r = lam.r[alpha];
        for (int of = 0; of < nof; ++of) {
            auto f = disc.omega_face_multi(alpha, of);
            auto a_lo = f;
            auto a_hi = f;
            a_hi[alpha] += 1;
            const int o_lo = disc.omega_index(a_lo);
            const int o_hi = disc.omega_index(a_hi);
            const double* rr = r.data() + size_t(of) * nd;
            for (int x = 0; x < nd; ++x) {
                gmu.at(o_lo, x) -= rr[x] * inv_h;
                gmu.at(o_hi, x) += rr[x] * inv_h;
            }
            for (int i = 0; i < q; ++i) {
                const double inv_k = 1.0 / disc.d_axes[i].h;
                const int ndf = disc.d_face_count(i);
                double* ee = ge.c(alpha, i).data() + size_t(of) * ndf;
                for (int x = 0; x < nd; ++x) {
                    auto xm = disc.d_multi(x);
                    auto s_lo = xm;
                    auto s_hi = xm;
                    s_hi[i] += 1;
                    ee[disc.d_face_index(i, s_hi)] += rr[x] * inv_k;
                    ee[disc.d_face_index(i, s_lo)] -= rr[x] * inv_k;
                }
            }
        }
    }
}

void center_momentum(const Discretization& disc, const MomentumField& e, CenteredMomentum& out) {
    const int p = disc.spec.p, q = disc.spec.q;
    std::fill(out.v.begin(), out.v.end(), 0.0);
    for (int alpha = 0; alpha < p; ++alpha) {
        const int n_alpha = disc.spec.n_omega[alpha];
        for (int i = 0; i < q; ++i) {
            const int ndf = disc.d_face_count(i);
            const auto& ee = e.c(alpha, i);
            for (int o = 0; o < disc.n_omega; ++o) {
                auto a = disc.omega_multi(o);
                // adjacent alpha-faces: a[alpha]-1 and a[alpha]
                int fa[2];
                int nfaces = 0;
                if (a[alpha] - 1 >= 0) fa[nfaces++] = a[alpha] - 1;
                if (a[alpha] <= n_alpha - 2) fa[nfaces++] = a[alpha];
                const double w_omega = 1.0 / nfaces;
                for (int d = 0; d < disc.n_d; ++d) {
                    auto xm = disc.d_multi(d);
                    auto s_lo = xm;
                    auto s_hi = xm;
                    s_hi[i] += 1;
                    const int d_lo = disc.d_face_index(i, s_lo);
                    const int d_hi = disc.d_face_index(i, s_hi);
                    double acc = 0.0;
                    for (int t = 0; t < nfaces; ++t) {
                        auto fm = a;
                        fm[alpha] = fa[t];
                        const size_t base = size_t(disc.omega_face_index(alpha, fm)) * ndf;
                        acc += 0.5 * (ee[base + d_lo] + ee[base + d_hi]);
                    }
                    out.at(o, d, alpha, i) = acc * w_omega;
                }
            }
        }
    }
}

void center_momentum_adjoint(const Discretization& disc, const CenteredMomentum& z, MomentumField& ge) {
    const int p = disc.spec.p, q = disc.spec.q;
    for (int alpha = 0; alpha < p; ++alpha) {
        const int n_alpha = disc.spec.n_omega[alpha];
        for (int i = 0; i < q; ++i) {
            const int ndf = disc.d_face_count(i);
            auto& ee = ge.c(alpha, i);
            for (int o = 0; o < disc.n_omega; ++o) {
                auto a = disc.omega_multi(o);
                int fa[2];
                int nfaces = 0;
                if (a[alpha] - 1 >= 0) fa[nfaces++] = a[alpha] - 1;
                if (a[alpha] <= n_alpha - 2) fa[nfaces++] = a[alpha];
                const double w_omega = 1.0 / nfaces;
                for (int d = 0; d < disc.n_d; ++d) {
                    auto xm = disc.d_multi(d);
                    auto s_lo = xm;
                    auto s_hi = xm;
                    s_hi[i] += 1;
                    const int d_lo = disc.d_face_index(i, s_lo);
                    const int d_hi = disc.d_face_index(i, s_hi);
                    const double val = z.at(o, d, alpha, i) * w_omega * 0.5;
                    for (int t = 0; t < nfaces; ++t) {
                        auto fm = a;
                        fm[alpha] = fa[t];
                        const size_t base = size_t(disc.omega_face_index(alpha, fm)) * ndf;
                        ee[base + d_lo] += val;
                        ee[base + d_hi] += val;
                    }
                }
            }
        }
    }
}

ResidualReport continuity_residual(const Discretization& disc, const MeasureField& mu,
                                   const MomentumField& e, const BoundaryData& bc) {
    if (mu.n_omega != disc.n_omega || mu.n_d != disc.n_d)
        throw std::invalid_argument("continuity_residual: mu shape mismatch");
    if (e.p != disc.spec.p || e.q != disc.spec.q)
        throw std::invalid_argument("continuity_residual: momentum shape mismatch");
    bc.validate(disc);
    if (e.boundary_flux_norm(disc) > 0.0)
        throw std::invalid_argument("continuity_residual: momentum flux on D-boundary face");

    MeasureField clamped = mu;
    for (size_t b = 0; b < disc.boundary.size(); ++b) {
        const int o = disc.boundary[b];
        for (int d = 0; d < disc.n_d; ++d) clamped.at(o, d) = bc.slices[b][d];
    }
    ResidualReport rep;
    rep.field = ConstraintField(disc);
    apply_continuity(disc, clamped, e, rep.field);
    rep.max_norm = rep.field.max_norm();
    return rep;
}

namespace {

// x -> K^T K x (or L^T L x) on the concatenated (mu, E) vector.
double power_iteration(const Discretization& disc, bool with_centering, int iters, unsigned seed) {
    MeasureField mu(disc.n_omega, disc.n_d), gmu(disc.n_omega, disc.n_d);
    MomentumField e(disc), ge(disc);
    ConstraintField lam(disc);
    CenteredMomentum cm(disc);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : mu.v) x = u(rng);
    for (int c = 0; c < e.p * e.q; ++c)
        for (auto& x : e.comp[c]) x = u(rng);

    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        apply_continuity(disc, mu, e, lam);
        std::fill(gmu.v.begin(), gmu.v.end(), 0.0);
        for (int c = 0; c < e.p * e.q; ++c) std::fill(ge.comp[c].begin(), ge.comp[c].end(), 0.0);
        apply_continuity_adjoint(disc, lam, gmu, ge);
        if (with_centering) {
            center_momentum(disc, e, cm);
            center_momentum_adjoint(disc, cm, ge);
            // identity block on mu
            for (size_t k = 0; k < mu.v.size(); ++k) gmu.v[k] += mu.v[k];
        }
        double nrm = 0.0;
        for (double x : gmu.v) nrm += x * x;
        for (int c = 0; c < e.p * e.q; ++c)
            for (double x : ge.comp[c]) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) return 0.0;
        lambda = nrm;
        const double inv = 1.0 / nrm;
        for (size_t k = 0; k < mu.v.size(); ++k) mu.v[k] = gmu.v[k] * inv;
        for (int c = 0; c < e.p * e.q; ++c)
            for (size_t k = 0; k < e.comp[c].size(); ++k) e.comp[c][k] = ge.comp[c][k] * inv;
    }
    return std::sqrt(lambda);
}

}  // namespace

double continuity_operator_norm(const Discretization& disc, int iters, unsigned seed) {
    return power_iteration(disc, false, iters, seed);
}

double pdhg_operator_norm(const Discretization& disc, int iters, unsigned seed) {
    return power_iteration(disc, true, iters, seed);
}

}  // namespace wharmonic
