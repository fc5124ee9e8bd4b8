#include "wharmonic/quantile_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wharmonic/energy.hpp"
#include "wharmonic/pde.hpp"

namespace wharmonic {

void BoundaryQuantiles::validate(const Discretization& disc) const {
    if (disc.spec.q != 1) throw std::invalid_argument("quantile solver: q must be 1");
    if (slices.size() != disc.boundary.size())
        throw std::invalid_argument("BoundaryQuantiles: slice count mismatch");
    const auto& ax = disc.d_axes[0];
    for (const auto& s : slices) {
        if (int(s.size()) != m) throw std::invalid_argument("BoundaryQuantiles: level count mismatch");
        for (size_t k = 0; k + 1 < s.size(); ++k)
            if (s[k + 1] < s[k]) throw std::invalid_argument("BoundaryQuantiles: non-monotone slice");
        for (double x : s)
            if (x < ax.lo - 1e-12 || x > ax.hi + 1e-12)
                throw std::invalid_argument("BoundaryQuantiles: value outside D");
    }
}

QuantileField solve_quantile(const Discretization& disc, const BoundaryQuantiles& bc) {
    bc.validate(disc);
    QuantileField qf(disc.n_omega, bc.m);
    LaplaceDirichlet lap(disc);
    std::vector<double> bvals(disc.boundary.size());
    for (int k = 0; k < bc.m; ++k) {
        for (size_t r = 0; r < disc.boundary.size(); ++r) bvals[r] = bc.slices[r][k];
        auto field = lap.solve(bvals);
        for (int o = 0; o < disc.n_omega; ++o) qf.at(o, k) = field[o];
    }
    if (!qf.monotone(1e-12))
        throw std::runtime_error("solve_quantile: maximum principle violated (non-monotone output)");
    return qf;
}

double quantile_dirichlet_energy(const Discretization& disc, const QuantileField& qf) {
    double acc = 0.0;
    for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
        const double h = disc.omega_axes[alpha].h;
        const int nof = disc.omega_face_count(alpha);
        for (int of = 0; of < nof; ++of) {
            auto f = disc.omega_face_multi(alpha, of);
            auto hi = f;
            hi[alpha] += 1;
            const int o_lo = disc.omega_index(f);
            const int o_hi = disc.omega_index(hi);
            double w_trans = 1.0;
            if (disc.spec.p == 2) {
                const int other = 1 - alpha;
                const auto& ax = disc.omega_axes[other];
                w_trans = (f[other] == 0 || f[other] == ax.n - 1) ? ax.h / 2.0 : ax.h;
            }
            double s = 0.0;
            for (int k = 0; k < qf.m; ++k) {
                const double d = (qf.at(o_hi, k) - qf.at(o_lo, k)) / h;
                s += d * d;
            }
            acc += w_trans * h * s / qf.m;
        }
    }
    return 0.5 * acc;
}

namespace {

// The approximate problem is posed on an extended box: a collar of width
// >= eps around Omega carries the boundary values (constant along the
// outward normal), so every ball seen by a free node is fully anchored.
struct JostDomain {
    Discretization ext;               // extended discretization
    std::vector<int> pad;             // nodes added per side, per axis
    std::vector<int> free_nodes;      // extended ids of the interior of Omega
    std::vector<int> ext_to_orig;     // extended id -> original id (clamped)
    std::vector<char> is_free;

    // per free node: neighbor list in the extended grid with ball weights
    std::vector<std::vector<std::pair<int, double>>> neighbors;

    JostDomain(const Discretization& disc, double eps) {
        const int p = disc.spec.p;
        GridSpec espec = disc.spec;
        for (int b = 0; b < p; ++b) {
            const auto& ax = disc.omega_axes[b];
            const int padb = int(std::ceil(eps / ax.h)) + 1;
            pad.push_back(padb);
            espec.n_omega[b] = ax.n + 2 * padb;
            espec.omega_extent[b] = {ax.lo - padb * ax.h, ax.hi + padb * ax.h};
        }
        ext = build_discretization(espec);

        ext_to_orig.assign(ext.n_omega, -1);
        is_free.assign(ext.n_omega, 0);
        for (int oe = 0; oe < ext.n_omega; ++oe) {
            auto a = ext.omega_multi(oe);
            std::array<int, 2> orig{0, 0};
            bool inside = true;
            bool interior = true;
            for (int b = 0; b < p; ++b) {
                int i = a[b] - pad[b];
                if (i < 0 || i > disc.spec.n_omega[b] - 1) inside = false;
                if (i <= 0 || i >= disc.spec.n_omega[b] - 1) interior = false;
                orig[b] = std::min(std::max(i, 0), disc.spec.n_omega[b] - 1);
            }
            ext_to_orig[oe] = disc.omega_index(orig);
            (void)inside;
            if (interior) {
                is_free[oe] = 1;
                free_nodes.push_back(oe);
            }
        }

        // ball neighborhoods (self excluded), weights = cell/ball overlap
        double half_diag = 0.0;
        for (int b = 0; b < p; ++b) half_diag += ext.omega_axes[b].h * ext.omega_axes[b].h;
        half_diag = 0.5 * std::sqrt(half_diag);
        neighbors.resize(free_nodes.size());
        for (size_t t = 0; t < free_nodes.size(); ++t) {
            const int oe = free_nodes[t];
            const auto xa = ext.omega_coord(oe);
            for (int ob = 0; ob < ext.n_omega; ++ob) {
                if (ob == oe) continue;
                const auto xb = ext.omega_coord(ob);
                const double dx = xa[0] - xb[0], dy = xa[1] - xb[1];
                if (std::sqrt(dx * dx + dy * dy) > eps + half_diag) continue;
                const double w = ball_cell_weight(ext, oe, ob, eps);
                if (w > 0.0) neighbors[t].emplace_back(ob, w);
            }
        }
    }
};

// minimize s (v - target)^2 + lambda * V(v) over [lo, hi], V piecewise linear
// on the D grid; golden section to 1e-10.
double scalar_prox(const AxisGrid& ax, const std::vector<double>& V, double s, double target,
                   double lambda) {
    auto vat = [&](double x) {
        double t = (x - ax.lo) / ax.h;
        const int i = std::min(std::max(int(std::floor(t)), 0), ax.n - 2);
        const double f = std::min(std::max(t - i, 0.0), 1.0);
        return (1.0 - f) * V[i] + f * V[i + 1];
    };
    auto obj = [&](double x) {
        const double d = x - target;
        return s * d * d + lambda * vat(x);
    };
    double lo = ax.lo, hi = ax.hi;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = obj(c), fd = obj(d);
    while (hi - lo > 1e-10) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = obj(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = obj(d);
        }
    }
    return 0.5 * (lo + hi);
}

// exact minimizer of the local functional at one free node
void local_minimizer(const Discretization& disc, const JostDomain& dom,
                     const std::vector<double>& values, int m, size_t t, const JostOptions& opts,
                     double cp, std::vector<double>& out) {
    const auto& nb = dom.neighbors[t];
    out.assign(m, 0.0);
    double total = 0.0;
    for (const auto& [ob, w] : nb) {
        total += w;
        const double* q = values.data() + size_t(ob) * m;
        for (int k = 0; k < m; ++k) out[k] += w * q[k];
    }
    for (int k = 0; k < m; ++k) out[k] /= total;
    if (opts.lambda > 0.0) {
        if (!opts.functional || opts.functional->kind != FunctionalSpec::Kind::Potential)
            throw std::invalid_argument("jost: lambda > 0 supports potential functionals only");
        // per level (1/m weights cancel): min strength*(v - qbar)^2 + lambda*V(v)
        const double strength = cp / std::pow(opts.eps, disc.spec.p + 2) * total;
        for (int k = 0; k < m; ++k)
            out[k] = scalar_prox(disc.d_axes[0], opts.functional->potential, strength, out[k],
                                 opts.lambda);
        // prox of a convex potential is monotone; safeguard anyway
        for (int k = 1; k < m; ++k) out[k] = std::max(out[k], out[k - 1]);
    }
}

// extended value array from a field on Omega (collar = clamped values)
std::vector<double> extend_values(const JostDomain& dom, const QuantileField& field) {
    std::vector<double> values(size_t(dom.ext.n_omega) * field.m);
    for (int oe = 0; oe < dom.ext.n_omega; ++oe) {
        const int o = dom.ext_to_orig[oe];
        for (int k = 0; k < field.m; ++k) values[size_t(oe) * field.m + k] = field.at(o, k);
    }
    return values;
}

void check_jost_pre(const Discretization& disc, const JostOptions& opts) {
    if (disc.spec.q != 1) throw std::invalid_argument("jost: q must be 1");
    if (opts.eps < 2.0 * disc.min_omega_spacing())
        throw std::invalid_argument("jost: eps below 2x grid spacing");
}

}  // namespace

QuantileField jost_step(const Discretization& disc, const QuantileField& field,
                        const JostOptions& opts) {
    check_jost_pre(disc, opts);
    const double cp = c_p(disc.spec.p);
    JostDomain dom(disc, opts.eps);
    auto values = extend_values(dom, field);
    QuantileField out = field;
    std::vector<double> minimizer;
    const int m = field.m;
    for (size_t t = 0; t < dom.free_nodes.size(); ++t) {
        local_minimizer(disc, dom, values, m, t, opts, cp, minimizer);
        const int oe = dom.free_nodes[t];
        for (int k = 0; k < m; ++k) {
            values[size_t(oe) * m + k] = minimizer[k];          // Gauss-Seidel, in place
            out.at(dom.ext_to_orig[oe], k) = minimizer[k];
        }
    }
    if (!out.monotone(1e-12)) throw std::runtime_error("jost_step: non-monotone output");
    return out;
}

std::pair<QuantileField, JostReport> jost_solve(const Discretization& disc,
                                                const BoundaryQuantiles& bc,
                                                const JostOptions& opts) {
    bc.validate(disc);
    check_jost_pre(disc, opts);
    const double cp = c_p(disc.spec.p);
    const int m = bc.m;

    // start from the constant-in-xi average of the boundary slices
    QuantileField field(disc.n_omega, m);
    std::vector<double> avg(m, 0.0);
    for (const auto& s : bc.slices)
        for (int k = 0; k < m; ++k) avg[k] += s[k];
    for (int k = 0; k < m; ++k) avg[k] /= double(bc.slices.size());
    for (int o = 0; o < disc.n_omega; ++o)
        for (int k = 0; k < m; ++k) field.at(o, k) = avg[k];
    for (size_t r = 0; r < disc.boundary.size(); ++r)
        for (int k = 0; k < m; ++k) field.at(disc.boundary[r], k) = bc.slices[r][k];

    JostDomain dom(disc, opts.eps);
    auto values = extend_values(dom, field);

    JostReport rep;
    std::vector<double> minimizer;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double change = 0.0;
        for (size_t t = 0; t < dom.free_nodes.size(); ++t) {
            local_minimizer(disc, dom, values, m, t, opts, cp, minimizer);
            const int oe = dom.free_nodes[t];
            double* cur = values.data() + size_t(oe) * m;
            for (int k = 0; k < m; ++k) {
                change = std::max(change, std::abs(minimizer[k] - cur[k]));
                cur[k] = minimizer[k];
            }
        }
        rep.sweeps = sweep + 1;
        rep.final_change = change;
        if (change <= opts.tol) {
            rep.converged = true;
            break;
        }
    }

    for (size_t t = 0; t < dom.free_nodes.size(); ++t) {
        const int oe = dom.free_nodes[t];
        for (int k = 0; k < m; ++k)
            field.at(dom.ext_to_orig[oe], k) = values[size_t(oe) * m + k];
    }
    if (!field.monotone(1e-12)) throw std::runtime_error("jost_solve: non-monotone output");

    // barycenter optimality residual at the fixed point
    double res = 0.0;
    for (size_t t = 0; t < dom.free_nodes.size(); ++t) {
        local_minimizer(disc, dom, values, m, t, opts, cp, minimizer);
        const int oe = dom.free_nodes[t];
        const double* cur = values.data() + size_t(oe) * m;
        double d2 = 0.0;
        for (int k = 0; k < m; ++k) {
            const double d = cur[k] - minimizer[k];
            d2 += d * d;
        }
        res = std::max(res, std::sqrt(d2 / m));
    }
    rep.barycenter_residual = res;
    return {std::move(field), rep};
}

}  // namespace wharmonic
