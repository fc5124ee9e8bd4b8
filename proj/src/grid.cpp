#include "wharmonic/grid.hpp"

#include <cmath>
#include <cstdlib>

#include "wharmonic/fields.hpp"

namespace wharmonic {

void GridSpec::validate() const {
    if (p != 1 && p != 2) throw std::invalid_argument("GridSpec: p must be 1 or 2");
    if (q != 1 && q != 2) throw std::invalid_argument("GridSpec: q must be 1 or 2");
    for (int b = 0; b < p; ++b) {
        if (n_omega[b] < 3) throw std::invalid_argument("GridSpec: n_omega < 3");
        if (!(omega_extent[b][1] > omega_extent[b][0]))
            throw std::invalid_argument("GridSpec: omega extent hi <= lo");
    }
    for (int j = 0; j < q; ++j) {
        if (n_d[j] < 3) throw std::invalid_argument("GridSpec: n_d < 3");
        if (!(d_extent[j][1] > d_extent[j][0]))
            throw std::invalid_argument("GridSpec: d extent hi <= lo");
    }
}

static AxisGrid make_axis(double lo, double hi, int n) {
    AxisGrid ax;
    ax.lo = lo;
    ax.hi = hi;
    ax.n = n;
    ax.h = (hi - lo) / (n - 1);
    return ax;
}

Discretization build_discretization(const GridSpec& spec) {
    spec.validate();
    Discretization disc;
    disc.spec = spec;
    for (int b = 0; b < spec.p; ++b)
        disc.omega_axes.push_back(make_axis(spec.omega_extent[b][0], spec.omega_extent[b][1], spec.n_omega[b]));
    for (int j = 0; j < spec.q; ++j)
        disc.d_axes.push_back(make_axis(spec.d_extent[j][0], spec.d_extent[j][1], spec.n_d[j]));

    disc.n_omega = 1;
    for (int b = 0; b < spec.p; ++b) disc.n_omega *= spec.n_omega[b];
    disc.n_d = 1;
    for (int j = 0; j < spec.q; ++j) disc.n_d *= spec.n_d[j];

    disc.is_boundary.assign(disc.n_omega, 0);
    disc.normal.assign(disc.n_omega, {0.0, 0.0});
    disc.boundary_weight.assign(disc.n_omega, 0.0);
    disc.omega_cell_vol.assign(disc.n_omega, 0.0);
    disc.boundary_rank.assign(disc.n_omega, -1);
    disc.d_cell_vol.assign(disc.n_d, 0.0);

    auto axis_weight = [](const AxisGrid& ax, int i) {
        return (i == 0 || i == ax.n - 1) ? ax.h / 2.0 : ax.h;
    };

    for (int idx = 0; idx < disc.n_omega; ++idx) {
        auto a = disc.omega_multi(idx);
        double vol = axis_weight(disc.omega_axes[0], a[0]);
        if (spec.p == 2) vol *= axis_weight(disc.omega_axes[1], a[1]);
        disc.omega_cell_vol[idx] = vol;

        // Weighted outward normal: sum over the faces of the boundary this
        // node lies on, each carrying the trapezoid weight of the transverse
        // axis (1 for p = 1). Corners get the normalized diagonal.
        std::array<double, 2> wn{0.0, 0.0};
        for (int b = 0; b < spec.p; ++b) {
            if (a[b] != 0 && a[b] != spec.n_omega[b] - 1) continue;
            double sgn = (a[b] == 0) ? -1.0 : 1.0;
            double w = 1.0;
            if (spec.p == 2) {
                int other = 1 - b;
                w = axis_weight(disc.omega_axes[other], a[other]);
            }
            wn[b] += sgn * w;
        }
        double mag = std::sqrt(wn[0] * wn[0] + wn[1] * wn[1]);
        if (mag > 0.0) {
            disc.is_boundary[idx] = 1;
            disc.boundary_rank[idx] = int(disc.boundary.size());
            disc.boundary.push_back(idx);
            disc.boundary_weight[idx] = mag;
            disc.normal[idx] = {wn[0] / mag, wn[1] / mag};
        } else {
            disc.interior.push_back(idx);
        }
    }

    for (int idx = 0; idx < disc.n_d; ++idx) {
        auto x = disc.d_multi(idx);
        double vol = axis_weight(disc.d_axes[0], x[0]);
        if (spec.q == 2) vol *= axis_weight(disc.d_axes[1], x[1]);
        disc.d_cell_vol[idx] = vol;
    }
    return disc;
}

double Discretization::min_omega_spacing() const {
    double h = omega_axes[0].h;
    for (const auto& ax : omega_axes) h = std::min(h, ax.h);
    return h;
}

double Discretization::min_d_spacing() const {
    double h = d_axes[0].h;
    for (const auto& ax : d_axes) h = std::min(h, ax.h);
    return h;
}

double Discretization::omega_volume() const {
    double v = 1.0;
    for (const auto& ax : omega_axes) v *= ax.hi - ax.lo;
    return v;
}

// --- field methods ----------------------------------------------------------

void MeasureField::normalize_slices() {
    for (int o = 0; o < n_omega; ++o) {
        double s = slice_mass(o);
        if (s <= 0.0) continue;
        for (int d = 0; d < n_d; ++d) at(o, d) /= s;
    }
}

double MeasureField::max_slice_defect() const {
    double m = 0.0;
    for (int o = 0; o < n_omega; ++o) m = std::max(m, std::abs(slice_mass(o) - 1.0));
    return m;
}

MomentumField::MomentumField(const Discretization& disc) {
    p = disc.spec.p;
    q = disc.spec.q;
    for (int alpha = 0; alpha < p; ++alpha)
        for (int i = 0; i < q; ++i)
            comp[alpha * q + i].assign(size_t(disc.omega_face_count(alpha)) * disc.d_face_count(i), 0.0);
}

double MomentumField::boundary_flux_norm(const Discretization& disc) const {
    double m = 0.0;
    for (int alpha = 0; alpha < p; ++alpha) {
        for (int i = 0; i < q; ++i) {
            const auto& e = c(alpha, i);
            int nof = disc.omega_face_count(alpha);
            int ndf = disc.d_face_count(i);
            int ni = disc.spec.n_d[i];
            for (int of = 0; of < nof; ++of) {
                for (int df = 0; df < ndf; ++df) {
                    auto f = disc.d_face_multi(i, df);
                    if (f[i] == 0 || f[i] == ni)
                        m = std::max(m, std::abs(e[size_t(of) * ndf + df]));
                }
            }
        }
    }
    return m;
}

void MomentumField::zero_boundary_flux(const Discretization& disc) {
    for (int alpha = 0; alpha < p; ++alpha) {
        for (int i = 0; i < q; ++i) {
            auto& e = c(alpha, i);
            int nof = disc.omega_face_count(alpha);
            int ndf = disc.d_face_count(i);
            int ni = disc.spec.n_d[i];
            for (int of = 0; of < nof; ++of) {
                for (int df = 0; df < ndf; ++df) {
                    auto f = disc.d_face_multi(i, df);
                    if (f[i] == 0 || f[i] == ni) e[size_t(of) * ndf + df] = 0.0;
                }
            }
        }
    }
}

void BoundaryData::validate(const Discretization& disc) const {
    if (slices.size() != disc.boundary.size())
        throw std::invalid_argument("BoundaryData: slice count != boundary node count");
    for (const auto& s : slices) {
        if (int(s.size()) != disc.n_d)
            throw std::invalid_argument("BoundaryData: slice size != D node count");
        double mass = 0.0;
        for (double x : s) {
            if (x < -1e-14) throw std::invalid_argument("BoundaryData: negative mass");
            mass += x;
        }
        if (std::abs(mass - 1.0) > 1e-9)
            throw std::invalid_argument("BoundaryData: slice mass != 1");
    }
}

bool QuantileField::monotone(double tol) const {
    for (int o = 0; o < n_omega; ++o)
        for (int k = 0; k + 1 < m; ++k)
            if (at(o, k + 1) < at(o, k) - tol) return false;
    return true;
}

}  // namespace wharmonic
