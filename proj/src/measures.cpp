#include "wharmonic/measures.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "wharmonic/pde.hpp"

namespace wharmonic {

std::vector<double> heat_flow(const Discretization& disc, const std::vector<double>& masses,
                              double t, int max_substeps) {
    if (t < 0.0) throw std::invalid_argument("heat_flow: negative time");
    if (int(masses.size()) != disc.n_d) throw std::invalid_argument("heat_flow: size mismatch");
    if (t == 0.0) return masses;
    const double k2 = disc.min_d_spacing() * disc.min_d_spacing();
    const int n_steps = std::min<int>(max_substeps, std::max<int>(1, int(std::ceil(t / k2))));
    NeumannHeat stepper(disc, t / n_steps);
    std::vector<double> m = masses;
    for (int s = 0; s < n_steps; ++s) m = stepper.step(m);
    return m;
}

std::array<double, 2> slice_mean(const Discretization& disc, const std::vector<double>& masses) {
    std::array<double, 2> mean{0.0, 0.0};
    double total = 0.0;
    for (int d = 0; d < disc.n_d; ++d) {
        const auto x = disc.d_coord(d);
        mean[0] += masses[d] * x[0];
        mean[1] += masses[d] * x[1];
        total += masses[d];
    }
    mean[0] /= total;
    mean[1] /= total;
    return mean;
}

std::array<std::array<double, 2>, 2> slice_cov(const Discretization& disc,
                                               const std::vector<double>& masses) {
    const auto mean = slice_mean(disc, masses);
    std::array<std::array<double, 2>, 2> c{{{0.0, 0.0}, {0.0, 0.0}}};
    double total = 0.0;
    for (int d = 0; d < disc.n_d; ++d) {
        const auto x = disc.d_coord(d);
        const double dx = x[0] - mean[0], dy = x[1] - mean[1];
        c[0][0] += masses[d] * dx * dx;
        c[0][1] += masses[d] * dx * dy;
        c[1][1] += masses[d] * dy * dy;
        total += masses[d];
    }
    c[0][0] /= total;
    c[0][1] /= total;
    c[1][1] /= total;
    c[1][0] = c[0][1];
    return c;
}

namespace {

// Antialiased indicator of the ball |x| <= R, ramp width w.
double ball_profile(double r, double R, double w) {
    if (r <= R - w) return 1.0;
    if (r >= R) return 0.0;
    return (R - r) / w;
}

std::vector<double> sample_ball(const Discretization& disc, double R, double w) {
    std::vector<double> m(disc.n_d);
    for (int d = 0; d < disc.n_d; ++d) {
        const auto x = disc.d_coord(d);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        m[d] = ball_profile(r, R, w) * disc.d_cell_vol[d];
    }
    const double s = std::accumulate(m.begin(), m.end(), 0.0);
    if (s <= 0.0) throw std::runtime_error("reference density: empty ball on this grid");
    for (double& v : m) v /= s;
    return m;
}

double cov_trace_over_q(const Discretization& disc, const std::vector<double>& m) {
    const auto c = slice_cov(disc, m);
    double tr = c[0][0];
    if (disc.spec.q == 2) tr += c[1][1];
    return tr / disc.spec.q;
}

}  // namespace

ReferenceDensity ReferenceDensity::make_default(const Discretization& disc) {
    const int q = disc.spec.q;
    // require a symmetric D box around the origin for exact zero mean
    for (int j = 0; j < q; ++j) {
        if (std::abs(disc.d_axes[j].lo + disc.d_axes[j].hi) > 1e-12 * (disc.d_axes[j].hi - disc.d_axes[j].lo))
            throw std::invalid_argument("reference density: D must be centered at the origin");
    }
    const double w = disc.min_d_spacing();
    const double target = std::sqrt(double(q + 2));
    // bisect the radius so the grid covariance is exactly the identity
    double lo = 0.5 * target, hi = target + 4.0 * w;
    for (int j = 0; j < q; ++j) hi = std::min(hi, disc.d_axes[j].hi);
    auto f = [&](double R) { return cov_trace_over_q(disc, sample_ball(disc, R, w)) - 1.0; };
    if (f(lo) > 0.0 || f(hi) < 0.0)
        throw std::runtime_error("reference density: D too small to calibrate unit covariance");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    ReferenceDensity rho;
    rho.radius = 0.5 * (lo + hi);
    rho.masses = sample_ball(disc, rho.radius, w);
    rho.radial = true;
    rho.cov = slice_cov(disc, rho.masses);
    double defect = std::abs(rho.cov[0][0] - 1.0);
    if (q == 2) {
        defect = std::max(defect, std::abs(rho.cov[1][1] - 1.0));
        defect = std::max(defect, std::abs(rho.cov[0][1]));
    }
    if (defect > 1e-8)
        throw std::runtime_error("reference density: covariance calibration needs a symmetric D grid");
    return rho;
}

std::vector<double> elliptic_density(const Discretization& disc, const double* a_mat,
                                     const ReferenceDensity& rho) {
    const int q = disc.spec.q;
    // SPD check and inverse / determinant for q <= 2
    double det, inv[4];
    if (q == 1) {
        det = a_mat[0];
        if (det <= 0.0) throw std::invalid_argument("elliptic_density: A not SPD");
        inv[0] = 1.0 / det;
    } else {
        if (std::abs(a_mat[1] - a_mat[2]) > 1e-12 * (std::abs(a_mat[1]) + 1.0))
            throw std::invalid_argument("elliptic_density: A not symmetric");
        det = a_mat[0] * a_mat[3] - a_mat[1] * a_mat[2];
        const double tr = a_mat[0] + a_mat[3];
        if (det <= 0.0 || tr <= 0.0) throw std::invalid_argument("elliptic_density: A not SPD");
        inv[0] = a_mat[3] / det;
        inv[1] = -a_mat[1] / det;
        inv[2] = -a_mat[2] / det;
        inv[3] = a_mat[0] / det;
    }

    // support check: image of the calibrated ball under A must fit in D
    const double w = disc.min_d_spacing();
    const double reach = rho.radius;  // profile vanishes at |x| = radius
    for (int i = 0; i < q; ++i) {
        double row_norm;
        if (q == 1)
            row_norm = std::abs(a_mat[0]);
        else
            row_norm = std::sqrt(a_mat[i * 2] * a_mat[i * 2] + a_mat[i * 2 + 1] * a_mat[i * 2 + 1]);
        const double b = reach * row_norm;
        if (-b < disc.d_axes[i].lo + w || b > disc.d_axes[i].hi - w)
            throw std::invalid_argument("elliptic_density: D not compatible with rho and A");
    }

    // sample rho(A^{-1} x) / det A on the grid, then renormalize
    std::vector<double> m(disc.n_d);
    for (int d = 0; d < disc.n_d; ++d) {
        const auto x = disc.d_coord(d);
        double y0, y1 = 0.0;
        if (q == 1) {
            y0 = inv[0] * x[0];
        } else {
            y0 = inv[0] * x[0] + inv[1] * x[1];
            y1 = inv[2] * x[0] + inv[3] * x[1];
        }
        const double r = std::sqrt(y0 * y0 + y1 * y1);
        m[d] = ball_profile(r, rho.radius, w) / det * disc.d_cell_vol[d];
    }
    const double s = std::accumulate(m.begin(), m.end(), 0.0);
    if (s <= 0.0) throw std::runtime_error("elliptic_density: empty sample");
    for (double& v : m) v /= s;
    return m;
}

void splat_point(const Discretization& disc, const std::array<double, 2>& x, double mass,
                 std::vector<double>& into) {
    const int q = disc.spec.q;
    int idx[2] = {0, 0};
    double frac[2] = {0.0, 0.0};
    for (int j = 0; j < q; ++j) {
        const auto& ax = disc.d_axes[j];
        double s = (x[j] - ax.lo) / ax.h;
        s = std::min(std::max(s, 0.0), double(ax.n - 1));
        idx[j] = std::min(int(s), ax.n - 2);
        frac[j] = s - idx[j];
    }
    if (q == 1) {
        into[disc.d_index({idx[0], 0})] += mass * (1.0 - frac[0]);
        into[disc.d_index({idx[0] + 1, 0})] += mass * frac[0];
    } else {
        for (int s0 = 0; s0 <= 1; ++s0)
            for (int s1 = 0; s1 <= 1; ++s1) {
                const double w = (s0 ? frac[0] : 1.0 - frac[0]) * (s1 ? frac[1] : 1.0 - frac[1]);
                into[disc.d_index({idx[0] + s0, idx[1] + s1})] += mass * w;
            }
    }
}

std::vector<double> smoothed_dirac(const Discretization& disc, const std::array<double, 2>& x) {
    std::vector<double> m(disc.n_d, 0.0);
    splat_point(disc, x, 1.0, m);
    const double k = disc.min_d_spacing();
    return heat_flow(disc, m, k * k);
}

std::vector<double> pushforward_affine(const Discretization& disc, const std::vector<double>& masses,
                                       double scale, const std::array<double, 2>& shift) {
    std::vector<double> out(disc.n_d, 0.0);
    for (int d = 0; d < disc.n_d; ++d) {
        if (masses[d] == 0.0) continue;
        const auto x = disc.d_coord(d);
        splat_point(disc, {scale * x[0] + shift[0], scale * x[1] + shift[1]}, masses[d], out);
    }
    return out;
}

std::vector<double> random_smooth_density(const Discretization& disc, unsigned seed,
                                          int n_bumps, double smoothing) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> m(disc.n_d, 0.0);
    for (int b = 0; b < n_bumps; ++b) {
        std::array<double, 2> c{0.0, 0.0};
        for (int j = 0; j < disc.spec.q; ++j) {
            const auto& ax = disc.d_axes[j];
            const double margin = 0.15 * (ax.hi - ax.lo);
            c[j] = ax.lo + margin + (ax.hi - ax.lo - 2 * margin) * u(rng);
        }
        splat_point(disc, c, 0.2 + u(rng), m);
    }
    double span = disc.d_axes[0].hi - disc.d_axes[0].lo;
    const double t = smoothing > 0.0 ? smoothing : 0.002 * span * span;
    m = heat_flow(disc, m, t);
    const double s = std::accumulate(m.begin(), m.end(), 0.0);
    for (double& v : m) v /= s;
    return m;
}

}  // namespace wharmonic
