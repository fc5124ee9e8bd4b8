#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wharmonic/continuity.hpp"
#include "wharmonic/fields.hpp"
#include "wharmonic/grid.hpp"

using namespace wharmonic;

namespace {

GridSpec spec_1d(int n_omega, int n_d) {
    GridSpec s;
    s.p = 1;
    s.q = 1;
    s.omega_extent[0] = {0.0, 1.0};
    s.d_extent[0] = {0.0, 1.0};
    s.n_omega[0] = n_omega;
    s.n_d[0] = n_d;
    return s;
}

GridSpec spec_2d(int n0, int n1, int nd) {
    GridSpec s;
    s.p = 2;
    s.q = 1;
    s.omega_extent[0] = {0.0, 1.0};
    s.omega_extent[1] = {0.0, 1.0};
    s.d_extent[0] = {0.0, 1.0};
    s.n_omega[0] = n0;
    s.n_omega[1] = n1;
    s.n_d[0] = nd;
    return s;
}

void randomize(MeasureField& mu, MomentumField& e, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : mu.v) x = u(rng);
    for (int c = 0; c < e.p * e.q; ++c)
        for (auto& x : e.comp[c]) x = u(rng);
}

double dot(const MeasureField& a, const MeasureField& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
    return s;
}

double dot(const MomentumField& a, const MomentumField& b) {
    double s = 0.0;
    for (int c = 0; c < a.p * a.q; ++c)
        for (size_t k = 0; k < a.comp[c].size(); ++k) s += a.comp[c][k] * b.comp[c][k];
    return s;
}

double dot(const ConstraintField& a, const ConstraintField& b) {
    double s = 0.0;
    for (int alpha = 0; alpha < a.p; ++alpha)
        for (size_t k = 0; k < a.r[alpha].size(); ++k) s += a.r[alpha][k] * b.r[alpha][k];
    return s;
}

}  // namespace

TEST_CASE("segment discretization: boundary sets and normals") {
    auto disc = build_discretization(spec_1d(3, 8));
    CHECK(disc.boundary.size() == 2);
    CHECK(disc.interior.size() == 1);
    CHECK(disc.interior[0] == 1);
    CHECK(disc.normal[0][0] == doctest::Approx(-1.0));
    CHECK(disc.normal[2][0] == doctest::Approx(1.0));
}

TEST_CASE("3x3 grid has 8 boundary nodes and 1 interior node") {
    auto disc = build_discretization(spec_2d(3, 3, 8));
    CHECK(disc.boundary.size() == 8);
    CHECK(disc.interior.size() == 1);
}

TEST_CASE("5x4 grid spacings") {
    GridSpec s = spec_2d(5, 4, 8);
    s.omega_extent[1] = {0.0, 2.0};
    auto disc = build_discretization(s);
    CHECK(disc.omega_axes[0].h == doctest::Approx(0.25));
    CHECK(disc.omega_axes[1].h == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("invalid specs rejected") {
    GridSpec s = spec_1d(3, 8);
    s.p = 3;
    CHECK_THROWS_AS(build_discretization(s), std::invalid_argument);
    s = spec_1d(2, 8);
    CHECK_THROWS_AS(build_discretization(s), std::invalid_argument);
    s = spec_1d(3, 8);
    s.omega_extent[0] = {1.0, 0.0};
    CHECK_THROWS_AS(build_discretization(s), std::invalid_argument);
}

TEST_CASE("constant field with zero momentum satisfies the continuity equation") {
    auto disc = build_discretization(spec_1d(9, 12));
    MeasureField mu(disc.n_omega, disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = 1.0 / disc.n_d;
    MomentumField e(disc);
    BoundaryData bc;
    bc.slices.assign(2, std::vector<double>(disc.n_d, 1.0 / disc.n_d));
    auto rep = continuity_residual(disc, mu, e, bc);
    CHECK(rep.max_norm == doctest::Approx(0.0));
}

TEST_CASE("momentum on a D-boundary face is rejected") {
    auto disc = build_discretization(spec_1d(5, 8));
    MeasureField mu(disc.n_omega, disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o) mu.at(o, 0) = 1.0;
    MomentumField e(disc);
    e.c(0, 0)[0] = 1.0;  // slot 0 on the first omega face = boundary flux
    BoundaryData bc;
    bc.slices.assign(2, std::vector<double>(disc.n_d, 0.0));
    bc.slices[0][0] = 1.0;
    bc.slices[1][0] = 1.0;
    CHECK_THROWS_AS(continuity_residual(disc, mu, e, bc), std::invalid_argument);
}

TEST_CASE("adjoint identity on random vectors") {
    for (auto spec : {spec_1d(8, 8), spec_2d(5, 6, 7)}) {
        GridSpec s2 = spec;
        auto run_case = [&](const GridSpec& s) {
            auto disc = build_discretization(s);
            for (unsigned seed = 1; seed <= 10; ++seed) {
                MeasureField mu(disc.n_omega, disc.n_d), gmu(disc.n_omega, disc.n_d);
                MomentumField e(disc), ge(disc);
                randomize(mu, e, seed);
                ConstraintField lam(disc), kz(disc);
                // random multiplier
                std::mt19937_64 rng(seed + 999);
                std::uniform_real_distribution<double> u(-1.0, 1.0);
                for (int alpha = 0; alpha < lam.p; ++alpha)
                    for (auto& x : lam.r[alpha]) x = u(rng);

                apply_continuity(disc, mu, e, kz);
                apply_continuity_adjoint(disc, lam, gmu, ge);
                const double lhs = dot(kz, lam);
                const double rhs = dot(mu, gmu) + dot(e, ge);
                CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs) + 1.0));
            }
        };
        run_case(spec);
        // also q = 2
        s2.q = 2;
        s2.d_extent[1] = {0.0, 1.0};
        s2.n_d[1] = 5;
        run_case(s2);
    }
}

TEST_CASE("centering operator adjoint identity") {
    GridSpec s = spec_2d(5, 4, 6);
    s.q = 2;
    s.d_extent[1] = {-1.0, 1.0};
    s.n_d[1] = 5;
    auto disc = build_discretization(s);
    MeasureField mu(disc.n_omega, disc.n_d);
    MomentumField e(disc), ge(disc);
    randomize(mu, e, 3);
    CenteredMomentum z(disc), cx(disc);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : z.v) x = u(rng);

    center_momentum(disc, e, cx);
    center_momentum_adjoint(disc, z, ge);
    double lhs = 0.0;
    for (size_t k = 0; k < z.v.size(); ++k) lhs += z.v[k] * cx.v[k];
    const double rhs = dot(e, ge);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + 1.0));
}

TEST_CASE("zero input maps to zero output") {
    auto disc = build_discretization(spec_1d(6, 6));
    MeasureField mu(disc.n_omega, disc.n_d);
    MomentumField e(disc);
    ConstraintField kz(disc);
    apply_continuity(disc, mu, e, kz);
    CHECK(kz.max_norm() == 0.0);
}

TEST_CASE("operator norm estimate is finite and stable") {
    auto disc = build_discretization(spec_1d(9, 16));
    const double n1 = continuity_operator_norm(disc);
    const double n2 = pdhg_operator_norm(disc);
    CHECK(n1 > 0.0);
    CHECK(n2 >= n1 * 0.99);
    CHECK(std::isfinite(n2));
    // power iteration is deterministic
    CHECK(continuity_operator_norm(disc) == n1);
}

TEST_CASE("translate family: residual drops at first order under refinement") {
    // mu(xi, x) = g(x - v xi) with compactly supported bump g, E = v mu at
    // staggered faces; residual sampled away from the D boundary.
    auto residual_for = [](int n_omega, int n_d) {
        auto disc = build_discretization(spec_1d(n_omega, n_d));
        const double v = 0.2;
        auto g = [](double x) {
            const double c = 0.35, w = 0.12;
            const double t = (x - c) / w;
            return std::abs(t) < 1.0 ? std::pow(1.0 - t * t, 3) : 0.0;
        };
        MeasureField mu(disc.n_omega, disc.n_d);
        for (int o = 0; o < disc.n_omega; ++o) {
            const double xi = disc.omega_coord(o)[0];
            for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = g(disc.d_coord(d)[0] - v * xi);
        }
        MomentumField e(disc);
        const int ndf = disc.d_face_count(0);
        for (int of = 0; of < disc.omega_face_count(0); ++of) {
            const double xi = disc.omega_axes[0].coord(of) + disc.omega_axes[0].h / 2;
            for (int df = 1; df < ndf - 1; ++df) {
                const double x = disc.d_axes[0].coord(df - 1) + disc.d_axes[0].h / 2;
                e.c(0, 0)[size_t(of) * ndf + df] = v * g(x - v * xi);
            }
        }
        ConstraintField kz(disc);
        apply_continuity(disc, mu, e, kz);
        return kz.max_norm();
    };
    const double r1 = residual_for(17, 33);
    const double r2 = residual_for(33, 65);
    CHECK(r2 < 0.6 * r1);
}

TEST_CASE("discrete divergence theorem: constrained pairing telescopes to the boundary") {
    // pure summation-by-parts identity: <phi_hat, K z> equals the boundary
    // pairing minus the interior pairing, exactly in floating point terms.
    auto disc = build_discretization(spec_1d(9, 7));
    MeasureField mu(disc.n_omega, disc.n_d);
    MomentumField e(disc);
    randomize(mu, e, 11);
    e.zero_boundary_flux(disc);
    ConstraintField kz(disc);
    apply_continuity(disc, mu, e, kz);

    auto phi = [](double xi, double x) { return std::sin(2 * xi) + xi * x * x; };
    const auto& ax = disc.omega_axes[0];
    const auto& dx = disc.d_axes[0];
    const int nd = disc.n_d;

    // weighted <phi_hat, K z> with weight h per face
    double lhs = 0.0;
    for (int of = 0; of < disc.omega_face_count(0); ++of) {
        const double xi = ax.coord(of) + ax.h / 2;
        for (int d = 0; d < nd; ++d) lhs += ax.h * phi(xi, dx.coord(d)) * kz.r[0][size_t(of) * nd + d];
    }

    // boundary pairing with the face values adjacent to the boundary
    double bt = 0.0;
    for (int d = 0; d < nd; ++d) {
        bt += phi(ax.coord(ax.n - 2) + ax.h / 2, dx.coord(d)) * mu.at(ax.n - 1, d);
        bt -= phi(ax.coord(0) + ax.h / 2, dx.coord(d)) * mu.at(0, d);
    }

    // interior pairing: mu against the backward difference of phi_hat plus the
    // momentum against the D-difference of phi_hat
    double interior = 0.0;
    for (int a = 1; a <= ax.n - 2; ++a)
        for (int d = 0; d < nd; ++d) {
            const double dphi = phi(ax.coord(a) + ax.h / 2, dx.coord(d)) -
                                phi(ax.coord(a - 1) + ax.h / 2, dx.coord(d));
            interior += mu.at(a, d) * dphi;
        }
    const int ndf = disc.d_face_count(0);
    for (int of = 0; of < disc.omega_face_count(0); ++of) {
        const double xi = ax.coord(of) + ax.h / 2;
        for (int df = 1; df < ndf - 1; ++df) {
            const double dphi = phi(xi, dx.coord(df)) - phi(xi, dx.coord(df - 1));
            interior += (ax.h / dx.h) * e.c(0, 0)[size_t(of) * ndf + df] * dphi;
        }
    }
    CHECK(lhs == doctest::Approx(bt - interior).epsilon(1e-12));
}
