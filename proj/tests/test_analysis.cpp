#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wharmonic/analysis.hpp"
#include "wharmonic/energy.hpp"
#include "wharmonic/measures.hpp"
#include "wharmonic/transport.hpp"

using namespace wharmonic;

namespace {

Discretization make_disc(int p, int q, std::array<int, 2> no, std::array<int, 2> nd,
                         double d_lo, double d_hi) {
    GridSpec s;
    s.p = p;
    s.q = q;
    for (int b = 0; b < p; ++b) {
        s.omega_extent[b] = {0.0, 1.0};
        s.n_omega[b] = no[b];
    }
    for (int j = 0; j < q; ++j) {
        s.d_extent[j] = {d_lo, d_hi};
        s.n_d[j] = nd[j];
    }
    return build_discretization(s);
}

}  // namespace

TEST_CASE("eval_functional: potential, entropy, quadratic form") {
    auto disc = make_disc(1, 1, {9, 0}, {65, 0}, 0.0, 1.0);
    MeasureField mu(disc.n_omega, disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = disc.d_cell_vol[d];  // uniform density

    // constant potential evaluates to the constant (unit mass)
    auto fc = FunctionalSpec::make_potential(std::vector<double>(disc.n_d, 2.5));
    for (double v : eval_functional(disc, mu, fc)) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

    // entropy of the uniform density on [0,1]: integral of 1*ln(1) = 0
    auto fe = FunctionalSpec::make_entropy();
    for (double v : eval_functional(disc, mu, fe)) CHECK(std::abs(v) < 1e-12);

    // entropy of a uniform density on a sub-interval [0, 1/2]: -ln(1/2)...
    // density 2 on half the domain: integral = 2 ln 2 * 1/2 = ln 2
    MeasureField half(disc.n_omega, disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o) {
        double total = 0.0;
        for (int d = 0; d < disc.n_d; ++d) {
            if (disc.d_coord(d)[0] <= 0.5) half.at(o, d) = disc.d_cell_vol[d];
            total += half.at(o, d);
        }
        for (int d = 0; d < disc.n_d; ++d) half.at(o, d) /= total;
    }
    for (double v : eval_functional(disc, half, fe))
        CHECK(v == doctest::Approx(std::log(2.0)).epsilon(0.02));

    // quadratic form on an elliptic slice: Tr(A^2 C)
    auto disc2 = make_disc(1, 2, {3, 0}, {65, 65}, -3.0, 3.0);
    auto rho = ReferenceDensity::make_default(disc2);
    const double am[4] = {0.8, 0.2, 0.2, 0.9};
    auto dens = elliptic_density(disc2, am, rho);
    MeasureField mue(disc2.n_omega, disc2.n_d);
    for (int o = 0; o < disc2.n_omega; ++o)
        for (int d = 0; d < disc2.n_d; ++d) mue.at(o, d) = dens[d];
    const std::array<double, 4> c{1.0, 0.3, 0.3, 2.0};
    auto fq = FunctionalSpec::make_quadratic(c, 2);
    // A^2 then Tr(A^2 C)
    const double a2[4] = {0.8 * 0.8 + 0.2 * 0.2, 0.8 * 0.2 + 0.2 * 0.9, 0.2 * 0.8 + 0.9 * 0.2,
                          0.2 * 0.2 + 0.9 * 0.9};
    const double expect = a2[0] * c[0] + a2[1] * c[2] + a2[2] * c[1] + a2[3] * c[3];
    for (double v : eval_functional(disc2, mue, fq)) CHECK(v == doctest::Approx(expect).epsilon(5e-3));
}

TEST_CASE("subharmonicity check: affine, convex, and a negative control") {
    auto disc = make_disc(2, 1, {11, 11}, {5, 0}, 0.0, 1.0);
    std::vector<double> affine(disc.n_omega), convex(disc.n_omega), concave(disc.n_omega);
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        affine[o] = 0.3 * xi[0] - 0.7 * xi[1] + 0.1;
        convex[o] = xi[0] * xi[0] + xi[1] * xi[1];
        concave[o] = -convex[o];
    }
    auto ra = subharmonicity_check(disc, affine, 1e-12);
    CHECK(ra.pass);
    CHECK(ra.min_interior_laplacian == doctest::Approx(0.0));

    auto rc = subharmonicity_check(disc, convex, 1e-9);
    CHECK(rc.pass);
    CHECK(rc.min_interior_laplacian == doctest::Approx(4.0).epsilon(1e-9));  // 2p
    CHECK(rc.max_gap < 0.0);

    auto rn = subharmonicity_check(disc, concave, 1e-9);
    CHECK(!rn.pass);
    CHECK(rn.min_interior_laplacian == doctest::Approx(-4.0).epsilon(1e-9));

    // convex potential composed with a classical harmonic (affine) map is
    // subharmonic: V(f(xi)) with V convex, f affine
    std::vector<double> comp(disc.n_omega);
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        const double f = 0.2 + 0.3 * xi[0] + 0.4 * xi[1];
        comp[o] = (f - 0.4) * (f - 0.4);
    }
    CHECK(subharmonicity_check(disc, comp, 1e-9).pass);
}

TEST_CASE("radial extension of boundary data") {
    auto disc = make_disc(2, 2, {9, 9}, {33, 33}, -1.5, 1.5);
    // boundary data: diracs at g(xi) on the unit circle parametrized by the
    // boundary loop
    const auto loop = boundary_loop(disc);
    BoundaryData bc;
    bc.slices.assign(disc.boundary.size(), std::vector<double>(disc.n_d, 0.0));
    std::vector<std::array<double, 2>> g(disc.boundary.size());
    for (size_t k = 0; k < loop.ranks.size(); ++k) {
        const double t = 2.0 * std::numbers::pi * loop.arclength[k] / loop.perimeter;
        g[loop.ranks[k]] = {0.8 * std::cos(t), 0.8 * std::sin(t)};
        splat_point(disc, g[loop.ranks[k]], 1.0, bc.slices[loop.ranks[k]]);
    }
    const std::array<double, 2> x0{0.1, -0.05};
    auto mu = radial_extension(disc, bc, x0);

    // r = 1 nodes keep their boundary values
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        const int o = disc.boundary[r];
        for (int d = 0; d < disc.n_d; ++d) CHECK(mu.at(o, d) == doctest::Approx(bc.slices[r][d]));
    }
    // center node is the dirac at x0
    const int center = disc.omega_index({4, 4});
    auto mean_of = [&](int o) {
        std::array<double, 2> m{0.0, 0.0};
        for (int d = 0; d < disc.n_d; ++d) {
            const auto x = disc.d_coord(d);
            m[0] += mu.at(o, d) * x[0];
            m[1] += mu.at(o, d) * x[1];
        }
        return m;
    };
    auto mc = mean_of(center);
    CHECK(mc[0] == doctest::Approx(x0[0]).epsilon(1e-9));
    CHECK(mc[1] == doctest::Approx(x0[1]).epsilon(1e-9));

    // dirac boundary pushes to r g + (1-r) x0 along node rays: check a node
    // on the diagonal ray toward the corner (boundary node (8,8))
    const int o = disc.omega_index({6, 6});  // sup-norm radius r = 0.5
    const auto corner_g = g[size_t(disc.boundary_rank[disc.omega_index({8, 8})])];
    auto m = mean_of(o);
    CHECK(m[0] == doctest::Approx(0.5 * corner_g[0] + 0.5 * x0[0]).epsilon(1e-6));
    CHECK(m[1] == doctest::Approx(0.5 * corner_g[1] + 0.5 * x0[1]).epsilon(1e-6));

    // empirical Lipschitz bound: pairwise W2 / node distance stays bounded
    double worst = 0.0;
    for (int o1 = 0; o1 < disc.n_omega; o1 += 7)
        for (int o2 = o1 + 3; o2 < disc.n_omega; o2 += 11) {
            std::vector<double> s1(disc.n_d), s2(disc.n_d);
            for (int d = 0; d < disc.n_d; ++d) {
                s1[d] = mu.at(o1, d);
                s2[d] = mu.at(o2, d);
            }
            const auto x1 = disc.omega_coord(o1), x2 = disc.omega_coord(o2);
            const double dist = std::hypot(x1[0] - x2[0], x1[1] - x2[1]);
            if (dist < 1e-12) continue;
            worst = std::max(worst, w2_lp(disc, s1, s2).distance / dist);
        }
    CHECK(worst < 8.0);  // C(bc Lipschitz const ~ 5, diam)
}

TEST_CASE("radial segments of the extension carry the geodesic energy") {
    auto disc = make_disc(2, 2, {9, 9}, {33, 33}, -1.5, 1.5);
    BoundaryData bc;
    bc.slices.assign(disc.boundary.size(), std::vector<double>(disc.n_d, 0.0));
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        std::vector<double> m(disc.n_d, 0.0);
        splat_point(disc, {0.7, 0.4}, 1.0, m);
        bc.slices[r] = heat_flow(disc, m, 0.01);
    }
    const std::array<double, 2> x0{0.0, 0.0};
    auto mu = radial_extension(disc, bc, x0);

    // along the axis ray (4,4) -> (8,4): r = 0, 1/4, ..., 1; consecutive W2
    // spacings must be equal (constant speed) and sum to W2(delta_x0, bc)
    std::vector<double> prev(disc.n_d), cur(disc.n_d);
    double total = 0.0;
    std::vector<double> steps;
    for (int i = 4; i < 8; ++i) {
        for (int d = 0; d < disc.n_d; ++d) {
            prev[d] = mu.at(disc.omega_index({i, 4}), d);
            cur[d] = mu.at(disc.omega_index({i + 1, 4}), d);
        }
        const double w = w2_lp(disc, prev, cur).distance;
        steps.push_back(w);
        total += w;
    }
    for (double s : steps) CHECK(s == doctest::Approx(steps[0]).epsilon(0.08));
    // geodesic energy along the segment (arc length 1, parametrized by r):
    // Dir = W2^2/2 with W2 = total
    double dir = 0.0;
    const double dr = 0.25;
    for (double s : steps) dir += 0.5 * (s / dr) * (s / dr) * dr;
    std::vector<double> bslice = bc.slices[size_t(disc.boundary_rank[disc.omega_index({8, 4})])];
    std::vector<double> center(disc.n_d, 0.0);
    for (int d = 0; d < disc.n_d; ++d) center[d] = mu.at(disc.omega_index({4, 4}), d);
    const double w2_full = w2_lp(disc, center, bslice).distance;
    CHECK(dir == doctest::Approx(0.5 * w2_full * w2_full).epsilon(0.1));
}

TEST_CASE("sqrt-circle boundary data") {
    auto disc = make_disc(2, 2, {13, 13}, {33, 33}, -1.5, 1.5);
    auto bc = sqrt_boundary(disc);
    bc.validate(disc);

    const auto loop = boundary_loop(disc);
    // t = 0: mass split between +1 and -1 on the x-axis
    {
        const auto& s = bc.slices[loop.ranks[0]];
        std::array<double, 2> mean{0.0, 0.0};
        double spread = 0.0;
        for (int d = 0; d < disc.n_d; ++d) {
            const auto x = disc.d_coord(d);
            mean[0] += s[d] * x[0];
            mean[1] += s[d] * x[1];
            spread += s[d] * x[0] * x[0];
        }
        CHECK(std::abs(mean[0]) < 0.02);
        CHECK(std::abs(mean[1]) < 0.02);
        CHECK(spread == doctest::Approx(1.0).epsilon(0.05));  // atoms at +-1
    }
    // single-valued at the loop closure: the slice at the last node adjacent
    // to the start matches the formula, continuity around the loop
    double max_adjacent = 0.0;
    for (size_t k = 0; k + 1 < loop.ranks.size(); ++k) {
        const double arc = 2.0 * std::numbers::pi *
                           (loop.arclength[k + 1] - loop.arclength[k]) / loop.perimeter;
        const double w = w2_lp(disc, bc.slices[loop.ranks[k]], bc.slices[loop.ranks[k + 1]]).distance;
        max_adjacent = std::max(max_adjacent, w - 2.0 * arc);
    }
    // closure edge back to the start
    {
        const double arc = 2.0 * std::numbers::pi *
                           (loop.perimeter - loop.arclength.back()) / loop.perimeter;
        const double w = w2_lp(disc, bc.slices[loop.ranks.back()], bc.slices[loop.ranks[0]]).distance;
        max_adjacent = std::max(max_adjacent, w - 2.0 * arc);
    }
    CHECK(max_adjacent <= 2.5 * disc.min_d_spacing());  // smoothing slack

    // the disc must fit inside D
    auto small = make_disc(2, 2, {9, 9}, {17, 17}, -0.9, 0.9);
    CHECK_THROWS_AS(sqrt_boundary(small), std::invalid_argument);
}

TEST_CASE("obstruction defect vanishes for classical gradient maps") {
    auto disc = make_disc(2, 2, {11, 11}, {17, 17}, -1.5, 1.5);
    MeasureField mu(disc.n_omega, disc.n_d);
    VelocityField v(2, 2, disc.n_omega, disc.n_d);
    // v(xi, x) = grad f(xi) with f(xi) = a xi_0^2/2 + b xi_0 xi_1 + c xi_1^2/2:
    // v^{alpha i} = d_alpha f_i for the map f(xi) = (f1(xi), f2(xi)) with
    // commuting mixed partials; constant in x
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        for (int d = 0; d < disc.n_d; ++d) {
            mu.at(o, d) = 1.0 / disc.n_d;
            // f1 = 0.3 xi0 + 0.2 xi1, f2 = 0.2 xi0 - 0.1 xi1 (gradient of a
            // quadratic potential, so d0 f2 = d1 f1)
            v.at(o, d, 0, 0) = 0.3;
            v.at(o, d, 0, 1) = 0.2;
            v.at(o, d, 1, 0) = 0.2;
            v.at(o, d, 1, 1) = -0.1;
            (void)xi;
        }
    }
    CHECK(obstruction_defect(disc, v, mu) == doctest::Approx(0.0).epsilon(1e-12));

    // constant velocity: zero defect
    VelocityField vc(2, 2, disc.n_omega, disc.n_d);
    for (size_t i = 0; i < vc.v.size(); ++i) vc.v[i] = 0.7;
    CHECK(obstruction_defect(disc, vc, mu) == doctest::Approx(0.0).epsilon(1e-12));

    // nonzero for a genuinely asymmetric field
    VelocityField vb = vc;
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        for (int d = 0; d < disc.n_d; ++d) {
            vb.at(o, d, 0, 0) = xi[1];   // d1 v^{00} = 1
            vb.at(o, d, 1, 0) = -xi[0];  // d0 v^{10} = -1
        }
    }
    CHECK(obstruction_defect(disc, vb, mu) > 0.5);

    auto disc1 = make_disc(1, 1, {9, 0}, {9, 0}, 0.0, 1.0);
    MeasureField mu1(disc1.n_omega, disc1.n_d);
    VelocityField v1(1, 1, disc1.n_omega, disc1.n_d);
    CHECK_THROWS_AS(obstruction_defect(disc1, v1, mu1), std::invalid_argument);
}

TEST_CASE("interaction functional evaluates but carries no subharmonicity claim") {
    auto disc = make_disc(1, 1, {5, 0}, {17, 0}, 0.0, 1.0);
    std::vector<double> W(size_t(disc.n_d) * disc.n_d);
    for (int a = 0; a < disc.n_d; ++a)
        for (int b = 0; b < disc.n_d; ++b) {
            const double d = disc.d_coord(a)[0] - disc.d_coord(b)[0];
            W[size_t(a) * disc.n_d + b] = d * d;
        }
    auto f = FunctionalSpec::make_interaction(W);
    MeasureField mu(disc.n_omega, disc.n_d);
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = disc.d_cell_vol[d];
    auto vals = eval_functional(disc, mu, f);
    // uniform on [0,1]: E|x-y|^2 = 1/6
    for (double v : vals) CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(0.01));
    CHECK(f.convexity_class == "interaction");
}
