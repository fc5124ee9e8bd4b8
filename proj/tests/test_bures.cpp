#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wharmonic/bures.hpp"
#include "wharmonic/measures.hpp"
#include "wharmonic/transport.hpp"

using namespace wharmonic;

namespace {

Discretization omega_only(int p, std::array<int, 2> no) {
    GridSpec s;
    s.p = p;
    s.q = 2;
    for (int b = 0; b < p; ++b) {
        s.omega_extent[b] = {0.0, 1.0};
        s.n_omega[b] = no[b];
    }
    s.d_extent[0] = {-4.0, 4.0};
    s.d_extent[1] = {-4.0, 4.0};
    s.n_d[0] = 8;
    s.n_d[1] = 8;
    return build_discretization(s);
}

Mat random_spd(std::mt19937_64& rng, int q, double min_eig) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) m(i, j) = g(rng);
    Mat s = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < q; ++i) ev[i] = min_eig + std::abs(ev[i]);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat random_sym(std::mt19937_64& rng, int q) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) m(i, j) = g(rng);
    return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("w2_bures: zero at equality, commuting pair, metric properties") {
    Mat a(1, 1), b(1, 1);
    a << 2.0;
    b << 1.0;
    CHECK(w2_bures(a, a) == doctest::Approx(0.0));
    CHECK(w2_bures(a, b) == doctest::Approx(1.0));  // Tr((A-B)^2) for commuting

    std::mt19937_64 rng(1);
    std::vector<Mat> ms;
    for (int t = 0; t < 4; ++t) ms.push_back(random_spd(rng, 2, 0.3));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            CHECK(w2_bures(ms[i], ms[j]) == doctest::Approx(w2_bures(ms[j], ms[i])).epsilon(1e-10));
            if (i != j) CHECK(w2_bures(ms[i], ms[j]) > 1e-8);
        }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                CHECK(w2_bures(ms[i], ms[k]) <=
                      w2_bures(ms[i], ms[j]) + w2_bures(ms[j], ms[k]) + 1e-8);

    Mat bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues -1, 3
    CHECK_THROWS_AS(w2_bures(ms[0], bad), std::invalid_argument);
}

TEST_CASE("w2_bures matches the transport LP on lifted densities") {
    GridSpec s;
    s.p = 1;
    s.q = 2;
    s.omega_extent[0] = {0.0, 1.0};
    s.n_omega[0] = 3;
    s.d_extent[0] = {-3.0, 3.0};
    s.d_extent[1] = {-3.0, 3.0};
    s.n_d[0] = 61;
    s.n_d[1] = 61;
    auto disc = build_discretization(s);
    auto rho = ReferenceDensity::make_default(disc);

    Mat a(2, 2), b(2, 2);
    a << 0.8, 0.15, 0.15, 0.6;
    b << 0.6, -0.1, -0.1, 0.85;  // non-commuting pair
    const double am[4] = {a(0, 0), a(0, 1), a(1, 0), a(1, 1)};
    const double bm[4] = {b(0, 0), b(0, 1), b(1, 0), b(1, 1)};
    auto da = elliptic_density(disc, am, rho);
    auto db = elliptic_density(disc, bm, rho);
    const double lp = w2_lp(disc, da, db).distance;
    CHECK(w2_bures(a, b) == doctest::Approx(lp).epsilon(0.02));
}

TEST_CASE("lyapunov operators") {
    std::mt19937_64 rng(2);
    Mat I = Mat::Identity(2, 2);
    Mat h = random_sym(rng, 2);
    CHECK((lyap_apply(I, h) - 2.0 * h).norm() == doctest::Approx(0.0));
    CHECK((lyap_solve(I, h) - 0.5 * h).norm() == doctest::Approx(0.0).epsilon(1e-12));

    for (int t = 0; t < 10; ++t) {
        Mat s = random_spd(rng, 2, 0.2);
        Mat hh = random_sym(rng, 2);
        Mat x = lyap_solve(s, hh);
        CHECK((s * x + x * s - hh).norm() <= 1e-10 * hh.norm());
        CHECK((lyap_apply(s, lyap_solve(s, hh)) - hh).norm() <= 1e-10 * hh.norm());
    }

    Mat sing = Mat::Zero(2, 2);
    CHECK_THROWS_AS(lyap_solve(sing, h), std::invalid_argument);
}

TEST_CASE("metric_apply: scalar flatness and the diagonal formula") {
    Mat a(1, 1), h(1, 1);
    a << 1.7;
    h << 0.4;
    CHECK(metric_apply(a, h)(0, 0) == doctest::Approx(0.4).epsilon(1e-12));

    // diagonal A: <h, g_A h> = 1/2 sum (li+lj)^2/(li^2+lj^2) h_ij^2
    Mat d = Mat::Zero(2, 2);
    const double l1 = 0.8, l2 = 1.9;
    d(0, 0) = l1;
    d(1, 1) = l2;
    Mat e12 = Mat::Zero(2, 2);
    e12(0, 1) = e12(1, 0) = 1.0;
    const Mat g = metric_apply(d, e12);
    const double coeff = 0.5 * (l1 + l2) * (l1 + l2) / (l1 * l1 + l2 * l2);
    CHECK(g(0, 1) == doctest::Approx(coeff).epsilon(1e-12));
    CHECK(g(0, 0) == doctest::Approx(0.0).epsilon(1e-12));

    // positive definiteness on random symmetric directions
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        Mat aa = random_spd(rng, 2, 0.2);
        Mat hh = random_sym(rng, 2);
        if (hh.norm() < 1e-8) continue;
        CHECK((hh.cwiseProduct(metric_apply(aa, hh))).sum() > 0.0);
    }
}

TEST_CASE("finite-difference metric check with Richardson extrapolation") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 3; ++t) {
        Mat a = random_spd(rng, 2, 0.5);
        Mat b = random_sym(rng, 2);
        const double exact = (b.cwiseProduct(metric_apply(a, b))).sum();
        auto value = [&](double eps) {
            const double w = w2_bures(a, a + eps * b);
            return w * w / (eps * eps);
        };
        const double v1 = value(1e-3), v2 = value(1e-4);
        const double richardson = (10.0 * v2 - v1) / 9.0;
        CHECK(richardson == doctest::Approx(exact).epsilon(1e-4));
    }
}

TEST_CASE("b_fields and el_residual on scalar and constant fields") {
    auto disc = omega_only(1, {17, 0});

    // constant field: zero B, zero residual, zero energy
    SpdField cst(disc.n_omega, 2);
    for (int o = 0; o < disc.n_omega; ++o) {
        cst.mat(o)[0] = 1.4;
        cst.mat(o)[1] = cst.mat(o)[2] = 0.2;
        cst.mat(o)[3] = 0.9;
    }
    auto bf = b_fields(disc, cst);
    for (double x : bf.v) CHECK(x == doctest::Approx(0.0));
    CHECK(el_residual(disc, cst).max_norm == doctest::Approx(0.0));
    CHECK(riemannian_energy(disc, cst) == doctest::Approx(0.0));

    // q=1: B = a'/a, energy = flat Dirichlet energy of a
    GridSpec s1 = disc.spec;
    s1.q = 1;
    auto d1 = build_discretization(s1);
    SpdField af(d1.n_omega, 1);
    auto aval = [](double xi) { return 1.0 + 0.5 * xi * xi; };
    for (int o = 0; o < d1.n_omega; ++o) af.mat(o)[0] = aval(d1.omega_coord(o)[0]);
    auto b1 = b_fields(d1, af);
    for (int o = 1; o + 1 < d1.n_omega; ++o) {
        const double xi = d1.omega_coord(o)[0];
        const double h = d1.omega_axes[0].h;
        const double da = (aval(xi + h) - aval(xi - h)) / (2 * h);
        CHECK(b1.mat(o, 0)[0] == doctest::Approx(da / aval(xi)).epsilon(1e-12));
    }
    // flat scalar reduction of the energy: 1/2 sum w (centered da)^2
    double flat = 0.0;
    std::vector<double> vals(d1.n_omega);
    for (int o = 0; o < d1.n_omega; ++o) vals[o] = af.mat(o)[0];
    for (int o = 0; o < d1.n_omega; ++o) {
        const double h = d1.omega_axes[0].h;
        double da;
        if (o == 0)
            da = (vals[1] - vals[0]) / h;
        else if (o == d1.n_omega - 1)
            da = (vals[o] - vals[o - 1]) / h;
        else
            da = (vals[o + 1] - vals[o - 1]) / (2 * h);
        flat += 0.5 * d1.omega_cell_vol[o] * da * da;
    }
    CHECK(riemannian_energy(d1, af) == doctest::Approx(flat).epsilon(1e-12));

    // commuting diagonal field: B diagonal with lambda'_k / lambda_k
    SpdField diag(disc.n_omega, 2);
    auto l1 = [](double xi) { return 1.0 + xi; };
    auto l2 = [](double xi) { return 2.0 - 0.8 * xi; };
    for (int o = 0; o < disc.n_omega; ++o) {
        const double xi = disc.omega_coord(o)[0];
        diag.mat(o)[0] = l1(xi);
        diag.mat(o)[1] = diag.mat(o)[2] = 0.0;
        diag.mat(o)[3] = l2(xi);
    }
    auto bd = b_fields(disc, diag);
    for (int o = 1; o + 1 < disc.n_omega; ++o) {
        const double xi = disc.omega_coord(o)[0];
        CHECK(bd.mat(o, 0)[0] == doctest::Approx(1.0 / l1(xi)).epsilon(1e-10));
        CHECK(bd.mat(o, 0)[3] == doctest::Approx(-0.8 / l2(xi)).epsilon(1e-10));
        CHECK(std::abs(bd.mat(o, 0)[1]) < 1e-12);
    }
}

TEST_CASE("solve_bures: constant and geodesic instances") {
    auto disc = omega_only(1, {33, 0});

    SUBCASE("constant boundary data stays constant at zero energy") {
        SpdField bc(2, 2);
        for (int r = 0; r < 2; ++r) {
            bc.mat(r)[0] = 1.3;
            bc.mat(r)[1] = bc.mat(r)[2] = 0.25;
            bc.mat(r)[3] = 0.8;
        }
        auto [a, rep] = solve_bures(disc, bc);
        CHECK(rep.energy <= 1e-12);
        CHECK(rep.el_residual <= 1e-9);
        for (int o = 0; o < disc.n_omega; ++o)
            for (int i = 0; i < 4; ++i) CHECK(a.mat(o)[i] == doctest::Approx(bc.mat(0)[i]).epsilon(1e-8));
    }

    SUBCASE("q=1 flat geodesic: linear interpolation, energy (a1-a0)^2/2") {
        GridSpec s1 = disc.spec;
        s1.q = 1;
        auto d1 = build_discretization(s1);
        SpdField bc(2, 1);
        bc.mat(0)[0] = 1.0;
        bc.mat(1)[0] = 2.0;
        auto [a, rep] = solve_bures(d1, bc);
        CHECK(rep.energy == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(rep.el_residual <= 1e-9);
        for (int o = 0; o < d1.n_omega; ++o) {
            const double t = d1.omega_coord(o)[0];
            CHECK(a.mat(o)[0] == doctest::Approx(1.0 + t).epsilon(5e-3));
        }
    }

    SUBCASE("commuting endpoints: per-eigenvalue linear interpolation") {
        SpdField bc(2, 2);
        bc.mat(0)[0] = 1.0;
        bc.mat(0)[3] = 2.0;
        bc.mat(1)[0] = 2.0;
        bc.mat(1)[3] = 1.0;
        bc.mat(0)[1] = bc.mat(0)[2] = bc.mat(1)[1] = bc.mat(1)[2] = 0.0;
        auto [a, rep] = solve_bures(disc, bc);
        CHECK(rep.energy == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(rep.el_residual <= 1e-9);
        // matches Dir = W2^2/2 through the Bures distance
        Mat a0(2, 2), a1(2, 2);
        a0 << 1, 0, 0, 2;
        a1 << 2, 0, 0, 1;
        const double w2 = w2_bures(a0, a1);
        CHECK(rep.energy == doctest::Approx(0.5 * w2 * w2).epsilon(1e-6));
        for (int o = 0; o < disc.n_omega; ++o) {
            const double t = disc.omega_coord(o)[0];
            CHECK(a.mat(o)[0] == doctest::Approx(1.0 + t).epsilon(2e-3));
            CHECK(a.mat(o)[3] == doctest::Approx(2.0 - t).epsilon(2e-3));
            CHECK(std::abs(a.mat(o)[1]) <= 1e-6);
        }
        // descent-phase energy trace is nonincreasing, exactly
        for (size_t i = 0; i + 1 < rep.energy_trace.size(); ++i)
            CHECK(rep.energy_trace[i + 1] <= rep.energy_trace[i] + 1e-15);
    }

    SUBCASE("non-SPD boundary data rejected") {
        SpdField bc(2, 2);
        bc.mat(0)[0] = 1.0;
        bc.mat(0)[3] = -1.0;
        bc.mat(1)[0] = 1.0;
        bc.mat(1)[3] = 1.0;
        CHECK_THROWS_AS(solve_bures(disc, bc), std::invalid_argument);
    }
}

TEST_CASE("dual potential from B-fields") {
    auto disc = omega_only(1, {9, 0});
    SUBCASE("zero B gives zero potential, zero margin and bound") {
        BField bf(disc.n_omega, 1, 2);
        auto phi = dual_from_bures(disc, bf);
        for (double x : phi.v) CHECK(x == 0.0);
    }
    SUBCASE("quadratic potential sampled correctly") {
        BField bf(disc.n_omega, 1, 2);
        for (int o = 0; o < disc.n_omega; ++o) {
            bf.mat(o, 0)[0] = 2.0;
            bf.mat(o, 0)[1] = bf.mat(o, 0)[2] = 0.5;
            bf.mat(o, 0)[3] = -1.0;
        }
        auto phi = dual_from_bures(disc, bf);
        for (int d = 0; d < disc.n_d; ++d) {
            const auto x = disc.d_coord(d);
            const double expect = 0.5 * (2.0 * x[0] * x[0] + 2.0 * 0.5 * x[0] * x[1] - x[1] * x[1]);
            CHECK(phi.at(0, 4, d) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("quadratic max principle and det minimum principle") {
    auto disc = omega_only(2, {9, 9});
    // solved instance with smooth SPD boundary data
    SpdField bc(int(disc.boundary.size()), 2);
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        const auto xi = disc.omega_coord(disc.boundary[r]);
        bc.mat(int(r))[0] = 1.0 + 0.4 * xi[0];
        bc.mat(int(r))[1] = bc.mat(int(r))[2] = 0.15 * xi[0] * xi[1];
        bc.mat(int(r))[3] = 1.3 - 0.35 * xi[1];
    }
    auto [a, rep] = solve_bures(disc, bc);
    CHECK(rep.el_residual <= 1e-8);

    std::mt19937_64 rng(9);
    for (int t = 0; t < 5; ++t) {
        Mat c = random_spd(rng, 2, 0.0);
        auto pr = quadratic_max_principle(disc, a, c, 1e-6);
        CHECK(pr.pass);
    }
    Mat notpsd(2, 2);
    notpsd << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(quadratic_max_principle(disc, a, notpsd, 1e-6), std::invalid_argument);

    auto dm = det_min_principle(disc, a, 1e-9);
    CHECK(dm.pass);
    CHECK(dm.min_interior >= dm.min_boundary - 1e-9);

    // constant field: exact equality
    SpdField cst(disc.n_omega, 2);
    for (int o = 0; o < disc.n_omega; ++o) {
        cst.mat(o)[0] = 1.0;
        cst.mat(o)[3] = 2.0;
        cst.mat(o)[1] = cst.mat(o)[2] = 0.3;
    }
    auto dmc = det_min_principle(disc, cst, 0.0);
    CHECK(dmc.pass);
    CHECK(dmc.min_interior == doctest::Approx(dmc.min_boundary));
}

TEST_CASE("q=1 geodesic det principle: min det cov is the boundary min") {
    auto disc = omega_only(1, {17, 0});
    GridSpec s1 = disc.spec;
    s1.q = 1;
    auto d1 = build_discretization(s1);
    SpdField bc(2, 1);
    bc.mat(0)[0] = 1.0;
    bc.mat(1)[0] = 2.0;
    auto [a, rep] = solve_bures(d1, bc);
    auto dm = det_min_principle(d1, a, 1e-9);
    CHECK(dm.pass);
    CHECK(dm.min_boundary == doctest::Approx(1.0));
    CHECK(dm.min_interior >= 1.0 - 1e-6);
}
