#include "wharmonic/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "wharmonic/analysis.hpp"
#include "wharmonic/bbsolver.hpp"
#include "wharmonic/bures.hpp"
#include "wharmonic/energy.hpp"
#include "wharmonic/measures.hpp"
#include "wharmonic/quantile_solver.hpp"
#include "wharmonic/transport.hpp"

namespace wharmonic {

using nlohmann::json;
namespace fs = std::filesystem;

// --- CSV ---------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void write_measure_csv(const std::string& path, const Discretization& disc, const MeasureField& mu) {
    std::ofstream out(path);
    for (int b = 0; b < disc.spec.p; ++b) out << "xi" << b << ",";
    for (int j = 0; j < disc.spec.q; ++j) out << "x" << j << ",";
    out << "mass\n";
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        for (int d = 0; d < disc.n_d; ++d) {
            const auto x = disc.d_coord(d);
            for (int b = 0; b < disc.spec.p; ++b) out << fmt(xi[b]) << ",";
            for (int j = 0; j < disc.spec.q; ++j) out << fmt(x[j]) << ",";
            out << fmt(mu.at(o, d)) << "\n";
        }
    }
}

MeasureField read_measure_csv(const std::string& path, const Discretization& disc) {
    const auto rows = read_csv(path);
    if (int(rows.size()) != disc.n_omega * disc.n_d)
        throw std::runtime_error("measure csv: row count mismatch");
    MeasureField mu(disc.n_omega, disc.n_d);
    size_t r = 0;
    for (int o = 0; o < disc.n_omega; ++o)
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = rows[r++].back();
    return mu;
}

void write_spd_csv(const std::string& path, const Discretization& disc, const SpdField& a) {
    std::ofstream out(path);
    for (int b = 0; b < disc.spec.p; ++b) out << "xi" << b << ",";
    const int q = a.q;
    for (int i = 0; i < q * q; ++i) out << "a" << i / q << i % q << (i + 1 < q * q ? "," : "\n");
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        for (int b = 0; b < disc.spec.p; ++b) out << fmt(xi[b]) << ",";
        for (int i = 0; i < q * q; ++i) out << fmt(a.mat(o)[i]) << (i + 1 < q * q ? "," : "\n");
    }
}

SpdField read_spd_csv(const std::string& path, const Discretization& disc) {
    const auto rows = read_csv(path);
    if (int(rows.size()) != disc.n_omega) throw std::runtime_error("spd csv: row count mismatch");
    const int q = disc.spec.q;
    SpdField a(disc.n_omega, q);
    for (int o = 0; o < disc.n_omega; ++o)
        for (int i = 0; i < q * q; ++i) a.mat(o)[i] = rows[o][disc.spec.p + i];
    return a;
}

void write_quantile_csv(const std::string& path, const Discretization& disc, const QuantileField& qf) {
    std::ofstream out(path);
    for (int b = 0; b < disc.spec.p; ++b) out << "xi" << b << ",";
    out << "level,value\n";
    for (int o = 0; o < disc.n_omega; ++o) {
        const auto xi = disc.omega_coord(o);
        for (int k = 0; k < qf.m; ++k) {
            for (int b = 0; b < disc.spec.p; ++b) out << fmt(xi[b]) << ",";
            out << fmt((k + 0.5) / qf.m) << "," << fmt(qf.at(o, k)) << "\n";
        }
    }
}

// --- config ------------------------------------------------------------------

namespace {

GridSpec parse_grid(const json& g) {
    GridSpec spec;
    spec.p = g.at("p").get<int>();
    spec.q = g.at("q").get<int>();
    const auto omega = g.at("omega");
    const auto dext = g.at("d");
    const auto no = g.at("n_omega");
    const auto ndv = g.at("n_d");
    for (int b = 0; b < spec.p; ++b) {
        spec.omega_extent[b] = {omega.at(b).at(0).get<double>(), omega.at(b).at(1).get<double>()};
        spec.n_omega[b] = no.at(b).get<int>();
    }
    for (int j = 0; j < spec.q; ++j) {
        spec.d_extent[j] = {dext.at(j).at(0).get<double>(), dext.at(j).at(1).get<double>()};
        spec.n_d[j] = ndv.at(j).get<int>();
    }
    spec.validate();
    return spec;
}

std::vector<double> density_from_spec(const Discretization& disc, const json& spec) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "uniform") {
        std::vector<double> m(disc.d_cell_vol);
        double s = 0.0;
        for (double v : m) s += v;
        for (double& v : m) v /= s;
        return m;
    }
    if (kind == "bump") {
        std::array<double, 2> c{0.0, 0.0};
        const auto& cc = spec.at("center");
        for (size_t j = 0; j < cc.size(); ++j) c[j] = cc.at(j).get<double>();
        const double w = spec.at("width").get<double>();
        std::vector<double> m(disc.n_d, 0.0);
        splat_point(disc, c, 1.0, m);
        m = heat_flow(disc, m, w * w);
        double s = 0.0;
        for (double v : m) s += v;
        for (double& v : m) v /= s;
        return m;
    }
    if (kind == "random") {
        return random_smooth_density(disc, spec.at("seed").get<unsigned>());
    }
    throw std::invalid_argument("unknown density kind: " + kind);
}

Mat parse_matrix(const json& j, int q) {
    Mat m(q, q);
    for (int i = 0; i < q; ++i)
        for (int k = 0; k < q; ++k) m(i, k) = j.at(i).at(k).get<double>();
    return m;
}

// A(xi) = base + sum_alpha xi_alpha * slope[alpha]
SpdField elliptic_boundary_matrices(const Discretization& disc, const json& params) {
    const int q = disc.spec.q;
    const Mat base = parse_matrix(params.at("base"), q);
    std::vector<Mat> slopes;
    if (params.contains("slope"))
        for (const auto& s : params.at("slope")) slopes.push_back(parse_matrix(s, q));
    SpdField bc(int(disc.boundary.size()), q);
    for (size_t r = 0; r < disc.boundary.size(); ++r) {
        const auto xi = disc.omega_coord(disc.boundary[r]);
        Mat a = base;
        for (size_t alpha = 0; alpha < slopes.size() && int(alpha) < disc.spec.p; ++alpha)
            a += xi[alpha] * slopes[alpha];
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw std::invalid_argument("elliptic boundary: A(xi) not SPD on the boundary");
        bc.mat(int(r))[0] = a(0, 0);
        if (q == 2) {
            bc.mat(int(r))[1] = a(0, 1);
            bc.mat(int(r))[2] = a(1, 0);
            bc.mat(int(r))[3] = a(1, 1);
        }
    }
    return bc;
}

BoundaryData boundary_data_from_config(const Discretization& disc, const json& boundary) {
    const std::string kind = boundary.at("kind").get<std::string>();
    const json params = boundary.value("params", json::object());
    BoundaryData bc;
    bc.slices.resize(disc.boundary.size());

    if (kind == "constant") {
        auto dens = density_from_spec(disc, params.at("density"));
        for (auto& s : bc.slices) s = dens;
        return bc;
    }
    if (kind == "pair-geodesic") {
        if (disc.spec.p != 1) throw std::invalid_argument("pair-geodesic needs p = 1");
        auto left = density_from_spec(disc, params.at("left"));
        auto right = density_from_spec(disc, params.at("right"));
        for (size_t r = 0; r < disc.boundary.size(); ++r)
            bc.slices[r] = (disc.boundary[r] == 0) ? left : right;
        return bc;
    }
    if (kind == "dirac-of-map") {
        std::array<double, 2> a0{0.0, 0.0};
        const auto& ja0 = params.at("a0");
        for (size_t j = 0; j < ja0.size(); ++j) a0[j] = ja0.at(j).get<double>();
        std::array<std::array<double, 2>, 2> A{{{0.0, 0.0}, {0.0, 0.0}}};
        const auto& jA = params.at("A");
        for (size_t i = 0; i < jA.size(); ++i)
            for (size_t j = 0; j < jA.at(i).size(); ++j) A[i][j] = jA.at(i).at(j).get<double>();
        for (size_t r = 0; r < disc.boundary.size(); ++r) {
            const auto xi = disc.omega_coord(disc.boundary[r]);
            std::array<double, 2> f{a0[0] + A[0][0] * xi[0] + A[0][1] * xi[1],
                                    a0[1] + A[1][0] * xi[0] + A[1][1] * xi[1]};
            bc.slices[r] = smoothed_dirac(disc, f);
        }
        return bc;
    }
    if (kind == "elliptic") {
        const auto mats = elliptic_boundary_matrices(disc, params);
        const auto rho = ReferenceDensity::make_default(disc);
        for (size_t r = 0; r < disc.boundary.size(); ++r)
            bc.slices[r] = elliptic_density(disc, mats.mat(int(r)), rho);
        return bc;
    }
    if (kind == "sqrt-circle") {
        return sqrt_boundary(disc);
    }
    throw std::invalid_argument("unknown boundary kind: " + kind);
}

struct CheckOutcome {
    bool pass = true;
    double value = 0.0;
    double tol = 0.0;
};

double subharmonic_tol(const Discretization& disc, double f_range, double noise) {
    const double h2 = disc.min_omega_spacing() * disc.min_omega_spacing();
    return 10.0 * (noise / h2 + h2 * std::max(1.0, f_range));
}

json run_checks(const Discretization& disc, const MeasureField& mu, const SpdField* afield,
                const std::vector<std::string>& checks, double noise, bool& all_pass) {
    json out = json::object();
    auto field_range = [](const std::vector<double>& f) {
        double lo = f[0], hi = f[0];
        for (double v : f) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi - lo;
    };
    for (const auto& name : checks) {
        CheckOutcome oc;
        if (name == "subharmonic-potential" || name == "subharmonic-entropy" ||
            name == "subharmonic-quadratic") {
            FunctionalSpec f;
            if (name == "subharmonic-potential") {
                std::vector<double> V(disc.n_d);
                for (int d = 0; d < disc.n_d; ++d) {
                    const auto x = disc.d_coord(d);
                    V[d] = x[0] * x[0] + x[1] * x[1];
                }
                f = FunctionalSpec::make_potential(std::move(V));
            } else if (name == "subharmonic-entropy") {
                f = FunctionalSpec::make_entropy();
            } else {
                f = FunctionalSpec::make_quadratic({1.0, 0.0, 0.0, 1.0}, disc.spec.q);
            }
            const auto vals = eval_functional(disc, mu, f);
            const double tol = subharmonic_tol(disc, field_range(vals), noise);
            const auto rep = subharmonicity_check(disc, vals, tol);
            oc.pass = rep.pass;
            oc.value = std::min(rep.min_interior_laplacian, -rep.max_gap);
            oc.tol = tol;
        } else if (name == "det-min") {
            if (!afield) continue;
            const auto rep = det_min_principle(disc, *afield, 1e-9);
            oc.pass = rep.pass;
            oc.value = rep.min_interior - rep.min_boundary;
            oc.tol = 1e-9;
        } else if (name == "quadratic-max") {
            if (!afield) continue;
            const double tol = subharmonic_tol(disc, 1.0, noise);
            const auto rep = quadratic_max_principle(disc, *afield, Mat::Identity(disc.spec.q, disc.spec.q), tol);
            oc.pass = rep.pass;
            oc.value = std::min(rep.min_interior_laplacian, -rep.max_gap);
            oc.tol = tol;
        } else {
            throw std::invalid_argument("unknown check: " + name);
        }
        out[name] = {{"pass", oc.pass}, {"value", oc.value}, {"tol", oc.tol}};
        all_pass = all_pass && oc.pass;
    }
    return out;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

struct ParsedConfig {
    GridSpec grid;
    json boundary;
    std::string solver_kind;
    json solver_options;
    std::vector<std::string> checks;
    std::string out_dir;
};

ParsedConfig parse_config(const std::string& path) {
    const json j = load_json(path);
    ParsedConfig cfg;
    cfg.grid = parse_grid(j.at("grid"));
    cfg.boundary = j.at("boundary");
    cfg.solver_kind = j.at("solver").at("kind").get<std::string>();
    cfg.solver_options = j.at("solver").value("options", json::object());
    if (j.contains("checks"))
        for (const auto& c : j.at("checks")) cfg.checks.push_back(c.get<std::string>());
    cfg.out_dir = j.at("out_dir").get<std::string>();
    return cfg;
}

SolverOptions parse_solver_options(const json& o) {
    SolverOptions opts;
    opts.max_iters = o.value("max_iters", opts.max_iters);
    opts.tau = o.value("tau", opts.tau);
    opts.sigma = o.value("sigma", opts.sigma);
    opts.step_ratio = o.value("step_ratio", opts.step_ratio);
    opts.theta = o.value("theta", opts.theta);
    opts.tol_residual = o.value("tol_residual", opts.tol_residual);
    opts.tol_energy = o.value("tol_energy", opts.tol_energy);
    opts.mu_floor = o.value("mu_floor", opts.mu_floor);
    opts.seed = o.value("seed", opts.seed);
    opts.init = o.value("init", opts.init);
    return opts;
}

}  // namespace

// --- run ----------------------------------------------------------------------

int run_experiment(const std::string& config_path) {
    ParsedConfig cfg;
    Discretization disc;
    try {
        cfg = parse_config(config_path);
        disc = build_discretization(cfg.grid);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    json summary;
    summary["schema"] = "wharmonic/run/1";
    bool converged = true;
    bool all_pass = true;

    try {
        fs::create_directories(cfg.out_dir);
        MeasureField mu;
        SpdField afield;
        bool have_afield = false;
        json residuals = json::object();

        if (cfg.solver_kind == "bb") {
            const auto bc = boundary_data_from_config(disc, cfg.boundary);
            const auto opts = parse_solver_options(cfg.solver_options);
            auto [m, e, rep] = solve_dirichlet(disc, bc, opts);
            mu = std::move(m);
            converged = rep.converged;
            summary["energy"] = rep.energy;
            summary["dual_bound"] = rep.dual_bound;
            summary["gap"] = rep.gap;
            summary["iters"] = rep.iterations;
            residuals["continuity"] = rep.continuity_residual;
            residuals["renormalization"] = rep.renormalization;
            residuals["dual_margin"] = rep.dual_margin;
            write_measure_csv(cfg.out_dir + "/mu.csv", disc, mu);
        } else if (cfg.solver_kind == "quantile" || cfg.solver_kind == "jost") {
            const auto bdata = boundary_data_from_config(disc, cfg.boundary);
            const int m_levels = cfg.solver_options.value("levels", 256);
            BoundaryQuantiles bq;
            bq.m = m_levels;
            bq.slices.resize(bdata.slices.size());
            for (size_t r = 0; r < bdata.slices.size(); ++r)
                bq.slices[r] = quantiles_of_density(disc.d_axes[0], bdata.slices[r], m_levels);
            QuantileField qf;
            if (cfg.solver_kind == "quantile") {
                qf = solve_quantile(disc, bq);
                summary["iters"] = 1;
                residuals["barycenter"] = 0.0;
            } else {
                JostOptions jopts;
                jopts.eps = cfg.solver_options.value("eps", 4.0 * disc.min_omega_spacing());
                jopts.lambda = cfg.solver_options.value("lambda", 0.0);
                jopts.max_sweeps = cfg.solver_options.value("max_sweeps", 500);
                jopts.tol = cfg.solver_options.value("tol", 1e-9);
                auto [f, rep] = jost_solve(disc, bq, jopts);
                qf = std::move(f);
                converged = rep.converged;
                summary["iters"] = rep.sweeps;
                residuals["barycenter"] = rep.barycenter_residual;
            }
            summary["energy"] = quantile_dirichlet_energy(disc, qf);
            summary["dual_bound"] = nullptr;
            summary["gap"] = nullptr;
            mu = from_quantiles(disc, qf);
            write_quantile_csv(cfg.out_dir + "/quantiles.csv", disc, qf);
            write_measure_csv(cfg.out_dir + "/mu.csv", disc, mu);
        } else if (cfg.solver_kind == "bures") {
            const auto bc = elliptic_boundary_matrices(disc, cfg.boundary.at("params"));
            BuresOptions bopts;
            bopts.el_tol = cfg.solver_options.value("el_tol", bopts.el_tol);
            bopts.max_iters = cfg.solver_options.value("max_iters", bopts.max_iters);
            auto [a, rep] = solve_bures(disc, bc, bopts);
            afield = std::move(a);
            have_afield = true;
            converged = rep.converged;
            summary["energy"] = rep.energy;
            summary["iters"] = rep.descent_iterations + rep.newton_iterations;
            residuals["euler_lagrange"] = rep.el_residual;

            const auto bf = b_fields(disc, afield);
            const auto phi = dual_from_bures(disc, bf);
            const auto rho = ReferenceDensity::make_default(disc);
            BoundaryData bdata;
            bdata.slices.resize(disc.boundary.size());
            for (size_t r = 0; r < disc.boundary.size(); ++r)
                bdata.slices[r] = elliptic_density(disc, bc.mat(int(r)), rho);
            const auto cert = dual_certificate(disc, phi, bdata);
            summary["dual_bound"] = cert.lower_bound;
            summary["gap"] = rep.energy - (cert.lower_bound - cert.slack);
            residuals["dual_margin"] = cert.feasibility_margin;

            mu = MeasureField(disc.n_omega, disc.n_d);
            for (int o = 0; o < disc.n_omega; ++o) {
                auto dens = elliptic_density(disc, afield.mat(o), rho);
                for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = dens[d];
            }
            write_spd_csv(cfg.out_dir + "/afield.csv", disc, afield);
            write_measure_csv(cfg.out_dir + "/mu.csv", disc, mu);
        } else {
            std::cerr << "config error: unknown solver kind " << cfg.solver_kind << "\n";
            return 2;
        }

        double noise = 1e-9;
        if (residuals.contains("continuity"))
            noise = std::max(residuals["continuity"].get<double>(),
                             residuals["renormalization"].get<double>());
        summary["residuals"] = residuals;
        summary["checks"] =
            run_checks(disc, mu, have_afield ? &afield : nullptr, cfg.checks, noise, all_pass);
        const auto t1 = std::chrono::steady_clock::now();
        summary["seconds"] = std::chrono::duration<double>(t1 - t0).count();

        std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << "\n";
        std::ofstream(cfg.out_dir + "/config.json") << load_json(config_path).dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (!converged) return 3;
    return all_pass ? 0 : 1;
}

int check_experiment(const std::string& config_path) {
    try {
        const auto cfg = parse_config(config_path);
        const auto disc = build_discretization(cfg.grid);
        const auto summary_path = cfg.out_dir + "/summary.json";
        json old_summary = load_json(summary_path);
        MeasureField mu = read_measure_csv(cfg.out_dir + "/mu.csv", disc);
        SpdField afield;
        bool have_afield = fs::exists(cfg.out_dir + "/afield.csv");
        if (have_afield) afield = read_spd_csv(cfg.out_dir + "/afield.csv", disc);
        double noise = 1e-9;
        if (old_summary.contains("residuals") && old_summary["residuals"].contains("continuity"))
            noise = old_summary["residuals"]["continuity"].get<double>();
        bool all_pass = true;
        json checks = run_checks(disc, mu, have_afield ? &afield : nullptr, cfg.checks, noise, all_pass);
        std::cout << checks.dump(2) << "\n";
        return all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int compare_runs(const std::string& dir_a, const std::string& dir_b) {
    try {
        const json cfg_a = load_json(dir_a + "/config.json");
        const json cfg_b = load_json(dir_b + "/config.json");
        const auto grid_a = parse_grid(cfg_a.at("grid"));
        const auto grid_b = parse_grid(cfg_b.at("grid"));
        if (grid_a.p != grid_b.p || grid_a.q != grid_b.q || grid_a.n_omega != grid_b.n_omega ||
            grid_a.n_d != grid_b.n_d) {
            std::cerr << "compare: grids do not match\n";
            return 2;
        }
        const auto disc = build_discretization(grid_a);
        const auto mu_a = read_measure_csv(dir_a + "/mu.csv", disc);
        const auto mu_b = read_measure_csv(dir_b + "/mu.csv", disc);

        double max_w2 = 0.0, mean_w2 = 0.0;
        std::vector<double> sa(disc.n_d), sb(disc.n_d);
        for (int o = 0; o < disc.n_omega; ++o) {
            for (int d = 0; d < disc.n_d; ++d) {
                sa[d] = mu_a.at(o, d);
                sb[d] = mu_b.at(o, d);
            }
            double w2;
            if (disc.spec.q == 1)
                w2 = w2_quantile_exact(disc.d_axes[0], sa, sb);
            else
                w2 = w2_lp(disc, sa, sb).distance;
            max_w2 = std::max(max_w2, w2);
            mean_w2 += w2;
        }
        mean_w2 /= disc.n_omega;

        const json sum_a = load_json(dir_a + "/summary.json");
        const json sum_b = load_json(dir_b + "/summary.json");
        const double ea = sum_a.at("energy").get<double>();
        const double eb = sum_b.at("energy").get<double>();

        json out;
        out["schema"] = "wharmonic/compare/1";
        out["max_w2"] = max_w2;
        out["mean_w2"] = mean_w2;
        out["energy_a"] = ea;
        out["energy_b"] = eb;
        out["energy_delta_rel"] = std::abs(ea - eb) / std::max({std::abs(ea), std::abs(eb), 1e-300});
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int dir_eps_experiment(const std::string& config_path, const std::vector<double>& eps_values) {
    try {
        const auto cfg = parse_config(config_path);
        const auto disc = build_discretization(cfg.grid);
        MeasureField mu = read_measure_csv(cfg.out_dir + "/mu.csv", disc);
        json out;
        out["schema"] = "wharmonic/dir-eps/1";
        json values = json::array();
        for (double eps : eps_values) {
            json row;
            row["eps"] = eps;
            row["dir_eps"] = dir_eps(disc, mu, eps);
            values.push_back(row);
        }
        out["values"] = values;
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace wharmonic
