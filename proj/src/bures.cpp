#include "wharmonic/bures.hpp"

#include <cmath>
#include <stdexcept>

#include "wharmonic/analysis.hpp"
#include "wharmonic/pde.hpp"

namespace wharmonic {

namespace {

Eigen::SelfAdjointEigenSolver<Mat> eig_of(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) throw std::runtime_error("bures: eigendecomposition failed");
    return es;
}

void require_spd(const Mat& m, const char* who) {
    if (m.rows() != m.cols()) throw std::invalid_argument(std::string(who) + ": not square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw std::invalid_argument(std::string(who) + ": not symmetric");
    auto es = eig_of(m);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument(std::string(who) + ": not positive definite");
}

}  // namespace

Mat sym_sqrt(const Mat& m) {
    auto es = eig_of(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double w2_bures(const Mat& a, const Mat& b) {
    require_spd(a, "w2_bures");
    require_spd(b, "w2_bures");
    const Mat cross = sym_sqrt(a * b * b * a);
    const double t = (a * a + b * b).trace() - 2.0 * cross.trace();
    return std::sqrt(std::max(0.0, t));
}

Mat lyap_apply(const Mat& a, const Mat& h) { return a * h + h * a; }

Mat lyap_solve(const Mat& s, const Mat& h, double eig_floor) {
    auto es = eig_of(s);
    const auto& ev = es.eigenvalues();
    if (ev.minCoeff() <= eig_floor)
        throw std::invalid_argument("lyap_solve: eigenvalue at or below floor");
    const Mat ht = es.eigenvectors().transpose() * h * es.eigenvectors();
    Mat xt(h.rows(), h.cols());
    for (int i = 0; i < h.rows(); ++i)
        for (int j = 0; j < h.cols(); ++j) xt(i, j) = ht(i, j) / (ev[i] + ev[j]);
    return es.eigenvectors() * xt * es.eigenvectors().transpose();
}

Mat metric_apply(const Mat& a, const Mat& h) {
    return 0.5 * lyap_apply(a, lyap_apply(a, lyap_solve(a * a, h)));
}

Mat spd_node(const SpdField& f, int o) {
    Mat m(f.q, f.q);
    for (int i = 0; i < f.q; ++i)
        for (int j = 0; j < f.q; ++j) m(i, j) = f.mat(o)[i * f.q + j];
    return m;
}

void set_node(SpdField& f, int o, const Mat& m) {
    for (int i = 0; i < f.q; ++i)
        for (int j = 0; j < f.q; ++j) f.mat(o)[i * f.q + j] = m(i, j);
}

double min_eigenvalue(const SpdField& f) {
    double mn = std::numeric_limits<double>::infinity();
    for (int o = 0; o < f.n_omega; ++o) mn = std::min(mn, eig_of(spd_node(f, o)).eigenvalues().minCoeff());
    return mn;
}

namespace {

// d_alpha of the matrix field at node o: centered inside, one-sided on the
// Omega boundary.
Mat matrix_derivative(const Discretization& disc, const SpdField& f, int o, int alpha) {
    auto a = disc.omega_multi(o);
    const int n = disc.spec.n_omega[alpha];
    const double h = disc.omega_axes[alpha].h;
    auto node = [&](int shift) {
        auto an = a;
        an[alpha] += shift;
        return spd_node(f, disc.omega_index(an));
    };
    if (a[alpha] == 0) return (node(1) - node(0)) / h;
    if (a[alpha] == n - 1) return (node(0) - node(-1)) / h;
    return (node(1) - node(-1)) / (2.0 * h);
}

}  // namespace

BField b_fields(const Discretization& disc, const SpdField& afield) {
    const int q = afield.q;
    BField bf(disc.n_omega, disc.spec.p, q);
    for (int o = 0; o < disc.n_omega; ++o) {
        const Mat a = spd_node(afield, o);
        const Mat a2 = a * a;
        for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
            const Mat da = matrix_derivative(disc, afield, o, alpha);
            const Mat b = lyap_apply(a, lyap_solve(a2, da));
            for (int i = 0; i < q; ++i)
                for (int j = 0; j < q; ++j) bf.mat(o, alpha)[i * q + j] = b(i, j);
        }
    }
    return bf;
}

double riemannian_energy(const Discretization& disc, const SpdField& afield) {
    double acc = 0.0;
    for (int o = 0; o < disc.n_omega; ++o) {
        const Mat a = spd_node(afield, o);
        double s = 0.0;
        for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
            const Mat da = matrix_derivative(disc, afield, o, alpha);
            s += (da * metric_apply(a, da)).trace();
        }
        acc += disc.omega_cell_vol[o] * s;
    }
    return 0.5 * acc;
}

ElResidual el_residual(const Discretization& disc, const SpdField& afield) {
    const int q = afield.q;
    const BField bf = b_fields(disc, afield);
    ElResidual out;
    out.field.assign(disc.interior.size(), 0.0);
    auto bmat = [&](int o, int alpha) {
        Mat m(q, q);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) m(i, j) = bf.mat(o, alpha)[i * q + j];
        return m;
    };
    for (size_t t = 0; t < disc.interior.size(); ++t) {
        const int o = disc.interior[t];
        auto a = disc.omega_multi(o);
        Mat r = Mat::Zero(q, q);
        for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
            const double h = disc.omega_axes[alpha].h;
            auto ap = a, am = a;
            ap[alpha] += 1;
            am[alpha] -= 1;
            r += (bmat(disc.omega_index(ap), alpha) - bmat(disc.omega_index(am), alpha)) / (2.0 * h);
            const Mat b = bmat(o, alpha);
            r += b * b;
        }
        out.field[t] = r.norm();
        out.max_norm = std::max(out.max_norm, out.field[t]);
    }
    return out;
}

namespace {

// Face-based discrete Dirichlet energy in the C = A^2 chart:
//   sum_faces w_f/4 <dC/h, L_{C_mid}^{-1}(dC/h)> * h_alpha
// with exact gradient; no checkerboard modes.
struct FaceEnergy {
    const Discretization& disc;
    int q;

    double value(const std::vector<Mat>& c) const {
        double acc = 0.0;
        for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
            const double h = disc.omega_axes[alpha].h;
            const int nof = disc.omega_face_count(alpha);
            for (int of = 0; of < nof; ++of) {
                auto f = disc.omega_face_multi(alpha, of);
                auto hi = f;
                hi[alpha] += 1;
                const Mat d = (c[disc.omega_index(hi)] - c[disc.omega_index(f)]) / h;
                const Mat mid = 0.5 * (c[disc.omega_index(hi)] + c[disc.omega_index(f)]);
                const Mat b = lyap_solve(mid, d);
                acc += face_weight(alpha, f) * 0.25 * (d * b).trace();
            }
        }
        return acc;
    }

    double face_weight(int alpha, const std::array<int, 2>& f) const {
        double w = disc.omega_axes[alpha].h;
        if (disc.spec.p == 2) {
            const int other = 1 - alpha;
            const auto& ax = disc.omega_axes[other];
            w *= (f[other] == 0 || f[other] == ax.n - 1) ? ax.h / 2.0 : ax.h;
        }
        return w;
    }

    // Euclidean gradient w.r.t. interior node values of C.
    void gradient(const std::vector<Mat>& c, std::vector<Mat>& grad) const {
        for (auto& g : grad) g.setZero(q, q);
        for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
            const double h = disc.omega_axes[alpha].h;
            const int nof = disc.omega_face_count(alpha);
            for (int of = 0; of < nof; ++of) {
                auto f = disc.omega_face_multi(alpha, of);
                auto hi = f;
                hi[alpha] += 1;
                const int o_lo = disc.omega_index(f);
                const int o_hi = disc.omega_index(hi);
                const Mat d = (c[o_hi] - c[o_lo]) / h;
                const Mat mid = 0.5 * (c[o_hi] + c[o_lo]);
                const Mat b = lyap_solve(mid, d);
                const double w = face_weight(alpha, f);
                const Mat flux = w * 0.5 / h * b;
                const Mat curv = w * 0.25 * (b * b);
                grad[o_lo] += -flux - 0.5 * curv;
                grad[o_hi] += flux - 0.5 * curv;
            }
        }
    }
};

std::vector<Mat> harmonic_matrix_init(const Discretization& disc, const SpdField& bc, int q) {
    LaplaceDirichlet lap(disc);
    std::vector<Mat> a(disc.n_omega, Mat::Zero(q, q));
    std::vector<double> bvals(disc.boundary.size());
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
            for (size_t r = 0; r < disc.boundary.size(); ++r) bvals[r] = bc.mat(int(r))[i * q + j];
            auto field = lap.solve(bvals);
            for (int o = 0; o < disc.n_omega; ++o) a[o](i, j) = field[o];
        }
    return a;
}

}  // namespace

std::pair<SpdField, BuresReport> solve_bures(const Discretization& disc, const SpdField& bc,
                                             const BuresOptions& opts) {
    const int q = bc.q;
    if (int(bc.n_omega) != int(disc.boundary.size()))
        throw std::invalid_argument("solve_bures: bc must have one matrix per boundary node");
    double bc_min_eig = min_eigenvalue(bc);
    double bc_max = 0.0;
    for (int r = 0; r < bc.n_omega; ++r)
        bc_max = std::max(bc_max, spd_node(bc, r).cwiseAbs().maxCoeff());
    if (bc_min_eig <= 0.0) throw std::invalid_argument("solve_bures: boundary data not SPD");
    const double floor = opts.spd_floor * bc_min_eig;

    BuresReport rep;

    // entrywise harmonic extension is SPD by the scalar maximum principle
    std::vector<Mat> a_nodes = harmonic_matrix_init(disc, bc, q);
    std::vector<Mat> c(disc.n_omega);
    for (int o = 0; o < disc.n_omega; ++o) c[o] = a_nodes[o] * a_nodes[o];

    FaceEnergy fe{disc, q};
    std::vector<Mat> grad(disc.n_omega, Mat::Zero(q, q));

    auto spd_of_c = [&](const std::vector<Mat>& cv) {
        SpdField f(disc.n_omega, q);
        for (int o = 0; o < disc.n_omega; ++o) set_node(f, o, sym_sqrt(cv[o]));
        return f;
    };

    // phase 1: preconditioned descent with Armijo on the face energy
    double energy = fe.value(c);
    rep.energy_trace.push_back(energy);
    double step = 1.0;
    for (int it = 0; it < opts.max_iters; ++it) {
        fe.gradient(c, grad);
        double gnorm2 = 0.0;
        std::vector<Mat> dir(disc.n_omega, Mat::Zero(q, q));
        for (int o : disc.interior) {
            // natural-gradient preconditioning: L_C maps the chart gradient
            // back through the metric; keeps scaling uniform near singularity
            dir[o] = -lyap_apply(c[o], grad[o]);
            gnorm2 += grad[o].squaredNorm();
        }
        rep.descent_iterations = it + 1;
        if (std::sqrt(gnorm2) <= opts.grad_tol * (1.0 + std::abs(energy))) break;

        bool accepted = false;
        step = std::min(step * 2.0, 1e6);
        for (int bt = 0; bt < 60 && !accepted; ++bt) {
            std::vector<Mat> trial = c;
            bool spd_ok = true;
            for (int o : disc.interior) {
                trial[o] = c[o] + step * dir[o];
                if (eig_of(trial[o]).eigenvalues().minCoeff() <= floor * floor) {
                    spd_ok = false;
                    break;
                }
            }
            if (spd_ok) {
                const double trial_energy = fe.value(trial);
                double decrease = 0.0;
                for (int o : disc.interior) decrease += (grad[o].cwiseProduct(dir[o])).sum();
                if (trial_energy <= energy + 1e-4 * step * decrease) {
                    c = std::move(trial);
                    energy = trial_energy;
                    rep.energy_trace.push_back(energy);
                    accepted = true;
                    break;
                }
            } else {
                rep.floor_hit = true;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }

    SpdField afield = spd_of_c(c);

    // phase 2: damped Newton (Levenberg) on the node-centered EL stencil so
    // the reported el_residual actually vanishes
    const int n_int = int(disc.interior.size());
    const int n_sym = q * (q + 1) / 2;
    const int n_unknown = n_int * n_sym;
    auto pack = [&](const SpdField& f, Eigen::VectorXd& x) {
        int k = 0;
        for (int o : disc.interior) {
            const Mat m = spd_node(f, o);
            for (int i = 0; i < q; ++i)
                for (int j = i; j < q; ++j) x[k++] = m(i, j);
        }
    };
    auto unpack = [&](const Eigen::VectorXd& x, SpdField& f) {
        int k = 0;
        for (int o : disc.interior) {
            Mat m(q, q);
            for (int i = 0; i < q; ++i)
                for (int j = i; j < q; ++j) {
                    m(i, j) = x[k];
                    m(j, i) = x[k];
                    ++k;
                }
            set_node(f, o, m);
        }
    };
    auto residual_vec = [&](SpdField& f, Eigen::VectorXd& r) {
        const BField bf = b_fields(disc, f);
        int k = 0;
        for (size_t t = 0; t < disc.interior.size(); ++t) {
            const int o = disc.interior[t];
            auto a = disc.omega_multi(o);
            Mat rm = Mat::Zero(q, q);
            for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
                const double h = disc.omega_axes[alpha].h;
                auto ap = a, am = a;
                ap[alpha] += 1;
                am[alpha] -= 1;
                const int op = disc.omega_index(ap), om = disc.omega_index(am);
                Mat bp(q, q), bm(q, q), b0(q, q);
                for (int i = 0; i < q; ++i)
                    for (int j = 0; j < q; ++j) {
                        bp(i, j) = bf.mat(op, alpha)[i * q + j];
                        bm(i, j) = bf.mat(om, alpha)[i * q + j];
                        b0(i, j) = bf.mat(o, alpha)[i * q + j];
                    }
                rm += (bp - bm) / (2.0 * h) + b0 * b0;
            }
            for (int i = 0; i < q; ++i)
                for (int j = i; j < q; ++j) r[k++] = (i == j) ? rm(i, j) : std::sqrt(2.0) * rm(i, j);
        }
    };

    if (n_unknown > 0) {
        Eigen::VectorXd x(n_unknown), r(n_unknown), r_try(n_unknown);
        pack(afield, x);
        SpdField work = afield;
        residual_vec(work, r);
        double nu = 1e-6;
        for (int nit = 0; nit < opts.newton_max_iters; ++nit) {
            rep.newton_iterations = nit;
            if (r.norm() <= opts.el_tol * std::sqrt(double(n_unknown))) break;
            // finite-difference Jacobian
            Eigen::MatrixXd J(n_unknown, n_unknown);
            const double fd = 1e-6 * (1.0 + bc_max);
            for (int col = 0; col < n_unknown; ++col) {
                Eigen::VectorXd xp = x;
                xp[col] += fd;
                unpack(xp, work);
                residual_vec(work, r_try);
                J.col(col) = (r_try - r) / fd;
            }
            bool progressed = false;
            for (int attempt = 0; attempt < 20; ++attempt) {
                Eigen::MatrixXd H = J.transpose() * J;
                H.diagonal().array() += nu;
                Eigen::VectorXd dx = H.ldlt().solve(-J.transpose() * r);
                Eigen::VectorXd xt = x + dx;
                unpack(xt, work);
                if (min_eigenvalue(work) <= floor) {
                    rep.floor_hit = true;
                    nu *= 10.0;
                    continue;
                }
                residual_vec(work, r_try);
                if (r_try.norm() < r.norm()) {
                    x = xt;
                    r = r_try;
                    nu = std::max(nu * 0.3, 1e-12);
                    progressed = true;
                    break;
                }
                nu *= 10.0;
            }
            if (!progressed) break;
        }
        unpack(x, afield);
    }

    rep.energy = riemannian_energy(disc, afield);
    rep.el_residual = el_residual(disc, afield).max_norm;
    rep.converged = rep.el_residual <= opts.el_tol * 10.0;
    return {std::move(afield), rep};
}

DualPotential dual_from_bures(const Discretization& disc, const BField& bfield) {
    const int q = bfield.q;
    DualPotential phi(disc.spec.p, disc.n_omega, disc.n_d);
    for (int alpha = 0; alpha < disc.spec.p; ++alpha) {
        for (int o = 0; o < disc.n_omega; ++o) {
            const double* b = bfield.mat(o, alpha);
            for (int d = 0; d < disc.n_d; ++d) {
                const auto x = disc.d_coord(d);
                double s = b[0] * x[0] * x[0];
                if (q == 2) s += (b[1] + b[2]) * x[0] * x[1] + b[3] * x[1] * x[1];
                phi.at(alpha, o, d) = 0.5 * s;
            }
        }
    }
    return phi;
}

PrincipleReport quadratic_max_principle(const Discretization& disc, const SpdField& afield,
                                        const Mat& c, double tol) {
    auto es = eig_of(c);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw std::invalid_argument("quadratic_max_principle: C not PSD");
    std::vector<double> f(disc.n_omega);
    for (int o = 0; o < disc.n_omega; ++o) {
        const Mat a = spd_node(afield, o);
        f[o] = (a * a * c).trace();
    }
    const auto sub = subharmonicity_check(disc, f, tol);
    PrincipleReport rep;
    rep.min_interior_laplacian = sub.min_interior_laplacian;
    rep.max_gap = sub.max_gap;
    rep.pass = sub.pass;
    return rep;
}

PrincipleReport det_min_principle(const Discretization& disc, const SpdField& afield, double tol) {
    PrincipleReport rep;
    double min_int = std::numeric_limits<double>::infinity();
    double min_bdy = std::numeric_limits<double>::infinity();
    for (int o = 0; o < disc.n_omega; ++o) {
        const double det_cov = std::pow(spd_node(afield, o).determinant(), 2);
        if (disc.is_boundary[o])
            min_bdy = std::min(min_bdy, det_cov);
        else
            min_int = std::min(min_int, det_cov);
    }
    rep.min_interior = min_int;
    rep.min_boundary = min_bdy;
    rep.pass = min_int >= min_bdy - tol;
    return rep;
}

}  // namespace wharmonic
