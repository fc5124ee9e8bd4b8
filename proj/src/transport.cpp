#include "wharmonic/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wharmonic {

double DiscreteCoupling::max_marginal_defect(const std::vector<double>& a,
                                             const std::vector<double>& b) const {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(row_marginal[i] - a[i]));
    for (size_t j = 0; j < b.size(); ++j) m = std::max(m, std::abs(col_marginal[j] - b[j]));
    return m;
}

namespace {

// Primal network simplex on the dense bipartite transportation graph with an
// artificial root. Tree kept as parent/pred arrays; potentials recomputed by
// DFS after each pivot (fine at desk scale). Entering arc by block pricing,
// most negative reduced cost, lowest arc id on ties.
class TransportSimplex {
  public:
    TransportSimplex(const std::vector<double>& a, const std::vector<double>& b,
                     const std::function<double(int, int)>& cost)
        : n1_(int(a.size())), n2_(int(b.size())), cost_(cost) {
        n_nodes_ = n1_ + n2_ + 1;
        root_ = n1_ + n2_;
        n_real_ = size_t(n1_) * n2_;

        max_cost_ = 0.0;
        for (int i = 0; i < n1_; ++i)
            for (int j = 0; j < n2_; ++j) max_cost_ = std::max(max_cost_, std::abs(cost_(i, j)));
        big_ = (max_cost_ + 1.0) * n_nodes_;

        flow_.assign(n_real_ + n_nodes_ - 1, 0.0);
        in_tree_.assign(n_real_ + n_nodes_ - 1, 0);
        parent_.assign(n_nodes_, -1);
        pred_.assign(n_nodes_, -1);
        pi_.assign(n_nodes_, 0.0);
        children_.assign(n_nodes_, {});

        // artificial arcs: node k <-> root, supply side points to root
        for (int k = 0; k < n_nodes_ - 1; ++k) {
            size_t aid = n_real_ + k;
            in_tree_[aid] = 1;
            flow_[aid] = (k < n1_) ? a[k] : b[k - n1_];
            parent_[k] = root_;
            pred_[k] = int(aid);
            children_[root_].push_back(k);
        }
        recompute_potentials();
    }

    int arc_src(size_t aid) const {
        if (aid < n_real_) return int(aid / n2_);
        int k = int(aid - n_real_);
        return (k < n1_) ? k : root_;  // source side: node -> root, sink side: root -> node
    }
    int arc_tgt(size_t aid) const {
        if (aid < n_real_) return n1_ + int(aid % n2_);
        int k = int(aid - n_real_);
        return (k < n1_) ? root_ : k;
    }
    double arc_cost(size_t aid) const {
        if (aid < n_real_) return cost_(int(aid / n2_), int(aid % n2_));
        return big_;
    }

    void run() {
        const size_t n_arcs = n_real_ + n_nodes_ - 1;
        const size_t block = std::max<size_t>(64, size_t(std::sqrt(double(n_arcs))));
        const double eps = 1e-12 * (max_cost_ + 1.0);
        size_t cursor = 0;
        long long pivots = 0;
        const long long pivot_cap = 4096 + 64LL * (long long)(n1_ + n2_) * (n1_ + n2_);
        while (true) {
            // block pricing over real arcs only (artificials never re-enter)
            size_t best = SIZE_MAX;
            double best_rc = -eps;
            size_t scanned = 0;
            while (scanned < n_real_) {
                size_t end = std::min(n_real_, cursor + block);
                for (size_t aid = cursor; aid < end; ++aid) {
                    if (in_tree_[aid]) continue;
                    const double rc = arc_cost(aid) + pi_[arc_src(aid)] - pi_[arc_tgt(aid)];
                    if (rc < best_rc) {
                        best_rc = rc;
                        best = aid;
                    }
                }
                scanned += end - cursor;
                cursor = (end == n_real_) ? 0 : end;
                if (best != SIZE_MAX) break;
            }
            if (best == SIZE_MAX) break;
            pivot(best);
            if (++pivots > pivot_cap)
                throw std::runtime_error("transport_lp: pivot cap exceeded");
        }
    }

    double objective() const {
        double s = 0.0;
        for (size_t aid = 0; aid < n_real_; ++aid)
            if (flow_[aid] != 0.0) s += flow_[aid] * arc_cost(aid);
        return s;
    }

    double artificial_flow() const {
        double s = 0.0;
        for (size_t aid = n_real_; aid < flow_.size(); ++aid) s += std::abs(flow_[aid]);
        return s;
    }

    void extract(LpSolution& out, double floor) const {
        for (size_t aid = 0; aid < n_real_; ++aid) {
            if (flow_[aid] > floor)
                out.coupling.entries.push_back({int(aid / n2_), int(aid % n2_), flow_[aid]});
        }
        out.potential_row.assign(pi_.begin(), pi_.begin() + n1_);
        out.potential_col.assign(pi_.begin() + n1_, pi_.begin() + n1_ + n2_);
    }

  private:
    void recompute_potentials() {
        pi_[root_] = 0.0;
        // DFS from root over the children lists
        std::vector<int> stack{root_};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : children_[u]) {
                const size_t aid = size_t(pred_[v]);
                // tree arc has zero reduced cost: c + pi[src] - pi[tgt] = 0
                if (arc_src(aid) == v)
                    pi_[v] = pi_[arc_tgt(aid)] - arc_cost(aid);
                else
                    pi_[v] = arc_cost(aid) + pi_[arc_src(aid)];
                stack.push_back(v);
            }
        }
    }

    int depth(int u) const {
        int d = 0;
        while (u != root_) {
            u = parent_[u];
            ++d;
        }
        return d;
    }

    void pivot(size_t entering) {
        const int u = arc_src(entering);
        const int v = arc_tgt(entering);

        // find apex
        int x = u, y = v;
        int dx = depth(x), dy = depth(y);
        while (dx > dy) {
            x = parent_[x];
            --dx;
        }
        while (dy > dx) {
            y = parent_[y];
            --dy;
        }
        while (x != y) {
            x = parent_[x];
            y = parent_[y];
        }
        const int apex = x;

        // bottleneck over backward arcs; cycle direction pushes u -> v.
        double delta = std::numeric_limits<double>::infinity();
        int leave_node = -1;   // node whose pred arc leaves the tree
        bool leave_on_u_side = false;
        for (int w = u; w != apex; w = parent_[w]) {
            const size_t aid = size_t(pred_[w]);
            const bool backward = (arc_src(aid) == w);  // cycle goes parent -> w here
            if (backward && flow_[aid] < delta) {
                delta = flow_[aid];
                leave_node = w;
                leave_on_u_side = true;
            }
        }
        for (int w = v; w != apex; w = parent_[w]) {
            const size_t aid = size_t(pred_[w]);
            const bool backward = (arc_tgt(aid) == w);  // cycle goes w -> parent here
            if (backward && flow_[aid] < delta) {
                delta = flow_[aid];
                leave_node = w;
                leave_on_u_side = false;
            }
        }
        if (leave_node < 0)
            throw std::runtime_error("transport_lp: unbounded pivot cycle");

        // augment
        flow_[entering] += delta;
        for (int w = u; w != apex; w = parent_[w]) {
            const size_t aid = size_t(pred_[w]);
            flow_[aid] += (arc_src(aid) == w) ? -delta : delta;
        }
        for (int w = v; w != apex; w = parent_[w]) {
            const size_t aid = size_t(pred_[w]);
            flow_[aid] += (arc_tgt(aid) == w) ? -delta : delta;
        }

        // swap entering/leaving in the tree: re-root the detached subtree at
        // the entering endpoint on that side.
        const size_t leaving = size_t(pred_[leave_node]);
        in_tree_[leaving] = 0;
        in_tree_[entering] = 1;
        detach(leave_node);

        int new_child = leave_on_u_side ? u : v;
        int new_parent = leave_on_u_side ? v : u;
        // reverse parent pointers on the path new_child .. leave_node
        int prev = new_parent;
        size_t carry = entering;
        int cur = new_child;
        while (true) {
            const int nxt = parent_[cur];
            const size_t nxt_arc = (cur == leave_node) ? SIZE_MAX : size_t(pred_[cur]);
            attach(cur, prev, carry);
            if (cur == leave_node) break;
            carry = nxt_arc;
            prev = cur;
            cur = nxt;
        }
        recompute_potentials();
    }

    void detach(int child) {
        detach_child(parent_[child], child);
        parent_[child] = -1;
        pred_[child] = -1;
    }
    void detach_child(int parent, int child) {
        auto& c = children_[parent];
        c.erase(std::find(c.begin(), c.end(), child));
    }
    void attach(int node, int parent, size_t arc) {
        if (parent_[node] >= 0) detach_child(parent_[node], node);
        parent_[node] = parent;
        pred_[node] = int(arc);
        children_[parent].push_back(node);
    }

    int n1_, n2_, n_nodes_, root_;
    size_t n_real_;
    const std::function<double(int, int)>& cost_;
    double max_cost_ = 0.0, big_ = 0.0;
    std::vector<double> flow_;
    std::vector<char> in_tree_;
    std::vector<int> parent_, pred_;
    std::vector<double> pi_;
    std::vector<std::vector<int>> children_;
};

}  // namespace

LpSolution transport_lp(const std::vector<double>& a, const std::vector<double>& b,
                        const std::function<double(int, int)>& cost) {
    if (a.empty() || b.empty()) throw std::invalid_argument("transport_lp: empty marginal");
    double sa = std::accumulate(a.begin(), a.end(), 0.0);
    double sb = std::accumulate(b.begin(), b.end(), 0.0);
    for (double x : a)
        if (x < 0.0) throw std::invalid_argument("transport_lp: negative supply");
    for (double x : b)
        if (x < 0.0) throw std::invalid_argument("transport_lp: negative demand");
    if (std::abs(sa - sb) > 1e-10 * std::max(1.0, std::max(sa, sb)))
        throw std::invalid_argument("transport_lp: marginals have different total mass");

    // rebalance exactly (roundoff) so the root node nets to zero
    std::vector<double> b2 = b;
    const double scale = sa / sb;
    for (double& x : b2) x *= scale;

    TransportSimplex simplex(a, b2, cost);
    simplex.run();
    if (simplex.artificial_flow() > 1e-9 * std::max(1.0, sa))
        throw std::runtime_error("transport_lp: infeasible (artificial flow remains)");

    LpSolution sol;
    sol.cost = simplex.objective();
    simplex.extract(sol, 0.0);
    sol.coupling.row_marginal.assign(a.size(), 0.0);
    sol.coupling.col_marginal.assign(b.size(), 0.0);
    for (const auto& e : sol.coupling.entries) {
        sol.coupling.row_marginal[e.i] += e.mass;
        sol.coupling.col_marginal[e.j] += e.mass;
    }
    return sol;
}

W2LpResult w2_lp(const Discretization& disc, const std::vector<double>& mu,
                 const std::vector<double>& nu, int max_support) {
    if (int(mu.size()) != disc.n_d || int(nu.size()) != disc.n_d)
        throw std::invalid_argument("w2_lp: density size != D node count");
    W2LpResult res;
    std::vector<double> a, b;
    for (int d = 0; d < disc.n_d; ++d) {
        if (mu[d] > 0.0) {
            res.support_a.push_back(d);
            a.push_back(mu[d]);
        }
        if (nu[d] > 0.0) {
            res.support_b.push_back(d);
            b.push_back(nu[d]);
        }
    }
    if (int(res.support_a.size()) > max_support || int(res.support_b.size()) > max_support)
        throw std::invalid_argument("w2_lp: support too large for the exact LP");

    std::vector<std::array<double, 2>> ca(res.support_a.size()), cb(res.support_b.size());
    for (size_t i = 0; i < res.support_a.size(); ++i) ca[i] = disc.d_coord(res.support_a[i]);
    for (size_t j = 0; j < res.support_b.size(); ++j) cb[j] = disc.d_coord(res.support_b[j]);

    auto cost = [&](int i, int j) {
        const double dx = ca[i][0] - cb[j][0];
        const double dy = ca[i][1] - cb[j][1];
        return dx * dx + dy * dy;
    };
    LpSolution sol = transport_lp(a, b, cost);
    res.distance = std::sqrt(std::max(0.0, sol.cost));
    res.coupling = std::move(sol.coupling);
    return res;
}

// --- quantile machinery ------------------------------------------------------

std::vector<double> quantiles_of_density(const AxisGrid& axis, const std::vector<double>& mu, int m) {
    if (int(mu.size()) != axis.n) throw std::invalid_argument("quantiles_of_density: size mismatch");
    double total = std::accumulate(mu.begin(), mu.end(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("quantiles_of_density: zero mass");
    std::vector<double> out(m);
    int idx = 0;
    double cum = mu[0] / total;
    for (int k = 0; k < m; ++k) {
        const double t = (k + 0.5) / m;
        while (cum < t && idx + 1 < axis.n) {
            ++idx;
            cum += mu[idx] / total;
        }
        out[k] = axis.coord(idx);
    }
    return out;
}

std::vector<double> density_of_quantiles(const AxisGrid& axis, const std::vector<double>& levels) {
    std::vector<double> out(axis.n, 0.0);
    const double w = 1.0 / double(levels.size());
    for (double v : levels) {
        double s = (v - axis.lo) / axis.h;
        int i = int(std::floor(s));
        if (i < 0) {
            out[0] += w;
            continue;
        }
        if (i >= axis.n - 1) {
            out[axis.n - 1] += w;
            continue;
        }
        const double frac = s - i;
        out[i] += w * (1.0 - frac);
        out[i + 1] += w * frac;
    }
    return out;
}

QuantileField to_quantiles(const Discretization& disc, const MeasureField& mu, int m) {
    if (disc.spec.q != 1) throw std::invalid_argument("to_quantiles: q must be 1");
    QuantileField qf(mu.n_omega, m);
    std::vector<double> slice(disc.n_d);
    for (int o = 0; o < mu.n_omega; ++o) {
        for (int d = 0; d < disc.n_d; ++d) slice[d] = mu.at(o, d);
        auto qs = quantiles_of_density(disc.d_axes[0], slice, m);
        for (int k = 0; k < m; ++k) qf.at(o, k) = qs[k];
    }
    return qf;
}

MeasureField from_quantiles(const Discretization& disc, const QuantileField& qf) {
    if (disc.spec.q != 1) throw std::invalid_argument("from_quantiles: q must be 1");
    MeasureField mu(qf.n_omega, disc.n_d);
    std::vector<double> levels(qf.m);
    for (int o = 0; o < qf.n_omega; ++o) {
        for (int k = 0; k < qf.m; ++k) levels[k] = qf.at(o, k);
        auto dens = density_of_quantiles(disc.d_axes[0], levels);
        for (int d = 0; d < disc.n_d; ++d) mu.at(o, d) = dens[d];
    }
    return mu;
}

double w2_quantile(const AxisGrid& axis, const std::vector<double>& mu,
                   const std::vector<double>& nu, int m) {
    auto qm = quantiles_of_density(axis, mu, m);
    auto qn = quantiles_of_density(axis, nu, m);
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        const double d = qm[k] - qn[k];
        s += d * d;
    }
    return std::sqrt(s / m);
}

double w2_quantile_exact(const AxisGrid& axis, const std::vector<double>& mu,
                         const std::vector<double>& nu) {
    const double ta = std::accumulate(mu.begin(), mu.end(), 0.0);
    const double tb = std::accumulate(nu.begin(), nu.end(), 0.0);
    if (ta <= 0.0 || tb <= 0.0) throw std::invalid_argument("w2_quantile_exact: zero mass");

    struct Atom {
        double x, cum;
    };
    auto atoms = [&axis](const std::vector<double>& m, double total) {
        std::vector<Atom> out;
        double c = 0.0;
        for (int i = 0; i < axis.n; ++i) {
            if (m[i] <= 0.0) continue;
            c += m[i] / total;
            out.push_back({axis.coord(i), c});
        }
        out.back().cum = 1.0;
        return out;
    };
    const auto A = atoms(mu, ta);
    const auto B = atoms(nu, tb);

    double t = 0.0, acc = 0.0;
    size_t ia = 0, ib = 0;
    while (ia < A.size() && ib < B.size()) {
        const double next = std::min(A[ia].cum, B[ib].cum);
        const double d = A[ia].x - B[ib].x;
        acc += (next - t) * d * d;
        t = next;
        if (A[ia].cum <= next) ++ia;
        if (ib < B.size() && B[ib].cum <= next) ++ib;
    }
    return std::sqrt(std::max(0.0, acc));
}

std::vector<double> barycenter_1d(const AxisGrid& axis,
                                  const std::vector<std::vector<double>>& densities,
                                  const std::vector<double>& weights, int m) {
    if (densities.empty()) throw std::invalid_argument("barycenter_1d: empty input");
    if (densities.size() != weights.size())
        throw std::invalid_argument("barycenter_1d: weights size mismatch");
    double ws = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("barycenter_1d: negative weight");
        ws += w;
    }
    if (std::abs(ws - 1.0) > 1e-9) throw std::invalid_argument("barycenter_1d: weights must sum to 1");

    std::vector<double> avg(m, 0.0);
    for (size_t k = 0; k < densities.size(); ++k) {
        auto qs = quantiles_of_density(axis, densities[k], m);
        for (int l = 0; l < m; ++l) avg[l] += weights[k] * qs[l];
    }
    return density_of_quantiles(axis, avg);
}

}  // namespace wharmonic
