#pragma once

#include "dsm/common.hpp"
#include "dsm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace dsm {

/// Ground metric between embedded states (Euclidean distance on coordinates).
struct CostMatrix {
    Mat cost;  // n_states x n_states; nonnegative, zero diagonal, symmetric
};

inline CostMatrix cost_from_embedding(const Mat& embedding) {
    const int n = static_cast<int>(embedding.rows());
    Mat cost = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            const double d = (embedding.row(i) - embedding.row(j)).norm();
            cost(i, j) = d;
            cost(j, i) = d;
        }
    }
    return CostMatrix{std::move(cost)};
}

struct TransportResult {
    double distance = 0.0;
    std::optional<Mat> plan;  // coupling matrix when requested
};

namespace detail {

struct PlanEntry {
    int i, j;
    double mass;
};

/// Exact balanced transport by successive shortest augmenting paths with
/// node potentials (Dijkstra on the bipartite residual graph). Costs must be
/// nonnegative. Runs in roughly O(V^2) per augmentation; fine at desk scale.
inline double solve_transport(Vec supply, Vec demand, const Mat& cost,
                              std::vector<PlanEntry>* plan = nullptr) {
    const int na = static_cast<int>(supply.size());
    const int nb = static_cast<int>(demand.size());
    if (na == 0 || nb == 0) throw DomainError("solve_transport: empty marginal");
    const double total_s = supply.sum(), total_d = demand.sum();
    if (std::abs(total_s - total_d) > 1e-9 * std::max(1.0, std::max(total_s, total_d)))
        throw DomainError("solve_transport: unbalanced marginals");
    if (total_d > 0.0) demand *= total_s / total_d;

    const int nv = na + nb;
    const double inf = std::numeric_limits<double>::infinity();
    Mat flow = Mat::Zero(na, nb);
    std::vector<double> pot(static_cast<std::size_t>(nv), 0.0);
    std::vector<double> dist(static_cast<std::size_t>(nv));
    std::vector<int> parent(static_cast<std::size_t>(nv));
    std::vector<char> done(static_cast<std::size_t>(nv));

    const double mass_floor = 1e-15 * std::max(1.0, total_s);
    const long max_rounds = 50L * nv + 1000;
    long rounds = 0;

    while (true) {
        const double remaining = std::min(supply.sum(), demand.sum());
        if (remaining <= mass_floor) break;
        if (++rounds > max_rounds)
            throw NumericError("solve_transport: augmentation limit exceeded");
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(parent.begin(), parent.end(), -1);
        std::fill(done.begin(), done.end(), 0);
        for (int i = 0; i < na; ++i)
            if (supply[i] > 0.0) dist[static_cast<std::size_t>(i)] = 0.0;

        int target = -1;
        for (int iter = 0; iter < nv; ++iter) {
            int u = -1;
            double best = inf;
            for (int v = 0; v < nv; ++v)
                if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < best) {
                    best = dist[static_cast<std::size_t>(v)];
                    u = v;
                }
            if (u < 0) break;
            done[static_cast<std::size_t>(u)] = 1;
            if (u >= na && demand[u - na] > 0.0) {
                target = u - na;
                break;
            }
            if (u < na) {
                for (int j = 0; j < nb; ++j) {
                    const int v = na + j;
                    if (done[static_cast<std::size_t>(v)]) continue;
                    const double rc = std::max(0.0, cost(u, j) + pot[static_cast<std::size_t>(u)] -
                                                        pot[static_cast<std::size_t>(v)]);
                    if (dist[static_cast<std::size_t>(u)] + rc < dist[static_cast<std::size_t>(v)]) {
                        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + rc;
                        parent[static_cast<std::size_t>(v)] = u;
                    }
                }
            } else {
                const int j = u - na;
                for (int i = 0; i < na; ++i) {
                    if (done[static_cast<std::size_t>(i)] || flow(i, j) <= 0.0) continue;
                    const double rc = std::max(0.0, -cost(i, j) + pot[static_cast<std::size_t>(u)] -
                                                        pot[static_cast<std::size_t>(i)]);
                    if (dist[static_cast<std::size_t>(u)] + rc < dist[static_cast<std::size_t>(i)]) {
                        dist[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(u)] + rc;
                        parent[static_cast<std::size_t>(i)] = u;
                    }
                }
            }
        }
        if (target < 0)
            throw NumericError("solve_transport: no augmenting path (infeasible instance)");

        const double d_target = dist[static_cast<std::size_t>(na + target)];
        for (int v = 0; v < nv; ++v)
            pot[static_cast<std::size_t>(v)] +=
                std::min(dist[static_cast<std::size_t>(v)], d_target);

        // Bottleneck along the augmenting path, then push.
        double delta = demand[target];
        int v = na + target;
        while (parent[static_cast<std::size_t>(v)] >= 0) {
            const int u = parent[static_cast<std::size_t>(v)];
            if (v >= na) { /* forward arc u -> v, unlimited capacity */
            } else {
                delta = std::min(delta, flow(v, u - na));
            }
            v = u;
        }
        delta = std::min(delta, supply[v]);
        const int source = v;

        v = na + target;
        while (parent[static_cast<std::size_t>(v)] >= 0) {
            const int u = parent[static_cast<std::size_t>(v)];
            if (v >= na)
                flow(u, v - na) += delta;
            else
                flow(v, u - na) -= delta;
            v = u;
        }
        supply[source] -= delta;
        demand[target] -= delta;
    }

    double total_cost = 0.0;
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j)
            if (flow(i, j) > 0.0) {
                total_cost += flow(i, j) * cost(i, j);
                if (plan) plan->push_back({i, j, flow(i, j)});
            }
    return total_cost;
}

/// Exact minimum-cost perfect matching (Hungarian algorithm, O(n^3)).
/// Returns the total cost of the optimal assignment.
inline double hungarian(const Mat& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n || n == 0) throw DomainError("hungarian: square matrix required");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<int> match(static_cast<std::size_t>(n + 1), 0);  // column -> row (1-based)
    for (int i = 1; i <= n; ++i) {
        std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
        std::vector<int> way(static_cast<std::size_t>(n + 1), 0);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        match[0] = i;
        int j0 = 0;
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
    return total;
}

inline std::string row_bytes(const Mat& rows, Eigen::Index r) {
    return std::string(reinterpret_cast<const char*>(rows.row(r).eval().data()),
                       static_cast<std::size_t>(rows.cols()) * sizeof(double));
}

/// Groups exactly equal rows, accumulating their weights.
inline void unique_rows(const Mat& rows, const Vec& weights, Mat* uniq, Vec* uniq_weights) {
    std::unordered_map<std::string, int> seen;
    std::vector<Eigen::Index> reps;
    std::vector<double> w;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        auto [it, inserted] = seen.emplace(row_bytes(rows, r), static_cast<int>(reps.size()));
        if (inserted) {
            reps.push_back(r);
            w.push_back(weights[r]);
        } else {
            w[static_cast<std::size_t>(it->second)] += weights[r];
        }
    }
    uniq->resize(static_cast<Eigen::Index>(reps.size()), rows.cols());
    uniq_weights->resize(static_cast<Eigen::Index>(reps.size()));
    for (std::size_t k = 0; k < reps.size(); ++k) {
        uniq->row(static_cast<Eigen::Index>(k)) = rows.row(reps[k]);
        (*uniq_weights)[static_cast<Eigen::Index>(k)] = w[k];
    }
}

}  // namespace detail

/// Exact 1-Wasserstein distance between two distributions on the embedded
/// state set. Mass shared by p and q stays in place (the ground cost is a
/// metric), so only the difference (p - q) enters the solver.
inline TransportResult wasserstein_inner(const Vec& p, const Vec& q, const CostMatrix& cost,
                                         bool want_plan = false) {
    require_simplex(p, "wasserstein_inner: p");
    require_simplex(q, "wasserstein_inner: q");
    const int n = static_cast<int>(p.size());
    if (cost.cost.rows() != n) throw DomainError("wasserstein_inner: cost matrix size mismatch");

    const Vec diff = p - q;
    std::vector<int> src, dst;
    for (int i = 0; i < n; ++i) {
        if (diff[i] > 1e-16) src.push_back(i);
        else if (diff[i] < -1e-16) dst.push_back(i);
    }
    TransportResult result;
    if (want_plan) {
        result.plan = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) (*result.plan)(i, i) = std::min(p[i], q[i]);
    }
    if (src.empty() || dst.empty()) return result;

    Vec supply(static_cast<Eigen::Index>(src.size())), demand(static_cast<Eigen::Index>(dst.size()));
    for (std::size_t k = 0; k < src.size(); ++k) supply[static_cast<Eigen::Index>(k)] = diff[src[k]];
    for (std::size_t k = 0; k < dst.size(); ++k) demand[static_cast<Eigen::Index>(k)] = -diff[dst[k]];
    const double ts = supply.sum(), td = demand.sum();
    if (td > 0.0) demand *= ts / td;

    Mat sub(static_cast<Eigen::Index>(src.size()), static_cast<Eigen::Index>(dst.size()));
    for (std::size_t a = 0; a < src.size(); ++a)
        for (std::size_t b = 0; b < dst.size(); ++b)
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = cost.cost(src[a], dst[b]);

    std::vector<detail::PlanEntry> entries;
    result.distance = detail::solve_transport(supply, demand, sub, want_plan ? &entries : nullptr);
    if (want_plan)
        for (const auto& e : entries)
            (*result.plan)(src[static_cast<std::size_t>(e.i)], dst[static_cast<std::size_t>(e.j)]) += e.mass;
    return result;
}

/// Wasserstein distance between two weighted collections of state
/// distributions, with the exact pairwise inner distances as ground cost.
/// Atoms equal across the two sides cancel before the solve.
inline double wasserstein_outer_weighted(const Mat& atoms_a, const Vec& weights_a,
                                         const Mat& atoms_b, const Vec& weights_b,
                                         const CostMatrix& cost) {
    if (atoms_a.rows() == 0 || atoms_b.rows() == 0)
        throw DomainError("wasserstein_outer: empty model");
    Mat ua, ub;
    Vec wa, wb;
    detail::unique_rows(atoms_a, weights_a, &ua, &wa);
    detail::unique_rows(atoms_b, weights_b, &ub, &wb);

    std::unordered_map<std::string, Eigen::Index> index_b;
    for (Eigen::Index r = 0; r < ub.rows(); ++r) index_b.emplace(detail::row_bytes(ub, r), r);
    for (Eigen::Index r = 0; r < ua.rows(); ++r) {
        auto it = index_b.find(detail::row_bytes(ua, r));
        if (it != index_b.end()) {
            const double c = std::min(wa[r], wb[it->second]);
            wa[r] -= c;
            wb[it->second] -= c;
        }
    }
    std::vector<Eigen::Index> ia, ib;
    for (Eigen::Index r = 0; r < ua.rows(); ++r)
        if (wa[r] > 1e-15) ia.push_back(r);
    for (Eigen::Index r = 0; r < ub.rows(); ++r)
        if (wb[r] > 1e-15) ib.push_back(r);
    if (ia.empty() || ib.empty()) return 0.0;

    Mat inner(static_cast<Eigen::Index>(ia.size()), static_cast<Eigen::Index>(ib.size()));
    for (std::size_t a = 0; a < ia.size(); ++a)
        for (std::size_t b = 0; b < ib.size(); ++b)
            inner(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                wasserstein_inner(ua.row(ia[a]), ub.row(ib[b]), cost).distance;
    Vec sup(static_cast<Eigen::Index>(ia.size())), dem(static_cast<Eigen::Index>(ib.size()));
    for (std::size_t a = 0; a < ia.size(); ++a) sup[static_cast<Eigen::Index>(a)] = wa[ia[a]];
    for (std::size_t b = 0; b < ib.size(); ++b) dem[static_cast<Eigen::Index>(b)] = wb[ib[b]];
    return detail::solve_transport(sup, dem, inner);
}

/// Wasserstein distance between two equally weighted m-atom models. With all
/// atoms distinct this is the balanced assignment problem; duplicated atoms
/// fall back to the weighted transport path, which is equivalent.
inline double wasserstein_outer(const Mat& model_a, const Mat& model_b, const CostMatrix& cost) {
    if (model_a.rows() == 0 || model_b.rows() == 0)
        throw DomainError("wasserstein_outer: empty model");
    if (model_a.rows() != model_b.rows())
        throw DomainError("wasserstein_outer: atom counts differ");
    const Eigen::Index m = model_a.rows();

    // Detect duplicates; the assignment fast path needs all-distinct atoms.
    std::unordered_map<std::string, int> seen_a, seen_b;
    bool distinct = true;
    for (Eigen::Index r = 0; r < m && distinct; ++r) {
        distinct = seen_a.emplace(detail::row_bytes(model_a, r), 1).second &&
                   seen_b.emplace(detail::row_bytes(model_b, r), 1).second;
    }
    const Vec w = Vec::Constant(m, 1.0 / static_cast<double>(m));
    if (!distinct) return wasserstein_outer_weighted(model_a, w, model_b, w, cost);
    for (Eigen::Index r = 0; r < m; ++r)
        if (seen_b.count(detail::row_bytes(model_a, r)))
            return wasserstein_outer_weighted(model_a, w, model_b, w, cost);

    Mat inner(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            inner(i, j) = wasserstein_inner(model_a.row(i), model_b.row(j), cost).distance;
    return detail::hungarian(inner) / static_cast<double>(m);
}

struct WbarResult {
    double value = 0.0;
    int argmax_state = -1;
};

/// Supremal outer Wasserstein metric over states (a max on finite state sets).
inline WbarResult wbar_atoms(const std::vector<Mat>& atoms_a, const std::vector<Mat>& atoms_b,
                             const CostMatrix& cost, int threads = 1) {
    if (atoms_a.size() != atoms_b.size() || atoms_a.empty())
        throw DomainError("wbar: state counts differ or empty");
    const int n = static_cast<int>(atoms_a.size());
    std::vector<double> per_state(static_cast<std::size_t>(n), 0.0);
    parallel_for(n, threads, [&](int x) {
        per_state[static_cast<std::size_t>(x)] =
            wasserstein_outer(atoms_a[static_cast<std::size_t>(x)],
                              atoms_b[static_cast<std::size_t>(x)], cost);
    });
    WbarResult out;
    for (int x = 0; x < n; ++x) {
        if (per_state[static_cast<std::size_t>(x)] > out.value) {
            out.value = per_state[static_cast<std::size_t>(x)];
            out.argmax_state = x;
        }
    }
    if (out.argmax_state < 0) out.argmax_state = 0;
    return out;
}

}  // namespace dsm
