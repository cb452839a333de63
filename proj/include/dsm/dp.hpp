#pragma once

#include "dsm/common.hpp"
#include "dsm/kernels.hpp"
#include "dsm/mdp.hpp"
#include "dsm/ot.hpp"
#include "dsm/parallel.hpp"
#include "dsm/rng.hpp"
#include "dsm/sr.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace dsm {

/// Equally weighted particle model of the distributional successor measure:
/// for every state x, m model atoms, each a distribution over states
/// (row i of atoms[x]).
struct DeltaModel {
    std::vector<Mat> atoms;  // atoms[x] has shape m x n_states
    double gamma = 0.0;

    int n_states() const { return static_cast<int>(atoms.size()); }
    int m() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().rows()); }

    void validate() const {
        if (atoms.empty()) throw DomainError("DeltaModel: no states");
        const Eigen::Index m_atoms = atoms.front().rows();
        for (const Mat& a : atoms) {
            if (a.rows() != m_atoms) throw DomainError("DeltaModel: ragged atom counts");
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                if (a.row(i).minCoeff() < -1e-10 || std::abs(a.row(i).sum() - 1.0) > 1e-10)
                    throw DomainError("DeltaModel: atom is not a probability vector");
            }
        }
    }
};

/// The exact image of a model under the Bellman operator at one state:
/// a finitely supported distribution over state distributions.
struct WeightedMixture {
    Mat atoms;    // k x n_states
    Vec weights;  // k, sums to 1
};

/// Atoms initialized to the point mass at their own state (the gamma -> 0
/// fixed point), replicated m times.
inline DeltaModel init_delta_model(int n_states, int m, double gamma) {
    if (n_states < 1 || m < 1) throw DomainError("init_delta_model: bad shape");
    DeltaModel model;
    model.gamma = gamma;
    model.atoms.reserve(static_cast<std::size_t>(n_states));
    for (int x = 0; x < n_states; ++x) {
        Mat a = Mat::Zero(m, n_states);
        a.col(x).setOnes();
        model.atoms.push_back(std::move(a));
    }
    return model;
}

/// b_{x,gamma}: mu -> (1 - gamma) delta_x + gamma mu.
inline Vec pushforward(const Vec& theta, int x, double gamma) {
    Vec out = gamma * theta;
    out[x] += 1.0 - gamma;
    return out;
}

/// Applies the distributional Bellman operator exactly: the image at x is the
/// mixture of pushforwards of successor atoms, weighted p(x'|x)/m. Exactly
/// equal atoms are merged.
inline std::vector<WeightedMixture> apply_operator(const DeltaModel& model,
                                                   const DiscountedMdp& dm) {
    const int n = dm.n_states();
    if (model.n_states() != n) throw DomainError("apply_operator: state count mismatch");
    const int m = model.m();
    std::vector<WeightedMixture> out(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        std::vector<int> succ;
        for (int y = 0; y < n; ++y)
            if (dm.p_pi(x, y) > 0.0) succ.push_back(y);
        Mat rows(static_cast<Eigen::Index>(succ.size()) * m, n);
        Vec w(static_cast<Eigen::Index>(succ.size()) * m);
        Eigen::Index k = 0;
        for (int y : succ) {
            const double py = dm.p_pi(x, y);
            for (int i = 0; i < m; ++i, ++k) {
                rows.row(k) = pushforward(model.atoms[static_cast<std::size_t>(y)].row(i),
                                          x, model.gamma);
                w[k] = py / static_cast<double>(m);
            }
        }
        WeightedMixture mix;
        detail::unique_rows(rows, w, &mix.atoms, &mix.weights);
        out[static_cast<std::size_t>(x)] = std::move(mix);
    }
    return out;
}

enum class ProjectionMode { herding, resample };

namespace detail {

/// Model-kernel gram over mixture support atoms plus its weighted column
/// sums; everything herding needs to score selections.
struct HerdingObjective {
    Mat g;  // u x u model-kernel values
    Vec z;  // g * weights
};

inline HerdingObjective herding_objective(const WeightedMixture& mix, const GramCache& gram,
                                          const ModelKernelSpec& mks) {
    const double sigma = resolve_sigma(mix.atoms, mix.atoms, gram, mks);
    const Mat q = pairwise_mmd2(mix.atoms, mix.atoms, gram);
    HerdingObjective obj;
    obj.g.resize(q.rows(), q.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index j = 0; j < q.cols(); ++j)
            obj.g(i, j) = model_kernel_from_mmd2(q(i, j), sigma);
    obj.z = obj.g * mix.weights;
    return obj;
}

/// Selection score, up to selection-independent terms:
/// F(S) = sum_{a,b in S} g(s_a, s_b) - 2 m sum_{a in S} z(s_a);
/// m^2 * MMD^2(selection, mixture) = F(S) + const.
inline double selection_score(const std::vector<int>& sel, const HerdingObjective& obj) {
    double f = 0.0;
    for (int a : sel) {
        for (int b : sel) f += obj.g(a, b);
        f -= 2.0 * static_cast<double>(sel.size()) * obj.z[a];
    }
    return f;
}

/// Greedy herding: each step picks the support atom minimizing the MMD of
/// the grown selection against the mixture; ties break to the lowest index.
inline std::vector<int> herd_greedy(const HerdingObjective& obj, int m) {
    const Eigen::Index u = obj.g.rows();
    std::vector<int> sel;
    sel.reserve(static_cast<std::size_t>(m));
    Vec sel_sum = Vec::Zero(u);  // sum over selected atoms of g(., c)
    for (int t = 0; t < m; ++t) {
        int best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < u; ++c) {
            const double score = 2.0 * sel_sum[c] + obj.g(c, c) - 2.0 * (t + 1) * obj.z[c];
            if (score < best_score) {
                best_score = score;
                best = static_cast<int>(c);
            }
        }
        sel.push_back(best);
        sel_sum += obj.g.col(best);
    }
    return sel;
}

/// Swap delta for replacing the atom in `slot` by candidate c.
inline double swap_delta(const std::vector<int>& sel, const Vec& colsum,
                         const HerdingObjective& obj, int slot, int c) {
    const int s = sel[static_cast<std::size_t>(slot)];
    const double m = static_cast<double>(sel.size());
    const double removal = 2.0 * colsum[s] - obj.g(s, s) - 2.0 * m * obj.z[s];
    const double addition = 2.0 * (colsum[c] - obj.g(s, c)) + obj.g(c, c) - 2.0 * m * obj.z[c];
    return addition - removal;
}

/// Best-improvement single-atom swaps until no swap lowers the selection
/// score. Deterministic: lowest (slot, candidate) wins among equal deltas.
inline void herd_refine(std::vector<int>& sel, const HerdingObjective& obj) {
    const Eigen::Index u = obj.g.rows();
    const int m = static_cast<int>(sel.size());
    Vec colsum = Vec::Zero(u);
    for (int a : sel) colsum += obj.g.col(a);
    constexpr double improvement_eps = 1e-11;
    const int max_sweeps = 3 * m + 10;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        int best_slot = -1, best_cand = -1;
        double best_delta = -improvement_eps;
        for (int slot = 0; slot < m; ++slot) {
            const int s = sel[static_cast<std::size_t>(slot)];
            const double removal = 2.0 * colsum[s] - obj.g(s, s) - 2.0 * m * obj.z[s];
            for (Eigen::Index c = 0; c < u; ++c) {
                if (static_cast<int>(c) == s) continue;
                const double addition =
                    2.0 * (colsum[c] - obj.g(s, c)) + obj.g(c, c) - 2.0 * m * obj.z[c];
                const double delta = addition - removal;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_slot = slot;
                    best_cand = static_cast<int>(c);
                }
            }
        }
        if (best_slot < 0) break;
        const int old = sel[static_cast<std::size_t>(best_slot)];
        colsum += obj.g.col(best_cand) - obj.g.col(old);
        sel[static_cast<std::size_t>(best_slot)] = best_cand;
    }
}

/// Reduces the L1 gap between the selection's atom mean and `target` by
/// single-atom swaps, allowing the herding score to degrade by at most
/// `band`. Projection errors in the atom means are systematic and accumulate
/// through the Bellman recursion, so trading a sliver of kernel score for
/// mean fidelity buys a much closer successor-measure fit at the fixed
/// point. Returns the number of swaps applied.
inline int mean_polish(std::vector<int>& sel, const HerdingObjective& obj,
                       const WeightedMixture& mix, const Vec& target, double band) {
    const Eigen::Index u = mix.atoms.rows();
    const int m = static_cast<int>(sel.size());
    const double inv_m = 1.0 / static_cast<double>(m);
    Vec colsum = Vec::Zero(u);
    for (int a : sel) colsum += obj.g.col(a);
    Vec err = -target;
    for (int a : sel) err += inv_m * mix.atoms.row(a).transpose();

    double f_used = 0.0;  // score degradation spent so far
    int swaps = 0;
    const int max_sweeps = 3 * m + 10;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        int best_slot = -1, best_cand = -1;
        const double current = err.lpNorm<1>();
        double best_norm = current - std::max(0.002 * current, 1e-10);
        double best_f_delta = 0.0;
        for (int slot = 0; slot < m; ++slot) {
            const int s = sel[static_cast<std::size_t>(slot)];
            for (Eigen::Index c = 0; c < u; ++c) {
                if (static_cast<int>(c) == s) continue;
                const double f_delta = swap_delta(sel, colsum, obj, slot, static_cast<int>(c));
                if (f_used + f_delta > band) continue;
                const double norm =
                    (err + inv_m * (mix.atoms.row(c) - mix.atoms.row(s)).transpose()).lpNorm<1>();
                if (norm < best_norm) {
                    best_norm = norm;
                    best_slot = slot;
                    best_cand = static_cast<int>(c);
                    best_f_delta = f_delta;
                }
            }
        }
        if (best_slot < 0) break;
        const int old = sel[static_cast<std::size_t>(best_slot)];
        err += inv_m * (mix.atoms.row(best_cand) - mix.atoms.row(old)).transpose();
        colsum += obj.g.col(best_cand) - obj.g.col(old);
        f_used += best_f_delta;
        sel[static_cast<std::size_t>(best_slot)] = best_cand;
        ++swaps;
    }
    return swaps;
}

}  // namespace detail

/// Reduces a weighted mixture to m equally weighted atoms.
///
/// Herding greedily selects support atoms (with replacement), at each step
/// minimizing the model-kernel MMD between the equally weighted selection
/// and the target mixture, then polishes the selection with single-atom
/// swaps; ties break toward the lowest index. Resampling draws m atoms
/// i.i.d. from the mixture weights on the given stream.
inline Mat project_ewp(const WeightedMixture& mix, int m, const GramCache& gram,
                       const ModelKernelSpec& mks, ProjectionMode mode, Rng rng = Rng(0)) {
    const Eigen::Index u = mix.atoms.rows();
    if (u == 0) throw DomainError("project_ewp: empty mixture");
    if (m < 1) throw DomainError("project_ewp: atom count must be positive");
    const Eigen::Index n = mix.atoms.cols();

    Mat out(m, n);
    if (u == 1) {
        for (int i = 0; i < m; ++i) out.row(i) = mix.atoms.row(0);
        return out;
    }
    if (mode == ProjectionMode::resample) {
        for (int i = 0; i < m; ++i) out.row(i) = mix.atoms.row(rng.categorical(mix.weights));
        return out;
    }

    const detail::HerdingObjective obj = detail::herding_objective(mix, gram, mks);
    std::vector<int> sel = detail::herd_greedy(obj, m);
    detail::herd_refine(sel, obj);
    for (int t = 0; t < m; ++t) out.row(t) = mix.atoms.row(sel[static_cast<std::size_t>(t)]);
    return out;
}

struct DpTraceRow {
    int iteration = 0;
    double successive_wbar = 0.0;
    double ref_wbar = std::numeric_limits<double>::quiet_NaN();
    int max_state = 0;
};

struct DpOptions {
    int iters = 100;
    double tol = 1e-6;
    ProjectionMode mode = ProjectionMode::herding;
    std::uint64_t seed = 0;
    int threads = 1;
    const DeltaModel* reference = nullptr;
    bool per_state_trace = false;
};

struct DpResult {
    DeltaModel model;
    std::vector<DpTraceRow> trace;
    std::vector<std::vector<double>> per_state_distances;  // filled when requested
    // Projection residual: the total-variation gap, maximized over states,
    // between the converged model's per-state atom mean and the exact
    // successor-measure row. The atom mean of the exact fixed point is the
    // successor measure, so this reports what projection cost the model.
    double projection_residual = 0.0;
    std::vector<double> per_state_residual;
    int iterations = 0;
    bool converged = false;
};

/// Default iteration budget for reaching successive-iterate tolerance `tol`:
/// ceil(log tol / log gamma), from the geometric convergence rate.
inline int dp_default_iters(double gamma, double tol = 1e-6) {
    if (gamma <= 0.0) return 1;
    return static_cast<int>(std::ceil(std::log(tol) / std::log(gamma)));
}

namespace detail {

/// Candidate atoms for the operator image at x, in stable (successor, atom)
/// slot order so selections carry across iterations.
inline WeightedMixture raw_operator_mixture(const DeltaModel& model, const DiscountedMdp& dm,
                                            int x) {
    const int n = dm.n_states();
    const int m = model.m();
    std::vector<int> succ;
    for (int y = 0; y < n; ++y)
        if (dm.p_pi(x, y) > 0.0) succ.push_back(y);
    WeightedMixture mix;
    mix.atoms.resize(static_cast<Eigen::Index>(succ.size()) * m, n);
    mix.weights.resize(static_cast<Eigen::Index>(succ.size()) * m);
    Eigen::Index k = 0;
    for (int y : succ) {
        for (int i = 0; i < m; ++i, ++k) {
            mix.atoms.row(k) =
                pushforward(model.atoms[static_cast<std::size_t>(y)].row(i), x, model.gamma);
            mix.weights[k] = dm.p_pi(x, y) / static_cast<double>(m);
        }
    }
    return mix;
}

}  // namespace detail

/// Dynamic programming on the EWP model: alternates the exact operator with
/// projection back to m atoms, recording the successive-iterate supremal
/// Wasserstein distance, until it falls below tol or the budget runs out.
///
/// Herding selections are re-optimized incrementally from the previous
/// iteration's selection, with a fresh greedy proposal adopted only on a
/// clear improvement. Re-selection near the fixed point keeps flipping
/// near-tied picks, which stalls the successive distance at the quantization
/// scale; when that stall is detected the selection pattern is frozen, and
/// the frozen iteration is an affine gamma-contraction that drives the
/// successive distance to zero.
inline DpResult dp_iterate(const DeltaModel& init, const DiscountedMdp& dm,
                           const GramCache& gram, const ModelKernelSpec& mks,
                           const CostMatrix& cost, const DpOptions& opts) {
    if (opts.iters < 1) throw DomainError("dp_iterate: need at least one iteration");
    init.validate();
    const int n = dm.n_states();
    const int m = init.m();

    DpResult result;
    DeltaModel cur = init;
    const SuccessorMatrix sm = compute_sm(dm);
    std::vector<WeightedMixture> mixes(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> selections(static_cast<std::size_t>(n));
    // Selection phases: free search, then a locked pattern that is only
    // mean-polished at intervals (targets: the exact successor-measure
    // rows), then fully frozen once the polish stops finding swaps.
    enum class Phase { search, locked, frozen };
    Phase phase = Phase::search;
    bool lock_now = false, polish_now = false;
    double best_successive = std::numeric_limits<double>::infinity();
    double settle_ref = std::numeric_limits<double>::infinity();  // successive level at last repattern
    double trigger_successive = std::numeric_limits<double>::infinity();
    double prev_trigger = std::numeric_limits<double>::infinity();
    int stalled = 0, last_polish = 0, refreshes = 0;
    std::vector<int> polish_swaps(static_cast<std::size_t>(n), 0);
    std::vector<double> successive_history;
    constexpr int max_refreshes = 12;
    constexpr double freeze_trigger = 1e-3;
    for (int k = 0; k < opts.iters; ++k) {
        DeltaModel next;
        next.gamma = cur.gamma;
        next.atoms.assign(static_cast<std::size_t>(n), Mat());
        parallel_for(n, opts.threads, [&](int x) {
            WeightedMixture& mix = mixes[static_cast<std::size_t>(x)];
            mix = detail::raw_operator_mixture(cur, dm, x);
            if (opts.mode == ProjectionMode::resample) {
                next.atoms[static_cast<std::size_t>(x)] =
                    project_ewp(mix, m, gram, mks, ProjectionMode::resample,
                                Rng::stream(opts.seed, static_cast<std::uint64_t>(k) *
                                                           static_cast<std::uint64_t>(n) +
                                                       static_cast<std::uint64_t>(x)));
                return;
            }
            std::vector<int>& sel = selections[static_cast<std::size_t>(x)];
            if (phase == Phase::search || lock_now || polish_now) {
                const detail::HerdingObjective obj = detail::herding_objective(mix, gram, mks);
                auto polish = [&](std::vector<int>& s) {
                    // The polish drives the selection mean toward the mean of
                    // the operator image it replaces; the kernel-score band
                    // caps how much herding quality it may spend. Per-step
                    // mean errors are what accumulate into the reported
                    // residual, and the mixing of the kernel cancels most of
                    // the accumulation once they are small and unbiased.
                    const double tt = mix.weights.dot(obj.g * mix.weights);
                    const double mmd2_sel = std::max(
                        0.0, detail::selection_score(s, obj) / (static_cast<double>(m) * m) + tt);
                    const double band =
                        static_cast<double>(m) * m * (2.0 * mmd2_sel + 1e-10);
                    Vec target = Vec::Zero(mix.atoms.cols());
                    for (Eigen::Index j = 0; j < mix.atoms.rows(); ++j)
                        target += mix.weights[j] * mix.atoms.row(j).transpose();
                    polish_swaps[static_cast<std::size_t>(x)] =
                        detail::mean_polish(s, obj, mix, target, band);
                };
                if (lock_now) {
                    std::vector<int> fresh = detail::herd_greedy(obj, m);
                    detail::herd_refine(fresh, obj);
                    polish(fresh);
                    sel = std::move(fresh);
                } else if (polish_now) {
                    polish(sel);
                } else if (sel.empty()) {
                    std::vector<int> fresh = detail::herd_greedy(obj, m);
                    detail::herd_refine(fresh, obj);
                    sel = std::move(fresh);
                } else {
                    std::vector<int> fresh = detail::herd_greedy(obj, m);
                    detail::herd_refine(fresh, obj);
                    detail::herd_refine(sel, obj);
                    const double f_carried = detail::selection_score(sel, obj);
                    const double f_fresh = detail::selection_score(fresh, obj);
                    if (f_fresh < f_carried - 1e-9 * (1.0 + std::abs(f_carried)))
                        sel = std::move(fresh);
                }
            }
            Mat atoms(m, mix.atoms.cols());
            for (int t = 0; t < m; ++t)
                atoms.row(t) = mix.atoms.row(sel[static_cast<std::size_t>(t)]);
            next.atoms[static_cast<std::size_t>(x)] = std::move(atoms);
        });
        bool repatterned = false;
        if (lock_now) {
            phase = Phase::locked;
            lock_now = false;
            last_polish = k;
            repatterned = true;
        } else if (polish_now) {
            polish_now = false;
            last_polish = k;
            ++refreshes;
            repatterned = true;
            int total_swaps = 0;
            for (int s : polish_swaps) total_swaps += s;
            // Stop repolishing once it goes inert, the iterate has settled
            // deep enough, or the settling level stops halving.
            if (total_swaps == 0 || trigger_successive < freeze_trigger ||
                trigger_successive > 0.5 * prev_trigger || refreshes >= max_refreshes)
                phase = Phase::frozen;
            prev_trigger = trigger_successive;
        }
        for (int x = 0; x < n; ++x)
            if (!next.atoms[static_cast<std::size_t>(x)].allFinite())
                throw NumericError("dp_iterate: non-finite atoms at iteration " +
                                   std::to_string(k));

        std::vector<double> per_state(static_cast<std::size_t>(n), 0.0);
        parallel_for(n, opts.threads, [&](int x) {
            per_state[static_cast<std::size_t>(x)] =
                wasserstein_outer(next.atoms[static_cast<std::size_t>(x)],
                                  cur.atoms[static_cast<std::size_t>(x)], cost);
        });
        DpTraceRow row;
        row.iteration = k;
        row.max_state = 0;
        for (int x = 0; x < n; ++x)
            if (per_state[static_cast<std::size_t>(x)] > row.successive_wbar) {
                row.successive_wbar = per_state[static_cast<std::size_t>(x)];
                row.max_state = x;
            }
        if (opts.reference)
            row.ref_wbar = wbar_atoms(next.atoms, opts.reference->atoms, cost, opts.threads).value;
        if (opts.per_state_trace) result.per_state_distances.push_back(per_state);
        result.trace.push_back(row);

        if (repatterned) settle_ref = row.successive_wbar;
        successive_history.push_back(row.successive_wbar);
        if (opts.mode == ProjectionMode::herding) {
            if (phase == Phase::search && !lock_now) {
                // Re-selection churn shows up as a plateau: no sharp
                // improvements, or a shallow slope over a 6-iteration window.
                if (row.successive_wbar < 0.9 * best_successive) {
                    stalled = 0;
                } else {
                    ++stalled;
                }
                const std::size_t h = successive_history.size();
                const bool shallow =
                    h >= 7 && row.successive_wbar > 0.45 * successive_history[h - 7];
                if (stalled >= 3 || shallow) lock_now = true;
            } else if (phase == Phase::locked && !polish_now &&
                       row.successive_wbar < 0.25 * settle_ref && k - last_polish >= 2) {
                // The iterate has re-settled since the last repatterning;
                // polish the means once more against the current mixture.
                polish_now = true;
                trigger_successive = row.successive_wbar;
            }
        }
        best_successive = std::min(best_successive, row.successive_wbar);

        cur = std::move(next);
        result.iterations = k + 1;
        if (row.successive_wbar < opts.tol) {
            result.converged = true;
            break;
        }
    }

    result.per_state_residual.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        const double tv =
            0.5 * (cur.atoms[static_cast<std::size_t>(x)].colwise().mean() - sm.psi.row(x))
                      .cwiseAbs()
                      .sum();
        result.per_state_residual[static_cast<std::size_t>(x)] = tv;
        result.projection_residual = std::max(result.projection_residual, tv);
    }

    result.model = std::move(cur);
    return result;
}

/// One exact operator application on per-state mixtures (projection
/// disabled). Grows the support; errors out beyond `max_total_atoms`.
inline std::vector<WeightedMixture> apply_operator_mixture(
    const std::vector<WeightedMixture>& model, const DiscountedMdp& dm, double gamma,
    long max_total_atoms = 20000) {
    const int n = dm.n_states();
    if (static_cast<int>(model.size()) != n)
        throw DomainError("apply_operator_mixture: state count mismatch");
    std::vector<WeightedMixture> out(static_cast<std::size_t>(n));
    long total = 0;
    for (int x = 0; x < n; ++x) {
        Eigen::Index count = 0;
        for (int y = 0; y < n; ++y)
            if (dm.p_pi(x, y) > 0.0) count += model[static_cast<std::size_t>(y)].atoms.rows();
        Mat rows(count, dm.p_pi.cols());
        Vec w(count);
        Eigen::Index k = 0;
        for (int y = 0; y < n; ++y) {
            const double py = dm.p_pi(x, y);
            if (py <= 0.0) continue;
            const WeightedMixture& src = model[static_cast<std::size_t>(y)];
            for (Eigen::Index i = 0; i < src.atoms.rows(); ++i, ++k) {
                rows.row(k) = pushforward(src.atoms.row(i), x, gamma);
                w[k] = py * src.weights[i];
            }
        }
        WeightedMixture mix;
        detail::unique_rows(rows, w, &mix.atoms, &mix.weights);
        total += mix.atoms.rows();
        if (total > max_total_atoms)
            throw NumericError("apply_operator_mixture: atom budget exceeded (" +
                               std::to_string(total) + " > " +
                               std::to_string(max_total_atoms) + ")");
        out[static_cast<std::size_t>(x)] = std::move(mix);
    }
    return out;
}

inline std::vector<WeightedMixture> mixture_from_model(const DeltaModel& model) {
    std::vector<WeightedMixture> out;
    out.reserve(model.atoms.size());
    for (const Mat& a : model.atoms) {
        WeightedMixture mix;
        const Vec eq = Vec::Constant(a.rows(), 1.0 / static_cast<double>(a.rows()));
        detail::unique_rows(a, eq, &mix.atoms, &mix.weights);
        out.push_back(std::move(mix));
    }
    return out;
}

inline WbarResult wbar_mixtures(const std::vector<WeightedMixture>& a,
                                const std::vector<WeightedMixture>& b, const CostMatrix& cost,
                                int threads = 1) {
    if (a.size() != b.size() || a.empty()) throw DomainError("wbar_mixtures: shape mismatch");
    const int n = static_cast<int>(a.size());
    std::vector<double> per_state(static_cast<std::size_t>(n), 0.0);
    parallel_for(n, threads, [&](int x) {
        per_state[static_cast<std::size_t>(x)] = wasserstein_outer_weighted(
            a[static_cast<std::size_t>(x)].atoms, a[static_cast<std::size_t>(x)].weights,
            b[static_cast<std::size_t>(x)].atoms, b[static_cast<std::size_t>(x)].weights, cost);
    });
    WbarResult out;
    for (int x = 0; x < n; ++x)
        if (per_state[static_cast<std::size_t>(x)] > out.value) {
            out.value = per_state[static_cast<std::size_t>(x)];
            out.argmax_state = x;
        }
    if (out.argmax_state < 0) out.argmax_state = 0;
    return out;
}

/// Per-state mean of the model atoms; rows estimate successor-matrix rows.
inline Mat atom_means(const DeltaModel& model) {
    const int n = model.n_states();
    Mat means(n, model.atoms.front().cols());
    for (int x = 0; x < n; ++x)
        means.row(x) = model.atoms[static_cast<std::size_t>(x)].colwise().mean();
    return means;
}

}  // namespace dsm
