#pragma once

#include "dsm/common.hpp"
#include "dsm/dp.hpp"
#include "dsm/kernels.hpp"
#include "dsm/mdp.hpp"
#include "dsm/ot.hpp"
#include "dsm/rng.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace dsm {

/// Model atoms parameterized as row-softmax of per-state logits, with a
/// slow-moving target copy for bootstrapped targets.
struct ParamModel {
    std::vector<Mat> logits;         // logits[x]: m x n_states
    std::vector<Mat> target_logits;  // same shape
    double gamma = 0.0;

    int n_states() const { return static_cast<int>(logits.size()); }
    int m() const { return logits.empty() ? 0 : static_cast<int>(logits.front().rows()); }
};

inline Vec softmax_row(const Vec& logits) {
    const Vec shifted = (logits.array() - logits.maxCoeff()).exp();
    return shifted / shifted.sum();
}

inline Mat softmax_rows(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        out.row(i) = softmax_row(logits.row(i).transpose()).transpose();
    return out;
}

inline DeltaModel atoms_from_params(const ParamModel& params, bool target = false) {
    DeltaModel model;
    model.gamma = params.gamma;
    const auto& src = target ? params.target_logits : params.logits;
    model.atoms.reserve(src.size());
    for (const Mat& l : src) model.atoms.push_back(softmax_rows(l));
    return model;
}

struct TdConfig {
    double gamma = 0.95;
    int n_step = 5;
    double learning_rate = 1e-2;
    double polyak_lambda = 0.01;
    int batch_size = 32;
    long steps = 10000;
    std::uint64_t seed = 0;
    int m = 4;
    SigmaPolicy sigma_policy = SigmaPolicy::median_heuristic;
    double fixed_sigma = 1.0;
    double init_scale = 0.5;     // std-dev of the random logit initialization
    Vec restart_distribution;    // empty: uniform over states
    int trace_every = 1000;
    int threads = 1;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("TdConfig: gamma must lie in [0, 1)");
        if (n_step < 1) throw ConfigError("TdConfig: n_step must be positive");
        if (!(learning_rate > 0.0)) throw ConfigError("TdConfig: learning rate must be positive");
        if (polyak_lambda < 0.0 || polyak_lambda > 1.0)
            throw ConfigError("TdConfig: polyak lambda must lie in [0, 1]");
        if (batch_size < 1) throw ConfigError("TdConfig: batch size must be positive");
        if (steps < 1) throw ConfigError("TdConfig: steps must be positive");
        if (m < 1) throw ConfigError("TdConfig: atom count must be positive");
    }
};

/// Exact n-step bootstrap targets: for each target atom i at the window's
/// final state,
///   t_i = sum_{k < n} (1 - gamma) gamma^k delta_{x_k} + gamma^n theta_bar_i(x_n).
inline Mat nstep_target_exact(const std::vector<int>& window, const Mat& target_atoms_at_xn,
                              double gamma) {
    const int n_step = static_cast<int>(window.size()) - 1;
    if (n_step < 1) throw DomainError("nstep_target_exact: window too short");
    Vec prefix = Vec::Zero(target_atoms_at_xn.cols());
    double w = 1.0 - gamma;
    for (int k = 0; k < n_step; ++k) {
        prefix[window[static_cast<std::size_t>(k)]] += w;
        w *= gamma;
    }
    const double boot = std::pow(gamma, n_step);
    Mat targets = boot * target_atoms_at_xn;
    targets.rowwise() += prefix.transpose();
    return targets;
}

struct NStepSample {
    int source_step;  // k in [0, n) when the draw came from the trajectory, n for bootstrap
    int state;
};

/// Sampling form of the n-step target: draw Y ~ Geometric(1 - gamma), return
/// x_Y when Y < n, otherwise a state sampled from the bootstrap atom.
inline NStepSample nstep_target_sample(const std::vector<int>& window, const Vec& theta_bar,
                                       double gamma, Rng& rng) {
    const int n_step = static_cast<int>(window.size()) - 1;
    if (n_step < 1) throw DomainError("nstep_target_sample: window too short");
    const std::int64_t y = rng.geometric(gamma);
    if (y < n_step) return {static_cast<int>(y), window[static_cast<std::size_t>(y)]};
    return {n_step, rng.categorical(theta_bar)};
}

struct TdLoss {
    double loss = 0.0;       // source-source minus twice source-target model kernels
    double full_mmd2 = 0.0;  // diagnostic including the constant target-target block
    Mat grad_logits;         // m x n_states, gradient at the window's source state
};

namespace detail {

// Smoothed model kernel used on gradient paths: the root inside rho is
// sqrt(mmd2 + eps^2) with eps = 1e-12, which keeps the chain rule finite at
// coinciding atoms.
inline double smoothed_model_kernel(double mmd2, double sigma) {
    constexpr double eps2 = 1e-24;
    return 1.0 / std::sqrt(1.0 + (std::max(mmd2, 0.0) + eps2) / (sigma * sigma));
}

inline double smoothed_model_kernel_dq(double mmd2, double sigma) {
    constexpr double eps2 = 1e-24;
    const double s2 = sigma * sigma;
    const double base = 1.0 + (std::max(mmd2, 0.0) + eps2) / s2;
    return -0.5 / (s2 * base * std::sqrt(base));
}

}  // namespace detail

/// Loss and exact analytic gradient for one state's atoms against per-atom
/// bootstrap targets. sigma is resolved once from source and target atoms
/// (median heuristic unless fixed) and held constant under differentiation.
inline TdLoss td_loss_and_grad(const Mat& source_atoms, const Mat& target_atoms,
                               const GramCache& gram, double sigma) {
    if (source_atoms.rows() != target_atoms.rows())
        throw DomainError("td_loss_and_grad: atom count mismatch");
    if (!(sigma > 0.0)) throw DomainError("td_loss_and_grad: sigma must be positive");
    const Eigen::Index m = source_atoms.rows();
    const double m2 = static_cast<double>(m) * static_cast<double>(m);

    const Mat q_ss = detail::pairwise_mmd2(source_atoms, source_atoms, gram);
    const Mat q_st = detail::pairwise_mmd2(source_atoms, target_atoms, gram);
    const Mat q_tt = detail::pairwise_mmd2(target_atoms, target_atoms, gram);

    double sum_ss = 0.0, sum_st = 0.0, sum_tt = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            sum_ss += detail::smoothed_model_kernel(q_ss(i, j), sigma);
            sum_st += detail::smoothed_model_kernel(q_st(i, j), sigma);
            sum_tt += detail::smoothed_model_kernel(q_tt(i, j), sigma);
        }

    TdLoss out;
    out.loss = (sum_ss - 2.0 * sum_st) / m2;
    out.full_mmd2 = std::max(0.0, (sum_ss + sum_tt - 2.0 * sum_st) / m2);

    // d loss / d theta_i, then through the softmax Jacobian row by row.
    Mat grad_atoms = Mat::Zero(m, source_atoms.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        Vec g = Vec::Zero(source_atoms.cols());
        for (Eigen::Index j = 0; j < m; ++j) {
            const Vec diff_ss = (source_atoms.row(i) - source_atoms.row(j)).transpose();
            g += 4.0 * detail::smoothed_model_kernel_dq(q_ss(i, j), sigma) *
                 (gram.gram * diff_ss);
            const Vec diff_st = (source_atoms.row(i) - target_atoms.row(j)).transpose();
            g -= 4.0 * detail::smoothed_model_kernel_dq(q_st(i, j), sigma) *
                 (gram.gram * diff_st);
        }
        grad_atoms.row(i) = g.transpose() / m2;
    }
    out.grad_logits = Mat(m, source_atoms.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vec theta = source_atoms.row(i).transpose();
        const Vec g = grad_atoms.row(i).transpose();
        out.grad_logits.row(i) = (theta.array() * (g.array() - theta.dot(g))).transpose();
    }
    if (!out.grad_logits.allFinite())
        throw NumericError("td_loss_and_grad: non-finite gradient");
    return out;
}

struct TdTraceRow {
    long step = 0;
    double loss = 0.0;
    double full_mmd2 = 0.0;
    double wbar_ref = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ParamModel params;
    std::vector<TdTraceRow> trace;
};

/// Temporal-difference training of a delta model. Each step samples a batch
/// of n-step windows (restarts drawn from the restart distribution), builds
/// exact targets from the target parameters, descends the analytic gradient,
/// and Polyak-averages the targets. Deterministic for a fixed config.
inline TrainResult train(const DiscountedMdp& dm, const TdConfig& cfg, const GramCache& gram,
                         const DeltaModel* reference = nullptr,
                         const CostMatrix* cost = nullptr) {
    cfg.validate();
    const int n = dm.n_states();
    Vec restart = cfg.restart_distribution;
    if (restart.size() == 0) restart = Vec::Constant(n, 1.0 / n);
    require_simplex(restart, "train: restart distribution");

    ParamModel params;
    params.gamma = cfg.gamma;
    params.logits.assign(static_cast<std::size_t>(n), Mat(cfg.m, n));
    Rng init_rng = Rng::stream(cfg.seed, 0xD15ECAFEULL);
    for (int x = 0; x < n; ++x)
        for (int i = 0; i < cfg.m; ++i)
            for (int s = 0; s < n; ++s)
                params.logits[static_cast<std::size_t>(x)](i, s) =
                    cfg.init_scale * init_rng.normal();
    params.target_logits = params.logits;

    TrainResult result;
    const ModelKernelSpec mks{cfg.sigma_policy, cfg.fixed_sigma};
    std::vector<Mat> target_atom_cache(static_cast<std::size_t>(n));
    std::vector<bool> target_cache_valid(static_cast<std::size_t>(n), false);

    for (long step = 0; step < cfg.steps; ++step) {
        std::fill(target_cache_valid.begin(), target_cache_valid.end(), false);
        std::map<int, Mat> grad_acc;
        double batch_loss = 0.0, batch_full = 0.0;

        for (int b = 0; b < cfg.batch_size; ++b) {
            Rng rng = Rng::stream(cfg.seed,
                                  static_cast<std::uint64_t>(step) *
                                          static_cast<std::uint64_t>(cfg.batch_size) +
                                      static_cast<std::uint64_t>(b) + 1);
            std::vector<int> window(static_cast<std::size_t>(cfg.n_step) + 1);
            window[0] = rng.categorical(restart);
            for (int k = 1; k <= cfg.n_step; ++k)
                window[static_cast<std::size_t>(k)] =
                    rng.categorical(dm.p_pi.row(window[static_cast<std::size_t>(k - 1)]));

            const int x0 = window.front();
            const int xn = window.back();
            if (!target_cache_valid[static_cast<std::size_t>(xn)]) {
                target_atom_cache[static_cast<std::size_t>(xn)] =
                    softmax_rows(params.target_logits[static_cast<std::size_t>(xn)]);
                target_cache_valid[static_cast<std::size_t>(xn)] = true;
            }
            const Mat targets = nstep_target_exact(
                window, target_atom_cache[static_cast<std::size_t>(xn)], cfg.gamma);
            const Mat source_atoms = softmax_rows(params.logits[static_cast<std::size_t>(x0)]);
            const double sigma = resolve_sigma(source_atoms, targets, gram, mks);
            TdLoss piece = td_loss_and_grad(source_atoms, targets, gram, sigma);
            batch_loss += piece.loss;
            batch_full += piece.full_mmd2;
            auto [it, inserted] = grad_acc.try_emplace(x0, std::move(piece.grad_logits));
            if (!inserted) it->second += piece.grad_logits;
        }

        batch_loss /= cfg.batch_size;
        batch_full /= cfg.batch_size;
        if (!std::isfinite(batch_loss))
            throw NumericError("train: loss diverged at step " + std::to_string(step));

        for (auto& [x, grad] : grad_acc)
            params.logits[static_cast<std::size_t>(x)] -=
                (cfg.learning_rate / cfg.batch_size) * grad;
        if (cfg.polyak_lambda > 0.0) {
            for (int x = 0; x < n; ++x)
                params.target_logits[static_cast<std::size_t>(x)] =
                    (1.0 - cfg.polyak_lambda) * params.target_logits[static_cast<std::size_t>(x)] +
                    cfg.polyak_lambda * params.logits[static_cast<std::size_t>(x)];
        }

        if (step % cfg.trace_every == 0 || step + 1 == cfg.steps) {
            TdTraceRow row;
            row.step = step;
            row.loss = batch_loss;
            row.full_mmd2 = batch_full;
            if (reference && cost) {
                const DeltaModel current = atoms_from_params(params);
                row.wbar_ref = wbar_atoms(current.atoms, reference->atoms, *cost,
                                          cfg.threads).value;
            }
            result.trace.push_back(row);
        }
    }
    result.params = std::move(params);
    return result;
}

}  // namespace dsm
