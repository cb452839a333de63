#pragma once

#include "dsm/common.hpp"
#include "dsm/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace dsm {

/// Finite MDP: transition tensor p(x'|x,a), per-state embedding coordinates
/// used by state kernels and metrics, and a bank of named reward vectors.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Mat> transition;  // transition[a] is n_states x n_states, rows stochastic
    Mat embedding;                // n_states x d
    std::map<std::string, Vec> reward_bank;

    void validate() const {
        if (n_states <= 0 || n_actions <= 0)
            throw ConfigError("TabularMdp: state and action counts must be positive");
        if (static_cast<int>(transition.size()) != n_actions)
            throw ConfigError("TabularMdp: transition tensor has wrong action count");
        for (const Mat& pa : transition) {
            if (pa.rows() != n_states || pa.cols() != n_states)
                throw ConfigError("TabularMdp: transition slice has wrong shape");
            for (int x = 0; x < n_states; ++x) {
                if (pa.row(x).minCoeff() < -1e-12 || std::abs(pa.row(x).sum() - 1.0) > 1e-12)
                    throw ConfigError("TabularMdp: transition row is not stochastic");
            }
        }
        if (embedding.rows() != n_states || embedding.cols() < 1)
            throw ConfigError("TabularMdp: embedding has wrong shape");
        if (!embedding.allFinite())
            throw ConfigError("TabularMdp: embedding coordinates must be finite");
        for (const auto& [name, r] : reward_bank) {
            if (r.size() != n_states || !r.allFinite())
                throw ConfigError("TabularMdp: reward '" + name + "' has wrong shape");
        }
    }
};

struct Policy {
    Mat probs;  // n_states x n_actions, rows stochastic

    void validate(int n_states, int n_actions) const {
        if (probs.rows() != n_states || probs.cols() != n_actions)
            throw ConfigError("Policy: shape does not match MDP");
        for (int x = 0; x < n_states; ++x) {
            if (probs.row(x).minCoeff() < -1e-12 || std::abs(probs.row(x).sum() - 1.0) > 1e-12)
                throw ConfigError("Policy: row is not stochastic");
        }
    }
};

struct Trajectory {
    std::vector<int> states;
};

/// An MDP closed under a fixed policy and discount: holds the marginal
/// state kernel p_pi(x'|x) = sum_a pi(a|x) p(x'|x,a).
struct DiscountedMdp {
    TabularMdp mdp;
    Policy policy;
    double gamma = 0.0;
    Mat p_pi;  // n_states x n_states

    int n_states() const { return mdp.n_states; }
};

inline DiscountedMdp build_ppi(const TabularMdp& mdp, const Policy& policy, double gamma) {
    mdp.validate();
    policy.validate(mdp.n_states, mdp.n_actions);
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw DomainError("build_ppi: gamma must lie in [0, 1)");
    Mat p_pi = Mat::Zero(mdp.n_states, mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        p_pi += policy.probs.col(a).asDiagonal() * mdp.transition[static_cast<std::size_t>(a)];
    return DiscountedMdp{mdp, policy, gamma, std::move(p_pi)};
}

/// Samples (X_0, ..., X_{horizon-1}) with X_0 = x0 by inverse-CDF draws from
/// the rows of p_pi. Same stream, same trajectory, bit for bit.
inline Trajectory sample_trajectory(const DiscountedMdp& dm, int x0, int horizon, Rng& rng) {
    if (x0 < 0 || x0 >= dm.n_states())
        throw DomainError("sample_trajectory: initial state out of range");
    if (horizon < 1) throw DomainError("sample_trajectory: horizon must be >= 1");
    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(horizon));
    int x = x0;
    traj.states.push_back(x);
    for (int t = 1; t < horizon; ++t) {
        x = rng.categorical(dm.p_pi.row(x));
        traj.states.push_back(x);
    }
    return traj;
}

namespace detail {

inline Mat one_hot_embedding(int n) { return Mat::Identity(n, n); }

}  // namespace detail

/// Built-in environments. Every environment comes with embeddings, at least
/// one named reward, and a bundled policy.
///
///   three_state_c1  three states; rows (.5 .5 0), (0 0 1), (1/3 1/3 1/3)
///   uniform_three   three states, every row uniform
///   t_maze          corridor to a fork: backwards 1/6, right 1/2, left 1/3
///   windy_grid      n x n grid over the unit square; wind pushes one cell
///                   toward the corner of the current quadrant with prob w
///   chain           deterministic k-state chain, absorbing end
inline std::pair<TabularMdp, Policy> make_env(const std::string& name,
                                              const nlohmann::json& params = {}) {
    auto get_int = [&](const char* key, int fallback) {
        if (!params.contains(key)) return fallback;
        if (!params.at(key).is_number())
            throw ConfigError("make_env: parameter '" + std::string(key) + "' must be a number");
        return params.at(key).get<int>();
    };
    auto get_double = [&](const char* key, double fallback) {
        if (!params.contains(key)) return fallback;
        if (!params.at(key).is_number())
            throw ConfigError("make_env: parameter '" + std::string(key) + "' must be a number");
        return params.at(key).get<double>();
    };

    TabularMdp mdp;
    Policy policy;

    if (name == "three_state_c1" || name == "uniform_three") {
        mdp.n_states = 3;
        mdp.n_actions = 1;
        Mat p(3, 3);
        if (name == "three_state_c1") {
            p << 0.5, 0.5, 0.0,
                 0.0, 0.0, 1.0,
                 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0;
        } else {
            p.setConstant(1.0 / 3.0);
        }
        mdp.transition = {p};
        mdp.embedding = detail::one_hot_embedding(3);
        Vec r = Vec::Zero(3);
        r[0] = 1.0;
        mdp.reward_bank["first_state"] = r;
        policy.probs = Mat::Ones(3, 1);
    } else if (name == "chain") {
        const int k = get_int("k", 5);
        if (k < 2) throw ConfigError("make_env: chain needs k >= 2");
        mdp.n_states = k;
        mdp.n_actions = 1;
        Mat p = Mat::Zero(k, k);
        for (int i = 0; i + 1 < k; ++i) p(i, i + 1) = 1.0;
        p(k - 1, k - 1) = 1.0;
        mdp.transition = {p};
        mdp.embedding = detail::one_hot_embedding(k);
        Vec r = Vec::Zero(k);
        r[k - 1] = 1.0;
        mdp.reward_bank["goal"] = r;
        policy.probs = Mat::Ones(k, 1);
    } else if (name == "t_maze") {
        const int corridor = get_int("corridor", 3);
        const int arm = get_int("arm", 2);
        if (corridor < 1 || arm < 1) throw ConfigError("make_env: t_maze needs corridor, arm >= 1");
        // States: corridor cells 0..corridor-1, fork, right arm, left arm.
        const int fork = corridor;
        const int r0 = corridor + 1;
        const int l0 = corridor + 1 + arm;
        const int n = corridor + 1 + 2 * arm;
        mdp.n_states = n;
        mdp.n_actions = 3;  // at the fork: 0 = backwards, 1 = right, 2 = left
        std::vector<Mat> tensor(3, Mat::Zero(n, n));
        auto forward = [&](int x) {
            if (x < corridor) return x + 1;                          // corridor moves to fork
            if (x >= r0 && x < r0 + arm) return std::min(x + 1, r0 + arm - 1);
            if (x >= l0 && x < l0 + arm) return std::min(x + 1, l0 + arm - 1);
            return x;
        };
        for (int x = 0; x < n; ++x) {
            if (x == fork) {
                tensor[0](x, corridor - 1) = 1.0;
                tensor[1](x, r0) = 1.0;
                tensor[2](x, l0) = 1.0;
            } else {
                for (int a = 0; a < 3; ++a) tensor[static_cast<std::size_t>(a)](x, forward(x)) = 1.0;
            }
        }
        mdp.transition = std::move(tensor);
        // Planar layout: corridor runs upward to the fork, arms extend sideways,
        // scaled uniformly into [0,1]^2.
        Mat raw(n, 2);
        for (int i = 0; i < corridor; ++i) raw.row(i) << 0.0, static_cast<double>(i - corridor);
        raw.row(fork) << 0.0, 0.0;
        for (int j = 0; j < arm; ++j) raw.row(r0 + j) << static_cast<double>(j + 1), 0.0;
        for (int j = 0; j < arm; ++j) raw.row(l0 + j) << static_cast<double>(-(j + 1)), 0.0;
        const double xmin = raw.col(0).minCoeff(), ymin = raw.col(1).minCoeff();
        const double extent = std::max(raw.col(0).maxCoeff() - xmin, raw.col(1).maxCoeff() - ymin);
        mdp.embedding = Mat(n, 2);
        mdp.embedding.col(0) = (raw.col(0).array() - xmin) / extent;
        mdp.embedding.col(1) = (raw.col(1).array() - ymin) / extent;
        Vec right_goal = Vec::Zero(n), left_goal = Vec::Zero(n);
        right_goal[r0 + arm - 1] = 1.0;
        left_goal[l0 + arm - 1] = 1.0;
        mdp.reward_bank["right_goal"] = right_goal;
        mdp.reward_bank["left_goal"] = left_goal;
        Mat probs(n, 3);
        probs.col(0).setConstant(1.0 / 6.0);
        probs.col(1).setConstant(1.0 / 2.0);
        probs.col(2).setConstant(1.0 / 3.0);
        policy.probs = probs;
    } else if (name == "windy_grid") {
        const int n_side = get_int("n", 12);
        const double wind = get_double("wind", 0.3);
        if (n_side < 2 || n_side % 2 != 0)
            throw ConfigError("make_env: windy_grid needs an even grid size n >= 2");
        if (wind < 0.0 || wind > 1.0) throw ConfigError("make_env: wind must lie in [0, 1]");
        const int n = n_side * n_side;
        mdp.n_states = n;
        mdp.n_actions = 4;  // up, down, left, right
        auto id = [n_side](int r, int c) { return r * n_side + c; };
        auto clip = [n_side](int v) { return std::min(std::max(v, 0), n_side - 1); };
        // Corner cell of the quadrant containing (r, c), reading-order quadrants.
        auto corner = [&](int r, int c) {
            const int cr = (r < n_side / 2) ? 0 : n_side - 1;
            const int cc = (c < n_side / 2) ? 0 : n_side - 1;
            return std::pair<int, int>{cr, cc};
        };
        const int dr[4] = {-1, 1, 0, 0};
        const int dc[4] = {0, 0, -1, 1};
        std::vector<Mat> tensor(4, Mat::Zero(n, n));
        for (int r = 0; r < n_side; ++r) {
            for (int c = 0; c < n_side; ++c) {
                const int x = id(r, c);
                const auto [cr, cc] = corner(r, c);
                const int wr = r + (cr > r ? 1 : (cr < r ? -1 : 0));
                const int wc = c + (cc > c ? 1 : (cc < c ? -1 : 0));
                const int wx = id(wr, wc);
                for (int a = 0; a < 4; ++a) {
                    const int mx = id(clip(r + dr[a]), clip(c + dc[a]));
                    tensor[static_cast<std::size_t>(a)](x, mx) += 1.0 - wind;
                    tensor[static_cast<std::size_t>(a)](x, wx) += wind;
                }
            }
        }
        mdp.transition = std::move(tensor);
        mdp.embedding = Mat(n, 2);
        for (int r = 0; r < n_side; ++r)
            for (int c = 0; c < n_side; ++c)
                mdp.embedding.row(id(r, c)) << (c + 0.5) / n_side, (r + 0.5) / n_side;
        // Quadrant-constant rewards, reading order (TL, TR, BL, BR).
        auto quadrant_reward = [&](double tl, double tr, double bl, double br) {
            Vec out(n);
            for (int r = 0; r < n_side; ++r)
                for (int c = 0; c < n_side; ++c)
                    out[id(r, c)] = r < n_side / 2 ? (c < n_side / 2 ? tl : tr)
                                                   : (c < n_side / 2 ? bl : br);
            return out;
        };
        mdp.reward_bank["lopsided_checkerboard"] = quadrant_reward(15.0, -10.0, -2.0, 2.0);
        mdp.reward_bank["hopscotch"] = quadrant_reward(3.0, -1.0, -2.0, 2.0);
        const std::string pol = params.contains("policy") ? params.at("policy").get<std::string>()
                                                          : std::string("uniform");
        Mat probs(n, 4);
        if (pol == "uniform") {
            probs.setConstant(0.25);
        } else if (pol == "southeast_drift") {
            // Biased toward the bottom-right quadrant.
            probs.col(0).setConstant(0.1);
            probs.col(1).setConstant(0.4);
            probs.col(2).setConstant(0.1);
            probs.col(3).setConstant(0.4);
        } else {
            throw ConfigError("make_env: unknown windy_grid policy '" + pol + "'");
        }
        policy.probs = probs;
    } else {
        throw ConfigError("make_env: unknown environment '" + name + "'");
    }

    mdp.validate();
    policy.validate(mdp.n_states, mdp.n_actions);
    return {std::move(mdp), std::move(policy)};
}

/// Loads an environment from the documented config schema:
///   { "name": ..., "params": {...}, "rewards": { "name": [r_0, ..., r_{n-1}], ... } }
inline std::pair<TabularMdp, Policy> env_from_config(const nlohmann::json& cfg) {
    if (!cfg.contains("name")) throw ConfigError("env config: missing 'name'");
    auto [mdp, policy] = make_env(cfg.at("name").get<std::string>(),
                                  cfg.value("params", nlohmann::json::object()));
    if (cfg.contains("rewards")) {
        for (const auto& [rname, arr] : cfg.at("rewards").items()) {
            if (!arr.is_array() || static_cast<int>(arr.size()) != mdp.n_states)
                throw ConfigError("env config: reward '" + rname + "' has wrong length");
            Vec r(mdp.n_states);
            for (int i = 0; i < mdp.n_states; ++i) r[i] = arr.at(static_cast<std::size_t>(i)).get<double>();
            if (!r.allFinite()) throw ConfigError("env config: reward '" + rname + "' not finite");
            mdp.reward_bank[rname] = r;
        }
    }
    return {std::move(mdp), std::move(policy)};
}

inline std::vector<std::string> builtin_env_names() {
    return {"three_state_c1", "uniform_three", "t_maze", "windy_grid", "chain"};
}

}  // namespace dsm
