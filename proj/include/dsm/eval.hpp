#pragma once

#include "dsm/common.hpp"
#include "dsm/dp.hpp"
#include "dsm/mdp.hpp"
#include "dsm/parallel.hpp"
#include "dsm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace dsm {

enum class ReturnSource { dsm, monte_carlo };

/// Equally weighted particle set of scalar returns.
struct ReturnDistribution {
    std::vector<double> particles;
    ReturnSource source = ReturnSource::dsm;
};

/// Zero-shot return distribution at state x: one particle per model atom,
/// g_i = <theta_i(x), r> / (1 - gamma).
inline ReturnDistribution returns_from_dsm(const DeltaModel& model, int x, const Vec& r) {
    if (x < 0 || x >= model.n_states()) throw DomainError("returns_from_dsm: state out of range");
    if (r.size() != model.atoms.front().cols())
        throw DomainError("returns_from_dsm: reward length mismatch");
    if (!r.allFinite()) throw DomainError("returns_from_dsm: reward must be finite");
    ReturnDistribution out;
    out.source = ReturnSource::dsm;
    const Mat& atoms = model.atoms[static_cast<std::size_t>(x)];
    out.particles.resize(static_cast<std::size_t>(atoms.rows()));
    for (Eigen::Index i = 0; i < atoms.rows(); ++i)
        out.particles[static_cast<std::size_t>(i)] = atoms.row(i).dot(r) / (1.0 - model.gamma);
    return out;
}

inline double particle_mean(const ReturnDistribution& dist) {
    if (dist.particles.empty()) throw DomainError("particle_mean: empty distribution");
    double s = 0.0;
    for (double g : dist.particles) s += g;
    return s / static_cast<double>(dist.particles.size());
}

/// Lower-tail conditional value at risk: the mean of the worst
/// ceil(alpha m) particles. cvar(1) is the plain mean.
inline double cvar(const ReturnDistribution& dist, double alpha) {
    if (dist.particles.empty()) throw DomainError("cvar: empty distribution");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("cvar: alpha must lie in (0, 1]");
    std::vector<double> sorted = dist.particles;
    std::sort(sorted.begin(), sorted.end());
    const auto k = static_cast<std::size_t>(
        std::ceil(alpha * static_cast<double>(sorted.size())));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += sorted[i];
    return s / static_cast<double>(k);
}

/// l2 distance between the two empirical CDFs, integrated exactly over the
/// merged sorted support (no binning).
inline double cramer_distance(const ReturnDistribution& a, const ReturnDistribution& b) {
    if (a.particles.empty() || b.particles.empty())
        throw DomainError("cramer_distance: empty distribution");
    std::vector<double> sa = a.particles, sb = b.particles;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<double> support;
    support.reserve(sa.size() + sb.size());
    support.insert(support.end(), sa.begin(), sa.end());
    support.insert(support.end(), sb.begin(), sb.end());
    std::sort(support.begin(), support.end());
    double integral = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k + 1 < support.size(); ++k) {
        while (ia < sa.size() && sa[ia] <= support[k]) ++ia;
        while (ib < sb.size() && sb[ib] <= support[k]) ++ib;
        const double fa = static_cast<double>(ia) / static_cast<double>(sa.size());
        const double fb = static_cast<double>(ib) / static_cast<double>(sb.size());
        integral += (fa - fb) * (fa - fb) * (support[k + 1] - support[k]);
    }
    return std::sqrt(integral);
}

struct McOracleResult {
    ReturnDistribution returns;
    Mat occupancy;  // n_traj x n_states; each row an exact probability vector
};

inline int mc_default_horizon(double gamma, double tail = 1e-6) {
    if (gamma <= 0.0) return 1;
    return static_cast<int>(std::ceil(std::log(tail) / std::log(gamma)));
}

/// Monte Carlo ground truth: samples trajectories, converts each into a
/// truncated discounted occupancy particle (renormalized by 1/(1 - gamma^T)
/// so rows are exact simplex vectors) and a truncated return.
inline McOracleResult mc_oracle(const DiscountedMdp& dm, int x0, const Vec& r, int n_traj,
                                int horizon, std::uint64_t seed, int threads = 1) {
    if (x0 < 0 || x0 >= dm.n_states()) throw DomainError("mc_oracle: state out of range");
    if (r.size() != dm.n_states()) throw DomainError("mc_oracle: reward length mismatch");
    if (n_traj < 1 || horizon < 1) throw DomainError("mc_oracle: need positive sizes");
    const double gamma = dm.gamma;
    const double norm = 1.0 - std::pow(gamma, horizon);

    McOracleResult out;
    out.returns.source = ReturnSource::monte_carlo;
    out.returns.particles.resize(static_cast<std::size_t>(n_traj));
    out.occupancy = Mat::Zero(n_traj, dm.n_states());
    parallel_for(n_traj, threads, [&](int t) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
        const Trajectory traj = sample_trajectory(dm, x0, horizon, rng);
        double g = 0.0, w = 1.0;
        for (int k = 0; k < horizon; ++k) {
            const int x = traj.states[static_cast<std::size_t>(k)];
            out.occupancy(t, x) += (1.0 - gamma) * w / norm;
            g += w * r[x];
            w *= gamma;
        }
        out.returns.particles[static_cast<std::size_t>(t)] = g;
    });
    return out;
}

struct CriterionSpec {
    enum class Kind { mean, cvar } kind = Kind::mean;
    double alpha = 0.4;  // cvar level

    std::string name() const {
        if (kind == Kind::mean) return "mean";
        return "cvar(" + std::to_string(alpha) + ")";
    }
};

struct PolicyScore {
    std::string policy;
    double value = 0.0;
    bool tied_with_next = false;
};

struct RankingResult {
    std::string criterion;
    std::vector<PolicyScore> ordering;  // best first
};

/// Ranks policies by risk functionals of their zero-shot return
/// distributions at x0. Exact ties keep name order and carry a tie flag.
inline std::vector<RankingResult> rank_policies(const std::map<std::string, DeltaModel>& models,
                                                const Vec& r, int x0,
                                                const std::vector<CriterionSpec>& criteria) {
    if (models.empty()) throw DomainError("rank_policies: no models");
    std::vector<RankingResult> results;
    for (const CriterionSpec& crit : criteria) {
        RankingResult res;
        res.criterion = crit.name();
        for (const auto& [name, model] : models) {
            const ReturnDistribution dist = returns_from_dsm(model, x0, r);
            const double value =
                crit.kind == CriterionSpec::Kind::mean ? particle_mean(dist) : cvar(dist, crit.alpha);
            res.ordering.push_back({name, value, false});
        }
        std::stable_sort(res.ordering.begin(), res.ordering.end(),
                         [](const PolicyScore& a, const PolicyScore& b) { return a.value > b.value; });
        for (std::size_t i = 0; i + 1 < res.ordering.size(); ++i)
            if (res.ordering[i].value == res.ordering[i + 1].value)
                res.ordering[i].tied_with_next = true;
        results.push_back(std::move(res));
    }
    return results;
}

struct RiskReport {
    double mean = 0.0;
    std::map<double, double> cvar_by_level;
};

inline RiskReport risk_report(const ReturnDistribution& dist,
                              const std::vector<double>& levels = {0.4}) {
    RiskReport report;
    report.mean = particle_mean(dist);
    for (double a : levels) report.cvar_by_level[a] = cvar(dist, a);
    return report;
}

}  // namespace dsm
