#pragma once

#include "dsm/common.hpp"
#include "dsm/mdp.hpp"

#include <cmath>

namespace dsm {

/// Normalized successor matrix Psi = (1 - gamma) (I - gamma P)^{-1}.
/// Rows are probability vectors: Psi[x, x'] is the discounted fraction of
/// time spent in x' when starting from x.
struct SuccessorMatrix {
    Mat psi;
    double gamma = 0.0;
    bool renormalized = false;  // set when a row drifted beyond 1e-12 and was rescaled
};

inline SuccessorMatrix compute_sm(const DiscountedMdp& dm) {
    const int n = dm.n_states();
    const Mat a = Mat::Identity(n, n) - dm.gamma * dm.p_pi;
    Eigen::PartialPivLU<Mat> lu(a);
    Mat psi = lu.solve((1.0 - dm.gamma) * Mat::Identity(n, n));
    if (!psi.allFinite())
        throw NumericError("compute_sm: linear solve produced non-finite entries");
    SuccessorMatrix sm{std::move(psi), dm.gamma, false};
    for (int x = 0; x < n; ++x) {
        const double s = sm.psi.row(x).sum();
        if (std::abs(s - 1.0) > 1e-12) {
            sm.psi.row(x) /= s;
            sm.renormalized = true;
        }
    }
    return sm;
}

/// Value function from the successor matrix: V = (1 - gamma)^{-1} Psi r.
inline Vec value_from_sm(const SuccessorMatrix& sm, const Vec& r) {
    if (r.size() != sm.psi.rows())
        throw DomainError("value_from_sm: reward length does not match state count");
    if (!r.allFinite()) throw DomainError("value_from_sm: reward must be finite");
    return (sm.psi * r) / (1.0 - sm.gamma);
}

struct RecoveredTransition {
    Mat p_pi;
    double condition_estimate = 0.0;  // 1-norm condition number of Psi
};

/// Inverts the successor matrix back to the one-step kernel:
/// P = gamma^{-1} (I - (1 - gamma) Psi^{-1}), with Psi^{-1} obtained from a
/// solve against the identity rather than an explicit inverse.
inline RecoveredTransition recover_transition(const SuccessorMatrix& sm) {
    if (sm.gamma <= 0.0)
        throw DomainError("recover_transition: undefined at gamma = 0");
    const int n = static_cast<int>(sm.psi.rows());
    Eigen::PartialPivLU<Mat> lu(sm.psi);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14))
        throw NumericError("recover_transition: successor matrix is ill-conditioned (rcond = " +
                           std::to_string(rcond) + ")");
    const Mat psi_inv = lu.solve(Mat::Identity(n, n));
    Mat p = (Mat::Identity(n, n) - (1.0 - sm.gamma) * psi_inv) / sm.gamma;
    if (!p.allFinite())
        throw NumericError("recover_transition: non-finite entries in recovered kernel");
    return RecoveredTransition{std::move(p), 1.0 / rcond};
}

}  // namespace dsm
