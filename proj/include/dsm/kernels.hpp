#pragma once

#include "dsm/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dsm {

enum class StateKernelFamily { rational_quadric_mixture, gaussian };

/// State kernel over embedded coordinates. The default is a mixture of
/// rational quadric kernels sum_a (1 + d / (2a))^{-a} evaluated on the
/// squared Euclidean distance d; a Gaussian kernel is available as an
/// alternative.
struct StateKernelSpec {
    StateKernelFamily family = StateKernelFamily::rational_quadric_mixture;
    std::vector<double> mixture_alphas = {0.2, 0.5, 1.0, 2.0, 5.0};
    double length_scale = 1.0;  // gaussian only

    void validate() const {
        if (family == StateKernelFamily::rational_quadric_mixture) {
            if (mixture_alphas.empty()) throw ConfigError("StateKernelSpec: empty alpha mixture");
            for (double a : mixture_alphas)
                if (!(a > 0.0)) throw ConfigError("StateKernelSpec: alphas must be positive");
        } else if (!(length_scale > 0.0)) {
            throw ConfigError("StateKernelSpec: length scale must be positive");
        }
    }
};

inline double state_kernel_eval(const StateKernelSpec& spec, const Vec& z1, const Vec& z2) {
    if (z1.size() != z2.size())
        throw DomainError("state_kernel_eval: coordinate dimensions differ");
    if (!z1.allFinite() || !z2.allFinite())
        throw DomainError("state_kernel_eval: coordinates must be finite");
    const double d = (z1 - z2).squaredNorm();
    if (spec.family == StateKernelFamily::gaussian)
        return std::exp(-d / (2.0 * spec.length_scale * spec.length_scale));
    double val = 0.0;
    for (double a : spec.mixture_alphas) val += std::pow(1.0 + d / (2.0 * a), -a);
    return val;
}

/// Kernel values between all pairs of states, precomputed once so that MMDs
/// between categorical distributions reduce to quadratic forms.
struct GramCache {
    Mat gram;  // n_states x n_states, symmetric PSD
};

inline GramCache build_gram(const Mat& embedding, const StateKernelSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(embedding.rows());
    Mat gram(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double v = state_kernel_eval(spec, embedding.row(i), embedding.row(j));
            gram(i, j) = v;
            gram(j, i) = v;
        }
    }
    return GramCache{std::move(gram)};
}

/// Exact squared MMD between two categorical distributions on the gram's
/// state set: (p - q)^T K (p - q), clamped at zero against rounding.
inline double mmd2_exact(const Vec& p, const Vec& q, const GramCache& gram) {
    if (p.size() != gram.gram.rows() || q.size() != gram.gram.rows())
        throw DomainError("mmd2_exact: distribution length does not match gram");
    const Vec diff = p - q;
    return std::max(0.0, diff.dot(gram.gram * diff));
}

/// Unbiased U-statistic estimator of squared MMD from two state-sample
/// sequences. May be negative; never clamped.
inline double mmd2_unbiased(const std::vector<int>& xs, const std::vector<int>& ys,
                            const GramCache& gram) {
    const auto n1 = static_cast<std::ptrdiff_t>(xs.size());
    const auto n2 = static_cast<std::ptrdiff_t>(ys.size());
    if (n1 < 2 || n2 < 2)
        throw DomainError("mmd2_unbiased: need at least 2 samples per side");
    const Mat& k = gram.gram;
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::ptrdiff_t i = 0; i < n1; ++i)
        for (std::ptrdiff_t j = i + 1; j < n1; ++j) xx += k(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
    for (std::ptrdiff_t i = 0; i < n2; ++i)
        for (std::ptrdiff_t j = i + 1; j < n2; ++j) yy += k(ys[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
    for (std::ptrdiff_t i = 0; i < n1; ++i)
        for (std::ptrdiff_t j = 0; j < n2; ++j) xy += k(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
    const double c1 = static_cast<double>(n1) * static_cast<double>(n1 - 1) / 2.0;
    const double c2 = static_cast<double>(n2) * static_cast<double>(n2 - 1) / 2.0;
    return xx / c1 + yy / c2 - 2.0 * xy / (static_cast<double>(n1) * static_cast<double>(n2));
}

enum class SigmaPolicy { fixed, median_heuristic };

/// Model-kernel configuration: the radial profile is fixed to the inverse
/// multiquadric rho(y) = (1 + y^2)^{-1/2}; the bandwidth either stays fixed
/// or follows the median heuristic.
struct ModelKernelSpec {
    SigmaPolicy sigma_policy = SigmaPolicy::median_heuristic;
    double sigma = 1.0;  // used when sigma_policy == fixed

    void validate() const {
        if (sigma_policy == SigmaPolicy::fixed && !(sigma > 0.0))
            throw ConfigError("ModelKernelSpec: fixed sigma must be positive");
    }
};

/// rho(MMD / sigma) written directly in terms of squared MMD.
inline double model_kernel_from_mmd2(double mmd2, double sigma) {
    return 1.0 / std::sqrt(1.0 + std::max(mmd2, 0.0) / (sigma * sigma));
}

/// Kernel on state distributions: k(theta1, theta2) = rho(MMD(theta1, theta2) / sigma).
inline double model_kernel(const Vec& theta1, const Vec& theta2, const GramCache& gram,
                           const ModelKernelSpec& mks, double sigma) {
    mks.validate();
    if (!(sigma > 0.0)) throw DomainError("model_kernel: sigma must be positive");
    return model_kernel_from_mmd2(mmd2_exact(theta1, theta2, gram), sigma);
}

namespace detail {

/// Pairwise squared MMDs between the rows of two atom matrices via the
/// quadratic-form identity mmd2(i, j) = Qa_ii + Qb_jj - 2 (A K B^T)_ij.
inline Mat pairwise_mmd2(const Mat& atoms_a, const Mat& atoms_b, const GramCache& gram) {
    const Mat ka = atoms_a * gram.gram;
    const Vec qa = (ka.array() * atoms_a.array()).rowwise().sum();
    const Vec qb = (atoms_b * gram.gram).cwiseProduct(atoms_b).rowwise().sum();
    Mat out = -2.0 * (ka * atoms_b.transpose());
    out.colwise() += qa;
    out.rowwise() += qb.transpose();
    return out.cwiseMax(0.0);
}

inline double lower_median(std::vector<double>& values) {
    const auto mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    return values[mid];
}

}  // namespace detail

/// Median-heuristic bandwidth: sigma^2 is the median of all pairwise squared
/// MMDs across source-source, target-target, and source-target pairs
/// (lower-middle element for even counts), floored at 1e-8. Callers treat the
/// result as a constant; it carries no gradient.
inline double median_bandwidth(const Mat& source_atoms, const Mat& target_atoms,
                               const GramCache& gram) {
    const auto ms = source_atoms.rows(), mt = target_atoms.rows();
    if (ms + mt < 2) throw DomainError("median_bandwidth: need at least 2 atoms");
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(ms * ms + mt * mt + ms * mt));
    auto push_block = [&entries](const Mat& block) {
        for (Eigen::Index i = 0; i < block.rows(); ++i)
            for (Eigen::Index j = 0; j < block.cols(); ++j) entries.push_back(block(i, j));
    };
    if (ms > 0) push_block(detail::pairwise_mmd2(source_atoms, source_atoms, gram));
    if (mt > 0) push_block(detail::pairwise_mmd2(target_atoms, target_atoms, gram));
    if (ms > 0 && mt > 0) push_block(detail::pairwise_mmd2(source_atoms, target_atoms, gram));
    const double sigma2 = std::max(detail::lower_median(entries), 1e-8);
    return std::sqrt(sigma2);
}

inline double resolve_sigma(const Mat& source_atoms, const Mat& target_atoms,
                            const GramCache& gram, const ModelKernelSpec& mks) {
    mks.validate();
    return mks.sigma_policy == SigmaPolicy::fixed
               ? mks.sigma
               : median_bandwidth(source_atoms, target_atoms, gram);
}

/// Squared MMD between two equally weighted atom collections under the model
/// kernel, as a biased V-statistic (diagonal terms included):
///   (1/m^2) [sum_ij k(a_i, a_j) + sum_ij k(b_i, b_j) - 2 sum_ij k(a_i, b_j)].
inline double model_mmd2(const Mat& model_a, const Mat& model_b, const GramCache& gram,
                         const ModelKernelSpec& mks) {
    if (model_a.rows() != model_b.rows() || model_a.rows() < 1)
        throw DomainError("model_mmd2: atom counts must match and be positive");
    const double m = static_cast<double>(model_a.rows());
    const double sigma = resolve_sigma(model_a, model_b, gram, mks);
    auto block_sum = [&](const Mat& a, const Mat& b) {
        const Mat q = detail::pairwise_mmd2(a, b, gram);
        double s = 0.0;
        for (Eigen::Index i = 0; i < q.rows(); ++i)
            for (Eigen::Index j = 0; j < q.cols(); ++j) s += model_kernel_from_mmd2(q(i, j), sigma);
        return s;
    };
    const double val = (block_sum(model_a, model_a) + block_sum(model_b, model_b) -
                        2.0 * block_sum(model_a, model_b)) /
                       (m * m);
    return std::max(val, 0.0);
}

}  // namespace dsm
