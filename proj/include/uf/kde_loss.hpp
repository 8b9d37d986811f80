#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "uf/common.hpp"

namespace uf {

inline constexpr double kBandwidthFloor = 1e-6;

/// Diagonal KDE bandwidth H_jj = max(0.98 Var_j / K^(1/7), floor), with the
/// population variance of each colour channel over the K estimates.
inline Rgb kde_bandwidth(std::span<const Rgb> estimates, double floor = kBandwidthFloor)
{
    const std::size_t K = estimates.size();
    if (K < 2) throw ConfigError("kde_bandwidth: need K >= 2");
    Rgb mean = Rgb::Zero();
    for (const Rgb& c : estimates) mean += c;
    mean /= static_cast<double>(K);
    Rgb var = Rgb::Zero();
    for (const Rgb& c : estimates) var += (c - mean).cwiseAbs2();
    var /= static_cast<double>(K);
    const double scale = 0.98 / std::pow(static_cast<double>(K), 1.0 / 7.0);
    return (scale * var).cwiseMax(floor);
}

struct LossBreakdown {
    double nll = 0.0;
    double regularizer = 0.0;
    double total = 0.0;
};

/// Gradients of the per-ray loss with respect to its inputs, bandwidth held fixed.
struct LossGradient {
    std::vector<Rgb> d_estimates;
    double d_mean_density = 0.0;  // identical for every trajectory: lambda / K
};

/// Negative log of a Gaussian KDE of the K colour estimates evaluated at the
/// target, plus (lambda / K) * sum of per-trajectory mean densities. The
/// mixture is evaluated with a max-shifted log-sum-exp. A caller-provided
/// bandwidth replaces the one estimated from the batch (used to evaluate the
/// loss with H frozen, matching the stop-gradient convention of `grad`).
inline LossBreakdown kde_nll_loss(std::span<const Rgb> estimates, const Rgb& target, std::span<const double> mean_densities,
                                  double lambda, LossGradient* grad = nullptr, const Rgb* fixed_bandwidth = nullptr,
                                  Rgb* bandwidth_out = nullptr)
{
    const std::size_t K = estimates.size();
    if (K < 2) throw ConfigError("kde_nll_loss: need K >= 2");
    if (mean_densities.size() != K) throw ConfigError("kde_nll_loss: one mean density per trajectory required");
    if (!all_finite(target)) throw NumericError("kde_nll_loss: non-finite target");
    for (std::size_t k = 0; k < K; ++k)
        if (!all_finite(estimates[k]) || !std::isfinite(mean_densities[k])) throw NumericError("kde_nll_loss: non-finite input");
    if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("kde_nll_loss: lambda must be finite and >= 0");

    const Rgb h = fixed_bandwidth ? *fixed_bandwidth : kde_bandwidth(estimates);
    if (bandwidth_out) *bandwidth_out = h;
    const double log_norm = -1.5 * std::log(2.0 * std::numbers::pi) - 0.5 * (std::log(h[0]) + std::log(h[1]) + std::log(h[2]));

    std::vector<double> log_kernel(K);
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        const Rgb r = estimates[k] - target;
        log_kernel[k] = log_norm - 0.5 * (r.cwiseAbs2().cwiseQuotient(h)).sum();
        max_log = std::max(max_log, log_kernel[k]);
    }
    double sum = 0.0;
    for (double lk : log_kernel) sum += std::exp(lk - max_log);
    const double log_mixture = max_log + std::log(sum) - std::log(static_cast<double>(K));

    LossBreakdown out;
    out.nll = -log_mixture;
    double sigma_sum = 0.0;
    for (double s : mean_densities) sigma_sum += s;
    out.regularizer = lambda / static_cast<double>(K) * sigma_sum;
    out.total = out.nll + out.regularizer;

    if (grad) {
        grad->d_estimates.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            const double w = std::exp(log_kernel[k] - max_log) / sum;  // posterior responsibility
            grad->d_estimates[k] = w * (estimates[k] - target).cwiseQuotient(h);
        }
        grad->d_mean_density = lambda / static_cast<double>(K);
    }
    return out;
}

} // namespace uf
