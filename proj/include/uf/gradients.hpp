#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "uf/field.hpp"
#include "uf/kde_loss.hpp"
#include "uf/parallel.hpp"
#include "uf/rng.hpp"
#include "uf/stochastic_render.hpp"

namespace uf {

struct TrainingRay {
    Ray ray;
    Rgb target = Rgb::Zero();
};

/// Gradient buffers laid out exactly like the field's grids.
struct FieldGradients {
    std::vector<double> density;
    std::vector<double> color;

    static FieldGradients zeros_like(const StochasticRadianceField& f)
    {
        return {std::vector<double>(f.density.values().size(), 0.0), std::vector<double>(f.color.values().size(), 0.0)};
    }

    void clear()
    {
        std::fill(density.begin(), density.end(), 0.0);
        std::fill(color.begin(), color.end(), 0.0);
    }
};

struct LossSettings {
    int K = 16;
    double lambda = 0.001;
    double step = 0.0;  // 0 selects default_step
};

/// Gradients of one ray's loss with respect to the six interpolated raw
/// quantities at each sample: density mean, density scale, colour mean (3),
/// colour scale.
struct RayGradient {
    LossBreakdown loss;
    Rgb estimate_mean = Rgb::Zero();
    std::vector<std::array<double, 6>> per_sample;
};

/// Forward K trajectories, evaluate the KDE loss and backpropagate through
/// compositing, activations and the reparameterisation. The bandwidth is
/// treated as a constant; clamped colour channels pass no gradient.
inline RayGradient ray_backward(const RayParams& p, const FieldConfig& cfg, const Rgb& target, int K, double lambda,
                                std::uint64_t seed, std::uint64_t stream, const Rgb* fixed_bandwidth = nullptr)
{
    const std::size_t S = p.size();
    RayGradient out;
    out.per_sample.assign(S, std::array<double, 6>{});

    std::vector<double> sigma(K * S), keep(K * S), trans(K * S);
    std::vector<Rgb> color(K * S);
    std::vector<std::uint8_t> pass(K * S);
    std::vector<double> t_final(K), eps_s(K), eps_c(K), mean_sigma(K);
    std::vector<Rgb> estimates(K);

    for (int k = 0; k < K; ++k) {
        const NormalPair eps = counter_normals(seed, stream, static_cast<std::uint64_t>(k));
        eps_s[k] = eps.first;
        eps_c[k] = eps.second;
        double t = 1.0;
        double sigma_sum = 0.0;
        Rgb acc = Rgb::Zero();
        for (std::size_t i = 0; i < S; ++i) {
            const std::size_t at = k * S + i;
            const double s = sample_density(p.density[i], eps_s[k], cfg.density_shift);
            const double kp = std::exp(-s * p.samples.delta[i]);
            const Rgb raw = p.color[i].mu.array() + eps_c[k] * p.color[i].beta;
            std::uint8_t mask = 0;
            for (int ch = 0; ch < 3; ++ch)
                if (raw[ch] >= 0.0 && raw[ch] <= 1.0) mask |= static_cast<std::uint8_t>(1u << ch);
            const Rgb c = raw.cwiseMax(0.0).cwiseMin(1.0);
            sigma[at] = s;
            keep[at] = kp;
            trans[at] = t;
            color[at] = c;
            pass[at] = mask;
            acc += t * (1.0 - kp) * c;
            t *= kp;
            sigma_sum += s;
        }
        t_final[k] = t;
        estimates[k] = acc + t * cfg.background;
        mean_sigma[k] = S ? sigma_sum / static_cast<double>(S) : 0.0;
    }

    LossGradient lg;
    out.loss = kde_nll_loss(estimates, target, mean_sigma, lambda, &lg, fixed_bandwidth);
    for (const Rgb& e : estimates) out.estimate_mean += e;
    out.estimate_mean /= static_cast<double>(K);
    if (S == 0) return out;

    const double d_sigma_reg = lg.d_mean_density / static_cast<double>(S);
    for (int k = 0; k < K; ++k) {
        const Rgb& g = lg.d_estimates[k];
        Rgb suffix = t_final[k] * cfg.background;  // sum_{j>i} w_j c_j + T_final * background
        for (std::size_t ii = S; ii-- > 0;) {
            const std::size_t at = k * S + ii;
            const double w = trans[at] * (1.0 - keep[at]);
            const double t_next = trans[at] * keep[at];
            const Rgb& c = color[at];
            const double d_sigma = p.samples.delta[ii] * g.dot(t_next * c - suffix) + d_sigma_reg;
            suffix += w * c;
            // d softplus(z) / dz == 1 - exp(-softplus(z))
            const double dz = d_sigma * -std::expm1(-sigma[at]);
            auto& acc = out.per_sample[ii];
            acc[0] += dz;
            acc[1] += dz * eps_s[k] * p.density[ii].dbeta_draw;
            double d_beta_c = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                if (!(pass[at] & (1u << ch))) continue;
                const double dc = g[ch] * w;
                acc[2 + ch] += dc * p.color[ii].dmu_draw[ch];
                d_beta_c += dc;
            }
            acc[5] += d_beta_c * eps_c[k] * p.color[ii].dbeta_draw;
        }
    }
    return out;
}

/// Adds scale * per-sample gradients to the grid vertices through the trilinear weights.
inline void scatter_gradient(const RayParams& p, const RayGradient& g, double scale, int density_channels, int color_channels,
                             FieldGradients& out)
{
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p.inside[i]) continue;
        const auto& s = p.stencils[i];
        const auto& a = g.per_sample[i];
        for (int c = 0; c < 8; ++c) {
            const double w = s.weight[c] * scale;
            if (w == 0.0) continue;
            double* dg = &out.density[s.index[c] * density_channels];
            dg[channel::density_mean] += w * a[0];
            dg[channel::density_beta] += w * a[1];
            double* cg = &out.color[s.index[c] * color_channels];
            cg[0] += w * a[2];
            cg[1] += w * a[3];
            cg[2] += w * a[4];
            cg[channel::color_beta] += w * a[5];
        }
    }
}

struct BatchLoss {
    LossBreakdown mean;   // averaged over rays
    double mse = 0.0;     // of the per-ray mean estimate against the target
};

/// Batch-averaged loss and accumulated gradients (added into grads). Rays are
/// processed in parallel; gradients are scattered serially in ray order so the
/// result does not depend on the thread count.
inline BatchLoss loss_gradients(const StochasticRadianceField& f, std::span<const TrainingRay> batch, const LossSettings& ls,
                                std::uint64_t seed, FieldGradients& grads, unsigned threads = 1)
{
    if (ls.K < 2) throw ConfigError("loss_gradients: K must be >= 2");
    const double step = ls.step > 0.0 ? ls.step : default_step(f);
    BatchLoss out;
    if (batch.empty()) return out;
    const double scale = 1.0 / static_cast<double>(batch.size());
    constexpr std::size_t chunk = 256;
    std::vector<RayParams> params(std::min(chunk, batch.size()));
    std::vector<RayGradient> rg(params.size());
    for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
        const std::size_t n = std::min(chunk, batch.size() - begin);
        parallel_for(n, threads, [&](std::size_t j) {
            const TrainingRay& r = batch[begin + j];
            params[j] = prepare_ray(f, r.ray, step);
            rg[j] = ray_backward(params[j], f.config, r.target, ls.K, ls.lambda, seed, begin + j);
        });
        for (std::size_t j = 0; j < n; ++j) {
            scatter_gradient(params[j], rg[j], scale, f.density.channels(), f.color.channels(), grads);
            out.mean.nll += rg[j].loss.nll * scale;
            out.mean.regularizer += rg[j].loss.regularizer * scale;
            out.mean.total += rg[j].loss.total * scale;
            out.mse += (rg[j].estimate_mean - batch[begin + j].target).squaredNorm() / 3.0 * scale;
        }
    }
    return out;
}

/// Batch-averaged loss only, optionally with per-ray frozen bandwidths.
inline LossBreakdown batch_loss(const StochasticRadianceField& f, std::span<const TrainingRay> batch, const LossSettings& ls,
                                std::uint64_t seed, const std::vector<Rgb>* frozen_bandwidths = nullptr,
                                std::vector<Rgb>* bandwidths_out = nullptr)
{
    const double step = ls.step > 0.0 ? ls.step : default_step(f);
    LossBreakdown out;
    if (bandwidths_out) bandwidths_out->resize(batch.size());
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const RayParams p = prepare_ray(f, batch[j].ray, step);
        std::vector<Rgb> est(ls.K);
        std::vector<double> ms(ls.K);
        for (int k = 0; k < ls.K; ++k) {
            const NormalPair eps = counter_normals(seed, j, static_cast<std::uint64_t>(k));
            est[k] = render_trajectory(p, eps.first, eps.second, f.config, &ms[k]);
        }
        Rgb h;
        const LossBreakdown l = kde_nll_loss(est, batch[j].target, ms, ls.lambda, nullptr,
                                             frozen_bandwidths ? &(*frozen_bandwidths)[j] : nullptr, &h);
        if (bandwidths_out) (*bandwidths_out)[j] = h;
        out.nll += l.nll * scale;
        out.regularizer += l.regularizer * scale;
        out.total += l.total * scale;
    }
    return out;
}

} // namespace uf
