#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "uf/camera.hpp"
#include "uf/field.hpp"
#include "uf/image.hpp"
#include "uf/parallel.hpp"
#include "uf/render.hpp"
#include "uf/rng.hpp"

namespace uf {

/// Quadrature nodes of a ray with the field parameters interpolated at each.
struct RayParams {
    RaySamples samples;
    std::vector<CellStencil> stencils;
    std::vector<DensityParams> density;
    std::vector<ColorParams> color;
    std::vector<std::uint8_t> inside;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
};

inline RayParams prepare_ray(const StochasticRadianceField& f, const Ray& ray, double step)
{
    RayParams p;
    p.samples = sample_points(ray, step);
    const std::size_t n = p.samples.size();
    p.stencils.resize(n);
    p.density.resize(n);
    p.color.resize(n);
    p.inside.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& x = p.samples.positions[i];
        if (!f.bbox().contains(x, 1e-9)) {
            p.density[i] = query_density_params(f, x);
            p.color[i] = query_color_params(f, x);
            continue;
        }
        p.inside[i] = 1;
        p.stencils[i] = f.density.stencil(x);
        p.density[i] = density_params_at(f, p.stencils[i]);
        p.color[i] = color_params_at(f, p.stencils[i]);
    }
    return p;
}

/// Deterministic (noise-free) densities along a prepared ray.
inline std::vector<double> mean_densities(const RayParams& p, double shift)
{
    std::vector<double> sigma(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) sigma[i] = sample_density(p.density[i], 0.0, shift);
    return sigma;
}

/// Called once per (trajectory, sample) with the noise pair applied there.
using TrajectoryObserver = std::function<void(int k, std::size_t sample, double eps_sigma, double eps_color)>;

/// One Monte-Carlo realisation of the field along the ray: a single noise pair
/// shared by every sample point, composited over the background.
inline Rgb render_trajectory(const RayParams& p, double eps_sigma, double eps_color, const FieldConfig& cfg,
                             double* mean_sigma = nullptr, int k = 0, const TrajectoryObserver* observer = nullptr)
{
    Rgb out = Rgb::Zero();
    double t = 1.0;
    double sigma_sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (observer) (*observer)(k, i, eps_sigma, eps_color);
        const double sigma = sample_density(p.density[i], eps_sigma, cfg.density_shift);
        const Rgb c = sample_color(p.color[i], eps_color);
        const double keep = std::exp(-sigma * p.samples.delta[i]);
        out += t * (1.0 - keep) * c;
        t *= keep;
        sigma_sum += sigma;
    }
    if (mean_sigma) *mean_sigma = p.size() ? sigma_sum / static_cast<double>(p.size()) : 0.0;
    return out + t * cfg.background;
}

struct PixelEstimate {
    std::vector<Rgb> colors;
    Rgb mean = Rgb::Zero();
    double u_c = 0.0;
};

/// Population variance per channel, averaged over the three channels.
/// Computed on offsets from the first draw, so identical draws give exactly 0.
inline double color_variance(std::span<const Rgb> colors, Rgb* mean_out = nullptr)
{
    const Rgb& ref = colors.front();
    Rgb shift = Rgb::Zero();
    for (const Rgb& c : colors) shift += c - ref;
    shift /= static_cast<double>(colors.size());
    Rgb var = Rgb::Zero();
    for (const Rgb& c : colors) var += (c - ref - shift).cwiseAbs2();
    var /= static_cast<double>(colors.size());
    if (mean_out) *mean_out = ref + shift;
    return var.mean();
}

/// K trajectories with noise drawn from the (seed, stream, k) counter stream.
inline PixelEstimate render_pixel_stochastic(const RayParams& p, const FieldConfig& cfg, int K, std::uint64_t seed,
                                             std::uint64_t stream, const TrajectoryObserver* observer = nullptr)
{
    if (K < 1) throw ConfigError("render_pixel_stochastic: K must be >= 1");
    PixelEstimate est;
    est.colors.resize(K);
    for (int k = 0; k < K; ++k) {
        const NormalPair eps = counter_normals(seed, stream, static_cast<std::uint64_t>(k));
        est.colors[k] = render_trajectory(p, eps.first, eps.second, cfg, nullptr, k, observer);
    }
    est.u_c = color_variance(est.colors, &est.mean);
    return est;
}

inline PixelEstimate render_pixel_stochastic(const StochasticRadianceField& f, const Ray& ray, int K, double step,
                                             std::uint64_t seed, std::uint64_t stream)
{
    return render_pixel_stochastic(prepare_ray(f, ray, step), f.config, K, seed, stream);
}

/// Half the smallest voxel edge, the default quadrature step.
inline double default_step(const StochasticRadianceField& f) { return 0.5 * f.density.cell_size().minCoeff(); }

enum class RenderMode { mean, stochastic };

struct RenderOutput {
    Image color;
    ScalarMap u_c;
};

struct RenderSettings {
    int K = 16;                 // 0 skips the U_C map in mean mode
    double step = 0.0;          // 0 selects default_step
    std::uint64_t seed = 0;
    RenderMode mode = RenderMode::mean;
    unsigned threads = 1;
};

/// Mean mode colours pixels with the noise-free field; stochastic mode with the
/// average of the K draws. The U_C map is computed from the K draws in both.
inline RenderOutput render_image(const StochasticRadianceField& f, const Camera& cam, const RenderSettings& rs)
{
    const double step = rs.step > 0.0 ? rs.step : default_step(f);
    RenderOutput out{Image(cam.width, cam.height), ScalarMap(cam.width, cam.height)};
    if (rs.mode == RenderMode::stochastic && rs.K < 1) throw ConfigError("render_image: stochastic mode needs K >= 1");
    parallel_for(static_cast<std::size_t>(cam.pixel_count()), rs.threads, [&](std::size_t i) {
        const int col = static_cast<int>(i) % cam.width;
        const int row = static_cast<int>(i) / cam.width;
        const RayParams p = prepare_ray(f, pixel_ray(cam, col, row, f.bbox()), step);
        Rgb color = render_trajectory(p, 0.0, 0.0, f.config);
        if (rs.K >= 1) {
            const PixelEstimate est = render_pixel_stochastic(p, f.config, rs.K, rs.seed, i);
            out.u_c.values[i] = est.u_c;
            if (rs.mode == RenderMode::stochastic) color = est.mean;
        }
        out.color.pixels[i] = color;
    });
    return out;
}

} // namespace uf
