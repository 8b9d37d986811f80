#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>

#include <json.hpp>

#include "uf/camera.hpp"
#include "uf/field.hpp"
#include "uf/grid_io.hpp"
#include "uf/image.hpp"
#include "uf/parallel.hpp"
#include "uf/rng.hpp"
#include "uf/stochastic_render.hpp"

namespace uf {

inline constexpr double kDefaultTau = 0.1;

/// Binary unseen-space field on grid vertices: 1 = never observed with enough
/// transmittance, 0 = seen. Positions outside the bbox count as unseen.
struct UncertaintyGrid {
    VoxelGrid<double> grid;
    double tau = kDefaultTau;

    [[nodiscard]] double at(const Vec3& x) const { return grid.interpolate_or(x, 0, 1.0); }
    [[nodiscard]] std::size_t unseen_count() const
    {
        std::size_t n = 0;
        for (double v : grid.values()) n += v != 0.0;
        return n;
    }
    bool operator==(const UncertaintyGrid& o) const { return grid == o.grid && tau == o.tau; }
};

inline void validate_tau(double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
}

inline UncertaintyGrid init_uncertainty_grid(GridResolution res, const BoundingBox& bbox, double tau = kDefaultTau)
{
    validate_tau(tau);
    return {VoxelGrid<double>(res, 1, bbox, 1.0), tau};
}

/// March the ray through the mean density; every sample reached with
/// transmittance above tau clears its 8 enclosing vertices. Clearing is a
/// relaxed atomic store of 0, so rays may be processed concurrently.
inline void update_from_ray(UncertaintyGrid& vh, const StochasticRadianceField& f, const Ray& ray, double step)
{
    if (ray.empty()) return;
    const RaySamples s = sample_points(ray, step);
    auto values = vh.grid.values();
    double t = 1.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Vec3& x = s.positions[i];
        if (t > vh.tau && vh.grid.bbox().contains(x, 1e-9))
            for (std::size_t v : vh.grid.enclosing_vertices(x)) std::atomic_ref<double>(values[v]).store(0.0, std::memory_order_relaxed);
        const double sigma = sample_density(query_density_params(f, x), 0.0, f.config.density_shift);
        t *= std::exp(-sigma * s.delta[i]);
        if (t <= vh.tau) break;
    }
}

/// Marks every pixel ray of the camera as observed under the current geometry.
inline void mark_view_observed(UncertaintyGrid& vh, const StochasticRadianceField& f, const Camera& cam, double step = 0.0,
                               unsigned threads = 1)
{
    const double st = step > 0.0 ? step : default_step(f);
    parallel_for(static_cast<std::size_t>(cam.pixel_count()), threads, [&](std::size_t i) {
        const int col = static_cast<int>(i) % cam.width;
        const int row = static_cast<int>(i) / cam.width;
        update_from_ray(vh, f, pixel_ray(cam, col, row, f.bbox()), st);
    });
}

/// Fresh all-ones grid at the field's resolution, then every training pixel ray.
inline UncertaintyGrid estimate_uncertainty_field(const StochasticRadianceField& f, std::span<const Camera> cameras,
                                                  double tau = kDefaultTau, double step = 0.0, unsigned threads = 1)
{
    UncertaintyGrid vh = init_uncertainty_grid(f.resolution(), f.bbox(), tau);
    for (const Camera& cam : cameras) mark_view_observed(vh, f, cam, step, threads);
    return vh;
}

inline UncertaintyGrid estimate_uncertainty_field(const StochasticRadianceField& f, std::span<const Camera> cameras,
                                                  GridResolution res, double tau = kDefaultTau, double step = 0.0,
                                                  unsigned threads = 1)
{
    if (!(res == f.resolution())) throw ConfigError("estimate_uncertainty_field: resolution differs from the field");
    return estimate_uncertainty_field(f, cameras, tau, step, threads);
}

/// interp(V_H, x) plus the variance of the activated density over K draws.
inline double pointwise_uncertainty(const Vec3& x, const UncertaintyGrid& vh, const StochasticRadianceField& f, int K,
                                    std::uint64_t seed = 0)
{
    if (K < 1) throw ConfigError("pointwise_uncertainty: K must be >= 1");
    const DensityParams p = query_density_params(f, x);
    double mean = 0.0, sq = 0.0;
    for (int k = 0; k < K; ++k) {
        const double s = sample_density(p, counter_normals(seed, 0, static_cast<std::uint64_t>(k)).first, f.config.density_shift);
        mean += s;
        sq += s * s;
    }
    mean /= K;
    const double var = std::max(0.0, sq / K - mean * mean);
    return vh.at(x) + var;
}

/// Transmittance-weighted V_H along the ray in units of quadrature steps,
/// mapped through 1 - exp(-raw).
inline double ray_uncertainty_uh(const Ray& ray, const UncertaintyGrid& vh, const StochasticRadianceField& f, double step = 0.0,
                                 double* raw_out = nullptr)
{
    const double st = step > 0.0 ? step : default_step(f);
    double raw = 0.0;
    if (!ray.empty()) {
        const RaySamples s = sample_points(ray, st);
        double t = 1.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Vec3& x = s.positions[i];
            raw += t * vh.at(x) * s.delta[i] / st;
            const double sigma = sample_density(query_density_params(f, x), 0.0, f.config.density_shift);
            t *= std::exp(-sigma * s.delta[i]);
        }
    }
    if (raw_out) *raw_out = raw;
    return -std::expm1(-raw);
}

inline double combined_pixel_uncertainty(double u_c, double u_h) { return u_c + u_h; }

inline ScalarMap render_uh_map(const StochasticRadianceField& f, const UncertaintyGrid& vh, const Camera& cam, double step = 0.0,
                               unsigned threads = 1)
{
    ScalarMap out(cam.width, cam.height);
    parallel_for(static_cast<std::size_t>(cam.pixel_count()), threads, [&](std::size_t i) {
        const int col = static_cast<int>(i) % cam.width;
        const int row = static_cast<int>(i) / cam.width;
        out.values[i] = ray_uncertainty_uh(pixel_ray(cam, col, row, f.bbox()), vh, f, step);
    });
    return out;
}

inline void save_uncertainty(const fs::path& dir, const UncertaintyGrid& vh)
{
    save_grid(dir / "vh.grid", vh.grid);
    write_file(dir / "vh.json", nlohmann::json{{"tau", vh.tau}}.dump(2) + "\n");
}

inline UncertaintyGrid load_uncertainty(const fs::path& dir)
{
    UncertaintyGrid vh;
    vh.grid = load_grid(dir / "vh.grid");
    if (vh.grid.channels() != 1) throw ConfigError("uncertainty grid: expected one channel");
    for (double v : vh.grid.values())
        if (v != 0.0 && v != 1.0) throw ConfigError("uncertainty grid: values must be 0 or 1");
    try {
        vh.tau = nlohmann::json::parse(read_file(dir / "vh.json")).at("tau").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("uncertainty grid sidecar: ") + e.what());
    }
    validate_tau(vh.tau);
    return vh;
}

/// Point cloud of the unseen vertices, red.
inline std::string encode_uncertainty_ply(const UncertaintyGrid& vh) { return encode_ply(vh.grid, 0, value_to_red, 0.5); }

} // namespace uf
