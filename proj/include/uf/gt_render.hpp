#pragma once

#include <vector>

#include "uf/camera.hpp"
#include "uf/image.hpp"
#include "uf/parallel.hpp"
#include "uf/render.hpp"
#include "uf/scene.hpp"

namespace uf {

struct GtFrame {
    Image color;
    ScalarMap depth;  // expected termination depth; 0 where nothing is hit
};

/// Composites one ray against the ground-truth occupancy with the renderer's quadrature.
inline Rgb gt_render_ray(const GroundTruthScene& scene, const Ray& ray, double step, double* depth = nullptr)
{
    const RaySamples s = sample_points(ray, step);
    std::vector<double> sigma(s.size());
    std::vector<Rgb> color(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Primitive* p = scene.find(s.positions[i]);
        sigma[i] = p ? p->density : 0.0;
        color[i] = p ? p->albedo : scene.background;
    }
    if (depth) {
        const auto w = compositing_weights(sigma, s.delta);
        double acc = 0.0, opacity = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            acc += w[i] * s.t[i];
            opacity += w[i];
        }
        *depth = opacity > 1e-6 ? acc / opacity : 0.0;
    }
    return composite_color(sigma, color, s.delta, scene.background);
}

inline GtFrame gt_render(const GroundTruthScene& scene, const Camera& cam, double step, unsigned threads = 1)
{
    if (!(step > 0.0)) throw ConfigError("gt_render: step must be positive");
    GtFrame out{Image(cam.width, cam.height), ScalarMap(cam.width, cam.height)};
    parallel_for(static_cast<std::size_t>(cam.pixel_count()), threads, [&](std::size_t i) {
        const int col = static_cast<int>(i) % cam.width;
        const int row = static_cast<int>(i) / cam.width;
        const Ray ray = pixel_ray(cam, col, row, scene.bbox);
        out.color.pixels[i] = gt_render_ray(scene, ray, step, &out.depth.values[i]);
    });
    return out;
}

} // namespace uf
