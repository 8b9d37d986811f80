#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "uf/camera.hpp"
#include "uf/common.hpp"

namespace uf {

/// Midpoint-rule quadrature nodes along a ray.
struct RaySamples {
    std::vector<double> t;
    std::vector<double> delta;
    std::vector<Vec3> positions;

    [[nodiscard]] std::size_t size() const { return t.size(); }
    [[nodiscard]] bool empty() const { return t.empty(); }
};

/// Uniform segments of length `step` from t_near to t_far, the last one
/// truncated; each segment is represented by its midpoint.
inline RaySamples sample_points(const Ray& ray, double step)
{
    if (!(step > 0.0)) throw ConfigError("sample_points: step must be positive");
    RaySamples s;
    const double span = ray.t_far - ray.t_near;
    if (!(span > 0.0)) return s;
    const auto n = static_cast<std::size_t>(std::ceil(span / step - 1e-12));
    s.t.reserve(n);
    s.delta.reserve(n);
    s.positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = ray.t_near + static_cast<double>(i) * step;
        const double b = std::min(ray.t_far, a + step);
        if (!(b > a)) break;
        const double mid = 0.5 * (a + b);
        s.t.push_back(mid);
        s.delta.push_back(b - a);
        s.positions.push_back(ray.at(mid));
    }
    return s;
}

/// T_i: transmittance reaching sample i before it absorbs; T_0 = 1. The
/// returned vector has one extra trailing entry, the residual after the last sample.
inline std::vector<double> transmittance_profile(std::span<const double> sigma, std::span<const double> delta)
{
    std::vector<double> T(sigma.size() + 1);
    double t = 1.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        T[i] = t;
        t *= std::exp(-sigma[i] * delta[i]);
    }
    T[sigma.size()] = t;
    return T;
}

/// Per-sample compositing weights T_i (1 - exp(-sigma_i delta_i)) plus the
/// residual transmittance as the last entry; the entries sum to 1.
inline std::vector<double> compositing_weights(std::span<const double> sigma, std::span<const double> delta)
{
    std::vector<double> w(sigma.size() + 1);
    double t = 1.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double keep = std::exp(-sigma[i] * delta[i]);
        w[i] = t * (1.0 - keep);
        t *= keep;
    }
    w[sigma.size()] = t;
    return w;
}

inline Rgb composite_color(std::span<const double> sigma, std::span<const Rgb> color, std::span<const double> delta,
                           const Rgb& background)
{
    Rgb out = Rgb::Zero();
    double t = 1.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double keep = std::exp(-sigma[i] * delta[i]);
        out += t * (1.0 - keep) * color[i];
        t *= keep;
    }
    return out + t * background;
}

} // namespace uf
