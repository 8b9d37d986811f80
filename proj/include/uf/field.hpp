#pragma once

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "uf/common.hpp"
#include "uf/grid.hpp"
#include "uf/grid_io.hpp"
#include "uf/scene.hpp"

namespace uf {

/// Activation and initialisation settings of a stochastic radiance field.
struct FieldConfig {
    double density_shift = -2.0;      // sigma = softplus(raw + shift)
    double beta_floor = 1e-4;         // lower bound on activated scales
    double init_density_raw = -8.0;   // near-empty prior
    double init_beta = 0.1;
    Rgb background = Rgb::Ones();
};

inline nlohmann::json to_json(const FieldConfig& c)
{
    return {{"density_shift", c.density_shift},
            {"beta_floor", c.beta_floor},
            {"init_density_raw", c.init_density_raw},
            {"init_beta", c.init_beta},
            {"background", vec3_to_json(c.background)}};
}

inline FieldConfig field_config_from_json(const nlohmann::json& j)
{
    FieldConfig c;
    try {
        c.density_shift = j.value("density_shift", c.density_shift);
        c.beta_floor = j.value("beta_floor", c.beta_floor);
        c.init_density_raw = j.value("init_density_raw", c.init_density_raw);
        c.init_beta = j.value("init_beta", c.init_beta);
        if (j.contains("background")) c.background = vec3_from_json(j["background"]);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field config: ") + e.what());
    }
    if (!(c.beta_floor > 0.0) || !(c.init_beta > c.beta_floor)) throw ConfigError("field config: need 0 < beta_floor < init_beta");
    return c;
}

/// Density grid channels: raw mean, raw scale. Colour grid channels: raw mean
/// RGB (pre-sigmoid), raw scale.
namespace channel {
inline constexpr int density_mean = 0;
inline constexpr int density_beta = 1;
inline constexpr int color_beta = 3;
} // namespace channel

struct StochasticRadianceField {
    VoxelGrid<double> density;  // 2 channels
    VoxelGrid<double> color;    // 4 channels
    FieldConfig config;

    [[nodiscard]] const BoundingBox& bbox() const { return density.bbox(); }
    [[nodiscard]] const GridResolution& resolution() const { return density.resolution(); }

    bool operator==(const StochasticRadianceField& o) const { return density == o.density && color == o.color; }
};

/// Gaussian parameters of the density at a point: raw mean and activated scale.
struct DensityParams {
    double mu_raw = 0.0;
    double beta = 0.0;
    double dbeta_draw = 0.0;  // d beta / d raw scale (0 when clamped at the floor)
};

struct ColorParams {
    Rgb mu = Rgb::Zero();     // activated mean in (0, 1)^3
    double beta = 0.0;
    double dbeta_draw = 0.0;
    Rgb dmu_draw = Rgb::Zero();  // sigmoid derivative per channel
};

/// Floored softplus scale and its derivative with respect to the raw value.
inline std::pair<double, double> activate_beta(double raw, double floor)
{
    const double b = softplus(raw);
    if (b <= floor) return {floor, 0.0};
    return {b, sigmoid(raw)};
}

inline constexpr double kOutsideDensityRaw = -1000.0;

inline DensityParams density_params_at(const StochasticRadianceField& f, const CellStencil& s)
{
    DensityParams p;
    p.mu_raw = f.density.interpolate(s, channel::density_mean);
    const auto [b, db] = activate_beta(f.density.interpolate(s, channel::density_beta), f.config.beta_floor);
    p.beta = b;
    p.dbeta_draw = db;
    return p;
}

inline ColorParams color_params_at(const StochasticRadianceField& f, const CellStencil& s)
{
    ColorParams p;
    for (int ch = 0; ch < 3; ++ch) {
        const double m = sigmoid(f.color.interpolate(s, ch));
        p.mu[ch] = m;
        p.dmu_draw[ch] = m * (1.0 - m);
    }
    const auto [b, db] = activate_beta(f.color.interpolate(s, channel::color_beta), f.config.beta_floor);
    p.beta = b;
    p.dbeta_draw = db;
    return p;
}

/// Interpolated density parameters; outside the bbox the density is
/// effectively zero with minimal scale.
inline DensityParams query_density_params(const StochasticRadianceField& f, const Vec3& x)
{
    if (!f.bbox().contains(x, 1e-9)) return {kOutsideDensityRaw, f.config.beta_floor, 0.0};
    return density_params_at(f, f.density.stencil(x));
}

/// Interpolated colour parameters; outside the bbox the background colour.
inline ColorParams query_color_params(const StochasticRadianceField& f, const Vec3& x)
{
    if (!f.bbox().contains(x, 1e-9)) return {f.config.background, f.config.beta_floor, 0.0, Rgb::Zero()};
    return color_params_at(f, f.color.stencil(x));
}

/// Reparameterised density draw sigma = softplus(mu + eps * beta + shift).
inline double sample_density(const DensityParams& p, double eps, double shift = 0.0)
{
    return softplus(p.mu_raw + eps * p.beta + shift);
}

/// Reparameterised colour draw, clamped to [0, 1] per channel.
inline Rgb sample_color(const ColorParams& p, double eps)
{
    return (p.mu.array() + eps * p.beta).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

inline StochasticRadianceField init_field(GridResolution res, const BoundingBox& bbox, const FieldConfig& config = {})
{
    StochasticRadianceField f;
    f.config = config;
    f.density = VoxelGrid<double>(res, 2, bbox);
    f.color = VoxelGrid<double>(res, 4, bbox);
    const double raw_beta = softplus_inverse(config.init_beta);
    for (std::size_t v = 0; v < f.density.vertex_count(); ++v) {
        f.density.at(v, channel::density_mean) = config.init_density_raw;
        f.density.at(v, channel::density_beta) = raw_beta;
        for (int ch = 0; ch < 3; ++ch) f.color.at(v, ch) = 0.0;
        f.color.at(v, channel::color_beta) = raw_beta;
    }
    return f;
}

/// Checkpoint = density.grid + color.grid + field.json sidecar.
inline void save_field(const fs::path& dir, const StochasticRadianceField& f, const nlohmann::json& metadata = {})
{
    fs::create_directories(dir);
    save_grid(dir / "density.grid", f.density);
    save_grid(dir / "color.grid", f.color);
    nlohmann::json side{{"activation", to_json(f.config)}, {"metadata", metadata}};
    write_file(dir / "field.json", side.dump(2) + "\n");
}

inline StochasticRadianceField load_field(const fs::path& dir)
{
    StochasticRadianceField f;
    f.density = load_grid(dir / "density.grid");
    f.color = load_grid(dir / "color.grid");
    if (f.density.channels() != 2 || f.color.channels() != 4) throw ConfigError("checkpoint: unexpected channel counts");
    if (!(f.density.resolution() == f.color.resolution()) || !(f.density.bbox() == f.color.bbox()))
        throw ConfigError("checkpoint: density and colour grids disagree");
    const auto side = nlohmann::json::parse(read_file(dir / "field.json"));
    f.config = field_config_from_json(side.at("activation"));
    return f;
}

} // namespace uf
