#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "uf/camera.hpp"
#include "uf/scene.hpp"

namespace uf {

enum class Split { train, candidate, test };

inline std::string to_string(Split s)
{
    switch (s) {
    case Split::train: return "train";
    case Split::candidate: return "candidate";
    case Split::test: return "test";
    }
    return "?";
}

inline Split split_from_string(const std::string& s)
{
    if (s == "train") return Split::train;
    if (s == "candidate") return Split::candidate;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + s + "'");
}

struct CameraRig {
    std::vector<Camera> cameras;
    std::vector<Split> splits;

    [[nodiscard]] std::vector<int> indices(Split s) const
    {
        std::vector<int> out;
        for (std::size_t i = 0; i < splits.size(); ++i)
            if (splits[i] == s) out.push_back(static_cast<int>(i));
        return out;
    }

    [[nodiscard]] std::vector<Camera> cameras_of(Split s) const
    {
        std::vector<Camera> out;
        for (int i : indices(s)) out.push_back(cameras[i]);
        return out;
    }

    void add(const Camera& c, Split s)
    {
        cameras.push_back(c);
        splits.push_back(s);
    }
};

struct RigSpec {
    int n_train = 5;
    int n_candidate = 50;
    int n_test = 12;
    SignedAxis hemisphere{0, -1};  // training views are drawn around this axis
    double extent_deg = 90.0;      // cap half-angle; 90 = hemisphere
    double radius = 0.0;           // 0 selects 3x the bbox half-diagonal
    double half_fov_deg = 0.0;     // 0 fits the whole bbox in view
    int width = 64;
    int height = 64;
    std::uint64_t seed = 7;
};

struct RigGeometry {
    Vec3 target;
    double radius;
    double half_fov;
};

inline RigGeometry rig_geometry(const RigSpec& spec, const BoundingBox& bbox)
{
    RigGeometry g;
    g.target = bbox.center();
    g.radius = spec.radius > 0.0 ? spec.radius : 3.0 * bbox.half_diagonal();
    if (g.radius <= bbox.half_diagonal()) throw ConfigError("rig radius must place cameras outside the bbox");
    g.half_fov = spec.half_fov_deg > 0.0 ? spec.half_fov_deg * std::numbers::pi / 180.0
                                          : 1.05 * std::asin(bbox.half_diagonal() / g.radius);
    return g;
}

/// Orthonormal basis (t1, t2) perpendicular to a.
inline void tangent_basis(const Vec3& a, Vec3& t1, Vec3& t2)
{
    const Vec3 helper = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    t1 = a.cross(helper).normalized();
    t2 = a.cross(t1).normalized();
}

/// Uniform direction on the spherical cap of half-angle extent around axis.
/// Directions exactly on the cap boundary are rejected so a 90 degree cap
/// yields points strictly inside the hemisphere.
template <typename Rng>
Vec3 sample_cap_direction(const Vec3& axis, double extent_rad, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double cos_max = std::cos(extent_rad);
    Vec3 t1, t2;
    tangent_basis(axis, t1, t2);
    for (;;) {
        const double cos_theta = 1.0 - unit(rng) * (1.0 - cos_max);
        if (cos_theta <= cos_max || (extent_rad >= 0.5 * std::numbers::pi && cos_theta <= 1e-9)) continue;
        const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        return (cos_theta * axis + sin_theta * (std::cos(phi) * t1 + std::sin(phi) * t2)).normalized();
    }
}

/// Inward-facing training cameras restricted to a cap around the hemisphere axis.
inline std::vector<Camera> sample_hemisphere_cameras(int count, const RigSpec& spec, const BoundingBox& bbox,
                                                     std::uint64_t seed)
{
    if (count < 0) throw ConfigError("camera count must be non-negative");
    const RigGeometry g = rig_geometry(spec, bbox);
    std::mt19937_64 rng(seed);
    std::vector<Camera> out;
    for (int i = 0; i < count; ++i) {
        const Vec3 d = sample_cap_direction(spec.hemisphere.unit(), spec.extent_deg * std::numbers::pi / 180.0, rng);
        out.push_back(make_look_at_camera(g.target + g.radius * d, g.target, spec.width, spec.height, g.half_fov));
    }
    return out;
}

/// Evenly spread directions (golden-angle spiral).
inline std::vector<Vec3> fibonacci_directions(int count)
{
    std::vector<Vec3> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return out;
}

/// Train split on the hemisphere cap, candidates uniform at random over the
/// sphere, test split evenly spread over the sphere. Deterministic in seed.
inline CameraRig sample_hemisphere_rig(const RigSpec& spec, const BoundingBox& bbox)
{
    if (spec.n_train < 0 || spec.n_candidate < 0 || spec.n_test < 0) throw ConfigError("rig split sizes must be >= 0");
    const RigGeometry g = rig_geometry(spec, bbox);
    CameraRig rig;
    for (const Camera& c : sample_hemisphere_cameras(spec.n_train, spec, bbox, spec.seed)) rig.add(c, Split::train);

    std::mt19937_64 rng(spec.seed ^ 0x5bd1e995ULL);
    for (int i = 0; i < spec.n_candidate; ++i) {
        const Vec3 d = sample_cap_direction(Vec3::UnitZ(), std::numbers::pi, rng);
        rig.add(make_look_at_camera(g.target + g.radius * d, g.target, spec.width, spec.height, g.half_fov), Split::candidate);
    }
    for (const Vec3& d : fibonacci_directions(spec.n_test))
        rig.add(make_look_at_camera(g.target + g.radius * d, g.target, spec.width, spec.height, g.half_fov), Split::test);
    return rig;
}

// JSON ---------------------------------------------------------------------

inline RigSpec rig_spec_from_json(const nlohmann::json& j)
{
    RigSpec s;
    try {
        s.n_train = j.value("n_train", s.n_train);
        s.n_candidate = j.value("n_candidate", s.n_candidate);
        s.n_test = j.value("n_test", s.n_test);
        if (j.contains("hemisphere")) s.hemisphere = SignedAxis::parse(j["hemisphere"].get<std::string>());
        s.extent_deg = j.value("extent_deg", s.extent_deg);
        s.radius = j.value("radius", s.radius);
        s.half_fov_deg = j.value("half_fov_deg", s.half_fov_deg);
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("rig spec: ") + e.what());
    }
    if (s.width < 1 || s.height < 1) throw ConfigError("rig spec: image size must be positive");
    if (!(s.extent_deg > 0.0 && s.extent_deg <= 90.0)) throw ConfigError("rig spec: extent_deg must be in (0, 90]");
    return s;
}

inline nlohmann::json to_json(const RigSpec& s)
{
    return {{"n_train", s.n_train},   {"n_candidate", s.n_candidate}, {"n_test", s.n_test},
            {"hemisphere", s.hemisphere.str()}, {"extent_deg", s.extent_deg}, {"radius", s.radius},
            {"half_fov_deg", s.half_fov_deg},   {"width", s.width},       {"height", s.height},
            {"seed", s.seed}};
}

inline nlohmann::json to_json(const Camera& c)
{
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) rot.push_back(c.pose.rotation(r, k));
    return {{"width", c.width}, {"height", c.height}, {"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy},
            {"rotation", rot},  {"translation", vec3_to_json(c.pose.translation)}};
}

inline Camera camera_from_json(const nlohmann::json& j)
{
    Camera c;
    try {
        c.width = j.at("width").get<int>();
        c.height = j.at("height").get<int>();
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        const auto& rot = j.at("rotation");
        if (rot.size() != 9) throw ConfigError("camera rotation must have 9 entries");
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) c.pose.rotation(r, k) = rot[3 * r + k].get<double>();
        c.pose.translation = vec3_from_json(j.at("translation"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("camera: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json to_json(const CameraRig& rig)
{
    nlohmann::json cams = nlohmann::json::array();
    for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
        nlohmann::json jc = to_json(rig.cameras[i]);
        jc["id"] = i;
        jc["split"] = to_string(rig.splits[i]);
        cams.push_back(jc);
    }
    return {{"cameras", cams}};
}

inline CameraRig rig_from_json(const nlohmann::json& j)
{
    CameraRig rig;
    for (const auto& jc : j.at("cameras")) rig.add(camera_from_json(jc), split_from_string(jc.at("split").get<std::string>()));
    return rig;
}

} // namespace uf
