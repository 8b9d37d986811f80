#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "uf/common.hpp"
#include "uf/grid.hpp"

namespace uf {

/// Signed axis such as "+x" or "-z".
struct SignedAxis {
    int axis = 0;
    int sign = 1;

    [[nodiscard]] Vec3 unit() const
    {
        Vec3 v = Vec3::Zero();
        v[axis] = sign;
        return v;
    }
    [[nodiscard]] std::string str() const { return std::string(sign > 0 ? "+" : "-") + "xyz"[axis]; }
    bool operator==(const SignedAxis&) const = default;

    static SignedAxis parse(const std::string& s)
    {
        if (s.size() != 2 || (s[0] != '+' && s[0] != '-') || s[1] < 'x' || s[1] > 'z')
            throw ConfigError("invalid axis '" + s + "', expected one of +x -x +y -y +z -z");
        return {s[1] - 'x', s[0] == '+' ? 1 : -1};
    }
};

/// Homogeneous solid: an axis-aligned cuboid or a sphere.
struct Primitive {
    enum class Kind { cuboid, sphere };
    Kind kind = Kind::cuboid;
    BoundingBox box;           // cuboid extent
    Vec3 center = Vec3::Zero(); // sphere
    double radius = 0.0;        // sphere
    Rgb albedo = Rgb::Constant(0.5);
    double density = 500.0;

    static Primitive cuboid(const BoundingBox& b, const Rgb& albedo, double density)
    {
        Primitive p;
        p.kind = Kind::cuboid;
        p.box = b;
        p.albedo = albedo;
        p.density = density;
        return p;
    }

    static Primitive sphere(const Vec3& c, double r, const Rgb& albedo, double density)
    {
        if (!(r > 0.0)) throw ConfigError("sphere radius must be positive");
        Primitive p;
        p.kind = Kind::sphere;
        p.center = c;
        p.radius = r;
        p.albedo = albedo;
        p.density = density;
        p.box = BoundingBox(c.array() - r, c.array() + r);
        return p;
    }

    [[nodiscard]] bool contains(const Vec3& x) const
    {
        if (kind == Kind::cuboid) return box.contains(x);
        return (x - center).squaredNorm() <= radius * radius;
    }

    /// Length of the segment origin + t*dir, t in [t0, t1] (|dir| = 1), inside the solid.
    [[nodiscard]] double chord(const Vec3& origin, const Vec3& dir, double t0, double t1) const
    {
        double a = 0.0, b = 0.0;
        if (kind == Kind::cuboid) {
            if (!intersect_box(box, origin, dir, a, b)) return 0.0;
        } else {
            const Vec3 oc = origin - center;
            const double half_b = oc.dot(dir);
            const double c = oc.squaredNorm() - radius * radius;
            const double disc = half_b * half_b - c;
            if (disc <= 0.0) return 0.0;
            const double s = std::sqrt(disc);
            a = -half_b - s;
            b = -half_b + s;
        }
        return std::max(0.0, std::min(b, t1) - std::max(a, t0));
    }
};

/// Analytic ground-truth scene: a union of disjoint homogeneous solids.
struct GroundTruthScene {
    std::vector<Primitive> primitives;
    Rgb background = Rgb::Ones();
    BoundingBox bbox{Vec3::Constant(-32.0), Vec3::Constant(32.0)};

    [[nodiscard]] const Primitive* find(const Vec3& x) const
    {
        if (!bbox.contains(x)) return nullptr;
        for (const auto& p : primitives)
            if (p.contains(x)) return &p;
        return nullptr;
    }

    [[nodiscard]] double occupancy(const Vec3& x) const
    {
        const Primitive* p = find(x);
        return p ? p->density : 0.0;
    }

    /// Albedo of the solid at x; background colour in free space.
    [[nodiscard]] Rgb albedo(const Vec3& x) const
    {
        const Primitive* p = find(x);
        return p ? p->albedo : background;
    }

    /// Exact optical depth (integral of density) along the segment a -> b.
    [[nodiscard]] double optical_depth(const Vec3& a, const Vec3& b) const
    {
        const Vec3 d = b - a;
        const double len = d.norm();
        if (len <= 0.0) return 0.0;
        const Vec3 dir = d / len;
        double tb0 = 0.0, tb1 = 0.0;
        if (!intersect_box(bbox, a, dir, tb0, tb1)) return 0.0;
        const double lo = std::max(0.0, tb0);
        const double hi = std::min(len, tb1);
        if (hi <= lo) return 0.0;
        double tau = 0.0;
        for (const auto& p : primitives) tau += p.density * p.chord(a, dir, lo, hi);
        return tau;
    }
};

/// Interior object of a box scene.
struct SceneObject {
    Primitive::Kind kind = Primitive::Kind::sphere;
    Vec3 center = Vec3::Zero();
    double radius = 4.0;               // sphere
    Vec3 size = Vec3::Constant(8.0);   // cuboid edge lengths
    Rgb albedo = Rgb::Constant(0.5);
};

/// A hollow cube with five closed faces and a square aperture in the sixth.
struct BoxSceneSpec {
    Vec3 center = Vec3::Zero();
    double outer_size = 40.0;
    double wall_thickness = 4.0;
    SignedAxis opening{0, +1};
    double aperture = 0.75;            // hole edge as a fraction of the inner face width
    Rgb wall_albedo{0.85, 0.6, 0.3};
    double solid_density = 500.0;
    Rgb background = Rgb::Ones();
    BoundingBox bbox{Vec3::Constant(-32.0), Vec3::Constant(32.0)};
    std::vector<SceneObject> objects{
        {Primitive::Kind::sphere, Vec3(2.0, -6.0, -6.0), 7.0, Vec3::Zero(), Rgb(0.9, 0.15, 0.15)},
        {Primitive::Kind::sphere, Vec3(0.0, 7.0, 5.0), 6.0, Vec3::Zero(), Rgb(0.15, 0.75, 0.2)},
        {Primitive::Kind::cuboid, Vec3(-7.0, 6.0, -9.0), 0.0, Vec3(8.0, 8.0, 8.0), Rgb(0.2, 0.3, 0.9)},
    };
};

inline GroundTruthScene build_box_scene(const BoxSceneSpec& spec)
{
    const double h = 0.5 * spec.outer_size;
    const double w = spec.wall_thickness;
    if (!(spec.outer_size > 0.0)) throw ConfigError("box scene: outer_size must be positive");
    if (!(w > 0.0) || w >= h) throw ConfigError("box scene: wall thickness must be in (0, outer_size / 2)");
    if (!(spec.aperture > 0.0 && spec.aperture <= 1.0)) throw ConfigError("box scene: aperture must be in (0, 1]");
    if (!(spec.solid_density > 0.0)) throw ConfigError("box scene: solid_density must be positive");
    const Vec3 c = spec.center;
    if (!spec.bbox.contains(c.array() - h) || !spec.bbox.contains(c.array() + h))
        throw ConfigError("box scene: box must lie inside the scene bbox");

    GroundTruthScene scene;
    scene.background = spec.background;
    scene.bbox = spec.bbox;

    // Disjoint wall slabs: x walls span everything, y walls span the inner x
    // range, z walls span the inner x and y ranges.
    auto slab = [&](int axis, int sign) {
        Vec3 lo = c.array() - h;
        Vec3 hi = c.array() + h;
        for (int other = 0; other < axis; ++other) {
            lo[other] += w;
            hi[other] -= w;
        }
        if (sign > 0) lo[axis] = c[axis] + h - w;
        else hi[axis] = c[axis] - h + w;
        return BoundingBox(lo, hi);
    };

    const double hole_half = 0.5 * spec.aperture * (spec.outer_size - 2.0 * w);
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign : {-1, 1}) {
            const BoundingBox wall = slab(axis, sign);
            if (!(spec.opening == SignedAxis{axis, sign})) {
                scene.primitives.push_back(Primitive::cuboid(wall, spec.wall_albedo, spec.solid_density));
                continue;
            }
            // Cut a centred square hole: two full-width strips along u and two
            // shorter strips along v.
            const int u = (axis + 1) % 3;
            const int v = (axis + 2) % 3;
            const double u0 = c[u] - hole_half, u1 = c[u] + hole_half;
            const double v0 = c[v] - hole_half, v1 = c[v] + hole_half;
            auto push = [&](double ulo, double uhi, double vlo, double vhi) {
                if (uhi - ulo <= 1e-12 || vhi - vlo <= 1e-12) return;
                Vec3 lo = wall.min, hi = wall.max;
                lo[u] = ulo;
                hi[u] = uhi;
                lo[v] = vlo;
                hi[v] = vhi;
                scene.primitives.push_back(Primitive::cuboid(BoundingBox(lo, hi), spec.wall_albedo, spec.solid_density));
            };
            push(wall.min[u], wall.max[u], wall.min[v], v0);
            push(wall.min[u], wall.max[u], v1, wall.max[v]);
            push(wall.min[u], u0, v0, v1);
            push(u1, wall.max[u], v0, v1);
        }
    }

    const BoundingBox cavity(c.array() - (h - w), c.array() + (h - w));
    for (const auto& o : spec.objects) {
        Primitive p = o.kind == Primitive::Kind::sphere
                          ? Primitive::sphere(o.center, o.radius, o.albedo, spec.solid_density)
                          : Primitive::cuboid(BoundingBox(o.center - 0.5 * o.size, o.center + 0.5 * o.size), o.albedo,
                                              spec.solid_density);
        if (!cavity.contains(p.box.min) || !cavity.contains(p.box.max))
            throw ConfigError("box scene: interior object does not fit inside the cavity");
        scene.primitives.push_back(p);
    }
    return scene;
}

// JSON ---------------------------------------------------------------------

inline Vec3 vec3_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-element array");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline BoxSceneSpec box_scene_spec_from_json(const nlohmann::json& j)
{
    BoxSceneSpec s;
    try {
        if (j.contains("center")) s.center = vec3_from_json(j["center"]);
        s.outer_size = j.value("outer_size", s.outer_size);
        s.wall_thickness = j.value("wall_thickness", s.wall_thickness);
        if (j.contains("opening")) s.opening = SignedAxis::parse(j["opening"].get<std::string>());
        s.aperture = j.value("aperture", s.aperture);
        if (j.contains("wall_albedo")) s.wall_albedo = vec3_from_json(j["wall_albedo"]);
        s.solid_density = j.value("solid_density", s.solid_density);
        if (j.contains("background")) s.background = vec3_from_json(j["background"]);
        if (j.contains("bbox")) s.bbox = BoundingBox(vec3_from_json(j["bbox"].at("min")), vec3_from_json(j["bbox"].at("max")));
        if (j.contains("objects")) {
            s.objects.clear();
            for (const auto& o : j["objects"]) {
                SceneObject obj;
                const std::string type = o.at("type").get<std::string>();
                if (type == "sphere") {
                    obj.kind = Primitive::Kind::sphere;
                    obj.radius = o.at("radius").get<double>();
                } else if (type == "cuboid") {
                    obj.kind = Primitive::Kind::cuboid;
                    obj.size = vec3_from_json(o.at("size"));
                } else {
                    throw ConfigError("unknown object type '" + type + "'");
                }
                obj.center = vec3_from_json(o.at("center"));
                obj.albedo = vec3_from_json(o.at("albedo"));
                s.objects.push_back(obj);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scene spec: ") + e.what());
    }
    return s;
}

inline nlohmann::json to_json(const BoxSceneSpec& s)
{
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : s.objects) {
        nlohmann::json jo{{"center", vec3_to_json(o.center)}, {"albedo", vec3_to_json(o.albedo)}};
        if (o.kind == Primitive::Kind::sphere) {
            jo["type"] = "sphere";
            jo["radius"] = o.radius;
        } else {
            jo["type"] = "cuboid";
            jo["size"] = vec3_to_json(o.size);
        }
        objects.push_back(jo);
    }
    return {{"center", vec3_to_json(s.center)},
            {"outer_size", s.outer_size},
            {"wall_thickness", s.wall_thickness},
            {"opening", s.opening.str()},
            {"aperture", s.aperture},
            {"wall_albedo", vec3_to_json(s.wall_albedo)},
            {"solid_density", s.solid_density},
            {"background", vec3_to_json(s.background)},
            {"bbox", {{"min", vec3_to_json(s.bbox.min)}, {"max", vec3_to_json(s.bbox.max)}}},
            {"objects", objects}};
}

} // namespace uf
