#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "uf/camera.hpp"
#include "uf/gt_render.hpp"
#include "uf/rig.hpp"
#include "uf/scene.hpp"

using namespace uf;

namespace {

const BoundingBox kBox{Vec3::Constant(-32.0), Vec3::Constant(32.0)};

Camera identity_camera()
{
    Camera cam;  // 64x64, f = 64, principal point at the centre
    return cam;
}

// Unprojection written out component by component.
Vec3 unproject(const Camera& c, double px, double py)
{
    const double x = (px - c.cx) / c.fx;
    const double y = (py - c.cy) / c.fy;
    const Mat3& R = c.pose.rotation;
    Vec3 d(R(0, 0) * x + R(0, 1) * y + R(0, 2), R(1, 0) * x + R(1, 1) * y + R(1, 2), R(2, 0) * x + R(2, 1) * y + R(2, 2));
    return d / std::sqrt(d.dot(d));
}

// Entry distance of a ray into a primitive, or -1 on a miss.
double entry_distance(const Primitive& p, const Vec3& o, const Vec3& d)
{
    if (p.kind == Primitive::Kind::cuboid) {
        double t0 = 0, t1 = 0;
        if (!intersect_box(p.box, o, d, t0, t1) || t1 <= 0) return -1;
        return std::max(t0, 0.0);
    }
    const Vec3 oc = o - p.center;
    const double b = oc.dot(d), c = oc.squaredNorm() - p.radius * p.radius;
    const double disc = b * b - c;
    if (disc <= 0) return -1;
    const double t = -b - std::sqrt(disc);
    return t > 0 ? t : -1;
}

} // namespace

TEST(Camera, PrincipalPointLooksForward)
{
    Camera cam = make_look_at_camera(Vec3(100, 20, -30), Vec3::Zero(), 64, 64, 0.4);
    const Ray r = generate_ray(cam, cam.cx, cam.cy, kBox);
    EXPECT_NEAR((r.direction - cam.forward()).norm(), 0.0, 1e-12);
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-12);
}

TEST(Camera, OneFocalLengthOffset)
{
    const Camera cam = identity_camera();
    const Ray r = generate_ray(cam, cam.cx + cam.fx, cam.cy, kBox);
    EXPECT_NEAR((r.direction - Vec3(1, 0, 1).normalized()).norm(), 0.0, 1e-12);
}

TEST(Camera, CornerPixelsMatchUnprojection)
{
    const Camera cam = make_look_at_camera(Vec3(-90, 40, 25), Vec3(1, 2, 3), 64, 64, 0.5);
    for (auto [c, r] : {std::pair{0, 0}, {63, 0}, {0, 63}, {63, 63}}) {
        const Ray ray = pixel_ray(cam, c, r, kBox);
        EXPECT_NEAR((ray.direction - unproject(cam, c + 0.5, r + 0.5)).norm(), 0.0, 1e-12);
    }
}

TEST(Camera, ClipBoundsLieOnTheBox)
{
    const RigSpec spec;
    const CameraRig rig = sample_hemisphere_rig(spec, kBox);
    int hits = 0;
    for (const Camera& cam : rig.cameras) {
        for (int r = 0; r < cam.height; r += 3) {
            for (int c = 0; c < cam.width; c += 3) {
                const Ray ray = pixel_ray(cam, c, r, kBox);
                EXPECT_GE(ray.t_near, 0.0);
                EXPECT_NEAR(ray.direction.norm(), 1.0, 1e-9);
                if (ray.empty()) continue;
                ++hits;
                EXPECT_TRUE(kBox.contains(ray.at(ray.t_near), 1e-6));
                EXPECT_TRUE(kBox.contains(ray.at(ray.t_far), 1e-6));
            }
        }
    }
    EXPECT_GT(hits, 0);
}

TEST(Camera, MissRayIsEmpty)
{
    Camera cam = make_look_at_camera(Vec3(200, 0, 0), Vec3(200, 100, 0), 8, 8, 0.2);
    const Ray ray = pixel_ray(cam, 4, 4, kBox);
    EXPECT_TRUE(ray.empty());
    EXPECT_EQ(ray.t_near, ray.t_far);
}

TEST(Camera, LookAtFallsBackWhenColinearWithUp)
{
    const Camera cam = make_look_at_camera(Vec3(0, 0, 100), Vec3::Zero(), 16, 16, 0.3);
    EXPECT_NO_THROW(cam.validate());
    EXPECT_NEAR((cam.forward() - Vec3(0, 0, -1)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(cam.pose.rotation.determinant(), 1.0, 1e-12);
}

TEST(Camera, ValidateRejectsBadIntrinsicsAndRotation)
{
    Camera cam;
    cam.fx = 0;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = Camera{};
    cam.cx = 64;
    EXPECT_THROW(cam.validate(), ConfigError);
    cam = Camera{};
    cam.pose.rotation(0, 0) = 1.1;
    EXPECT_THROW(cam.validate(), ConfigError);
}

TEST(Rig, DeterministicForFixedSeed)
{
    RigSpec spec;
    spec.n_train = 1;
    const CameraRig a = sample_hemisphere_rig(spec, kBox);
    const CameraRig b = sample_hemisphere_rig(spec, kBox);
    ASSERT_EQ(a.cameras.size(), b.cameras.size());
    for (std::size_t i = 0; i < a.cameras.size(); ++i) {
        EXPECT_EQ(a.cameras[i].pose.translation, b.cameras[i].pose.translation);
        EXPECT_EQ(a.cameras[i].pose.rotation, b.cameras[i].pose.rotation);
    }
}

TEST(Rig, SplitSizesAndInwardFacing)
{
    const RigSpec spec;
    const CameraRig rig = sample_hemisphere_rig(spec, kBox);
    EXPECT_EQ(rig.indices(Split::train).size(), 5u);
    EXPECT_EQ(rig.indices(Split::candidate).size(), 50u);
    EXPECT_EQ(rig.indices(Split::test).size(), 12u);
    for (const Camera& cam : rig.cameras) {
        EXPECT_NO_THROW(cam.validate());
        EXPECT_GT(cam.position().norm(), kBox.half_diagonal());
        EXPECT_NEAR((cam.forward() - (kBox.center() - cam.position()).normalized()).norm(), 0.0, 1e-9);
    }
}

TEST(Rig, TrainCamerasInsideHemisphere)
{
    RigSpec spec;
    spec.n_train = 200;
    spec.hemisphere = SignedAxis::parse("+z");
    const CameraRig rig = sample_hemisphere_rig(spec, kBox);
    for (const Camera& cam : rig.cameras_of(Split::train)) EXPECT_GT(cam.position().z(), kBox.center().z());
}

TEST(Rig, MeanDirectionNearAxis)
{
    for (const char* axis : {"-x", "+y", "+z"}) {
        RigSpec spec;
        spec.n_train = 100;
        spec.hemisphere = SignedAxis::parse(axis);
        Vec3 mean = Vec3::Zero();
        for (const Camera& cam : sample_hemisphere_cameras(100, spec, kBox, 11))
            mean += (cam.position() - kBox.center()).normalized();
        const double angle = std::acos(mean.normalized().dot(spec.hemisphere.unit())) * 180.0 / std::numbers::pi;
        EXPECT_LT(angle, 15.0) << axis;
    }
}

TEST(Rig, NarrowCapStaysInsideExtent)
{
    RigSpec spec;
    spec.extent_deg = 30.0;
    for (const Camera& cam : sample_hemisphere_cameras(50, spec, kBox, 3)) {
        const double c = (cam.position() - kBox.center()).normalized().dot(spec.hemisphere.unit());
        EXPECT_GE(c, std::cos(30.0 * std::numbers::pi / 180.0) - 1e-12);
    }
}

TEST(Rig, JsonRoundTrip)
{
    const CameraRig rig = sample_hemisphere_rig(RigSpec{}, kBox);
    const CameraRig back = rig_from_json(nlohmann::json::parse(to_json(rig).dump()));
    ASSERT_EQ(back.cameras.size(), rig.cameras.size());
    EXPECT_EQ(back.splits, rig.splits);
    for (std::size_t i = 0; i < rig.cameras.size(); ++i)
        EXPECT_EQ(back.cameras[i].pose.translation, rig.cameras[i].pose.translation);
    EXPECT_THROW(rig_spec_from_json(nlohmann::json{{"extent_deg", 120}}), ConfigError);
    EXPECT_THROW(rig_spec_from_json(nlohmann::json{{"hemisphere", "up"}}), ConfigError);
}

TEST(Scene, WallOpeningAndObjects)
{
    const BoxSceneSpec spec;
    const GroundTruthScene scene = build_box_scene(spec);
    // -x wall centre and +z wall corner region
    EXPECT_EQ(scene.occupancy(Vec3(-18, 0, 0)), spec.solid_density);
    EXPECT_EQ(scene.occupancy(Vec3(5, -17, 18.5)), spec.solid_density);
    EXPECT_EQ(scene.albedo(Vec3(-18, 0, 0)), spec.wall_albedo);
    // aperture in the +x wall
    EXPECT_EQ(scene.occupancy(Vec3(18, 0, 0)), 0.0);
    EXPECT_EQ(scene.occupancy(Vec3(18, 10, -10)), 0.0);
    // the rim of the +x wall outside the aperture stays solid
    EXPECT_EQ(scene.occupancy(Vec3(18, 15, 0)), spec.solid_density);
    // cavity and exterior
    EXPECT_EQ(scene.occupancy(Vec3(10, 0, 12)), 0.0);
    EXPECT_EQ(scene.occupancy(Vec3(25, 25, 25)), 0.0);
    EXPECT_EQ(scene.occupancy(Vec3(40, 0, 0)), 0.0);
    for (const SceneObject& o : spec.objects) {
        if (o.kind != Primitive::Kind::sphere) continue;
        const Vec3 surface = o.center + o.radius * Vec3(1, 1, 1).normalized() * (1 - 1e-9);
        EXPECT_EQ(scene.albedo(surface), o.albedo);
        EXPECT_EQ(scene.occupancy(surface), spec.solid_density);
    }
}

TEST(Scene, RejectsThickWalls)
{
    BoxSceneSpec spec;
    spec.wall_thickness = 20.0;
    EXPECT_THROW(build_box_scene(spec), ConfigError);
    spec.wall_thickness = 25.0;
    EXPECT_THROW(build_box_scene(spec), ConfigError);
    spec = BoxSceneSpec{};
    spec.objects.push_back({Primitive::Kind::sphere, Vec3(14, 0, 0), 5.0, Vec3::Zero(), Rgb::Ones()});
    EXPECT_THROW(build_box_scene(spec), ConfigError);
}

TEST(Scene, OpticalDepthMatchesChords)
{
    const GroundTruthScene scene = build_box_scene(BoxSceneSpec{});
    // straight through the -x and +x walls at y = 15 rim: two walls of thickness 4
    EXPECT_NEAR(scene.optical_depth(Vec3(-40, 15, 0), Vec3(40, 15, 0)), 2 * 4 * 500.0, 1e-9);
    // through the aperture along x at y = z = 0.5, one wall only
    EXPECT_NEAR(scene.optical_depth(Vec3(-40, 0.5, 0.5), Vec3(40, 0.5, 0.5)), 4 * 500.0, 1e-9);
    // midpoint sampling of the same segment agrees to within a step of density
    const Vec3 a(-40, -3, 1), b(40, 5, -2);
    const double len = (b - a).norm();
    double od = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) od += scene.occupancy(a + (i + 0.5) / n * (b - a)) * len / n;
    EXPECT_NEAR(scene.optical_depth(a, b), od, 500.0 * 12 * len / n);
}

TEST(Scene, JsonRoundTrip)
{
    const BoxSceneSpec spec;
    const BoxSceneSpec back = box_scene_spec_from_json(nlohmann::json::parse(to_json(spec).dump()));
    const GroundTruthScene a = build_box_scene(spec), b = build_box_scene(back);
    ASSERT_EQ(a.primitives.size(), b.primitives.size());
    for (std::size_t i = 0; i < a.primitives.size(); ++i) EXPECT_EQ(a.primitives[i].box, b.primitives[i].box);
    EXPECT_THROW(box_scene_spec_from_json(nlohmann::json{{"opening", "x"}}), ConfigError);
}

TEST(GtRender, EmptySpaceIsBackground)
{
    GroundTruthScene scene;
    scene.background = Rgb(0.2, 0.4, 0.6);
    const Camera cam = make_look_at_camera(Vec3(0, 0, 100), Vec3::Zero(), 16, 16, 0.4);
    const GtFrame f = gt_render(scene, cam, 0.5);
    for (const Rgb& p : f.color.pixels) EXPECT_EQ(p, scene.background);
    for (double d : f.depth.values) EXPECT_EQ(d, 0.0);
}

TEST(GtRender, OpaqueWallSaturates)
{
    const BoxSceneSpec spec;
    const GroundTruthScene scene = build_box_scene(spec);
    Ray ray;
    ray.origin = Vec3(-100, 1, 2);
    ray.direction = Vec3::UnitX();
    clip_ray_to_box(ray, scene.bbox);
    double depth = 0;
    const Rgb c = gt_render_ray(scene, ray, 0.5, &depth);
    EXPECT_LT((c - spec.wall_albedo).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_NEAR(depth, 100 - 20 + 0.25, 0.3);
}

TEST(GtRender, HalfOpacityBlend)
{
    GroundTruthScene scene;
    const double step = 1.0;
    // one sample of density ln 2 then empty: a slab exactly one step thick
    scene.primitives.push_back(Primitive::cuboid(BoundingBox(Vec3(-32, -1, -1), Vec3(-31, 1, 1)), Rgb(1, 0, 0), std::log(2.0)));
    Ray ray;
    ray.origin = Vec3(-50, 0, 0);
    ray.direction = Vec3::UnitX();
    clip_ray_to_box(ray, scene.bbox);
    const Rgb c = gt_render_ray(scene, ray, step);
    EXPECT_NEAR((c - Rgb(1, 0.5, 0.5)).norm(), 0.0, 1e-12);
}

TEST(GtRender, DeterministicAcrossThreads)
{
    const GroundTruthScene scene = build_box_scene(BoxSceneSpec{});
    const Camera cam = sample_hemisphere_rig(RigSpec{}, scene.bbox).cameras[0];
    const GtFrame a = gt_render(scene, cam, 0.5, 1);
    const GtFrame b = gt_render(scene, cam, 0.5, 3);
    EXPECT_EQ(a.color.pixels, b.color.pixels);
    EXPECT_EQ(a.depth.values, b.depth.values);
    EXPECT_THROW(gt_render(scene, cam, 0.0), ConfigError);
}

// Exhaustive cast of every train-view pixel: the first entry into any interior
// object is reached with transmittance at most 0.1, in fact essentially 0.
TEST(Scene, InteriorHiddenFromTrainHemisphere)
{
    const BoxSceneSpec spec;
    const GroundTruthScene scene = build_box_scene(spec);
    RigSpec rs;
    rs.n_train = 20;
    const CameraRig rig = sample_hemisphere_rig(rs, scene.bbox);
    const std::size_t first_object = scene.primitives.size() - spec.objects.size();
    double worst = 0.0;
    for (const Camera& cam : rig.cameras_of(Split::train)) {
        for (int r = 0; r < cam.height; ++r) {
            for (int c = 0; c < cam.width; ++c) {
                const Ray ray = pixel_ray(cam, c, r, scene.bbox);
                for (std::size_t k = first_object; k < scene.primitives.size(); ++k) {
                    const double t = entry_distance(scene.primitives[k], ray.origin, ray.direction);
                    if (t < 0) continue;
                    worst = std::max(worst, std::exp(-scene.optical_depth(ray.origin, ray.at(t))));
                }
            }
        }
    }
    EXPECT_LE(worst, 0.1);
}
