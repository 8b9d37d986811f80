#pragma once

#include <cmath>
#include <limits>

#include "uf/common.hpp"
#include "uf/grid.hpp"

namespace uf {

/// Rigid camera-to-world transform.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
};

/// Pinhole camera, OpenCV convention: +x right, +y down, +z forward.
struct Camera {
    int width = 64;
    int height = 64;
    double fx = 64.0;
    double fy = 64.0;
    double cx = 32.0;
    double cy = 32.0;
    Pose pose;

    [[nodiscard]] Vec3 position() const { return pose.translation; }
    [[nodiscard]] Vec3 forward() const { return pose.rotation.col(2); }
    [[nodiscard]] int pixel_count() const { return width * height; }

    void validate() const
    {
        if (width < 1 || height < 1) throw ConfigError("Camera: image size must be positive");
        if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("Camera: focal lengths must be positive");
        if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height)) throw ConfigError("Camera: principal point outside image");
        const Mat3 rtr = pose.rotation.transpose() * pose.rotation;
        if (!rtr.isApprox(Mat3::Identity(), 1e-9) || (rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
            throw ConfigError("Camera: rotation is not orthonormal");
    }
};

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
    double t_near = 0.0;
    double t_far = 0.0;

    [[nodiscard]] Vec3 at(double t) const { return origin + t * direction; }
    [[nodiscard]] bool empty() const { return !(t_far > t_near); }
};

/// Global clip range applied on top of the bbox interval.
struct ClipRange {
    double near = 0.0;
    double far = std::numeric_limits<double>::infinity();
};

/// Clips a ray to the bbox; a miss collapses the interval to t_near == t_far.
inline void clip_ray_to_box(Ray& ray, const BoundingBox& bbox, ClipRange clip = {})
{
    double t0 = 0.0, t1 = 0.0;
    if (intersect_box(bbox, ray.origin, ray.direction, t0, t1)) {
        ray.t_near = std::max(t0, clip.near);
        ray.t_far = std::min(t1, clip.far);
        if (ray.t_far > ray.t_near) return;
    }
    ray.t_near = ray.t_far = std::max(clip.near, 0.0);
}

/// Ray through continuous pixel coordinates (px, py); pixel (i, j) has its centre
/// at (i + 0.5, j + 0.5).
inline Ray generate_ray(const Camera& cam, double px, double py, const BoundingBox& bbox, ClipRange clip = {})
{
    const Vec3 d_cam((px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0);
    Ray ray;
    ray.origin = cam.pose.translation;
    ray.direction = (cam.pose.rotation * d_cam).normalized();
    clip_ray_to_box(ray, bbox, clip);
    return ray;
}

/// Ray through the centre of integer pixel (col, row).
inline Ray pixel_ray(const Camera& cam, int col, int row, const BoundingBox& bbox, ClipRange clip = {})
{
    return generate_ray(cam, col + 0.5, row + 0.5, bbox, clip);
}

/// Camera-to-world rotation looking from eye to target with the given up
/// vector; falls back to +y (then +x) when forward and up are colinear.
inline Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, Vec3 up = Vec3::UnitZ())
{
    const Vec3 forward = (target - eye).normalized();
    if (std::abs(forward.dot(up.normalized())) > 0.999) up = Vec3::UnitY();
    if (std::abs(forward.dot(up)) > 0.999) up = Vec3::UnitX();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right).normalized();
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;
    return r;
}

/// Symmetric-FOV camera at eye looking at target.
inline Camera make_look_at_camera(const Vec3& eye, const Vec3& target, int width, int height, double half_fov_rad)
{
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.fx = cam.fy = cam.cx / std::tan(half_fov_rad);
    cam.pose.translation = eye;
    cam.pose.rotation = look_at_rotation(eye, target);
    return cam;
}

} // namespace uf
