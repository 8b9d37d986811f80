#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "uf/common.hpp"

namespace uf {

struct BoundingBox {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Ones();

    BoundingBox() = default;
    BoundingBox(const Vec3& lo, const Vec3& hi) : min(lo), max(hi)
    {
        if (!(lo.array() < hi.array()).all() || !all_finite(lo) || !all_finite(hi))
            throw ConfigError("BoundingBox: min must be < max componentwise");
    }

    [[nodiscard]] Vec3 center() const { return 0.5 * (min + max); }
    [[nodiscard]] Vec3 extent() const { return max - min; }
    [[nodiscard]] double half_diagonal() const { return 0.5 * extent().norm(); }

    [[nodiscard]] bool contains(const Vec3& x, double eps = 0.0) const
    {
        return (x.array() >= min.array() - eps).all() && (x.array() <= max.array() + eps).all();
    }

    [[nodiscard]] Vec3 clamp(const Vec3& x) const { return x.cwiseMax(min).cwiseMin(max); }

    bool operator==(const BoundingBox&) const = default;
};

/// Slab test. Returns false when the line misses; otherwise [t0, t1] with t0 <= t1
/// is the parametric interval of the infinite line inside the box.
inline bool intersect_box(const BoundingBox& box, const Vec3& origin, const Vec3& dir, double& t0, double& t1)
{
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dir[a]) < 1e-300) {
            if (origin[a] < box.min[a] || origin[a] > box.max[a]) return false;
            continue;
        }
        const double inv = 1.0 / dir[a];
        double ta = (box.min[a] - origin[a]) * inv;
        double tb = (box.max[a] - origin[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        lo = std::max(lo, ta);
        hi = std::min(hi, tb);
        if (lo > hi) return false;
    }
    t0 = lo;
    t1 = hi;
    return true;
}

struct GridResolution {
    int nx = 64;
    int ny = 64;
    int nz = 64;

    [[nodiscard]] std::size_t vertex_count() const
    {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    bool operator==(const GridResolution&) const = default;
};

/// The 8 corners of a cell with their trilinear weights. Corner c has offsets
/// (c & 1, (c >> 1) & 1, (c >> 2) & 1) from the lower cell vertex.
struct CellStencil {
    std::array<std::size_t, 8> index{};
    std::array<double, 8> weight{};
};

/// Dense vertex-centred grid: values live on vertices, x varies fastest and the
/// C channels of a vertex are stored contiguously.
template <typename T = double>
class VoxelGrid {
public:
    VoxelGrid() = default;

    VoxelGrid(GridResolution res, int channels, BoundingBox bbox, T fill = T{0})
        : res_(res), channels_(channels), bbox_(bbox)
    {
        if (res.nx < 2 || res.ny < 2 || res.nz < 2) throw ConfigError("VoxelGrid: each axis needs at least 2 vertices");
        if (channels < 1) throw ConfigError("VoxelGrid: channels must be >= 1");
        values_.assign(res.vertex_count() * static_cast<std::size_t>(channels), fill);
        for (int a = 0; a < 3; ++a) {
            const int n = axis_size(a);
            scale_[a] = (n - 1) / (bbox_.max[a] - bbox_.min[a]);
        }
    }

    [[nodiscard]] const GridResolution& resolution() const { return res_; }
    [[nodiscard]] int channels() const { return channels_; }
    [[nodiscard]] const BoundingBox& bbox() const { return bbox_; }
    [[nodiscard]] std::size_t vertex_count() const { return res_.vertex_count(); }
    [[nodiscard]] std::span<T> values() { return values_; }
    [[nodiscard]] std::span<const T> values() const { return values_; }

    [[nodiscard]] int axis_size(int axis) const { return axis == 0 ? res_.nx : (axis == 1 ? res_.ny : res_.nz); }

    /// Edge length of a cell along each axis.
    [[nodiscard]] Vec3 cell_size() const { return bbox_.extent().cwiseQuotient(Vec3(res_.nx - 1, res_.ny - 1, res_.nz - 1)); }

    [[nodiscard]] std::size_t vertex_index(int ix, int iy, int iz) const
    {
        return static_cast<std::size_t>(ix) +
               static_cast<std::size_t>(res_.nx) * (static_cast<std::size_t>(iy) + static_cast<std::size_t>(res_.ny) * static_cast<std::size_t>(iz));
    }

    [[nodiscard]] std::array<int, 3> vertex_coords(std::size_t v) const
    {
        const auto nx = static_cast<std::size_t>(res_.nx);
        const auto ny = static_cast<std::size_t>(res_.ny);
        return {static_cast<int>(v % nx), static_cast<int>((v / nx) % ny), static_cast<int>(v / (nx * ny))};
    }

    [[nodiscard]] Vec3 vertex_position(std::size_t v) const
    {
        const auto c = vertex_coords(v);
        return grid_to_world(Vec3(c[0], c[1], c[2]));
    }

    T& at(std::size_t vertex, int channel) { return values_[vertex * channels_ + channel]; }
    [[nodiscard]] const T& at(std::size_t vertex, int channel) const { return values_[vertex * channels_ + channel]; }

    /// Continuous grid coordinates: bbox.min maps to 0, bbox.max to N-1.
    [[nodiscard]] Vec3 world_to_grid(const Vec3& x) const
    {
        return Vec3((x[0] - bbox_.min[0]) * scale_[0], (x[1] - bbox_.min[1]) * scale_[1], (x[2] - bbox_.min[2]) * scale_[2]);
    }

    [[nodiscard]] Vec3 grid_to_world(const Vec3& g) const
    {
        return Vec3(bbox_.min[0] + g[0] / scale_[0], bbox_.min[1] + g[1] / scale_[1], bbox_.min[2] + g[2] / scale_[2]);
    }

    /// Trilinear stencil of the cell containing x (x is clamped into the bbox).
    /// On a shared face the lower-index cell is chosen.
    [[nodiscard]] CellStencil stencil(const Vec3& x) const
    {
        const Vec3 g = world_to_grid(bbox_.clamp(x));
        std::array<int, 3> cell{};
        std::array<double, 3> frac{};
        for (int a = 0; a < 3; ++a) {
            const int last_cell = axis_size(a) - 2;
            int i = static_cast<int>(std::ceil(g[a])) - 1;
            i = std::clamp(i, 0, last_cell);
            cell[a] = i;
            frac[a] = std::clamp(g[a] - i, 0.0, 1.0);
        }
        CellStencil s;
        const std::size_t base = vertex_index(cell[0], cell[1], cell[2]);
        const std::size_t sx = 1;
        const std::size_t sy = static_cast<std::size_t>(res_.nx);
        const std::size_t sz = sy * static_cast<std::size_t>(res_.ny);
        for (int c = 0; c < 8; ++c) {
            const int bx = c & 1;
            const int by = (c >> 1) & 1;
            const int bz = (c >> 2) & 1;
            s.index[c] = base + bx * sx + by * sy + bz * sz;
            s.weight[c] = (bx ? frac[0] : 1.0 - frac[0]) * (by ? frac[1] : 1.0 - frac[1]) * (bz ? frac[2] : 1.0 - frac[2]);
        }
        return s;
    }

    [[nodiscard]] std::array<std::size_t, 8> enclosing_vertices(const Vec3& x) const { return stencil(x).index; }

    [[nodiscard]] T interpolate(const CellStencil& s, int channel) const
    {
        T acc{0};
        for (int c = 0; c < 8; ++c) acc += static_cast<T>(s.weight[c]) * values_[s.index[c] * channels_ + channel];
        return acc;
    }

    /// All channels at x into out (size == channels()).
    void interpolate(const Vec3& x, std::span<T> out) const
    {
        const CellStencil s = stencil(x);
        for (int ch = 0; ch < channels_; ++ch) out[ch] = interpolate(s, ch);
    }

    [[nodiscard]] std::vector<T> interpolate(const Vec3& x) const
    {
        std::vector<T> out(channels_);
        interpolate(x, out);
        return out;
    }

    /// Single-channel query with a constant for positions outside the bbox.
    [[nodiscard]] T interpolate_or(const Vec3& x, int channel, T outside, double eps = 1e-9) const
    {
        if (!bbox_.contains(x, eps)) return outside;
        return interpolate(stencil(x), channel);
    }

    bool operator==(const VoxelGrid& o) const
    {
        return res_ == o.res_ && channels_ == o.channels_ && bbox_ == o.bbox_ && values_ == o.values_;
    }

private:
    GridResolution res_{};
    int channels_ = 1;
    BoundingBox bbox_{};
    std::array<double, 3> scale_{1.0, 1.0, 1.0};
    std::vector<T> values_;
};

} // namespace uf
