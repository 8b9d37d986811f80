#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>

#include "uf/grid.hpp"
#include "uf/io.hpp"

namespace uf {

// Grid container layout (all little-endian):
//   0  char[4]  magic "UFVG"
//   4  u16      version
//   6  u16      channels
//   8  u16 x3   resolution nx, ny, nz
//  14  u16      reserved (0)
//  16  f64 x6   bbox min xyz, max xyz
//  64  f32 ...  nx*ny*nz*channels values, x fastest, channels interleaved
inline constexpr char kGridMagic[4] = {'U', 'F', 'V', 'G'};
inline constexpr std::uint16_t kGridVersion = 1;
inline constexpr std::size_t kGridHeaderSize = 64;

template <typename T>
std::string encode_grid(const VoxelGrid<T>& grid)
{
    const auto& r = grid.resolution();
    if (r.nx > 0xffff || r.ny > 0xffff || r.nz > 0xffff || grid.channels() > 0xffff)
        throw ConfigError("encode_grid: dimensions exceed container limits");
    std::string out;
    out.reserve(kGridHeaderSize + grid.values().size() * 4);
    out.append(kGridMagic, 4);
    put_u16(out, kGridVersion);
    put_u16(out, static_cast<std::uint16_t>(grid.channels()));
    put_u16(out, static_cast<std::uint16_t>(r.nx));
    put_u16(out, static_cast<std::uint16_t>(r.ny));
    put_u16(out, static_cast<std::uint16_t>(r.nz));
    put_u16(out, 0);
    for (int a = 0; a < 3; ++a) put_u64(out, std::bit_cast<std::uint64_t>(grid.bbox().min[a]));
    for (int a = 0; a < 3; ++a) put_u64(out, std::bit_cast<std::uint64_t>(grid.bbox().max[a]));
    for (T v : grid.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

template <typename T = double>
VoxelGrid<T> decode_grid(std::string_view bytes)
{
    if (bytes.size() < kGridHeaderSize || bytes.substr(0, 4) != std::string_view(kGridMagic, 4))
        throw ConfigError("decode_grid: not a grid container");
    if (get_u16(bytes, 4) != kGridVersion) throw ConfigError("decode_grid: unsupported version");
    const int channels = get_u16(bytes, 6);
    const GridResolution res{get_u16(bytes, 8), get_u16(bytes, 10), get_u16(bytes, 12)};
    Vec3 lo, hi;
    for (int a = 0; a < 3; ++a) lo[a] = std::bit_cast<double>(get_u64(bytes, 16 + 8 * a));
    for (int a = 0; a < 3; ++a) hi[a] = std::bit_cast<double>(get_u64(bytes, 40 + 8 * a));
    VoxelGrid<T> grid(res, channels, BoundingBox(lo, hi));
    const std::size_t n = grid.values().size();
    if (bytes.size() != kGridHeaderSize + 4 * n) throw ConfigError("decode_grid: payload size mismatch");
    auto values = grid.values();
    for (std::size_t i = 0; i < n; ++i) {
        const float f = std::bit_cast<float>(get_u32(bytes, kGridHeaderSize + 4 * i));
        if (!std::isfinite(f)) throw ConfigError("decode_grid: non-finite value");
        values[i] = static_cast<T>(f);
    }
    return grid;
}

template <typename T>
void save_grid(const fs::path& path, const VoxelGrid<T>& grid)
{
    write_file(path, encode_grid(grid));
}

template <typename T = double>
VoxelGrid<T> load_grid(const fs::path& path)
{
    return decode_grid<T>(read_file(path));
}

struct PlyColor {
    unsigned char r, g, b;
};

/// Default colouring: linear ramp from light grey (0) to red (1).
inline PlyColor value_to_red(double v)
{
    const double t = std::clamp(v, 0.0, 1.0);
    auto lerp = [t](double a, double b) { return static_cast<unsigned char>(std::lround(a + (b - a) * t)); };
    return {lerp(200, 255), lerp(200, 0), lerp(200, 0)};
}

/// ASCII PLY point cloud, one vertex per grid vertex carrying the value of
/// `channel` and a colour. When min_value is set, vertices below it are skipped.
template <typename T>
std::string encode_ply(const VoxelGrid<T>& grid, int channel,
                       const std::function<PlyColor(double)>& color = value_to_red,
                       std::optional<double> min_value = std::nullopt)
{
    std::size_t count = 0;
    for (std::size_t v = 0; v < grid.vertex_count(); ++v)
        if (!min_value || grid.at(v, channel) >= *min_value) ++count;
    std::ostringstream os;
    os << "ply\nformat ascii 1.0\nelement vertex " << count
       << "\nproperty float x\nproperty float y\nproperty float z\nproperty float value\n"
          "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (std::size_t v = 0; v < grid.vertex_count(); ++v) {
        const double value = grid.at(v, channel);
        if (min_value && value < *min_value) continue;
        const Vec3 p = grid.vertex_position(v);
        const PlyColor c = color(value);
        os << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' ' << static_cast<float>(p.z()) << ' '
           << static_cast<float>(value) << ' ' << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b) << '\n';
    }
    return os.str();
}

} // namespace uf
