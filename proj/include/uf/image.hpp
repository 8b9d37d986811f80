#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "uf/common.hpp"
#include "uf/io.hpp"

namespace uf {

/// Row-major RGB image, top-left origin, values nominally in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Image() = default;
    Image(int w, int h, const Rgb& fill = Rgb::Zero()) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    Rgb& operator()(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    [[nodiscard]] const Rgb& operator()(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    [[nodiscard]] std::size_t size() const { return pixels.size(); }
};

/// Row-major scalar map.
struct ScalarMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ScalarMap() = default;
    ScalarMap(int w, int h, double fill = 0.0) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    double& operator()(int col, int row) { return values[static_cast<std::size_t>(row) * width + col]; }
    [[nodiscard]] double operator()(int col, int row) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

inline int quantize8(double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

/// ASCII PPM (P3), 8 bits per channel.
inline std::string encode_ppm(const Image& img)
{
    std::ostringstream os;
    os << "P3\n" << img.width << ' ' << img.height << "\n255\n";
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const Rgb& p = img(c, r);
            os << quantize8(p.x()) << ' ' << quantize8(p.y()) << ' ' << quantize8(p.z()) << (c + 1 == img.width ? '\n' : ' ');
        }
    }
    return os.str();
}

inline Image decode_ppm(const std::string& text)
{
    std::istringstream is(text);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    if (magic != "P3" || w <= 0 || h <= 0 || maxval <= 0) throw ConfigError("decode_ppm: not an ASCII PPM");
    Image img(w, h);
    for (auto& p : img.pixels) {
        int r = 0, g = 0, b = 0;
        if (!(is >> r >> g >> b)) throw ConfigError("decode_ppm: truncated pixel data");
        p = Rgb(r, g, b) / static_cast<double>(maxval);
    }
    return img;
}

/// Grayscale-to-colour ramp for uncertainty maps: dark blue -> yellow.
inline Image false_color(const ScalarMap& map, double lo, double hi)
{
    Image img(map.width, map.height);
    const double range = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double t = std::clamp((map.values[i] - lo) / range, 0.0, 1.0);
        img.pixels[i] = Rgb(0.1 + 0.9 * t, 0.05 + 0.85 * t, 0.4 * (1.0 - t));
    }
    return img;
}

/// Row-major CSV, one image row per line.
inline std::string encode_csv(const ScalarMap& map)
{
    std::string out;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            if (c) out += ',';
            out += format_double(map(c, r));
        }
        out += '\n';
    }
    return out;
}

} // namespace uf
