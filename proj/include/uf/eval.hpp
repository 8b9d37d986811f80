#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uf/image.hpp"
#include "uf/io.hpp"
#include "uf/stochastic_render.hpp"
#include "uf/uncertainty.hpp"

namespace uf {

inline constexpr double kPsnrCap = 99.0;

inline double mse(const Image& a, const Image& b)
{
    if (a.width != b.width || a.height != b.height) throw ConfigError("image dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += (a.pixels[i] - b.pixels[i]).squaredNorm();
    return a.pixels.empty() ? 0.0 : acc / (3.0 * static_cast<double>(a.pixels.size()));
}

inline double psnr(const Image& image, const Image& reference)
{
    const double m = mse(image, reference);
    if (m <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(m));
}

struct SparsificationCurve {
    std::vector<double> fractions;
    std::vector<double> by_uncertainty;
    std::vector<double> by_error;  // oracle ordering
};

namespace detail {

// Mean of errors that survive removing the `removed` highest-scoring pixels,
// summed in index order. Equal scores are removed lower index first.
inline std::vector<double> removal_curve(std::span<const double> errors, std::span<const double> score,
                                         const std::vector<std::size_t>& removed_counts)
{
    const std::size_t n = errors.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<std::uint8_t> gone(n, 0);
    std::vector<double> out;
    std::size_t done = 0;
    for (std::size_t r : removed_counts) {
        for (; done < r; ++done) gone[order[done]] = 1;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!gone[i]) sum += errors[i];
        out.push_back(sum / static_cast<double>(n - r));
    }
    return out;
}

} // namespace detail

/// Fractions s/steps for s = 0..steps-1; at each, ceil(f n) pixels are removed.
inline SparsificationCurve sparsification_curve(std::span<const double> errors, std::span<const double> uncertainties,
                                                int steps = 20)
{
    if (errors.empty()) throw ConfigError("sparsification_curve: empty input");
    if (errors.size() != uncertainties.size()) throw ConfigError("sparsification_curve: length mismatch");
    if (steps < 1 || errors.size() < static_cast<std::size_t>(steps))
        throw ConfigError("sparsification_curve: need at least `steps` pixels");
    const std::size_t n = errors.size();
    SparsificationCurve c;
    std::vector<std::size_t> removed;
    for (int s = 0; s < steps; ++s) {
        c.fractions.push_back(static_cast<double>(s) / steps);
        removed.push_back((static_cast<std::size_t>(s) * n + steps - 1) / steps);
    }
    c.by_uncertainty = detail::removal_curve(errors, uncertainties, removed);
    c.by_error = detail::removal_curve(errors, errors, removed);
    return c;
}

/// Trapezoidal area between the two curves after dividing both by the
/// fraction-0 error. Zero initial error gives 0.
inline double ause(const SparsificationCurve& c)
{
    if (c.fractions.empty()) throw ConfigError("ause: empty curve");
    const double e0 = c.by_uncertainty.front();
    if (!(e0 > 0.0)) return 0.0;
    double area = 0.0;
    for (std::size_t s = 0; s + 1 < c.fractions.size(); ++s) {
        const double d0 = (c.by_uncertainty[s] - c.by_error[s]) / e0;
        const double d1 = (c.by_uncertainty[s + 1] - c.by_error[s + 1]) / e0;
        area += 0.5 * (d0 + d1) * (c.fractions[s + 1] - c.fractions[s]);
    }
    return std::max(0.0, area);
}

inline std::string encode_curve_csv(const SparsificationCurve& c)
{
    std::string out = "fraction,uncertainty_order,error_order\n";
    for (std::size_t i = 0; i < c.fractions.size(); ++i)
        out += format_double(c.fractions[i]) + "," + format_double(c.by_uncertainty[i]) + "," + format_double(c.by_error[i]) + "\n";
    return out;
}

/// Per-pixel mean absolute RGB error.
inline std::vector<double> pixel_errors(const Image& image, const Image& reference)
{
    if (image.width != reference.width || image.height != reference.height) throw ConfigError("image dimensions differ");
    std::vector<double> e(image.pixels.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = (image.pixels[i] - reference.pixels[i]).cwiseAbs().mean();
    return e;
}

struct EvalConfig {
    int K = 16;
    int steps = 20;
    double step = 0.0;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct ViewMaps {
    Image color;
    ScalarMap u_c, u_h, u;
    std::vector<double> errors;
};

inline ViewMaps render_view_maps(const StochasticRadianceField& f, const UncertaintyGrid* vh, const Camera& cam,
                                 const EvalConfig& cfg)
{
    RenderSettings rs;
    rs.K = cfg.K;
    rs.step = cfg.step;
    rs.seed = cfg.seed;
    rs.threads = cfg.threads;
    RenderOutput r = render_image(f, cam, rs);
    ViewMaps m{std::move(r.color), std::move(r.u_c), ScalarMap(cam.width, cam.height), ScalarMap(cam.width, cam.height), {}};
    if (vh) m.u_h = render_uh_map(f, *vh, cam, cfg.step, cfg.threads);
    for (std::size_t i = 0; i < m.u.values.size(); ++i) m.u.values[i] = combined_pixel_uncertainty(m.u_c.values[i], m.u_h.values[i]);
    return m;
}

struct ViewReport {
    int camera_id = 0;
    double psnr = 0.0;
    double ause_uc = 0.0;
    double ause_uh = 0.0;
    double ause_combined = 0.0;
    SparsificationCurve curve_combined;
};

struct EvalReport {
    std::vector<ViewReport> views;
    double mean_psnr = 0.0;
    double mean_ause_uc = 0.0;
    double mean_ause_uh = 0.0;
    double mean_ause_combined = 0.0;
};

inline ViewReport evaluate_view(const ViewMaps& m, const Image& gt, int camera_id, int steps)
{
    ViewReport r;
    r.camera_id = camera_id;
    r.psnr = psnr(m.color, gt);
    const std::vector<double> err = pixel_errors(m.color, gt);
    r.ause_uc = ause(sparsification_curve(err, m.u_c.values, steps));
    r.ause_uh = ause(sparsification_curve(err, m.u_h.values, steps));
    r.curve_combined = sparsification_curve(err, m.u.values, steps);
    r.ause_combined = ause(r.curve_combined);
    return r;
}

inline EvalReport eval_views(const StochasticRadianceField& f, const UncertaintyGrid& vh, std::span<const Camera> cameras,
                             std::span<const Image> gt, std::span<const int> camera_ids, const EvalConfig& cfg)
{
    if (cameras.size() != gt.size() || cameras.size() != camera_ids.size()) throw ConfigError("eval_views: input sizes differ");
    EvalReport rep;
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const ViewMaps m = render_view_maps(f, &vh, cameras[v], cfg);
        rep.views.push_back(evaluate_view(m, gt[v], camera_ids[v], cfg.steps));
    }
    if (!rep.views.empty()) {
        for (const auto& r : rep.views) {
            rep.mean_psnr += r.psnr;
            rep.mean_ause_uc += r.ause_uc;
            rep.mean_ause_uh += r.ause_uh;
            rep.mean_ause_combined += r.ause_combined;
        }
        const double n = static_cast<double>(rep.views.size());
        rep.mean_psnr /= n;
        rep.mean_ause_uc /= n;
        rep.mean_ause_uh /= n;
        rep.mean_ause_combined /= n;
    }
    return rep;
}

inline std::string encode_report_csv(const EvalReport& rep)
{
    std::string out = "camera_id,psnr,ause_uc,ause_uh,ause_combined\n";
    for (const auto& r : rep.views)
        out += std::to_string(r.camera_id) + "," + format_double(r.psnr) + "," + format_double(r.ause_uc) + "," +
               format_double(r.ause_uh) + "," + format_double(r.ause_combined) + "\n";
    return out;
}

inline nlohmann::json to_json(const EvalReport& rep)
{
    return {{"views", rep.views.size()},
            {"mean_psnr", rep.mean_psnr},
            {"mean_ause_uc", rep.mean_ause_uc},
            {"mean_ause_uh", rep.mean_ause_uh},
            {"mean_ause_combined", rep.mean_ause_combined}};
}

} // namespace uf
