#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "uf/gradients.hpp"
#include "uf/image.hpp"
#include "uf/io.hpp"

namespace uf {

struct TrainConfig {
    int iterations = 10000;
    int batch_rays = 4096;
    int K = 16;
    double lambda = 0.001;
    double lr_density = 0.5;
    double lr_density_beta = 0.01;
    double lr_color = 0.1;
    double lr_color_beta = 0.01;
    double step = 0.0;  // 0 selects half the voxel edge
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const
    {
        if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
        if (batch_rays < 1) throw ConfigError("train: batch_rays must be >= 1");
        if (K < 2) throw ConfigError("train: K must be >= 2");
        if (!(lambda >= 0.0)) throw ConfigError("train: lambda must be >= 0");
        if (!(lr_density > 0.0 && lr_density_beta > 0.0 && lr_color > 0.0 && lr_color_beta > 0.0))
            throw ConfigError("train: learning rates must be positive");
        if (step < 0.0) throw ConfigError("train: step must be >= 0");
    }
};

inline nlohmann::json to_json(const TrainConfig& c)
{
    return {{"iterations", c.iterations}, {"batch_rays", c.batch_rays},       {"K", c.K},
            {"lambda", c.lambda},         {"lr_density", c.lr_density},       {"lr_density_beta", c.lr_density_beta},
            {"lr_color", c.lr_color},     {"lr_color_beta", c.lr_color_beta}, {"step", c.step},
            {"seed", c.seed}};
}

/// Keys absent from j keep their current value in base.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {})
{
    try {
        base.iterations = j.value("iterations", base.iterations);
        base.batch_rays = j.value("batch_rays", base.batch_rays);
        base.K = j.value("K", base.K);
        base.lambda = j.value("lambda", base.lambda);
        base.lr_density = j.value("lr_density", base.lr_density);
        base.lr_density_beta = j.value("lr_density_beta", base.lr_density_beta);
        base.lr_color = j.value("lr_color", base.lr_color);
        base.lr_color_beta = j.value("lr_color_beta", base.lr_color_beta);
        base.step = j.value("step", base.step);
        base.seed = j.value("seed", base.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    base.validate();
    return base;
}

/// Adam with bias correction; decay 0.9 / 0.99, epsilon 1e-8.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    /// params[i] -= lr_of(i) * mhat / (sqrt(vhat) + eps)
    template <typename LrOf>
    void step(std::span<double> params, std::span<const double> grads, LrOf&& lr_of)
    {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g * g;
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= lr_of(i) * mhat / (std::sqrt(vhat) + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.99;
    static constexpr double kEps = 1e-8;
    std::vector<double> m_, v_;
    std::int64_t t_ = 0;
};

/// Posed images used for training.
struct Dataset {
    std::vector<Camera> cameras;
    std::vector<Image> images;
};

/// Every pixel of every image as a ray clipped to the field bbox.
inline std::vector<TrainingRay> dataset_rays(const Dataset& data, const BoundingBox& bbox)
{
    if (data.cameras.size() != data.images.size()) throw ConfigError("dataset: camera/image count mismatch");
    std::vector<TrainingRay> rays;
    for (std::size_t v = 0; v < data.cameras.size(); ++v) {
        const Camera& cam = data.cameras[v];
        const Image& img = data.images[v];
        if (img.width != cam.width || img.height != cam.height) throw ConfigError("dataset: image size does not match camera");
        for (int r = 0; r < cam.height; ++r)
            for (int c = 0; c < cam.width; ++c) rays.push_back({pixel_ray(cam, c, r, bbox), img(c, r)});
    }
    return rays;
}

struct TrainLogRow {
    int iteration = 0;
    double nll = 0.0;
    double regularizer = 0.0;
    double batch_psnr = 0.0;
    double wall_seconds = 0.0;
};

inline std::string encode_train_log(const std::vector<TrainLogRow>& rows)
{
    std::string out = "iteration,nll,regularizer,batch_psnr,wall_time\n";
    for (const auto& r : rows)
        out += std::to_string(r.iteration) + "," + format_double(r.nll) + "," + format_double(r.regularizer) + "," +
               format_double(r.batch_psnr) + "," + format_double(r.wall_seconds) + "\n";
    return out;
}

inline double mse_to_psnr(double mse) { return mse <= 0.0 ? 99.0 : std::min(99.0, -10.0 * std::log10(mse)); }

using TrainCallback = std::function<void(const TrainLogRow&)>;

/// Batched Adam on the KDE objective. Batches are drawn uniformly with
/// replacement over all training pixels; noise and batch selection derive from
/// (seed, iteration), so runs are reproducible for any thread count.
inline std::vector<TrainLogRow> train(StochasticRadianceField& field, const Dataset& data, const TrainConfig& cfg,
                                      const TrainCallback& on_row = {})
{
    cfg.validate();
    if (data.cameras.empty()) throw ConfigError("train: dataset is empty");
    const std::vector<TrainingRay> rays = dataset_rays(data, field.bbox());
    const LossSettings ls{cfg.K, cfg.lambda, cfg.step};

    Adam density_opt(field.density.values().size());
    Adam color_opt(field.color.values().size());
    FieldGradients grads = FieldGradients::zeros_like(field);
    std::vector<TrainingRay> batch(cfg.batch_rays);
    std::vector<TrainLogRow> log;
    log.reserve(cfg.iterations);
    const int dc = field.density.channels();
    const int cc = field.color.channels();
    const auto start = std::chrono::steady_clock::now();

    for (int it = 0; it < cfg.iterations; ++it) {
        const std::uint64_t iter_seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(it));
        std::mt19937_64 pick(iter_seed);
        std::uniform_int_distribution<std::size_t> any(0, rays.size() - 1);
        for (auto& b : batch) b = rays[any(pick)];

        grads.clear();
        const BatchLoss bl = loss_gradients(field, batch, ls, iter_seed, grads, cfg.threads);
        if (!std::isfinite(bl.mean.total)) throw NumericError("train: loss diverged at iteration " + std::to_string(it));

        density_opt.step(field.density.values(), grads.density, [&](std::size_t i) {
            return (i % dc) == channel::density_mean ? cfg.lr_density : cfg.lr_density_beta;
        });
        color_opt.step(field.color.values(), grads.color, [&](std::size_t i) {
            return (i % cc) == channel::color_beta ? cfg.lr_color_beta : cfg.lr_color;
        });

        TrainLogRow row;
        row.iteration = it;
        row.nll = bl.mean.nll;
        row.regularizer = bl.mean.regularizer;
        row.batch_psnr = mse_to_psnr(bl.mse);
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.push_back(row);
        if (on_row) on_row(row);
    }
    return log;
}

} // namespace uf
