#pragma once

#include <algorithm>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uf/eval.hpp"
#include "uf/rig.hpp"
#include "uf/trainer.hpp"
#include "uf/uncertainty.hpp"

namespace uf {

/// Sum of normalized per-pixel U_H over the image.
inline double image_uncertainty(const Camera& cam, const UncertaintyGrid& vh, const StochasticRadianceField& f, double step = 0.0,
                                unsigned threads = 1)
{
    const ScalarMap m = render_uh_map(f, vh, cam, step, threads);
    double s = 0.0;
    for (double v : m.values) s += v;
    return s;
}

/// Index of the largest score; the lowest index wins ties.
inline std::size_t select_nbv(std::span<const double> scores)
{
    if (scores.empty()) throw ConfigError("select_nbv: no candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

enum class Strategy { uncertainty, random };

inline std::string to_string(Strategy s) { return s == Strategy::uncertainty ? "uncertainty" : "random"; }

inline Strategy strategy_from_string(const std::string& s)
{
    if (s == "uncertainty") return Strategy::uncertainty;
    if (s == "random") return Strategy::random;
    throw ConfigError("unknown strategy: " + s);
}

struct PlannerConfig {
    int N = 10;
    int rounds = 1;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::uncertainty;
    double tau = kDefaultTau;
    double step = 0.0;
    unsigned threads = 1;

    void validate() const
    {
        if (N < 1) throw ConfigError("planner: N must be >= 1");
        if (rounds < 0) throw ConfigError("planner: rounds must be >= 0");
        validate_tau(tau);
    }
};

struct Selection {
    int round = 0;
    int camera = 0;
    double score = 0.0;
};

struct NBVState {
    std::vector<int> train;
    std::vector<int> candidates;
    UncertaintyGrid vh;
    StochasticRadianceField field;
    std::vector<Selection> history;
    std::vector<double> test_psnr;  // one entry per trained checkpoint, initial first
    int round = 0;
};

/// Everything a planning run reads but never changes.
struct PlannerContext {
    const CameraRig* rig = nullptr;
    const std::vector<Image>* images = nullptr;  // ground truth, one per rig camera
    GridResolution resolution{64, 64, 64};
    BoundingBox bbox;
    FieldConfig field_config;
    TrainConfig train_config;
};

inline Dataset subset(const PlannerContext& ctx, std::span<const int> ids)
{
    Dataset d;
    for (int i : ids) {
        d.cameras.push_back(ctx.rig->cameras.at(i));
        d.images.push_back(ctx.images->at(i));
    }
    return d;
}

/// Mean PSNR of noise-free renders over the test split.
inline double test_psnr(const StochasticRadianceField& f, const PlannerContext& ctx, double step, unsigned threads)
{
    const std::vector<int> ids = ctx.rig->indices(Split::test);
    if (ids.empty()) return 0.0;
    RenderSettings rs;
    rs.K = 0;
    rs.step = step;
    rs.threads = threads;
    double acc = 0.0;
    for (int i : ids) acc += psnr(render_image(f, ctx.rig->cameras[i], rs).color, ctx.images->at(i));
    return acc / static_cast<double>(ids.size());
}

/// Fresh field trained on `train`, V_H estimated from those views.
inline void retrain(NBVState& st, const PlannerContext& ctx, const PlannerConfig& cfg, std::uint64_t train_seed)
{
    st.field = init_field(ctx.resolution, ctx.bbox, ctx.field_config);
    TrainConfig tc = ctx.train_config;
    tc.seed = train_seed;
    tc.threads = cfg.threads;
    const Dataset d = subset(ctx, st.train);
    train(st.field, d, tc);
    st.vh = estimate_uncertainty_field(st.field, d.cameras, cfg.tau, cfg.step, cfg.threads);
    st.test_psnr.push_back(test_psnr(st.field, ctx, cfg.step, cfg.threads));
}

inline std::uint64_t round_seed(std::uint64_t seed, int round) { return hash_combine(seed, static_cast<std::uint64_t>(round)); }

/// Initial state: the rig's train split, trained once.
inline NBVState initial_state(const PlannerContext& ctx, const PlannerConfig& cfg)
{
    NBVState st;
    st.train = ctx.rig->indices(Split::train);
    st.candidates = ctx.rig->indices(Split::candidate);
    retrain(st, ctx, cfg, round_seed(cfg.seed, 0));
    return st;
}

/// N sequential selections with training-free V_H updates between them, then
/// retraining from scratch on the enlarged train set.
inline void nbv_round(NBVState& st, const PlannerContext& ctx, const PlannerConfig& cfg)
{
    cfg.validate();
    if (st.candidates.size() < static_cast<std::size_t>(cfg.N)) throw ConfigError("nbv_round: fewer candidates than N");
    const int round = st.round + 1;
    std::mt19937_64 rng(round_seed(hash_combine(cfg.seed, 0x5eed), round));
    for (int n = 0; n < cfg.N; ++n) {
        std::size_t pick = 0;
        double score = 0.0;
        if (cfg.strategy == Strategy::uncertainty) {
            std::vector<double> scores(st.candidates.size());
            for (std::size_t c = 0; c < scores.size(); ++c)
                scores[c] = image_uncertainty(ctx.rig->cameras[st.candidates[c]], st.vh, st.field, cfg.step, cfg.threads);
            pick = select_nbv(scores);
            score = scores[pick];
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, st.candidates.size() - 1)(rng);
            score = image_uncertainty(ctx.rig->cameras[st.candidates[pick]], st.vh, st.field, cfg.step, cfg.threads);
        }
        const int cam = st.candidates[pick];
        mark_view_observed(st.vh, st.field, ctx.rig->cameras[cam], cfg.step, cfg.threads);
        st.candidates.erase(st.candidates.begin() + static_cast<std::ptrdiff_t>(pick));
        st.train.push_back(cam);
        st.history.push_back({round, cam, score});
    }
    st.round = round;
    retrain(st, ctx, cfg, round_seed(cfg.seed, round));
}

inline nlohmann::json to_json(const NBVState& st, Strategy s)
{
    nlohmann::json sel = nlohmann::json::array();
    for (const auto& h : st.history) sel.push_back({{"round", h.round}, {"camera", h.camera}, {"score", h.score}});
    return {{"strategy", to_string(s)}, {"rounds", st.round}, {"train", st.train}, {"selections", sel}, {"test_psnr", st.test_psnr}};
}

/// Angle in radians between the direction from `center` to the camera and `axis`.
inline double angle_to_axis(const Camera& cam, const Vec3& center, const Vec3& axis)
{
    const Vec3 d = (cam.position() - center).normalized();
    return std::acos(std::clamp(d.dot(axis.normalized()), -1.0, 1.0));
}

} // namespace uf
