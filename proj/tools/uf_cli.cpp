// uf: scene generation, training, uncertainty estimation, rendering,
// evaluation and view planning from the command line.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uf/eval.hpp"
#include "uf/gt_render.hpp"
#include "uf/manifest.hpp"
#include "uf/planner.hpp"

using namespace uf;
using json = nlohmann::json;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

class Stopwatch {
public:
    [[nodiscard]] double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json read_json(const fs::path& p)
{
    if (!fs::is_regular_file(p)) throw ConfigError("cannot read " + p.string());
    try {
        return json::parse(read_file(p));
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

std::string cam_name(int id)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "cam_%03d", id);
    return buf;
}

/// Every file under `dir` except the manifest itself, in sorted order.
std::vector<FileRecord> record_outputs(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<FileRecord> out;
    for (const fs::path& f : files) out.push_back(record(dir, f));
    return out;
}

void finish(const fs::path& out, RunManifest m, const Stopwatch& clock)
{
    m.outputs = record_outputs(out);
    m.timings["wall_seconds"] = clock.seconds();
    write_manifest(out, m);
}

// Scene directories ----------------------------------------------------------

struct SceneData {
    BoxSceneSpec spec;
    GroundTruthScene scene;
    CameraRig rig;
    std::vector<Image> images;
    double gt_step = 0.5;
};

SceneData load_scene_dir(const fs::path& dir)
{
    SceneData s;
    const json j = read_json(dir / "scene.json");
    s.spec = box_scene_spec_from_json(j.value("scene", json::object()));
    s.scene = build_box_scene(s.spec);
    s.gt_step = j.value("gt_step", s.gt_step);
    s.rig = rig_from_json(read_json(dir / "cameras.json"));
    for (std::size_t i = 0; i < s.rig.cameras.size(); ++i) {
        const fs::path p = dir / "images" / (cam_name(static_cast<int>(i)) + ".ppm");
        if (!fs::is_regular_file(p)) throw ConfigError("missing image " + p.string());
        s.images.push_back(decode_ppm(read_file(p)));
    }
    return s;
}

const Camera& camera_at(const SceneData& s, int id)
{
    if (id < 0 || static_cast<std::size_t>(id) >= s.rig.cameras.size()) throw ConfigError("unknown camera id " + std::to_string(id));
    return s.rig.cameras[id];
}

// Training configuration -----------------------------------------------------

struct TrainOverrides {
    std::optional<int> iterations, batch_rays, K;
    std::optional<double> lambda, lr_density, lr_density_beta, lr_color, lr_color_beta, step;
    std::optional<std::uint64_t> seed;
    std::vector<int> resolution;

    void add_to(CLI::App* app)
    {
        app->add_option("--iterations", iterations, "Optimisation steps");
        app->add_option("--batch-rays", batch_rays, "Rays per batch");
        app->add_option("--K", K, "Trajectories per ray");
        app->add_option("--lambda", lambda, "Density regulariser weight");
        app->add_option("--lr-density", lr_density, "Learning rate of the density mean");
        app->add_option("--lr-density-beta", lr_density_beta, "Learning rate of the density scale");
        app->add_option("--lr-color", lr_color, "Learning rate of the colour mean");
        app->add_option("--lr-color-beta", lr_color_beta, "Learning rate of the colour scale");
        app->add_option("--step", step, "Quadrature step, 0 for half a voxel");
        app->add_option("--seed", seed, "Training seed");
        app->add_option("--resolution", resolution, "Grid vertices per axis (one value or three)")->expected(1, 3);
    }
};

struct FieldSetup {
    GridResolution resolution;
    FieldConfig field;
    TrainConfig train;

    [[nodiscard]] json to_json() const
    {
        return {{"resolution", {resolution.nx, resolution.ny, resolution.nz}}, {"field", uf::to_json(field)}, {"train", uf::to_json(train)}};
    }
};

GridResolution parse_resolution(const std::vector<int>& v)
{
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw ConfigError("resolution needs one or three values");
}

/// JSON file first, flags on top. A scene's background fills in when the
/// config does not name one.
FieldSetup field_setup(const json& cfg, const TrainOverrides& o, const SceneData& scene)
{
    FieldSetup s;
    if (cfg.contains("resolution")) {
        try {
            s.resolution = parse_resolution(cfg["resolution"].get<std::vector<int>>());
        } catch (const json::exception& e) {
            throw ConfigError(std::string("resolution: ") + e.what());
        }
    }
    if (!o.resolution.empty()) s.resolution = parse_resolution(o.resolution);
    if (s.resolution.nx < 2 || s.resolution.ny < 2 || s.resolution.nz < 2) throw ConfigError("resolution must be >= 2 per axis");
    const json fj = cfg.value("field", json::object());
    s.field = field_config_from_json(fj);
    if (!fj.contains("background")) s.field.background = scene.spec.background;
    s.train = train_config_from_json(cfg.value("train", json::object()));
    if (o.iterations) s.train.iterations = *o.iterations;
    if (o.batch_rays) s.train.batch_rays = *o.batch_rays;
    if (o.K) s.train.K = *o.K;
    if (o.lambda) s.train.lambda = *o.lambda;
    if (o.lr_density) s.train.lr_density = *o.lr_density;
    if (o.lr_density_beta) s.train.lr_density_beta = *o.lr_density_beta;
    if (o.lr_color) s.train.lr_color = *o.lr_color;
    if (o.lr_color_beta) s.train.lr_color_beta = *o.lr_color_beta;
    if (o.step) s.train.step = *o.step;
    if (o.seed) s.train.seed = *o.seed;
    s.train.validate();
    return s;
}

std::vector<int> parse_views(const std::string& spec, const CameraRig& rig)
{
    if (spec == "none") return {};
    if (spec == "train" || spec == "candidate" || spec == "test") return rig.indices(split_from_string(spec));
    std::vector<int> ids;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            ids.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("views: expected a split name, 'none' or comma-separated ids, got '" + spec + "'");
        }
        if (ids.back() < 0 || static_cast<std::size_t>(ids.back()) >= rig.cameras.size())
            throw ConfigError("unknown camera id " + tok);
    }
    return ids;
}

// Commands ----------------------------------------------------------------------

struct SceneArgs {
    std::string spec, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> gt_step;
};

int cmd_scene(const SceneArgs& a, unsigned threads)
{
    const Stopwatch clock;
    const json j = a.spec.empty() ? json::object() : read_json(a.spec);
    const BoxSceneSpec spec = box_scene_spec_from_json(j.value("scene", json::object()));
    RigSpec rs = rig_spec_from_json(j.value("rig", json::object()));
    if (a.seed) rs.seed = *a.seed;
    const double gt_step = a.gt_step.value_or(j.value("gt_step", 0.5));
    if (!(gt_step > 0.0)) throw ConfigError("gt_step must be positive");
    const GroundTruthScene scene = build_box_scene(spec);
    const CameraRig rig = sample_hemisphere_rig(rs, scene.bbox);

    const fs::path out = a.out;
    fs::create_directories(out / "images");
    fs::create_directories(out / "depth");
    const json resolved{{"scene", to_json(spec)}, {"rig", to_json(rs)}, {"gt_step", gt_step}};
    write_file(out / "scene.json", resolved.dump(2) + "\n");
    write_file(out / "cameras.json", to_json(rig).dump(2) + "\n");
    for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
        const GtFrame f = gt_render(scene, rig.cameras[i], gt_step, threads);
        const std::string name = cam_name(static_cast<int>(i));
        write_file(out / "images" / (name + ".ppm"), encode_ppm(f.color));
        write_file(out / "depth" / (name + ".csv"), encode_csv(f.depth));
    }

    RunManifest m;
    m.command = "scene";
    m.config = resolved;
    m.seed = rs.seed;
    if (!a.spec.empty()) m.inputs.push_back(record(out, a.spec));
    m.metrics = {{"train", rig.indices(Split::train).size()},
                 {"candidate", rig.indices(Split::candidate).size()},
                 {"test", rig.indices(Split::test).size()}};
    finish(out, m, clock);
    std::cout << "scene: " << rig.cameras.size() << " views written to " << out.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string scene, config, out, views = "train";
    TrainOverrides o;
};

int cmd_train(const TrainArgs& a, unsigned threads)
{
    const Stopwatch clock;
    const SceneData sd = load_scene_dir(a.scene);
    const json cfg = a.config.empty() ? json::object() : read_json(a.config);
    FieldSetup setup = field_setup(cfg, a.o, sd);
    setup.train.threads = threads;
    Dataset d;
    for (int i : parse_views(a.views, sd.rig)) {
        d.cameras.push_back(sd.rig.cameras[i]);
        d.images.push_back(sd.images[i]);
    }
    StochasticRadianceField f = init_field(setup.resolution, sd.scene.bbox, setup.field);
    std::vector<TrainLogRow> log;
    if (setup.train.iterations > 0) log = train(f, d, setup.train);

    const fs::path out = a.out;
    json resolved = setup.to_json();
    resolved["views"] = a.views;
    save_field(out, f, resolved);
    write_file(out / "train_log.csv", encode_train_log(log));

    RunManifest m;
    m.command = "train";
    m.config = resolved;
    m.seed = setup.train.seed;
    m.inputs.push_back(record(out, a.scene));
    if (!a.config.empty()) m.inputs.push_back(record(out, a.config));
    if (!log.empty()) m.metrics = {{"final_nll", log.back().nll}, {"final_batch_psnr", log.back().batch_psnr}};
    m.metrics["iterations"] = setup.train.iterations;
    finish(out, m, clock);
    std::cout << "train: " << setup.train.iterations << " iterations, checkpoint in " << out.string() << "\n";
    return 0;
}

struct EstimateArgs {
    std::string checkpoint, scene, out, views = "train";
    double tau = kDefaultTau;
    double step = 0.0;
    std::vector<int> resolution;
};

int cmd_estimate(const EstimateArgs& a, unsigned threads)
{
    const Stopwatch clock;
    const StochasticRadianceField f = load_field(a.checkpoint);
    const SceneData sd = load_scene_dir(a.scene);
    std::vector<Camera> cams;
    for (int i : parse_views(a.views, sd.rig)) cams.push_back(sd.rig.cameras[i]);
    const GridResolution res = a.resolution.empty() ? f.resolution() : parse_resolution(a.resolution);
    const UncertaintyGrid vh = estimate_uncertainty_field(f, cams, res, a.tau, a.step, threads);

    const fs::path out = a.out;
    fs::create_directories(out);
    save_uncertainty(out, vh);
    write_file(out / "vh.ply", encode_uncertainty_ply(vh));

    RunManifest m;
    m.command = "estimate";
    m.config = {{"tau", a.tau}, {"step", a.step}, {"views", a.views}, {"resolution", {res.nx, res.ny, res.nz}}};
    m.inputs.push_back(record(out, a.checkpoint));
    m.inputs.push_back(record(out, a.scene));
    m.metrics = {{"vertices", vh.grid.vertex_count()}, {"unseen_vertices", vh.unseen_count()}, {"cameras", cams.size()}};
    finish(out, m, clock);
    std::cout << "estimate: " << vh.unseen_count() << " of " << vh.grid.vertex_count() << " vertices unseen\n";
    return 0;
}

ScalarMap combined_map(const ScalarMap& u_c, const ScalarMap& u_h)
{
    ScalarMap u = u_c;
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = combined_pixel_uncertainty(u_c.values[i], u_h.values[i]);
    return u;
}

void write_map(const fs::path& out, const std::string& name, const ScalarMap& m)
{
    const double hi = m.values.empty() ? 1.0 : *std::max_element(m.values.begin(), m.values.end());
    write_file(out / (name + ".ppm"), encode_ppm(false_color(m, 0.0, hi > 0.0 ? hi : 1.0)));
    write_file(out / (name + ".csv"), encode_csv(m));
}

struct RenderArgs {
    std::string checkpoint, vh, scene, out, mode = "mean";
    int camera = 0;
    int K = 16;
    double step = 0.0;
    std::uint64_t seed = 0;
};

int cmd_render(const RenderArgs& a, unsigned threads)
{
    const Stopwatch clock;
    const StochasticRadianceField f = load_field(a.checkpoint);
    const SceneData sd = load_scene_dir(a.scene);
    const Camera& cam = camera_at(sd, a.camera);
    if (a.mode != "mean" && a.mode != "stochastic") throw ConfigError("mode must be mean or stochastic");
    if (a.K < 1) throw ConfigError("K must be >= 1");
    RenderSettings rs;
    rs.K = a.K;
    rs.step = a.step;
    rs.seed = a.seed;
    rs.threads = threads;
    rs.mode = a.mode == "mean" ? RenderMode::mean : RenderMode::stochastic;
    const RenderOutput r = render_image(f, cam, rs);

    const fs::path out = a.out;
    fs::create_directories(out);
    write_file(out / "rgb.ppm", encode_ppm(r.color));
    write_map(out, "u_c", r.u_c);
    RunManifest m;
    if (!a.vh.empty()) {
        const UncertaintyGrid vh = load_uncertainty(a.vh);
        const ScalarMap u_h = render_uh_map(f, vh, cam, a.step, threads);
        write_map(out, "u_h", u_h);
        write_map(out, "u", combined_map(r.u_c, u_h));
        m.inputs.push_back(record(out, a.vh));
    }
    m.command = "render";
    m.config = {{"camera", a.camera}, {"K", a.K}, {"step", a.step}, {"mode", a.mode}};
    m.seed = a.seed;
    m.inputs.push_back(record(out, a.checkpoint));
    m.inputs.push_back(record(out, a.scene));
    m.metrics = {{"psnr", psnr(r.color, sd.images[a.camera])}, {"split", to_string(sd.rig.splits[a.camera])}};
    finish(out, m, clock);
    std::cout << "render: camera " << a.camera << " psnr " << m.metrics["psnr"].get<double>() << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint, vh, scene, out, views = "test";
    EvalConfig cfg;
};

int cmd_eval(const EvalArgs& a, unsigned threads)
{
    const Stopwatch clock;
    const StochasticRadianceField f = load_field(a.checkpoint);
    const UncertaintyGrid vh = load_uncertainty(a.vh);
    const SceneData sd = load_scene_dir(a.scene);
    const std::vector<int> ids = parse_views(a.views, sd.rig);
    if (ids.empty()) throw ConfigError("eval: no views selected");
    std::vector<Camera> cams;
    std::vector<Image> gts;
    for (int i : ids) {
        cams.push_back(sd.rig.cameras[i]);
        gts.push_back(sd.images[i]);
    }
    EvalConfig cfg = a.cfg;
    cfg.threads = threads;
    const EvalReport rep = eval_views(f, vh, cams, gts, ids, cfg);

    const fs::path out = a.out;
    fs::create_directories(out / "curves");
    write_file(out / "report.csv", encode_report_csv(rep));
    write_file(out / "report.json", to_json(rep).dump(2) + "\n");
    for (const auto& v : rep.views) write_file(out / "curves" / (cam_name(v.camera_id) + ".csv"), encode_curve_csv(v.curve_combined));

    RunManifest m;
    m.command = "eval";
    m.config = {{"K", cfg.K}, {"steps", cfg.steps}, {"step", cfg.step}, {"views", a.views}};
    m.seed = cfg.seed;
    m.inputs.push_back(record(out, a.checkpoint));
    m.inputs.push_back(record(out, a.vh));
    m.inputs.push_back(record(out, a.scene));
    m.metrics = to_json(rep);
    finish(out, m, clock);
    std::cout << "eval: " << rep.views.size() << " views, psnr " << rep.mean_psnr << ", ause combined " << rep.mean_ause_combined
              << " colour " << rep.mean_ause_uc << " hole " << rep.mean_ause_uh << "\n";
    return 0;
}

struct NbvArgs {
    std::string scene, config, out;
    std::optional<int> N, rounds;
    std::optional<double> tau;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> strategies;
    TrainOverrides o;
};

int cmd_nbv(const NbvArgs& a, unsigned threads)
{
    const Stopwatch clock;
    const SceneData sd = load_scene_dir(a.scene);
    const json cfg = a.config.empty() ? json::object() : read_json(a.config);
    const FieldSetup setup = field_setup(cfg, a.o, sd);
    const json pj = cfg.value("planner", json::object());

    PlannerConfig base;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<std::string> strategies{"uncertainty", "random"};
    try {
        base.N = pj.value("N", base.N);
        base.rounds = pj.value("rounds", base.rounds);
        base.tau = pj.value("tau", base.tau);
        base.step = pj.value("step", base.step);
        seeds = pj.value("seeds", seeds);
        strategies = pj.value("strategies", strategies);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("planner config: ") + e.what());
    }
    if (a.N) base.N = *a.N;
    if (a.rounds) base.rounds = *a.rounds;
    if (a.tau) base.tau = *a.tau;
    if (!a.seeds.empty()) seeds = a.seeds;
    if (!a.strategies.empty()) strategies = a.strategies;
    base.threads = threads;
    base.validate();
    validate_tau(base.tau);
    if (seeds.empty() || strategies.empty()) throw ConfigError("nbv: need at least one seed and one strategy");
    std::vector<Strategy> strats;
    for (const auto& s : strategies) strats.push_back(strategy_from_string(s));
    const std::size_t budget = static_cast<std::size_t>(base.N) * static_cast<std::size_t>(base.rounds);
    if (sd.rig.indices(Split::candidate).size() < budget) throw ConfigError("nbv: fewer candidates than N x rounds");

    PlannerContext ctx;
    ctx.rig = &sd.rig;
    ctx.images = &sd.images;
    ctx.resolution = setup.resolution;
    ctx.bbox = sd.scene.bbox;
    ctx.field_config = setup.field;
    ctx.train_config = setup.train;

    const fs::path out = a.out;
    fs::create_directories(out);
    const Vec3 axis = sd.spec.opening.unit();
    const Vec3 center = sd.scene.bbox.center();
    std::string curve = "round,strategy,seed,test_psnr\n";
    std::map<std::string, std::vector<double>> psnr_sum;
    std::map<std::string, double> angle_sum;
    for (std::uint64_t seed : seeds) {
        PlannerConfig pc = base;
        pc.seed = seed;
        const NBVState init = initial_state(ctx, pc);
        for (Strategy s : strats) {
            pc.strategy = s;
            NBVState st = init;
            const fs::path run = out / to_string(s) / ("seed_" + std::to_string(seed));
            fs::create_directories(run);
            auto dump_round = [&](int r) {
                json j = to_json(st, s);
                j["round"] = r;
                j["seed"] = seed;
                write_file(run / ("round_" + std::to_string(r) + ".json"), j.dump(2) + "\n");
                write_file(run / ("vh_round_" + std::to_string(r) + ".ply"), encode_uncertainty_ply(st.vh));
            };
            dump_round(0);
            for (int r = 1; r <= pc.rounds; ++r) {
                nbv_round(st, ctx, pc);
                dump_round(r);
            }
            auto& sum = psnr_sum[to_string(s)];
            sum.resize(st.test_psnr.size(), 0.0);
            for (std::size_t r = 0; r < st.test_psnr.size(); ++r) {
                curve += std::to_string(r) + "," + to_string(s) + "," + std::to_string(seed) + "," + format_double(st.test_psnr[r]) + "\n";
                sum[r] += st.test_psnr[r];
            }
            double ang = 0.0;
            for (const auto& h : st.history) ang += angle_to_axis(sd.rig.cameras[h.camera], center, axis);
            angle_sum[to_string(s)] += ang / static_cast<double>(st.history.size());
        }
    }
    json summary = json::object();
    const double n = static_cast<double>(seeds.size());
    for (auto& [name, sum] : psnr_sum) {
        std::vector<double> mean;
        for (std::size_t r = 0; r < sum.size(); ++r) {
            mean.push_back(sum[r] / n);
            curve += std::to_string(r) + "," + name + ",mean," + format_double(sum[r] / n) + "\n";
        }
        summary[name] = {{"mean_test_psnr", mean}, {"mean_angle_to_opening_deg", angle_sum[name] / n * 180.0 / std::numbers::pi}};
    }
    write_file(out / "curve.csv", curve);
    write_file(out / "summary.json", summary.dump(2) + "\n");

    RunManifest m;
    m.command = "nbv";
    json resolved = setup.to_json();
    resolved["planner"] = {{"N", base.N}, {"rounds", base.rounds}, {"tau", base.tau}, {"step", base.step}, {"seeds", seeds}, {"strategies", strategies}};
    m.config = resolved;
    m.seed = seeds.front();
    m.inputs.push_back(record(out, a.scene));
    if (!a.config.empty()) m.inputs.push_back(record(out, a.config));
    m.metrics = summary;
    finish(out, m, clock);
    std::cout << "nbv: " << seeds.size() * strats.size() << " runs\n" << summary.dump(2) << "\n";
    return 0;
}

int cmd_verify(const std::string& path)
{
    const auto issues = verify_manifest(path);
    for (const auto& i : issues) std::cout << i.problem << ": " << i.path << "\n";
    if (!issues.empty()) return kExitVerifyFailed;
    std::cout << "verify: ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Voxel radiance fields with hole-aware uncertainty and view planning"};
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads (0 = all cores); 1 is the reference path")->capture_default_str();

    SceneArgs sa;
    auto* scene = app.add_subcommand("scene", "Render a box scene and its camera rig");
    scene->add_option("--spec", sa.spec, "Scene and rig JSON")->check(CLI::ExistingFile);
    scene->add_option("--out", sa.out, "Output directory")->required();
    scene->add_option("--seed", sa.seed, "Rig seed");
    scene->add_option("--gt-step", sa.gt_step, "Ground-truth quadrature step");

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "Fit a field to the training views");
    trn->add_option("--scene", ta.scene, "Scene directory")->required();
    trn->add_option("--config", ta.config, "Training JSON")->check(CLI::ExistingFile);
    trn->add_option("--out", ta.out, "Checkpoint directory")->required();
    trn->add_option("--views", ta.views, "Split name, 'none' or comma-separated camera ids")->capture_default_str();
    ta.o.add_to(trn);

    EstimateArgs ea;
    auto* est = app.add_subcommand("estimate", "Estimate the unseen-space grid");
    est->add_option("--checkpoint", ea.checkpoint, "Checkpoint directory")->required();
    est->add_option("--scene", ea.scene, "Scene directory")->required();
    est->add_option("--out", ea.out, "Output directory")->required();
    est->add_option("--tau", ea.tau, "Transmittance threshold")->capture_default_str();
    est->add_option("--step", ea.step, "Quadrature step, 0 for half a voxel");
    est->add_option("--views", ea.views, "Split name, 'none' or comma-separated camera ids")->capture_default_str();
    est->add_option("--resolution", ea.resolution, "Expected grid resolution")->expected(1, 3);

    RenderArgs ra;
    auto* ren = app.add_subcommand("render", "Render colour and uncertainty maps for one camera");
    ren->add_option("--checkpoint", ra.checkpoint, "Checkpoint directory")->required();
    ren->add_option("--vh", ra.vh, "Uncertainty grid directory");
    ren->add_option("--scene", ra.scene, "Scene directory")->required();
    ren->add_option("--camera", ra.camera, "Camera id")->required();
    ren->add_option("--out", ra.out, "Output directory")->required();
    ren->add_option("--K", ra.K, "Trajectories per pixel")->capture_default_str();
    ren->add_option("--step", ra.step, "Quadrature step, 0 for half a voxel");
    ren->add_option("--seed", ra.seed, "Noise seed");
    ren->add_option("--mode", ra.mode, "mean or stochastic")->capture_default_str();

    EvalArgs va;
    auto* ev = app.add_subcommand("eval", "PSNR and sparsification report over the test views");
    ev->add_option("--checkpoint", va.checkpoint, "Checkpoint directory")->required();
    ev->add_option("--vh", va.vh, "Uncertainty grid directory")->required();
    ev->add_option("--scene", va.scene, "Scene directory")->required();
    ev->add_option("--out", va.out, "Output directory")->required();
    ev->add_option("--views", va.views, "Split name or comma-separated camera ids")->capture_default_str();
    ev->add_option("--K", va.cfg.K, "Trajectories per pixel")->capture_default_str();
    ev->add_option("--steps", va.cfg.steps, "Sparsification fractions")->capture_default_str();
    ev->add_option("--step", va.cfg.step, "Quadrature step, 0 for half a voxel");
    ev->add_option("--seed", va.cfg.seed, "Noise seed");

    NbvArgs na;
    auto* nbv = app.add_subcommand("nbv", "Compare view selection strategies");
    nbv->add_option("--scene", na.scene, "Scene directory")->required();
    nbv->add_option("--config", na.config, "Training and planner JSON")->check(CLI::ExistingFile);
    nbv->add_option("--out", na.out, "Output directory")->required();
    nbv->add_option("--N", na.N, "Views added per round");
    nbv->add_option("--rounds", na.rounds, "Planning rounds");
    nbv->add_option("--tau", na.tau, "Transmittance threshold");
    nbv->add_option("--seeds", na.seeds, "Seeds")->delimiter(',');
    nbv->add_option("--strategies", na.strategies, "uncertainty, random")->delimiter(',');
    na.o.add_to(nbv);

    std::string manifest;
    auto* ver = app.add_subcommand("verify", "Re-hash the files a manifest records");
    ver->add_option("manifest", manifest, "Manifest file or its directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    if (threads == 0) threads = default_thread_count();

    try {
        if (*scene) return cmd_scene(sa, threads);
        if (*trn) return cmd_train(ta, threads);
        if (*est) return cmd_estimate(ea, threads);
        if (*ren) return cmd_render(ra, threads);
        if (*ev) return cmd_eval(va, threads);
        if (*nbv) return cmd_nbv(na, threads);
        if (*ver) return cmd_verify(manifest);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
