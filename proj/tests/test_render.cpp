#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "uf/eval.hpp"
#include "uf/gt_render.hpp"
#include "uf/rig.hpp"
#include "uf/stochastic_render.hpp"

using namespace uf;

namespace {

const BoundingBox kBox{Vec3(-2, -2, -2), Vec3(2, 2, 2)};

StochasticRadianceField random_field(std::uint64_t seed, double beta_raw_lo = -2.5, double beta_raw_hi = -1.0)
{
    StochasticRadianceField f = init_field({6, 6, 6}, kBox);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dens(-1, 3), beta(beta_raw_lo, beta_raw_hi), col(-2, 2);
    for (std::size_t v = 0; v < f.density.vertex_count(); ++v) {
        f.density.at(v, 0) = dens(rng);
        f.density.at(v, 1) = beta(rng);
        for (int c = 0; c < 3; ++c) f.color.at(v, c) = col(rng);
        f.color.at(v, 3) = beta(rng);
    }
    return f;
}

Ray axis_ray(double y, double z)
{
    Ray r{Vec3(-10, y, z), Vec3::UnitX(), 0, 0};
    clip_ray_to_box(r, kBox);
    return r;
}

} // namespace

TEST(Samples, MidpointRule)
{
    const RaySamples s = sample_points(Ray{Vec3::Zero(), Vec3::UnitX(), 0.0, 1.0}, 0.25);
    ASSERT_EQ(s.size(), 4u);
    const double want[] = {0.125, 0.375, 0.625, 0.875};
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(s.t[i], want[i], 1e-15);
        EXPECT_NEAR(s.delta[i], 0.25, 1e-15);
        EXPECT_NEAR(s.positions[i].x(), want[i], 1e-15);
    }
}

TEST(Samples, EmptyTruncatedAndDegenerate)
{
    EXPECT_TRUE(sample_points(Ray{Vec3::Zero(), Vec3::UnitX(), 2.0, 2.0}, 0.1).empty());
    const RaySamples one = sample_points(Ray{Vec3::Zero(), Vec3::UnitX(), 1.0, 1.3}, 0.5);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_NEAR(one.t[0], 1.15, 1e-15);
    EXPECT_NEAR(one.delta[0], 0.3, 1e-15);
    const RaySamples tr = sample_points(Ray{Vec3::Zero(), Vec3::UnitX(), 0.0, 1.1}, 0.5);
    ASSERT_EQ(tr.size(), 3u);
    EXPECT_NEAR(tr.delta[2], 0.1, 1e-12);
    EXPECT_NEAR(tr.t[2], 1.05, 1e-12);
    EXPECT_THROW(sample_points(Ray{}, 0.0), ConfigError);
}

TEST(Transmittance, Examples)
{
    const std::vector<double> zero(5, 0.0), d(5, 0.3);
    for (double t : transmittance_profile(zero, d)) EXPECT_EQ(t, 1.0);
    const std::vector<double> s{std::log(2.0), std::log(2.0)}, one{1.0, 1.0};
    const auto T = transmittance_profile(s, one);
    EXPECT_EQ(T[0], 1.0);
    EXPECT_NEAR(T[1], 0.5, 1e-15);
    EXPECT_NEAR(T[2], 0.25, 1e-15);
}

TEST(Transmittance, MatchesLogSpaceOracle)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 3), du(0.01, 0.5);
    std::vector<double> s(200), d(200);
    for (int i = 0; i < 200; ++i) {
        s[i] = u(rng);
        d[i] = du(rng);
    }
    const auto T = transmittance_profile(s, d);
    double cum = 0;
    for (int i = 0; i < 200; ++i) {
        EXPECT_NEAR(T[i], std::exp(-cum), 1e-12);
        cum += s[i] * d[i];
        EXPECT_LE(T[i + 1], T[i]);
    }
}

TEST(Composite, Examples)
{
    const Rgb bg = Rgb::Ones();
    const std::vector<double> zero(3, 0.0), d(3, 0.5);
    const std::vector<Rgb> red(3, Rgb(1, 0, 0));
    EXPECT_EQ(composite_color(zero, red, d, bg), bg);
    const std::vector<double> opaque{1e4, 0.0, 0.0};
    EXPECT_LT((composite_color(opaque, red, d, bg) - Rgb(1, 0, 0)).cwiseAbs().maxCoeff(), 1e-3);
    const std::vector<double> half{std::log(2.0)}, unit{1.0};
    const std::vector<Rgb> r1{Rgb(1, 0, 0)};
    EXPECT_NEAR((composite_color(half, r1, unit, bg) - Rgb(1, 0.5, 0.5)).norm(), 0.0, 1e-15);
}

TEST(Composite, WeightsSumToOne)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 5), du(0.01, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(1 + trial), d(1 + trial);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = u(rng);
            d[i] = du(rng);
        }
        const auto w = compositing_weights(s, d);
        double sum = 0;
        for (double x : w) sum += x;
        EXPECT_NEAR(sum, 1.0, 1e-10);
    }
}

TEST(Stochastic, DegenerateScalesGiveNoVariance)
{
    StochasticRadianceField f = random_field(3);
    for (std::size_t v = 0; v < f.density.vertex_count(); ++v) {
        f.density.at(v, 1) = -1000;
        f.color.at(v, 3) = -1000;
    }
    f.config.beta_floor = 1e-300;
    const PixelEstimate e = render_pixel_stochastic(f, axis_ray(0.3, -0.4), 16, 0.1, 5, 0);
    for (const Rgb& c : e.colors) EXPECT_EQ(c, e.colors[0]);
    EXPECT_EQ(e.u_c, 0.0);
}

TEST(Stochastic, SingleDrawHasZeroVariance)
{
    const StochasticRadianceField f = random_field(4);
    EXPECT_EQ(render_pixel_stochastic(f, axis_ray(0.1, 0.2), 1, 0.1, 0, 0).u_c, 0.0);
    EXPECT_THROW(render_pixel_stochastic(f, axis_ray(0.1, 0.2), 0, 0.1, 0, 0), ConfigError);
}

TEST(Stochastic, VarianceIsOrderInvariant)
{
    const StochasticRadianceField f = random_field(5);
    PixelEstimate e = render_pixel_stochastic(f, axis_ray(-0.5, 0.7), 12, 0.1, 1, 2);
    std::vector<Rgb> rev(e.colors.rbegin(), e.colors.rend());
    std::rotate(rev.begin(), rev.begin() + 5, rev.end());
    EXPECT_NEAR(color_variance(rev), e.u_c, 1e-15);
}

// 1000 counter-stream draws against 1e5 draws from an independent generator.
TEST(Stochastic, LargeKMatchesMonteCarlo)
{
    const StochasticRadianceField f = random_field(6, -1.5, -0.5);
    const Ray ray = axis_ray(0.4, -0.3);
    const RayParams p = prepare_ray(f, ray, 0.1);
    const PixelEstimate e = render_pixel_stochastic(p, f.config, 1000, 7, 0);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    const int n = 100000;
    Rgb m = Rgb::Zero(), m2 = Rgb::Zero();
    for (int k = 0; k < n; ++k) {
        const double es = g(rng), ec = g(rng);
        Rgb c = Rgb::Zero();
        double t = 1;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double s = std::log1p(std::exp(p.density[i].mu_raw + es * p.density[i].beta + f.config.density_shift));
            Rgb ci;
            for (int ch = 0; ch < 3; ++ch) ci[ch] = std::clamp(p.color[i].mu[ch] + ec * p.color[i].beta, 0.0, 1.0);
            const double a = 1 - std::exp(-s * p.samples.delta[i]);
            c += t * a * ci;
            t *= 1 - a;
        }
        c += t * f.config.background;
        m += c;
        m2 += c.cwiseAbs2();
    }
    m /= n;
    const double oracle = (m2 / n - m.cwiseAbs2()).mean();
    ASSERT_GT(oracle, 1e-4);
    EXPECT_NEAR(e.u_c, oracle, 0.1 * oracle);
}

TEST(RenderImage, InitialFieldIsBackground)
{
    const StochasticRadianceField f = init_field({8, 8, 8}, kBox);
    const Camera cam = make_look_at_camera(Vec3(0, -9, 3), Vec3::Zero(), 16, 16, 0.35);
    const RenderOutput out = render_image(f, cam, RenderSettings{});
    for (std::size_t i = 0; i < out.color.pixels.size(); ++i) {
        EXPECT_LT((out.color.pixels[i] - f.config.background).cwiseAbs().maxCoeff(), 1e-2);
        EXPECT_GE(out.u_c.values[i], 0.0);
        EXPECT_LT(out.u_c.values[i], 1e-2);
    }
}

TEST(RenderImage, DeterministicAndThreadInvariant)
{
    const StochasticRadianceField f = random_field(9);
    const Camera cam = make_look_at_camera(Vec3(7, -5, 3), Vec3::Zero(), 20, 16, 0.35);
    RenderSettings rs;
    rs.seed = 11;
    rs.mode = RenderMode::stochastic;
    const RenderOutput a = render_image(f, cam, rs);
    const RenderOutput b = render_image(f, cam, rs);
    rs.threads = 4;
    const RenderOutput c = render_image(f, cam, rs);
    EXPECT_EQ(a.color.pixels, b.color.pixels);
    EXPECT_EQ(a.u_c.values, b.u_c.values);
    EXPECT_EQ(a.color.pixels, c.color.pixels);
    EXPECT_EQ(a.u_c.values, c.u_c.values);
    rs.seed = 12;
    EXPECT_NE(render_image(f, cam, rs).u_c.values, a.u_c.values);
}

TEST(RenderImage, SmallScalesConvergeToMeanMode)
{
    StochasticRadianceField f = random_field(10);
    for (std::size_t v = 0; v < f.density.vertex_count(); ++v) {
        f.density.at(v, 1) = softplus_inverse(1e-4);
        f.color.at(v, 3) = softplus_inverse(1e-4);
    }
    f.config.beta_floor = 1e-5;
    const Camera cam = make_look_at_camera(Vec3(-6, 6, 2), Vec3::Zero(), 16, 16, 0.4);
    RenderSettings rs;
    const RenderOutput mean = render_image(f, cam, rs);
    rs.mode = RenderMode::stochastic;
    const RenderOutput st = render_image(f, cam, rs);
    for (std::size_t i = 0; i < mean.color.pixels.size(); ++i)
        EXPECT_LT((mean.color.pixels[i] - st.color.pixels[i]).cwiseAbs().maxCoeff(), 1e-2);
}

// A field filled analytically from a three-sphere ground truth reproduces its
// images: the pre-activation density is a steep linear function of the signed
// distance, so trilinear interpolation keeps the surface where it belongs.
TEST(RenderImage, GroundTruthFieldMatchesGtRender)
{
    GroundTruthScene scene;
    scene.primitives.push_back(Primitive::sphere(Vec3(-10, 0, 0), 9, Rgb(0.9, 0.2, 0.2), 500));
    scene.primitives.push_back(Primitive::sphere(Vec3(10, 4, 0), 8, Rgb(0.2, 0.8, 0.3), 500));
    scene.primitives.push_back(Primitive::sphere(Vec3(0, -8, 12), 7, Rgb(0.2, 0.3, 0.9), 500));
    StochasticRadianceField f = init_field({64, 64, 64}, scene.bbox);
    for (std::size_t v = 0; v < f.density.vertex_count(); ++v) {
        const Vec3 x = f.density.vertex_position(v);
        double best = -1e300;
        const Primitive* nearest = nullptr;
        for (const Primitive& p : scene.primitives) {
            const double d = p.radius - (x - p.center).norm();
            if (d > best) {
                best = d;
                nearest = &p;
            }
        }
        f.density.at(v, 0) = std::clamp(80.0 * best, -30.0, 500.0) - f.config.density_shift;
        for (int ch = 0; ch < 3; ++ch) f.color.at(v, ch) = std::log(nearest->albedo[ch] / (1 - nearest->albedo[ch]));
    }
    const double step = default_step(f);
    const CameraRig rig = sample_hemisphere_rig(RigSpec{}, scene.bbox);
    double total = 0;
    int n = 0;
    RenderSettings set;
    set.K = 0;
    for (const Camera& cam : rig.cameras_of(Split::test)) {
        total += psnr(render_image(f, cam, set).color, gt_render(scene, cam, step).color);
        ++n;
    }
    EXPECT_GT(total / n, 30.0);
}
