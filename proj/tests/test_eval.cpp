#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "uf/eval.hpp"

using namespace uf;

namespace {

// Quadratic reference: removes the highest remaining score one at a time,
// lowest index first on ties, and averages whatever is left.
std::vector<double> brute_curve(const std::vector<double>& err, const std::vector<double>& score, int steps)
{
    const std::size_t n = err.size();
    std::vector<double> out;
    for (int s = 0; s < steps; ++s) {
        const auto r = static_cast<std::size_t>(std::ceil(static_cast<double>(s) * static_cast<double>(n) / steps - 1e-12));
        std::vector<bool> gone(n, false);
        for (std::size_t k = 0; k < r; ++k) {
            std::size_t best = n;
            for (std::size_t i = 0; i < n; ++i)
                if (!gone[i] && (best == n || score[i] > score[best])) best = i;
            gone[best] = true;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!gone[i]) sum += err[i];
        out.push_back(sum / static_cast<double>(n - r));
    }
    return out;
}

double brute_ause(const std::vector<double>& err, const std::vector<double>& u, int steps)
{
    const std::vector<double> a = brute_curve(err, u, steps), b = brute_curve(err, err, steps);
    if (a[0] <= 0.0) return 0.0;
    double area = 0.0;
    for (int s = 0; s + 1 < steps; ++s) area += 0.5 * ((a[s] - b[s]) + (a[s + 1] - b[s + 1])) / a[0] / steps;
    return std::max(0.0, area);
}

std::pair<std::vector<double>, std::vector<double>> random_case(std::uint64_t seed, std::size_t n)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> e(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = u(rng);
        s[i] = 0.5 * e[i] + 0.5 * u(rng);
    }
    return {e, s};
}

} // namespace

TEST(Psnr, Examples)
{
    const Image a(4, 4, Rgb(0.2, 0.4, 0.6));
    EXPECT_EQ(psnr(a, a), 99.0);
    Image b = a;
    for (Rgb& p : b.pixels) p.array() += 0.1;
    EXPECT_NEAR(psnr(b, a), 20.0, 1e-9);
    EXPECT_NEAR(psnr(a, b), psnr(b, a), 1e-15);
    Image c = a;
    c.pixels[0] = Rgb(1.0, 0.4, 0.6);
    const double m = 0.8 * 0.8 / (3.0 * 16.0);
    EXPECT_NEAR(psnr(c, a), -10.0 * std::log10(m), 1e-9);
    EXPECT_THROW(psnr(Image(2, 2), Image(2, 3)), ConfigError);
}

TEST(Psnr, TinyErrorIsCapped)
{
    const Image a(2, 2, Rgb::Constant(0.5));
    Image b = a;
    b.pixels[0].x() += 1e-8;
    EXPECT_EQ(psnr(b, a), 99.0);
}

TEST(Sparsification, HandComputedFourPixels)
{
    const std::vector<double> err{1, 2, 3, 4}, u{4, 3, 2, 1};
    const SparsificationCurve c = sparsification_curve(err, u, 2);
    ASSERT_EQ(c.fractions, (std::vector<double>{0.0, 0.5}));
    EXPECT_DOUBLE_EQ(c.by_uncertainty[0], 2.5);
    EXPECT_DOUBLE_EQ(c.by_uncertainty[1], 1.5 + 2.0);
    EXPECT_DOUBLE_EQ(c.by_error[1], 1.5);
    EXPECT_NEAR(ause(c), 0.5 * 0.8 * 0.5, 1e-15);
    EXPECT_EQ(ause(sparsification_curve(err, err, 2)), 0.0);
}

TEST(Sparsification, OracleOrderingCoincides)
{
    const auto [e, s] = random_case(3, 257);
    const SparsificationCurve c = sparsification_curve(e, e);
    EXPECT_EQ(c.by_uncertainty, c.by_error);
    EXPECT_EQ(ause(c), 0.0);
}

TEST(Sparsification, ConstantErrorIsFlat)
{
    const std::vector<double> e(100, 0.3);
    const auto s = random_case(4, 100).second;
    const SparsificationCurve c = sparsification_curve(e, s);
    for (double v : c.by_uncertainty) EXPECT_NEAR(v, 0.3, 1e-12);
    EXPECT_NEAR(ause(c), 0.0, 1e-12);
}

TEST(Sparsification, ZeroErrorGivesZero)
{
    const std::vector<double> e(40, 0.0), s(40, 1.0);
    EXPECT_EQ(ause(sparsification_curve(e, s)), 0.0);
}

TEST(Sparsification, MatchesBruteForce)
{
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        for (std::size_t n : {20u, 37u, 101u, 400u}) {
            auto [e, s] = random_case(seed, n);
            if (seed % 2) for (double& v : s) v = std::round(v * 4.0);  // heavy ties
            const SparsificationCurve c = sparsification_curve(e, s);
            const std::vector<double> ref = brute_curve(e, s, 20);
            for (int k = 0; k < 20; ++k) EXPECT_NEAR(c.by_uncertainty[k], ref[k], 1e-12);
            EXPECT_NEAR(ause(c), brute_ause(e, s, 20), 1e-12);
        }
    }
}

TEST(Sparsification, InvariantToMonotoneTransforms)
{
    const auto [e, s] = random_case(11, 300);
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) + 7.0;
    EXPECT_EQ(ause(sparsification_curve(e, s)), ause(sparsification_curve(e, t)));
    std::vector<double> e2 = e;
    for (double& v : e2) v *= 5.0;
    EXPECT_NEAR(ause(sparsification_curve(e2, s)), ause(sparsification_curve(e, s)), 1e-12);
}

TEST(Sparsification, BetterRankingScoresLower)
{
    const auto [e, s] = random_case(12, 500);
    std::mt19937_64 rng(99);
    std::vector<double> noise(e.size());
    for (double& v : noise) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    EXPECT_LT(ause(sparsification_curve(e, s)), ause(sparsification_curve(e, noise)));
}

TEST(Sparsification, RejectsBadInput)
{
    const std::vector<double> a(10, 1.0), b(9, 1.0);
    EXPECT_THROW(sparsification_curve(a, b), ConfigError);
    EXPECT_THROW(sparsification_curve(std::vector<double>{}, std::vector<double>{}), ConfigError);
    EXPECT_THROW(sparsification_curve(a, a, 20), ConfigError);
    EXPECT_THROW(sparsification_curve(a, a, 0), ConfigError);
}

TEST(Sparsification, CsvHasOneRowPerFraction)
{
    const auto [e, s] = random_case(5, 60);
    const std::string csv = encode_curve_csv(sparsification_curve(e, s, 10));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
    EXPECT_EQ(csv.rfind("fraction,", 0), 0u);
}

TEST(PixelErrors, MeanAbsoluteRgb)
{
    Image a(2, 1), b(2, 1);
    a.pixels[0] = Rgb(0.3, 0.0, 0.0);
    b.pixels[1] = Rgb(0.1, 0.2, 0.6);
    const std::vector<double> e = pixel_errors(a, b);
    EXPECT_NEAR(e[0], 0.1, 1e-15);
    EXPECT_NEAR(e[1], 0.3, 1e-15);
}

TEST(EvalViews, ZeroHoleFieldLeavesColourUncertaintyAlone)
{
    const BoundingBox box(Vec3::Constant(-4), Vec3::Constant(4));
    StochasticRadianceField f = init_field({9, 9, 9}, box);
    for (std::size_t v = 0; v < f.density.vertex_count(); ++v) {
        const Vec3 x = f.density.vertex_position(v);
        f.density.at(v, channel::density_mean) = x.norm() < 2.5 ? 4.0 : -6.0;
        f.density.at(v, channel::density_beta) = 1.0;
        f.color.at(v, 0) = x.x();
    }
    UncertaintyGrid vh = init_uncertainty_grid(f.resolution(), box);
    for (double& v : vh.grid.values()) v = 0.0;
    const Camera cam = make_look_at_camera(Vec3(0, 0, -12), Vec3::Zero(), 16, 16, 0.4);
    EvalConfig cfg;
    cfg.K = 8;
    const ViewMaps m = render_view_maps(f, &vh, cam, cfg);
    EXPECT_EQ(m.u.values, m.u_c.values);
    const Image gt(16, 16, Rgb::Constant(0.5));
    const std::vector<Camera> cams{cam};
    const std::vector<Image> gts{gt};
    const std::vector<int> ids{7};
    const EvalReport rep = eval_views(f, vh, cams, gts, ids, cfg);
    ASSERT_EQ(rep.views.size(), 1u);
    EXPECT_EQ(rep.views[0].camera_id, 7);
    EXPECT_EQ(rep.mean_ause_combined, rep.mean_ause_uc);
    EXPECT_NEAR(rep.mean_psnr, psnr(m.color, gt), 1e-12);
    const std::string csv = encode_report_csv(rep);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}
