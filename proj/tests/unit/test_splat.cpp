#include "ots/error.hpp"
#include "ots/splat.hpp"
#include "toy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace ots;

namespace {

Grid unit_box(int n)
{
    return Grid::over_box(Vec2(-1, -1), Vec2(1, 1), n, n);
}

// Direct double sum, no truncation.
double gaussian_sum(const Centers& c, double sigma, const Vec2& x)
{
    double s = 0.0;
    for (int n = 0; n < c.rows(); ++n)
        s += std::exp(-(x - c.row(n).transpose()).squaredNorm() / (2 * sigma * sigma));
    return s / (c.rows() * 2 * M_PI * sigma * sigma);
}

}  // namespace

TEST(Splat, NormalizeUniformField)
{
    const Grid g = unit_box(21);
    const FieldSample f(g, std::vector<double>(g.size(), 3.0));
    const FieldSample n = normalize_field(f);
    const double area = g.masked_area();
    EXPECT_NEAR(*n.integral, 3.0 * area, 1e-12);
    for (double v : n.values) EXPECT_NEAR(v, 1.0 / area, 1e-12);
    EXPECT_NEAR(n.quadrature(), 1.0, 1e-12);
}

TEST(Splat, NormalizeRejectsBadFields)
{
    const Grid g = unit_box(5);
    std::vector<double> v(g.size(), 1.0);
    v[3] = -0.5;
    try {
        normalize_field(FieldSample(g, v));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveField);
    }
    v[3] = std::numeric_limits<double>::quiet_NaN();
    try {
        normalize_field(FieldSample(g, v));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NaNField);
    }
    EXPECT_THROW(normalize_field(FieldSample(g, std::vector<double>(g.size(), 0.0))), Error);
}

TEST(Splat, NegativeValuesOutsideMaskAreIgnored)
{
    std::vector<std::uint8_t> mask(25, 1);
    mask[0] = 0;
    const Grid g = unit_box(5).with_mask(mask);
    std::vector<double> v(25, 2.0);
    v[0] = -1.0;
    EXPECT_NO_THROW(normalize_field(FieldSample(g, v)));
}

TEST(Splat, SingleParticlePeakAndMass)
{
    Centers c(1, 2);
    c << 0.0, 0.0;
    const ParticleCloud cloud(c, 0.1);
    EXPECT_NEAR(cloud.amplitude(), 1.0 / (2 * M_PI * 0.01), 1e-9);
    const Grid g = unit_box(201);
    const FieldSample f = evaluate_cloud(cloud, g);
    EXPECT_NEAR(f.values[g.index(100, 100)], cloud.amplitude(), 1e-9);
    EXPECT_NEAR(f.quadrature(), 1.0, 1e-6);
    EXPECT_NEAR(leaked_mass(cloud, g), 0.0, 1e-6);
}

TEST(Splat, EvaluateMatchesUntruncatedSum)
{
    std::mt19937_64 rng(3);
    const Centers c = toy::random_centers(15, rng, -0.5, 0.5);
    const ParticleCloud cloud(c, 0.07);
    const Grid g = unit_box(33);
    const FieldSample f = evaluate_cloud(cloud, g);
    for (int j = 0; j < g.ny(); j += 4)
        for (int i = 0; i < g.nx(); i += 3) {
            const double ref = gaussian_sum(c, 0.07, g.node(i, j));
            EXPECT_NEAR(f.values[g.index(i, j)], ref, 1e-15 + 1e-12 * ref);
            EXPECT_NEAR(evaluate_cloud_at(cloud, g.node(i, j)), ref, 1e-15 + 1e-12 * ref);
        }
}

TEST(Splat, LeakedMassOfParticleOutsideMask)
{
    Centers c(2, 2);
    c << 0.0, 0.0, 5.0, 5.0;
    const ParticleCloud cloud(c, 0.05);
    EXPECT_NEAR(leaked_mass(cloud, unit_box(161)), 0.5, 1e-4);
}

TEST(Splat, CloudRejectsInvalidBandwidth)
{
    Centers c(1, 2);
    c << 0, 0;
    EXPECT_THROW(ParticleCloud(c, 0.0), Error);
    EXPECT_THROW(ParticleCloud(c, -1.0), Error);
}

TEST(Splat, GradientMatchesCentralDifferences)
{
    std::mt19937_64 rng(11);
    const Grid g = unit_box(31);
    for (bool free_scale : {false, true}) {
        const ParticleCloud truth(toy::random_centers(6, rng, -0.5, 0.5), 0.15);
        const FieldSample target = normalize_field(evaluate_cloud(truth, g));
        const SplatObjective obj(target, 6, 0.15, free_scale);
        const Centers x = toy::random_centers(6, rng, -0.6, 0.6);
        Centers grad;
        obj.value_and_gradient(x, grad);
        const double h = 1e-6;
        for (int n = 0; n < 6; ++n)
            for (int d = 0; d < 2; ++d) {
                Centers xp = x, xm = x;
                xp(n, d) += h;
                xm(n, d) -= h;
                const double fd = (obj.value(xp) - obj.value(xm)) / (2 * h);
                EXPECT_NEAR(grad(n, d), fd, 1e-5 * std::max(1.0, std::abs(fd)));
            }
    }
}

TEST(Splat, OptimalScaleMinimizesOverAmplitude)
{
    std::mt19937_64 rng(5);
    const Grid g = unit_box(25);
    const ParticleCloud truth(toy::random_centers(5, rng, -0.4, 0.4), 0.2);
    const FieldSample target = normalize_field(evaluate_cloud(truth, g));
    const Centers x = toy::random_centers(5, rng, -0.5, 0.5);
    const SplatObjective obj(target, 5, 0.2, true);
    const double a = obj.optimal_scale(x);

    // Scan of 1/2 |rho - s rho_hat|^2 over s.
    const FieldSample rec = evaluate_cloud(ParticleCloud(x, 0.2), g);
    double best_s = 0.0, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 40000; ++i) {
        const double s = 4.0 * i / 40000;
        double v = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) v += std::pow(target.values[k] - s * rec.values[k], 2);
        if (v < best) best = v, best_s = s;
    }
    EXPECT_NEAR(a, best_s, 2e-4);
    EXPECT_NEAR(obj.value(x), 0.5 * best, 1e-6 * best + 1e-12);
}

TEST(Splat, DecomposeRecoversFieldAndIsDeterministic)
{
    std::mt19937_64 rng(2);
    const Grid g = unit_box(41);
    const ParticleCloud truth(toy::random_centers(10, rng, -0.5, 0.5), 0.15);
    const FieldSample target = normalize_field(evaluate_cloud(truth, g));
    DecomposeOptions opts;
    opts.seed = 9;
    opts.tolerance = 1e-9;
    const DecomposeResult a = decompose(target, 40, 0.15, opts);
    const DecomposeResult b = decompose(target, 40, 0.15, opts);
    EXPECT_EQ(a.cloud.centers(), b.cloud.centers());
    for (std::size_t i = 1; i < a.history.size(); ++i) EXPECT_LE(a.history[i], a.history[i - 1]);
    const FieldSample rec = evaluate_cloud(a.cloud, g);
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        err += std::pow(rec.values[k] - target.values[k], 2);
        ref += std::pow(target.values[k], 2);
    }
    EXPECT_LT(std::sqrt(err / ref), 0.05);
}

TEST(Splat, ImportanceSampleStaysOnSupport)
{
    const Grid g = unit_box(21);
    std::vector<double> v(g.size(), 0.0);
    for (int j = 0; j < 21; ++j)
        for (int i = 15; i < 21; ++i) v[g.index(i, j)] = 1.0;
    const FieldSample f = normalize_field(FieldSample(g, v));
    const ParticleCloud c = importance_sample(f, 50, 0.1, 1);
    for (int n = 0; n < c.size(); ++n) EXPECT_GT(c.center(n).x(), g.x(14) - 1e-12);
}

TEST(Splat, SignedSplitIdentity)
{
    const Grid g = unit_box(9);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.7 * static_cast<double>(k));
    const SignedSplit s = split_signed(FieldSample(g, v));
    for (std::size_t k = 0; k < v.size(); ++k) {
        EXPECT_GE(s.positive.values[k], 0.0);
        EXPECT_GE(s.negated_negative.values[k], 0.0);
        EXPECT_DOUBLE_EQ(s.positive.values[k] - s.negated_negative.values[k], v[k]);
    }
}
