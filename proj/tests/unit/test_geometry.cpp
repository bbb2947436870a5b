#include "ots/error.hpp"
#include "ots/geometry.hpp"
#include "toy.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ots;

namespace {

Polygon square(double h)
{
    Polygon p;
    p.vertices = {Vec2(-h, -h), Vec2(h, -h), Vec2(h, h), Vec2(-h, h)};
    return p;
}

// Exact signed distance to the axis-aligned square [-h, h]^2, positive inside.
double square_sdf(const Vec2& x, double h)
{
    const Vec2 d = x.cwiseAbs() - Vec2::Constant(h);
    const double outside = d.cwiseMax(0.0).norm();
    const double inside = std::min(std::max(d.x(), d.y()), 0.0);
    return -(outside + inside);
}

Grid box(int n)
{
    return Grid::over_box(Vec2(-1, -1), Vec2(1, 1), n, n);
}

}  // namespace

TEST(Geometry, SquareSdfMatchesClosedForm)
{
    const Grid g = box(41);
    const FieldSample s = sdf_from_polygon(square(0.5), g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) EXPECT_NEAR(s.values[g.index(i, j)], square_sdf(g.node(i, j), 0.5), 1e-12);
}

TEST(Geometry, SdfIgnoresOrientation)
{
    const Grid g = box(21);
    Polygon cw = square(0.4);
    std::reverse(cw.vertices.begin(), cw.vertices.end());
    const FieldSample a = sdf_from_polygon(square(0.4), g), b = sdf_from_polygon(cw, g);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-14);
}

TEST(Geometry, PolygonValidation)
{
    Polygon two;
    two.vertices = {Vec2(0, 0), Vec2(1, 0)};
    try {
        validate_polygon(two);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegeneratePolygon);
    }
    Polygon flat;
    flat.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)};
    EXPECT_THROW(validate_polygon(flat), Error);
    Polygon bowtie;
    bowtie.vertices = {Vec2(0, 0), Vec2(2, 2), Vec2(2, 0), Vec2(0, 1)};
    try {
        validate_polygon(bowtie);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SelfIntersectingPolygon);
    }
}

TEST(Geometry, SigmoidLevelSet)
{
    const Grid g = box(5);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.1 * (static_cast<double>(k) - 12.0);
    const FieldSample phi = sigmoid_levelset(FieldSample(g, v), 3.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
        EXPECT_NEAR(phi.values[k], 1.0 / (1.0 + std::exp(-3.0 * v[k])), 1e-15);
        EXPECT_GT(phi.values[k], 0.0);
        EXPECT_LT(phi.values[k], 1.0);
    }
    EXPECT_DOUBLE_EQ(phi.values[12], 0.5);
}

TEST(Geometry, DomainReorientsAndMeasures)
{
    Polygon cw = square(0.5);
    std::reverse(cw.vertices.begin(), cw.vertices.end());
    const GeometryDomain d(cw, box(41), 10.0);
    EXPECT_GT(d.boundary().signed_area(), 0.0);
    EXPECT_NEAR(d.area(), 1.0, 1e-12);
    EXPECT_NEAR(d.levelset().values[d.levelset().grid.index(20, 20)], 1.0 / (1.0 + std::exp(-5.0)), 1e-12);
}

TEST(Geometry, BarycentricWeightsValidation)
{
    EXPECT_NO_THROW(BarycentricWeights({0.3, 0.3, 0.4}));
    for (const std::vector<double>& bad : {std::vector<double>{0.5, 0.4}, std::vector<double>{1.2, -0.2},
                                           std::vector<double>{}}) {
        try {
            BarycentricWeights w(bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::BadWeights);
        }
    }
    EXPECT_EQ(BarycentricWeights::one_hot(2, 4).vertex(), 2);
    EXPECT_FALSE(BarycentricWeights::uniform(4).vertex().has_value());
}

TEST(Geometry, BarycenterIsRowwiseMean)
{
    std::mt19937_64 rng(3);
    MatchedEnsemble e;
    for (int k = 0; k < 3; ++k) e.clouds.emplace_back(toy::random_centers(5, rng), 0.1);
    const BarycentricWeights w({0.2, 0.5, 0.3});
    const ParticleCloud b = barycenter(e, w);
    const Centers expect = 0.2 * e.clouds[0].centers() + 0.5 * e.clouds[1].centers() + 0.3 * e.clouds[2].centers();
    EXPECT_LT((b.centers() - expect).norm(), 1e-14);
    EXPECT_EQ(barycenter(e, BarycentricWeights::one_hot(1, 3)).centers(), e.clouds[1].centers());
    EXPECT_THROW(barycenter(e, BarycentricWeights::uniform(2)), Error);
}

TEST(Geometry, LevelsetFromCloudMaxIsOne)
{
    std::mt19937_64 rng(9);
    const ParticleCloud c(toy::random_centers(20, rng, -0.3, 0.3), 0.1);
    const FieldSample phi = levelset_from_cloud(c, box(33));
    double mx = 0.0;
    for (double v : phi.values) {
        EXPECT_GE(v, 0.0);
        mx = std::max(mx, v);
    }
    EXPECT_DOUBLE_EQ(mx, 1.0);
}

TEST(Geometry, MembershipAndInterpolation)
{
    const GeometryDomain d(square(0.5), box(41), 20.0);
    EXPECT_TRUE(membership(d.levelset(), Vec2(0.0, 0.0)));
    EXPECT_TRUE(membership(d.levelset(), Vec2(0.45, -0.45)));
    EXPECT_FALSE(membership(d.levelset(), Vec2(0.8, 0.0)));
    try {
        membership(d.levelset(), Vec2(1.5, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfBox);
    }
    // Bilinear interpolation reproduces affine fields exactly.
    const Grid g = box(11);
    std::vector<double> v(g.size());
    for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i) v[g.index(i, j)] = 2.0 * g.x(i) - 3.0 * g.y(j) + 1.0;
    EXPECT_NEAR(interpolate(FieldSample(g, v), Vec2(0.33, -0.71)), 2 * 0.33 + 3 * 0.71 + 1, 1e-12);
}

TEST(Geometry, StarDomainsAreValidAndSeeded)
{
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Polygon p = random_star_polygon(s);
        EXPECT_NO_THROW(validate_polygon(p));
        EXPECT_EQ(p.size(), 256u);
    }
    EXPECT_EQ(random_star_polygon(3).vertices, random_star_polygon(3).vertices);
    EXPECT_NE(random_star_polygon(3).vertices, random_star_polygon(4).vertices);
}

TEST(Geometry, ReferenceBoxIsPaddedSquare)
{
    Vec2 lo, hi;
    reference_box({square(0.5), regular_polygon(3, 0.8, Vec2(1, 0))}, 0.1, lo, hi);
    EXPECT_NEAR(hi.x() - lo.x(), hi.y() - lo.y(), 1e-12);
    EXPECT_LE(lo.x(), -0.5);
    EXPECT_GE(hi.x(), 1.8);
}

TEST(Geometry, LargestContourOfCircle)
{
    const Grid g = box(101);
    std::vector<double> v(g.size());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) v[g.index(i, j)] = 0.6 - g.node(i, j).norm();
    // A second, smaller blob.
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            v[g.index(i, j)] = std::max(v[g.index(i, j)], 0.1 - (g.node(i, j) - Vec2(0.85, 0.85)).norm());
    const auto all = extract_contours(FieldSample(g, v), 0.0);
    EXPECT_EQ(all.size(), 2u);
    const Polygon c = largest_contour(FieldSample(g, v), 0.0);
    EXPECT_NEAR(c.signed_area(), M_PI * 0.36, 0.01);
    EXPECT_TRUE(c.is_simple());
    for (const auto& x : c.vertices) EXPECT_NEAR(x.norm(), 0.6, 2e-3);
}

TEST(Geometry, ReparameterizedCloudTracksShape)
{
    const Grid g = box(48);
    const GeometryDomain d(square(0.4), g, 20.0);
    DecomposeOptions o;
    o.max_iterations = 400;
    const Reparameterization r = reparameterize(d, 60, 0.06, o);
    const FieldSample phi = levelset_from_cloud(r.fit.cloud, g);
    int agree = 0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) agree += (phi.values[g.index(i, j)] >= 0.5) == d.boundary().contains(g.node(i, j));
    EXPECT_GT(agree, 0.9 * static_cast<double>(g.size()));
    EXPECT_GT(r.integral, 0.0);
}
