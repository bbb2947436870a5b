#include "ots/error.hpp"
#include "ots/heat.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace ots;

namespace {

GeometryDomain disk(int n, double r = 0.7)
{
    const Grid box = Grid::over_box(Vec2(-1, -1), Vec2(1, 1), n, n);
    return GeometryDomain(regular_polygon(512, r), box, 1.0);
}

GeometryDomain square_domain(int n)
{
    const Grid box = Grid::over_box(Vec2(-1, -1), Vec2(1, 1), n, n);
    Polygon p;
    p.vertices = {Vec2(-0.6, -0.6), Vec2(0.6, -0.6), Vec2(0.6, 0.6), Vec2(-0.6, 0.6)};
    return GeometryDomain(p, box, 1.0);
}

// Steady harmonic boundary data; after many diffusion times the solution is
// the harmonic function itself.
double max_harmonic_error(int n, double (*u)(const Vec2&))
{
    HeatProblem hp;
    hp.domain = disk(n);
    hp.tf = 50.0;
    hp.n_steps = 40;
    hp.boundary_override = u;
    const FieldSample t = solve(hp);
    double err = 0.0;
    const Grid& g = t.grid;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.inside(g.index(i, j))) err = std::max(err, std::abs(t.values[g.index(i, j)] - u(g.node(i, j))));
    return err;
}

double quadratic(const Vec2& x)
{
    return x.x() * x.x() - x.y() * x.y() + 0.5 * x.x() + 1.0;
}

double cubic(const Vec2& x)
{
    return x.x() * x.x() * x.x() - 3.0 * x.x() * x.y() * x.y() + 1.0;
}

}  // namespace

TEST(Heat, BoundaryProfile)
{
    HeatProblem hp;
    hp.domain = square_domain(21);
    hp.lambda = 0.3;
    const Vec2 c(0.6, 0.0);
    EXPECT_DOUBLE_EQ(boundary_temperature(hp, c, c), 1.0);
    EXPECT_NEAR(boundary_temperature(hp, c, Vec2(0.6, 0.3)), (0.3 - 0.09) / 0.3, 1e-15);
    EXPECT_DOUBLE_EQ(boundary_temperature(hp, c, Vec2(0.6, 0.6)), 0.0);
    hp.bc_distance_power = 1;
    EXPECT_NEAR(boundary_temperature(hp, c, Vec2(0.6, 0.2)), (0.3 - 0.2) / 0.3, 1e-15);
}

TEST(Heat, HeatedPointOnSquare)
{
    HeatProblem hp;
    hp.domain = square_domain(21);
    hp.theta = 0.0;
    EXPECT_LT((heated_point(hp) - Vec2(0.6, 0.0)).norm(), 1e-12);
    hp.theta = M_PI / 4;
    EXPECT_LT((heated_point(hp) - Vec2(0.6, 0.6)).norm(), 1e-12);
}

TEST(Heat, QuadraticHarmonicIsReproduced)
{
    EXPECT_LT(max_harmonic_error(41, quadratic), 1e-9);
}

TEST(Heat, SecondOrderOnCurvedBoundary)
{
    const double coarse = max_harmonic_error(33, cubic);
    const double fine = max_harmonic_error(65, cubic);
    EXPECT_LT(fine, coarse / 3.0);
    EXPECT_LT(fine, 1e-3);
}

TEST(Heat, MaximumPrincipleAndMonotoneInTime)
{
    HeatProblem hp;
    hp.domain = disk(41);
    hp.theta = 1.0;
    hp.lambda = 0.2;
    hp.tf = 0.2;
    const FieldSample early = solve(hp);
    hp.tf = 1.0;
    hp.n_steps = 250;
    const FieldSample late = solve(hp);
    for (std::size_t k = 0; k < late.values.size(); ++k) {
        if (!late.grid.inside(k)) {
            EXPECT_EQ(late.values[k], 0.0);
            continue;
        }
        EXPECT_GE(late.values[k], -1e-12);
        EXPECT_LE(late.values[k], 1.0 + 1e-12);
        EXPECT_LE(early.values[k], late.values[k] + 1e-9);
    }
    EXPECT_GT(late.max_masked(), 0.5);
}

TEST(Heat, InvalidProblems)
{
    HeatProblem hp;
    hp.domain = disk(21);
    hp.lambda = 0.0;
    EXPECT_THROW(solve(hp), Error);
    hp.lambda = 0.3;
    hp.kappa = -1.0;
    EXPECT_THROW(solve(hp), Error);
}

TEST(Heat, LatinHypercubeStrata)
{
    const int p = 30;
    const DoEPlan plan = lhs_sample({0.05 * M_PI, 0.05}, {0.45 * M_PI, 0.6}, p, 3);
    ASSERT_EQ(plan.size(), p);
    for (int d = 0; d < 2; ++d) {
        std::set<int> strata;
        for (int i = 0; i < p; ++i) {
            const double u = (plan.samples(i, d) - plan.lower[d]) / (plan.upper[d] - plan.lower[d]);
            ASSERT_GE(u, 0.0);
            ASSERT_LE(u, 1.0);
            strata.insert(std::min(static_cast<int>(u * p), p - 1));
        }
        EXPECT_EQ(static_cast<int>(strata.size()), p);
    }
    const DoEPlan again = lhs_sample({0.05 * M_PI, 0.05}, {0.45 * M_PI, 0.6}, p, 3);
    EXPECT_EQ(plan.samples, again.samples);
    EXPECT_THROW(lhs_sample({1, 0}, {0, 1}, 4, 0), Error);
}
