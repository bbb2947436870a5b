#include "ots/assignment.hpp"
#include "ots/lbfgs.hpp"

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

using namespace ots;

TEST(Lbfgs, Rosenbrock)
{
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g.resize(2);
        g[0] = -2 * a - 400 * x[0] * b;
        g[1] = 200 * b;
        return a * a + 100 * b * b;
    };
    LbfgsOptions opts;
    opts.decrease_tolerance = 1e-16;
    opts.max_iterations = 2000;
    const LbfgsResult r = minimize_lbfgs(f, Eigen::Vector2d(-1.2, 1.0), opts);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
}

TEST(Lbfgs, QuadraticMatchesLinearSolve)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 36; ++i) m.data()[i] = n(rng);
    const Eigen::MatrixXd a = m.transpose() * m + Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXd b(6);
    for (int i = 0; i < 6; ++i) b[i] = n(rng);
    const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
    };
    LbfgsOptions opts;
    opts.decrease_tolerance = 1e-20;
    const LbfgsResult r = minimize_lbfgs(f, Eigen::VectorXd::Zero(6), opts);
    const Eigen::VectorXd exact = a.ldlt().solve(b);
    EXPECT_LT((r.x - exact).norm(), 1e-6);
}

namespace {

double brute_force_lap(const Eigen::MatrixXd& c)
{
    std::vector<int> perm(c.rows());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (int i = 0; i < c.rows(); ++i) s += c(i, perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST(Assignment, MatchesEnumeration)
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 7;
        Eigen::MatrixXd c(n, n);
        for (int i = 0; i < n * n; ++i) c.data()[i] = u(rng);
        const LapSolution s = solve_lap(c);
        EXPECT_NEAR(s.cost, brute_force_lap(c), 1e-9);
        // Dual certificate.
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) EXPECT_GE(c(i, j) - s.row_dual[i] - s.col_dual[j], -1e-9);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(c(i, s.col_of_row[i]) - s.row_dual[i] - s.col_dual[s.col_of_row[i]], 0, 1e-9);
    }
}

TEST(Assignment, LexicographicTieBreak)
{
    const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(5, 5, 2.0);
    const LapSolution s = solve_lap_lexicographic(flat);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(s.col_of_row[i], i);

    Eigen::MatrixXd c(3, 3);
    c << 1, 1, 5, 1, 1, 5, 5, 5, 0;
    const LapSolution t = solve_lap_lexicographic(c);
    EXPECT_EQ(t.col_of_row, (std::vector<int>{0, 1, 2}));
    EXPECT_DOUBLE_EQ(t.cost, 2.0);
}

TEST(Assignment, RejectsNonSquare)
{
    EXPECT_ANY_THROW(solve_lap(Eigen::MatrixXd::Zero(2, 3)));
}
