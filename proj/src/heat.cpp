#include "ots/heat.hpp"

#include "ots/error.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>

namespace ots {

Vec2 heated_point(const HeatProblem& problem)
{
    const Polygon& poly = problem.domain.boundary();
    const Vec2 c = poly.centroid();
    const Vec2 dir(std::cos(problem.theta), std::sin(problem.theta));
    const auto t = poly.ray_hit(c, dir);
    if (!t) throw Error(ErrorCode::RayMiss, "ray from the centroid misses the boundary");
    return c + *t * dir;
}

double boundary_temperature(const HeatProblem& problem, const Vec2& heated, const Vec2& x)
{
    if (problem.boundary_override) return problem.boundary_override(x);
    const double d2 = (heated - x).squaredNorm();
    const double d = problem.bc_distance_power == 1 ? std::sqrt(d2) : d2;
    return std::max(0.0, problem.lambda - d) / problem.lambda;
}

double boundary_temperature(const HeatProblem& problem, const Vec2& x)
{
    return boundary_temperature(problem, heated_point(problem), x);
}

namespace {

void validate(const HeatProblem& p)
{
    if (!(p.kappa > 0.0)) throw Error(ErrorCode::InvalidArgument, "kappa must be positive");
    if (!(p.tf > p.t0)) throw Error(ErrorCode::InvalidArgument, "tf must exceed t0");
    if (!(p.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
    if (p.n_steps < 1) throw Error(ErrorCode::InvalidArgument, "n_steps must be positive");
    if (p.bc_distance_power != 1 && p.bc_distance_power != 2)
        throw Error(ErrorCode::InvalidArgument, "bc_distance_power must be 1 or 2");
}

}  // namespace

FieldSample solve(const HeatProblem& problem)
{
    validate(problem);
    const Polygon& poly = problem.domain.boundary();
    const Grid box = problem.domain.sdf().grid;
    const auto mask = polygon_mask(poly, box);
    const Grid grid = box.with_mask(mask);
    const Vec2 heated = problem.boundary_override ? Vec2::Zero() : heated_point(problem);
    const double hx = box.spacing().x(), hy = box.spacing().y();
    const double snap = 1e-3 * std::min(hx, hy);

    // Unknowns are interior nodes away from the boundary; nodes that sit on
    // the boundary take their Dirichlet value directly.
    std::vector<int> unknown(box.size(), -1);
    std::vector<double> known(box.size(), 0.0);
    int n = 0;
    for (int j = 0; j < box.ny(); ++j)
        for (int i = 0; i < box.nx(); ++i) {
            const std::size_t k = box.index(i, j);
            if (!mask[k]) continue;
            const Vec2 x = box.node(i, j);
            if (poly.distance(x) < snap) known[k] = boundary_temperature(problem, heated, x);
            else unknown[k] = n++;
        }
    if (n == 0) throw Error(ErrorCode::EmptyInterior, "domain has no interior grid nodes");

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 5);
    Eigen::VectorXd rhs_bc = Eigen::VectorXd::Zero(n);
    const double dt = (problem.tf - problem.t0) / problem.n_steps;
    const double mass = problem.kappa / dt;
    const int di[4] = {-1, 1, 0, 0};
    const int dj[4] = {0, 0, -1, 1};

    for (int j = 0; j < box.ny(); ++j)
        for (int i = 0; i < box.nx(); ++i) {
            const int row = unknown[box.index(i, j)];
            if (row < 0) continue;
            const Vec2 x = box.node(i, j);
            double arm[4];
            double value[4];
            int col[4];
            for (int d = 0; d < 4; ++d) {
                const double h = d < 2 ? hx : hy;
                const int ni = i + di[d], nj = j + dj[d];
                col[d] = -1;
                const bool on_grid = ni >= 0 && nj >= 0 && ni < box.nx() && nj < box.ny();
                const std::size_t nk = on_grid ? box.index(ni, nj) : 0;
                if (on_grid && mask[nk]) {
                    arm[d] = h;
                    if (unknown[nk] >= 0) col[d] = unknown[nk];
                    else value[d] = known[nk];
                    continue;
                }
                const Vec2 y = x + Vec2(di[d] * hx, dj[d] * hy);
                const auto t = poly.segment_hit(x, y);
                const double s = std::clamp(t.value_or(1.0), snap / h, 1.0);
                arm[d] = s * h;
                value[d] = boundary_temperature(problem, heated, x + s * (y - x));
            }
            double diag = mass;
            for (int axis = 0; axis < 2; ++axis) {
                const double a = arm[2 * axis], b = arm[2 * axis + 1];
                const double ca = 2.0 / (a * (a + b));
                const double cb = 2.0 / (b * (a + b));
                diag += ca + cb;
                for (int side = 0; side < 2; ++side) {
                    const int d = 2 * axis + side;
                    const double c = side == 0 ? ca : cb;
                    if (col[d] >= 0) trips.emplace_back(row, col[d], -c);
                    else rhs_bc[row] += c * value[d];
                }
            }
            trips.emplace_back(row, row, diag);
        }

    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "heat system factorization failed");

    Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
    for (int step = 0; step < problem.n_steps; ++step) {
        const Eigen::VectorXd rhs = mass * t + rhs_bc;
        Eigen::VectorXd next = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !next.allFinite())
            throw Error(ErrorCode::SingularSystem, "heat system solve failed");
        // One refinement sweep keeps the residual at round-off level.
        const Eigen::VectorXd r = rhs - a * next;
        next += lu.solve(r);
        t = std::move(next);
    }

    FieldSample out = FieldSample::zeros(grid);
    for (std::size_t k = 0; k < box.size(); ++k) {
        if (!mask[k]) continue;
        out.values[k] = unknown[k] >= 0 ? t[unknown[k]] : known[k];
    }
    return out;
}

DoEPlan lhs_sample(const std::array<double, 2>& lower, const std::array<double, 2>& upper, int count,
                   std::uint64_t seed)
{
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "DoE needs at least one sample");
    for (int d = 0; d < 2; ++d)
        if (!(upper[d] >= lower[d])) throw Error(ErrorCode::InvalidArgument, "DoE bounds are inverted");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DoEPlan plan;
    plan.lower = lower;
    plan.upper = upper;
    plan.samples.resize(count, 2);
    for (int d = 0; d < 2; ++d) {
        std::vector<int> strata(static_cast<std::size_t>(count));
        for (int p = 0; p < count; ++p) strata[p] = p;
        // Fisher-Yates with explicit draws keeps plans identical across standard libraries.
        for (int p = count - 1; p > 0; --p) {
            const int q = static_cast<int>(rng() % static_cast<std::uint64_t>(p + 1));
            std::swap(strata[p], strata[q]);
        }
        for (int p = 0; p < count; ++p) {
            const double u = (strata[p] + unit(rng)) / count;
            plan.samples(p, d) = lower[d] + std::min(u, 1.0) * (upper[d] - lower[d]);
        }
    }
    return plan;
}

}  // namespace ots
