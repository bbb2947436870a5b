#pragma once

#include "ots/app.hpp"
#include "ots/heat.hpp"
#include "ots/surrogate.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace toy {

// Small config: two star domains, coarse raster, few particles.
inline ots::RunConfig config(int geometries = 2, int snapshots = 5)
{
    ots::RunConfig c;
    c.seed = 7;
    c.grid.nx = c.grid.ny = 40;
    c.geometry.count = geometries;
    c.heat.snapshots = snapshots;
    c.heat.steps = 20;
    c.surrogate.n_s = 24;
    c.surrogate.sigma_s = 0.05;
    c.surrogate.n_g = 24;
    c.surrogate.sigma_g = 0.05;
    c.surrogate.solution_decompose.max_iterations = 300;
    c.surrogate.geometry_decompose.max_iterations = 300;
    c.surrogate.solution_match.max_generations = 30;
    c.surrogate.geometry_match = c.surrogate.solution_match;
    return c;
}

inline ots::TrainingSet training_set(const ots::RunConfig& c)
{
    ots::TrainingSet ts;
    ts.polygons = ots::make_polygons(c);
    ts.box = ots::make_box(c, ts.polygons);
    ts.steepness = c.geometry.steepness;
    for (std::size_t k = 0; k < ts.polygons.size(); ++k) {
        const ots::GeometryDomain dom(ts.polygons[k], ts.box, ts.steepness);
        const auto plan = ots::lhs_sample({c.heat.theta_bounds[0], c.heat.lambda_bounds[0]},
                                          {c.heat.theta_bounds[1], c.heat.lambda_bounds[1]}, c.heat.snapshots, 100 + k);
        ts.params.emplace_back(plan.samples);
        ts.snapshots.emplace_back();
        for (int p = 0; p < plan.size(); ++p)
            ts.snapshots.back().push_back(
                ots::solve(ots::make_problem(c, dom, plan.samples(p, 0), plan.samples(p, 1))));
    }
    return ts;
}

inline const ots::TrainResult& trained()
{
    static const ots::TrainResult r = ots::train(training_set(config()), ots::surrogate_settings(config()));
    return r;
}

inline ots::Centers random_centers(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    ots::Centers c(n, 2);
    for (int i = 0; i < n; ++i) c(i, 0) = u(rng), c(i, 1) = u(rng);
    return c;
}

// Fresh directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("ots_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace toy
