#pragma once

#include "ots/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>

namespace ots {

struct HeatProblem {
    GeometryDomain domain;
    double kappa = 0.015;
    double t0 = 0.0;
    double tf = 1.0;
    /// Polar angle from the domain centroid that picks the heated boundary point.
    double theta = 0.25 * 3.141592653589793;
    double lambda = 0.3;
    int n_steps = 50;
    /// 2 uses the squared distance in the boundary profile, 1 the distance.
    int bc_distance_power = 2;
    /// Replaces the boundary profile when set (tests).
    std::function<double(const Vec2&)> boundary_override;
};

/// Boundary point hit by the ray from the centroid at angle theta.
Vec2 heated_point(const HeatProblem& problem);

/// max(0, lambda - |x_c - x|^p) / lambda.
double boundary_temperature(const HeatProblem& problem, const Vec2& x);
double boundary_temperature(const HeatProblem& problem, const Vec2& heated, const Vec2& x);

/// Backward Euler on kappa dT/dt = laplace(T) over the nodes inside the
/// polygon. Boundary arms end at the exact polygon crossings
/// (Shortley-Weller), so the scheme is second order on curved boundaries.
/// Returns T(tf) on the box grid masked to the domain; zero outside.
FieldSample solve(const HeatProblem& problem);

struct DoEPlan {
    /// P x 2 rows of (theta, lambda).
    Eigen::MatrixX2d samples;
    std::array<double, 2> lower{};
    std::array<double, 2> upper{};

    int size() const noexcept { return static_cast<int>(samples.rows()); }
};

/// Latin hypercube: on each axis exactly one sample per 1/P stratum, jittered
/// uniformly inside its stratum.
DoEPlan lhs_sample(const std::array<double, 2>& lower, const std::array<double, 2>& upper, int count,
                   std::uint64_t seed);

}  // namespace ots
