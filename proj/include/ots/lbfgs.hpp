#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace ots {

/// Limited-memory BFGS with Armijo backtracking. Every accepted iterate
/// satisfies the sufficient-decrease condition, so the objective history is
/// non-increasing.
struct LbfgsOptions {
    int max_iterations = 5000;
    /// Stop once f(x_i) - f(x_{i+1}) drops below this.
    double decrease_tolerance = 1e-4;
    int memory = 10;
    double armijo = 1e-4;
    int max_backtracks = 50;
    /// Largest coordinate change of the very first (steepest-descent) step.
    double initial_step = 1.0;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Decrease achieved by the last accepted step.
    double last_decrease = 0.0;
    std::vector<double> history;
};

/// fn(x, grad) returns f(x) and writes the gradient into grad.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

LbfgsResult minimize_lbfgs(const Objective& fn, Eigen::VectorXd x0, const LbfgsOptions& options);

}  // namespace ots
