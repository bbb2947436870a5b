#pragma once

#include <Eigen/Core>

#include <vector>

namespace ots {

/// Result of a dense linear assignment: row i is assigned column col_of_row[i].
struct LapSolution {
    std::vector<int> col_of_row;
    double cost = 0.0;
    /// Dual potentials certifying optimality: cost(i, j) - row_dual[i] - col_dual[j] >= 0,
    /// with equality on the assignment.
    Eigen::VectorXd row_dual;
    Eigen::VectorXd col_dual;
};

/// Exact minimum-cost perfect matching on a square cost matrix (shortest
/// augmenting paths with potentials, O(n^3)).
LapSolution solve_lap(const Eigen::MatrixXd& cost);

/// Among all optimal assignments, the lexicographically smallest one.
LapSolution solve_lap_lexicographic(const Eigen::MatrixXd& cost);

}  // namespace ots
