#include "ots/assignment.hpp"

#include "ots/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ots {

LapSolution solve_lap(const Eigen::MatrixXd& cost)
{
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw Error(ErrorCode::SizeMismatch, "assignment cost matrix must be square");
    LapSolution out;
    out.row_dual = Eigen::VectorXd::Zero(n);
    out.col_dual = Eigen::VectorXd::Zero(n);
    if (n == 0) return out;

    // Row-major copy; the inner loop scans one row at a time.
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] = cost(i, j);

    const double inf = std::numeric_limits<double>::infinity();
    // Index 0 is a sentinel; rows and columns are 1-based below.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> row_of_col(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (int i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = row_of_col[j0];
            const double* arow = a.data() + static_cast<std::size_t>(i0 - 1) * n;
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = arow[j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const int j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    out.col_of_row.assign(n, -1);
    for (int j = 1; j <= n; ++j) out.col_of_row[row_of_col[j] - 1] = j - 1;
    for (int i = 0; i < n; ++i) {
        out.row_dual[i] = u[i + 1];
        out.col_dual[i] = v[i + 1];
        out.cost += cost(i, out.col_of_row[i]);
    }
    return out;
}

namespace {

// Depth-first search in the equality subgraph for an alternating path that
// lets row `start` end up holding column `target`. Rows below first_free_row
// are frozen. parent_col[c] records the row that takes column c.
bool find_alternating_path(int start, int target, int first_free_row, int forbidden_col,
                           const std::vector<std::vector<int>>& tight, const std::vector<int>& row_of_col,
                           std::vector<int>& parent_col, std::vector<char>& seen_col)
{
    std::vector<std::pair<int, int>> frames;  // (row, next edge index)
    frames.emplace_back(start, 0);
    while (!frames.empty()) {
        auto& [row, idx] = frames.back();
        if (idx >= static_cast<int>(tight[row].size())) {
            frames.pop_back();
            continue;
        }
        const int c = tight[row][idx++];
        if (c == forbidden_col || seen_col[c]) continue;
        const int owner = row_of_col[c];
        if (c != target && owner < first_free_row) continue;
        seen_col[c] = 1;
        parent_col[c] = row;
        if (c == target) return true;
        frames.emplace_back(owner, 0);
    }
    return false;
}

}  // namespace

LapSolution solve_lap_lexicographic(const Eigen::MatrixXd& cost)
{
    LapSolution sol = solve_lap(cost);
    const int n = static_cast<int>(cost.rows());
    if (n <= 1) return sol;

    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale * n;

    std::vector<std::vector<int>> tight(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (cost(i, j) - sol.row_dual[i] - sol.col_dual[j] <= tol) tight[i].push_back(j);

    std::vector<int> col_of_row = sol.col_of_row;
    std::vector<int> row_of_col(n);
    for (int i = 0; i < n; ++i) row_of_col[col_of_row[i]] = i;

    std::vector<int> parent_col(n);
    std::vector<char> seen_col(n);
    for (int i = 0; i < n; ++i) {
        for (int j : tight[i]) {
            if (j >= col_of_row[i]) break;
            const int owner = row_of_col[j];
            if (owner < i) continue;
            // Give column j to row i; its owner must reach the column row i releases.
            std::fill(seen_col.begin(), seen_col.end(), 0);
            seen_col[j] = 1;
            const int released = col_of_row[i];
            if (!find_alternating_path(owner, released, i + 1, j, tight, row_of_col, parent_col, seen_col))
                continue;
            // Walk back from the released column reassigning along the path.
            int c = released;
            while (true) {
                const int r = parent_col[c];
                const int prev = col_of_row[r];
                col_of_row[r] = c;
                row_of_col[c] = r;
                if (r == owner) break;
                c = prev;
            }
            col_of_row[i] = j;
            row_of_col[j] = i;
            break;
        }
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, col_of_row[i]);
    if (total <= sol.cost + 1e-12 * std::max(1.0, std::abs(sol.cost))) {
        sol.col_of_row = std::move(col_of_row);
        sol.cost = total;
    }
    return sol;
}

}  // namespace ots
