#include "ots/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace ots {

namespace {

struct CurvaturePair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;
};

Eigen::VectorXd two_loop_direction(const std::deque<CurvaturePair>& pairs, const Eigen::VectorXd& g)
{
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
        alpha[k] = pairs[k].rho * pairs[k].s.dot(q);
        q -= alpha[k] * pairs[k].y;
    }
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double beta = pairs[k].rho * pairs[k].y.dot(q);
        q += (alpha[k] - beta) * pairs[k].s;
    }
    return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& fn, Eigen::VectorXd x0, const LbfgsOptions& options)
{
    LbfgsResult result;
    result.x = std::move(x0);
    Eigen::VectorXd g(result.x.size());
    result.value = fn(result.x, g);
    result.history.push_back(result.value);

    std::deque<CurvaturePair> pairs;
    Eigen::VectorXd x_new(result.x.size());
    Eigen::VectorXd g_new(result.x.size());

    for (int it = 0; it < options.max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() == 0.0) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd d;
        double step = 1.0;
        if (!pairs.empty()) {
            d = two_loop_direction(pairs, g);
            if (!(g.dot(d) < 0.0)) pairs.clear();
        }
        if (pairs.empty()) {
            d = -g;
            step = options.initial_step / d.lpNorm<Eigen::Infinity>();
        }

        const double slope = g.dot(d);
        double f_new = 0.0;
        bool accepted = false;
        for (int b = 0; b < options.max_backtracks; ++b) {
            x_new = result.x + step * d;
            f_new = fn(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= result.value + options.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No descent along the search direction at machine resolution.
            result.converged = true;
            break;
        }

        Eigen::VectorXd s = x_new - result.x;
        Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
        }

        result.last_decrease = result.value - f_new;
        result.x.swap(x_new);
        g.swap(g_new);
        result.value = f_new;
        result.history.push_back(f_new);
        result.iterations = it + 1;

        if (result.last_decrease < options.decrease_tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace ots
