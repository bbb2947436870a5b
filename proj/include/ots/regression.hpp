#pragma once

#include <Eigen/Core>

#include <vector>

namespace ots {

/// One column per snapshot (stacked coordinates), one parameter row per snapshot.
struct SnapshotMatrix {
    Eigen::MatrixXd data;
    Eigen::MatrixXd params;
};

struct PodBasis {
    Eigen::MatrixXd modes;
    Eigen::VectorXd singular_values;
    double energy_threshold = 0.9999;
    /// Trailing singular values below round-off relative to the largest.
    bool rank_deficient = false;

    int rank() const noexcept { return static_cast<int>(modes.cols()); }
};

struct PodFit {
    PodBasis basis;
    /// rank x P.
    Eigen::MatrixXd coeffs;
};

/// Thin SVD without centering; keeps the smallest rank whose retained energy
/// reaches the threshold.
PodFit pod_fit(const SnapshotMatrix& snap, double energy_threshold = 0.9999);

/// Smallest R with sum_{r<=R} s_r^2 >= threshold * sum s_r^2.
int energy_rank(const Eigen::VectorXd& singular_values, double threshold);

/// Legendre polynomials P_0..P_degree at t.
void legendre(double t, int degree, double* out);

/// Sum of rank-one separable terms prod_q sum_i c_{q,i} P_i(t_q), per output,
/// with each parameter mapped affinely onto [-1, 1] by the training bounds.
class PolyRegressor {
public:
    struct Term {
        /// Q x (degree + 1).
        Eigen::MatrixXd factors;
    };

    PolyRegressor() = default;
    PolyRegressor(int degree, Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<std::vector<Term>> terms);

    int degree() const noexcept { return degree_; }
    int inputs() const noexcept { return static_cast<int>(lower_.size()); }
    int outputs() const noexcept { return static_cast<int>(terms_.size()); }
    const Eigen::VectorXd& lower() const noexcept { return lower_; }
    const Eigen::VectorXd& upper() const noexcept { return upper_; }
    const std::vector<std::vector<Term>>& terms() const noexcept { return terms_; }

    bool in_bounds(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd predict(const Eigen::VectorXd& theta) const;
    double predict_term(int output, int term, const Eigen::VectorXd& theta) const;

    /// Flags raised while fitting.
    bool ill_conditioned = false;
    bool degree_reduced = false;

private:
    Eigen::VectorXd normalized(const Eigen::VectorXd& theta) const;

    int degree_ = 0;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    std::vector<std::vector<Term>> terms_;
};

struct PolyFitOptions {
    int max_degree = 3;
    /// Stop enrichment when the new term changes the training predictions by
    /// less than this (2-norm over training points).
    double tolerance = 1e-2;
    int max_terms = 10;
    int als_sweeps = 50;
    /// Backfitting passes over the earlier terms after each enrichment.
    int refine_sweeps = 2;
    double ridge = 1e-8;
};

/// params: P x Q; targets: R x P.
PolyRegressor poly_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& targets,
                       const PolyFitOptions& options = {});

Eigen::VectorXd poly_predict(const PolyRegressor& model, const Eigen::VectorXd& theta);

/// Scalar regressor for the field integrals (R = 1).
PolyRegressor integral_regressor_fit(const Eigen::MatrixXd& params, const Eigen::VectorXd& integrals,
                                     const PolyFitOptions& options = {});
double integral_regressor_predict(const PolyRegressor& model, const Eigen::VectorXd& theta);

}  // namespace ots
