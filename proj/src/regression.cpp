#include "ots/regression.hpp"

#include "ots/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace ots {

int energy_rank(const Eigen::VectorXd& s, double threshold)
{
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "energy threshold must lie in (0, 1]");
    const double total = s.squaredNorm();
    if (s.size() == 0) return 0;
    if (total == 0.0) return 1;
    double kept = 0.0;
    for (int r = 0; r < s.size(); ++r) {
        kept += s[r] * s[r];
        if (kept >= threshold * total) return r + 1;
    }
    return static_cast<int>(s.size());
}

PodFit pod_fit(const SnapshotMatrix& snap, double energy_threshold)
{
    if (snap.data.cols() < 2) throw Error(ErrorCode::InsufficientSnapshots, "POD needs at least two snapshots");
    if (snap.params.rows() != snap.data.cols())
        throw Error(ErrorCode::SizeMismatch, "parameter rows differ from snapshot count");
    if (!snap.data.allFinite()) throw Error(ErrorCode::NaNField, "snapshot matrix has non-finite entries");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(snap.data, Eigen::ComputeThinU | Eigen::ComputeThinV);
    PodFit out;
    out.basis.singular_values = svd.singularValues();
    out.basis.energy_threshold = energy_threshold;
    const int r = energy_rank(out.basis.singular_values, energy_threshold);
    out.basis.modes = svd.matrixU().leftCols(r);
    const auto& s = out.basis.singular_values;
    out.basis.rank_deficient = s.size() > 0 && s[s.size() - 1] <= 1e-12 * s[0];
    out.coeffs = out.basis.modes.transpose() * snap.data;
    return out;
}

void legendre(double t, int degree, double* out)
{
    out[0] = 1.0;
    if (degree >= 1) out[1] = t;
    for (int n = 1; n < degree; ++n) out[n + 1] = ((2 * n + 1) * t * out[n] - n * out[n - 1]) / (n + 1);
}

PolyRegressor::PolyRegressor(int degree, Eigen::VectorXd lower, Eigen::VectorXd upper,
                             std::vector<std::vector<Term>> terms)
    : degree_(degree), lower_(std::move(lower)), upper_(std::move(upper)), terms_(std::move(terms))
{
    if (degree_ < 0) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be non-negative");
    if (lower_.size() != upper_.size()) throw Error(ErrorCode::SizeMismatch, "bound vectors differ in length");
    for (const auto& out : terms_)
        for (const auto& t : out)
            if (t.factors.rows() != lower_.size() || t.factors.cols() != degree_ + 1)
                throw Error(ErrorCode::SizeMismatch, "term factor shape does not match the regressor");
}

bool PolyRegressor::in_bounds(const Eigen::VectorXd& theta) const
{
    for (int q = 0; q < inputs(); ++q)
        if (theta[q] < lower_[q] || theta[q] > upper_[q]) return false;
    return true;
}

Eigen::VectorXd PolyRegressor::normalized(const Eigen::VectorXd& theta) const
{
    if (theta.size() != inputs()) throw Error(ErrorCode::SizeMismatch, "parameter vector has the wrong length");
    Eigen::VectorXd t(inputs());
    for (int q = 0; q < inputs(); ++q) {
        const double w = upper_[q] - lower_[q];
        t[q] = w > 0.0 ? 2.0 * (theta[q] - lower_[q]) / w - 1.0 : 0.0;
    }
    return t;
}

double PolyRegressor::predict_term(int output, int term, const Eigen::VectorXd& theta) const
{
    const Eigen::VectorXd t = normalized(theta);
    const auto& f = terms_[output][term].factors;
    std::vector<double> basis(static_cast<std::size_t>(degree_ + 1));
    double prod = 1.0;
    for (int q = 0; q < inputs(); ++q) {
        legendre(t[q], degree_, basis.data());
        double v = 0.0;
        for (int i = 0; i <= degree_; ++i) v += f(q, i) * basis[i];
        prod *= v;
    }
    return prod;
}

Eigen::VectorXd PolyRegressor::predict(const Eigen::VectorXd& theta) const
{
    const Eigen::VectorXd t = normalized(theta);
    Eigen::MatrixXd basis(inputs(), degree_ + 1);
    for (int q = 0; q < inputs(); ++q) {
        std::vector<double> row(static_cast<std::size_t>(degree_ + 1));
        legendre(t[q], degree_, row.data());
        for (int i = 0; i <= degree_; ++i) basis(q, i) = row[i];
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(outputs());
    for (int r = 0; r < outputs(); ++r)
        for (const auto& term : terms_[r]) {
            double prod = 1.0;
            for (int q = 0; q < inputs(); ++q) prod *= term.factors.row(q).dot(basis.row(q));
            out[r] += prod;
        }
    return out;
}

namespace {

// Least squares with a ridge fallback when the normal equations are
// ill-conditioned.
Eigen::VectorXd solve_normal(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double ridge, bool& flagged)
{
    Eigen::MatrixXd ata = a.transpose() * a;
    const Eigen::VectorXd atb = a.transpose() * b;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ata, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    if (!(hi > 0.0)) return Eigen::VectorXd::Zero(a.cols());
    if (lo <= 0.0 || hi / lo > 1e12) {
        flagged = true;
        ata.diagonal().array() += ridge * std::max(1.0, hi);
    }
    return ata.ldlt().solve(atb);
}

Eigen::VectorXd term_values(const std::vector<Eigen::MatrixXd>& basis, const Eigen::MatrixXd& f)
{
    Eigen::VectorXd v = Eigen::VectorXd::Ones(basis.front().rows());
    for (std::size_t d = 0; d < basis.size(); ++d)
        v.array() *= (basis[d] * f.row(static_cast<Eigen::Index>(d)).transpose()).array();
    return v;
}

// Alternating least squares for one rank-one term against the residual,
// starting from f. Factor magnitudes are balanced on exit.
void als_update(const std::vector<Eigen::MatrixXd>& basis, const Eigen::VectorXd& residual, Eigen::MatrixXd& f,
                const PolyFitOptions& options, bool& flagged)
{
    const int q = static_cast<int>(basis.size());
    const Eigen::Index p = residual.size();
    Eigen::MatrixXd values(p, q);
    for (int d = 0; d < q; ++d) values.col(d) = basis[d] * f.row(d).transpose();
    double previous = (residual - values.rowwise().prod()).squaredNorm();
    for (int sweep = 0; sweep < options.als_sweeps; ++sweep) {
        for (int d = 0; d < q; ++d) {
            Eigen::VectorXd others = Eigen::VectorXd::Ones(p);
            for (int e = 0; e < q; ++e)
                if (e != d) others.array() *= values.col(e).array();
            const Eigen::MatrixXd a = others.asDiagonal() * basis[d];
            f.row(d) = solve_normal(a, residual, options.ridge, flagged).transpose();
            values.col(d) = basis[d] * f.row(d).transpose();
        }
        const double err = (residual - values.rowwise().prod()).squaredNorm();
        if (previous - err <= 1e-12 * std::max(previous, 1e-300)) break;
        previous = err;
    }
    if (q > 1) {
        double total = 1.0;
        std::vector<double> norms(static_cast<std::size_t>(q));
        for (int d = 0; d < q; ++d) {
            norms[d] = f.row(d).norm();
            total *= norms[d];
        }
        if (total > 0.0) {
            const double target = std::pow(total, 1.0 / q);
            for (int d = 0; d < q; ++d) f.row(d) *= target / norms[d];
        }
    }
}

}  // namespace

PolyRegressor poly_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& targets, const PolyFitOptions& options)
{
    const int p = static_cast<int>(params.rows());
    const int q = static_cast<int>(params.cols());
    if (p < 1 || q < 1) throw Error(ErrorCode::InsufficientSnapshots, "regression needs samples and parameters");
    if (targets.cols() != p) throw Error(ErrorCode::SizeMismatch, "target columns differ from parameter rows");
    if (!params.allFinite() || !targets.allFinite()) throw Error(ErrorCode::NaNField, "regression data not finite");
    if (options.max_degree < 0 || options.max_terms < 1)
        throw Error(ErrorCode::InvalidArgument, "invalid regression options");

    int degree = options.max_degree;
    bool reduced = false;
    while (degree > 0 && p <= q * (degree + 1)) {
        --degree;
        reduced = true;
    }

    const Eigen::VectorXd lower = params.colwise().minCoeff().transpose();
    const Eigen::VectorXd upper = params.colwise().maxCoeff().transpose();
    // basis[q](s, i) = P_i(t_{s,q}).
    std::vector<Eigen::MatrixXd> basis(static_cast<std::size_t>(q), Eigen::MatrixXd(p, degree + 1));
    std::vector<double> row(static_cast<std::size_t>(degree + 1));
    for (int s = 0; s < p; ++s)
        for (int d = 0; d < q; ++d) {
            const double w = upper[d] - lower[d];
            const double t = w > 0.0 ? 2.0 * (params(s, d) - lower[d]) / w - 1.0 : 0.0;
            legendre(t, degree, row.data());
            for (int i = 0; i <= degree; ++i) basis[d](s, i) = row[i];
        }

    bool flagged = false;
    std::vector<std::vector<PolyRegressor::Term>> terms(static_cast<std::size_t>(targets.rows()));
    for (int r = 0; r < targets.rows(); ++r) {
        Eigen::VectorXd residual = targets.row(r).transpose();
        auto& out = terms[static_cast<std::size_t>(r)];
        for (int t = 0; t < options.max_terms; ++t) {
            // Start from the constant polynomial in every dimension.
            Eigen::MatrixXd f = Eigen::MatrixXd::Zero(q, degree + 1);
            f.col(0).setOnes();
            als_update(basis, residual, f, options, flagged);
            const Eigen::VectorXd term = term_values(basis, f);
            const double change = term.norm();
            if (change == 0.0) break;
            residual -= term;
            out.push_back({f});
            // Backfit the earlier terms against the new residual.
            for (int sweep = 0; sweep < options.refine_sweeps && out.size() > 1; ++sweep)
                for (auto& old : out) {
                    residual += term_values(basis, old.factors);
                    als_update(basis, residual, old.factors, options, flagged);
                    residual -= term_values(basis, old.factors);
                }
            if (change < options.tolerance) break;
        }
    }

    PolyRegressor model(degree, lower, upper, std::move(terms));
    model.ill_conditioned = flagged;
    model.degree_reduced = reduced;
    return model;
}

Eigen::VectorXd poly_predict(const PolyRegressor& model, const Eigen::VectorXd& theta)
{
    return model.predict(theta);
}

PolyRegressor integral_regressor_fit(const Eigen::MatrixXd& params, const Eigen::VectorXd& integrals,
                                     const PolyFitOptions& options)
{
    return poly_fit(params, integrals.transpose(), options);
}

double integral_regressor_predict(const PolyRegressor& model, const Eigen::VectorXd& theta)
{
    return model.predict(theta)[0];
}

}  // namespace ots
