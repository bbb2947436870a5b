#include "ots/splat.hpp"

#include "ots/error.hpp"
#include "ots/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ots {

namespace {

struct AxisWindow {
    int lo = 0;
    int hi = -1;  // inclusive; empty when hi < lo
};

AxisWindow axis_window(double mu, double origin, double h, int n, double radius)
{
    const double a = std::ceil((mu - radius - origin) / h);
    const double b = std::floor((mu + radius - origin) / h);
    AxisWindow w;
    if (!(a <= b) || b < 0.0 || a > n - 1) return w;
    w.lo = static_cast<int>(std::max(a, 0.0));
    w.hi = static_cast<int>(std::min(b, static_cast<double>(n - 1)));
    return w;
}

// exp(-(t - mu)^2 / (2 sigma^2)) on the window nodes.
void axis_factors(const AxisWindow& w, double mu, double origin, double h, double inv_two_sigma2,
                  std::vector<double>& out)
{
    out.resize(static_cast<std::size_t>(std::max(0, w.hi - w.lo + 1)));
    for (int i = w.lo; i <= w.hi; ++i) {
        const double d = origin + i * h - mu;
        out[i - w.lo] = std::exp(-d * d * inv_two_sigma2);
    }
}

// Position of cell (x, y) along the Hilbert curve filling a 2^order square.
std::uint64_t hilbert_index(int order, std::uint32_t x, std::uint32_t y)
{
    const std::uint32_t n = 1u << order;
    std::uint64_t d = 0;
    for (std::uint32_t s = n / 2; s > 0; s /= 2) {
        const std::uint32_t rx = (x & s) ? 1 : 0;
        const std::uint32_t ry = (y & s) ? 1 : 0;
        d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

void require_finite(const FieldSample& f)
{
    for (double v : f.values)
        if (!std::isfinite(v)) throw Error(ErrorCode::NaNField, "field contains a non-finite value");
}

}  // namespace

ParticleCloud::ParticleCloud(Centers centers, double sigma)
    : centers_(std::move(centers)), sigma_(sigma)
{
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
        throw Error(ErrorCode::InvalidBandwidth, "particle bandwidth must be positive and finite");
    if (centers_.rows() < 1) throw Error(ErrorCode::InvalidArgument, "a particle cloud needs at least one particle");
    if (!centers_.allFinite()) throw Error(ErrorCode::NaNField, "particle centers must be finite");
}

double ParticleCloud::amplitude() const noexcept
{
    return 1.0 / (size() * sigma_ * sigma_ * 2.0 * std::numbers::pi);
}

ParticleCloud ParticleCloud::reordered(const Permutation& perm) const
{
    if (static_cast<int>(perm.size()) != size())
        throw Error(ErrorCode::SizeMismatch, "permutation length differs from particle count");
    Centers out(size(), 2);
    for (int n = 0; n < size(); ++n) out.row(n) = centers_.row(perm[n]);
    return ParticleCloud(std::move(out), sigma_);
}

FieldSample normalize_field(const FieldSample& raw)
{
    require_finite(raw);
    for (std::size_t k = 0; k < raw.values.size(); ++k)
        if (raw.grid.inside(k) && raw.values[k] < -1e-12)
            throw Error(ErrorCode::NonPositiveField, "field has negative values on the domain");
    const double integral = raw.quadrature();
    if (!(integral > 0.0)) throw Error(ErrorCode::NonPositiveField, "field integral is not positive");

    FieldSample out = FieldSample::zeros(raw.grid);
    for (std::size_t k = 0; k < raw.values.size(); ++k)
        if (raw.grid.inside(k)) out.values[k] = raw.values[k] / integral;
    out.integral = integral;
    return out;
}

FieldSample evaluate_cloud(const ParticleCloud& cloud, const Grid& grid)
{
    FieldSample out = FieldSample::zeros(grid);
    const double sigma = cloud.sigma();
    const double radius = kTruncationSigmas * sigma;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const double amp = cloud.amplitude();
    std::vector<double> ex, ey;
    for (int n = 0; n < cloud.size(); ++n) {
        const double mx = cloud.centers()(n, 0);
        const double my = cloud.centers()(n, 1);
        const auto wx = axis_window(mx, grid.origin().x(), grid.spacing().x(), grid.nx(), radius);
        const auto wy = axis_window(my, grid.origin().y(), grid.spacing().y(), grid.ny(), radius);
        if (wx.hi < wx.lo || wy.hi < wy.lo) continue;
        axis_factors(wx, mx, grid.origin().x(), grid.spacing().x(), inv, ex);
        axis_factors(wy, my, grid.origin().y(), grid.spacing().y(), inv, ey);
        for (int j = wy.lo; j <= wy.hi; ++j) {
            const double fy = amp * ey[j - wy.lo];
            double* row = out.values.data() + grid.index(0, j);
            for (int i = wx.lo; i <= wx.hi; ++i) row[i] += fy * ex[i - wx.lo];
        }
    }
    return out;
}

double evaluate_cloud_at(const ParticleCloud& cloud, const Vec2& x)
{
    const double inv = 1.0 / (2.0 * cloud.sigma() * cloud.sigma());
    double sum = 0.0;
    for (int n = 0; n < cloud.size(); ++n) sum += std::exp(-(x - cloud.center(n)).squaredNorm() * inv);
    return cloud.amplitude() * sum;
}

double leaked_mass(const ParticleCloud& cloud, const Grid& grid)
{
    return 1.0 - evaluate_cloud(cloud, grid).quadrature();
}

SplatObjective::SplatObjective(const FieldSample& target, int n_particles, double sigma, bool free_scale)
    : target_(target), n_(n_particles), sigma_(sigma), free_scale_(free_scale),
      amplitude_(1.0 / (n_particles * sigma * sigma * 2.0 * std::numbers::pi))
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidBandwidth, "particle bandwidth must be positive and finite");
    if (n_particles < 1) throw Error(ErrorCode::InvalidArgument, "need at least one particle");
}

void SplatObjective::accumulate(const Centers& centers, std::vector<double>& field) const
{
    const Grid& grid = target_.grid;
    field.assign(grid.size(), 0.0);
    const double radius = kTruncationSigmas * sigma_;
    const double inv = 1.0 / (2.0 * sigma_ * sigma_);
    std::vector<double> ex, ey;
    for (int n = 0; n < n_; ++n) {
        const auto wx = axis_window(centers(n, 0), grid.origin().x(), grid.spacing().x(), grid.nx(), radius);
        const auto wy = axis_window(centers(n, 1), grid.origin().y(), grid.spacing().y(), grid.ny(), radius);
        if (wx.hi < wx.lo || wy.hi < wy.lo) continue;
        axis_factors(wx, centers(n, 0), grid.origin().x(), grid.spacing().x(), inv, ex);
        axis_factors(wy, centers(n, 1), grid.origin().y(), grid.spacing().y(), inv, ey);
        for (int j = wy.lo; j <= wy.hi; ++j) {
            const double fy = amplitude_ * ey[j - wy.lo];
            double* row = field.data() + grid.index(0, j);
            for (int i = wx.lo; i <= wx.hi; ++i) row[i] += fy * ex[i - wx.lo];
        }
    }
}

double SplatObjective::scale_for(const std::vector<double>& field) const
{
    if (!free_scale_) return 1.0;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < field.size(); ++k) {
        if (!target_.grid.inside(k)) continue;
        num += field[k] * target_.values[k];
        den += field[k] * field[k];
    }
    return den > 0.0 ? std::max(num / den, 0.0) : 1.0;
}

double SplatObjective::optimal_scale(const Centers& centers) const
{
    std::vector<double> field;
    accumulate(centers, field);
    return scale_for(field);
}

double SplatObjective::value(const Centers& centers) const
{
    std::vector<double> field;
    accumulate(centers, field);
    const double a = scale_for(field);
    double f = 0.0;
    for (std::size_t k = 0; k < field.size(); ++k) {
        if (!target_.grid.inside(k)) continue;
        const double r = a * field[k] - target_.values[k];
        f += r * r;
    }
    return 0.5 * f;
}

double SplatObjective::value_and_gradient(const Centers& centers, Centers& gradient) const
{
    const Grid& grid = target_.grid;
    std::vector<double> residual;
    accumulate(centers, residual);
    // With a free scale the optimal amplitude is eliminated in closed form;
    // its derivative drops out of the gradient because the residual is
    // orthogonal to the reconstruction at the optimum.
    const double a = scale_for(residual);
    double f = 0.0;
    for (std::size_t k = 0; k < residual.size(); ++k) {
        if (!grid.inside(k)) {
            residual[k] = 0.0;
            continue;
        }
        residual[k] = a * residual[k] - target_.values[k];
        f += residual[k] * residual[k];
    }

    // d rho_hat / d mu_n = G_n(X) (X - mu_n) / sigma^2, separable in x and y.
    gradient.resize(n_, 2);
    const double radius = kTruncationSigmas * sigma_;
    const double inv = 1.0 / (2.0 * sigma_ * sigma_);
    const double scale = a * amplitude_ / (sigma_ * sigma_);
    std::vector<double> ex, ey;
    for (int n = 0; n < n_; ++n) {
        const double mx = centers(n, 0);
        const double my = centers(n, 1);
        const auto wx = axis_window(mx, grid.origin().x(), grid.spacing().x(), grid.nx(), radius);
        const auto wy = axis_window(my, grid.origin().y(), grid.spacing().y(), grid.ny(), radius);
        double gx = 0.0;
        double gy = 0.0;
        if (wx.hi >= wx.lo && wy.hi >= wy.lo) {
            axis_factors(wx, mx, grid.origin().x(), grid.spacing().x(), inv, ex);
            axis_factors(wy, my, grid.origin().y(), grid.spacing().y(), inv, ey);
            for (int j = wy.lo; j <= wy.hi; ++j) {
                const double* row = residual.data() + grid.index(0, j);
                double s = 0.0;
                double t = 0.0;
                for (int i = wx.lo; i <= wx.hi; ++i) {
                    const double w = row[i] * ex[i - wx.lo];
                    s += w;
                    t += w * (grid.x(i) - mx);
                }
                const double fy = ey[j - wy.lo];
                gx += fy * t;
                gy += fy * (grid.y(j) - my) * s;
            }
        }
        gradient(n, 0) = scale * gx;
        gradient(n, 1) = scale * gy;
    }
    return 0.5 * f;
}

ParticleCloud importance_sample(const FieldSample& target, int n_particles, double sigma, std::uint64_t seed)
{
    const Grid& grid = target.grid;
    // Systematic resampling along a Hilbert curve: one random offset, then
    // evenly spaced quantiles of the cumulative mass. Neighbouring quantiles
    // land in neighbouring cells, so the start is free of random clumps.
    int order = 1;
    while ((1 << order) < std::max(grid.nx(), grid.ny())) ++order;
    std::vector<std::pair<std::uint64_t, std::size_t>> nodes;
    double total = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!grid.inside(k) || !(target.values[k] > 0.0)) continue;
        const auto i = static_cast<std::uint32_t>(k % grid.nx());
        const auto j = static_cast<std::uint32_t>(k / grid.nx());
        nodes.emplace_back(hilbert_index(order, i, j), k);
        total += target.values[k];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::NonPositiveField, "cannot sample particles from a zero field");
    std::sort(nodes.begin(), nodes.end());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double offset = unit(rng);
    Centers centers(n_particles, 2);
    std::size_t pos = 0;
    double cumulative = target.values[nodes[0].second] / total;
    for (int n = 0; n < n_particles; ++n) {
        const double q = (n + offset) / n_particles;
        while (cumulative < q && pos + 1 < nodes.size()) cumulative += target.values[nodes[++pos].second] / total;
        const std::size_t k = nodes[pos].second;
        const int i = static_cast<int>(k % grid.nx());
        const int j = static_cast<int>(k / grid.nx());
        centers(n, 0) = grid.x(i) + (unit(rng) - 0.5) * grid.spacing().x();
        centers(n, 1) = grid.y(j) + (unit(rng) - 0.5) * grid.spacing().y();
    }
    return ParticleCloud(std::move(centers), sigma);
}

DecomposeResult decompose(const FieldSample& target, int n_particles, double sigma,
                          const DecomposeOptions& options, const std::optional<ParticleCloud>& init)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidBandwidth, "particle bandwidth must be positive and finite");
    if (n_particles < 1) throw Error(ErrorCode::InvalidArgument, "need at least one particle");
    require_finite(target);

    ParticleCloud start = init ? *init : importance_sample(target, n_particles, sigma, options.seed);
    if (start.size() != n_particles || start.sigma() != sigma)
        throw Error(ErrorCode::SizeMismatch, "initial cloud does not match the requested size or bandwidth");

    const SplatObjective objective(target, n_particles, sigma, options.free_scale);
    Centers grad(n_particles, 2);
    Objective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const Eigen::Map<const Centers> c(x.data(), n_particles, 2);
        const double f = objective.value_and_gradient(c, grad);
        g = Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
        return f;
    };

    LbfgsOptions lo;
    lo.max_iterations = options.max_iterations;
    lo.decrease_tolerance = options.tolerance;
    lo.memory = options.memory;
    lo.initial_step = 0.5 * sigma;

    Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(start.centers().data(), 2 * n_particles);
    LbfgsResult r = minimize_lbfgs(fn, std::move(x0), lo);

    DecomposeResult out;
    out.cloud = ParticleCloud(Eigen::Map<const Centers>(r.x.data(), n_particles, 2), sigma);
    out.objective = r.value;
    out.scale = objective.optimal_scale(out.cloud.centers());
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.did_not_converge = !r.converged && r.last_decrease > 10.0 * options.tolerance;
    out.history = std::move(r.history);
    out.leaked_mass = leaked_mass(out.cloud, target.grid);
    return out;
}

SignedSplit split_signed(const FieldSample& raw)
{
    require_finite(raw);
    SignedSplit out{FieldSample::zeros(raw.grid), FieldSample::zeros(raw.grid)};
    for (std::size_t k = 0; k < raw.values.size(); ++k) {
        out.positive.values[k] = std::max(raw.values[k], 0.0);
        out.negated_negative.values[k] = std::max(-raw.values[k], 0.0);
    }
    return out;
}

}  // namespace ots
