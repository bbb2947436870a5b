#pragma once

#include "ots/grid.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace ots {

using Centers = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using Permutation = std::vector<int>;

/// N identical isotropic Gaussians of bandwidth sigma, each carrying mass 1/N.
class ParticleCloud {
public:
    ParticleCloud() = default;
    ParticleCloud(Centers centers, double sigma);

    const Centers& centers() const noexcept { return centers_; }
    double sigma() const noexcept { return sigma_; }
    int size() const noexcept { return static_cast<int>(centers_.rows()); }
    Vec2 center(int n) const { return centers_.row(n).transpose(); }

    /// Peak value of one particle, 1 / (N sigma^2 2 pi).
    double amplitude() const noexcept;

    /// Row n of the result is row perm[n] of this cloud.
    ParticleCloud reordered(const Permutation& perm) const;

private:
    Centers centers_;
    double sigma_ = 1.0;
};

/// Gaussians further than this many bandwidths from a node are skipped; the
/// neglected tail is below 3e-18 of the particle peak.
inline constexpr double kTruncationSigmas = 9.0;

/// Divides by the masked midpoint-rule integral and records it.
FieldSample normalize_field(const FieldSample& raw);

/// Reconstruction on every node of the grid (mask ignored).
FieldSample evaluate_cloud(const ParticleCloud& cloud, const Grid& grid);

/// Untruncated reconstruction at a single point.
double evaluate_cloud_at(const ParticleCloud& cloud, const Vec2& x);

/// Fraction of the cloud's unit mass that the masked quadrature does not see.
double leaked_mass(const ParticleCloud& cloud, const Grid& grid);

/// Least-squares misfit 1/2 sum_m (rho(X_m) - a rho_hat(X_m))^2 over masked
/// nodes, with its analytic gradient with respect to the particle centers.
/// a = 1 by default; with free_scale it is the least-squares optimal
/// amplitude, which absorbs the mass the Gaussians spill past the mask.
class SplatObjective {
public:
    SplatObjective(const FieldSample& target, int n_particles, double sigma, bool free_scale = false);

    double value(const Centers& centers) const;
    double value_and_gradient(const Centers& centers, Centers& gradient) const;

    double optimal_scale(const Centers& centers) const;

    int n_particles() const noexcept { return n_; }
    double sigma() const noexcept { return sigma_; }

private:
    void accumulate(const Centers& centers, std::vector<double>& field) const;
    double scale_for(const std::vector<double>& field) const;

    FieldSample target_;
    int n_;
    double sigma_;
    bool free_scale_;
    double amplitude_;
};

struct DecomposeOptions {
    int max_iterations = 5000;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    int memory = 10;
    /// Fit an amplitude alongside the centers (see SplatObjective).
    bool free_scale = false;
};

struct DecomposeResult {
    ParticleCloud cloud;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Iteration cap hit while the last decrease was still above 10x tolerance.
    bool did_not_converge = false;
    double leaked_mass = 0.0;
    /// Fitted amplitude; 1 unless free_scale was requested.
    double scale = 1.0;
    std::vector<double> history;
};

/// Centers drawn from the discrete distribution proportional to the target on
/// masked nodes (systematic resampling in Hilbert-curve order), jittered
/// uniformly within the cell.
ParticleCloud importance_sample(const FieldSample& target, int n_particles, double sigma, std::uint64_t seed);

/// Fits particle centers to a normalized field. Deterministic for a given
/// seed (or initial cloud).
DecomposeResult decompose(const FieldSample& target, int n_particles, double sigma,
                          const DecomposeOptions& options = {},
                          const std::optional<ParticleCloud>& init = std::nullopt);

struct SignedSplit {
    FieldSample positive;
    FieldSample negated_negative;
};

/// v = max(v, 0) - max(-v, 0), node by node.
SignedSplit split_signed(const FieldSample& raw);

}  // namespace ots
