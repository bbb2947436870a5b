#pragma once

#include "ots/geometry.hpp"
#include "ots/matching.hpp"
#include "ots/regression.hpp"
#include "ots/splat.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace ots {

struct SurrogateSettings {
    int n_s = 600;
    double sigma_s = 0.03;
    int n_g = 600;
    double sigma_g = 0.02;
    double energy_threshold = 0.9999;
    PolyFitOptions poly;
    DecomposeOptions solution_decompose;
    DecomposeOptions geometry_decompose;
    MatchOptions solution_match;
    MatchOptions geometry_match;
    std::uint64_t seed = 0;
};

/// Per-geometry solution model: POD of matched particle positions, a
/// regressor for the POD coefficients and one for the field integral.
struct SSM {
    PodBasis pod;
    PolyRegressor regressor;
    PolyRegressor integral_model;
    /// P x Q training parameters.
    Eigen::MatrixXd params;
    int n_s = 0;
    double sigma_s = 0.0;
};

/// Matched geometry clouds.
struct SGM {
    std::vector<Polygon> polygons;
    /// Rows correspond across geometries.
    std::vector<ParticleCloud> clouds;
    std::vector<Permutation> orderings;
    double total_cost = 0.0;
    /// Level-set integrals over the reference box.
    std::vector<double> integrals;
    double steepness = 1.0;

    int size() const noexcept { return static_cast<int>(polygons.size()); }
    bool interpolating() const noexcept { return size() >= 2; }
};

struct ModelContainer {
    SurrogateSettings settings;
    double steepness = 1.0;
    Grid box;
    SGM sgm;
    std::vector<SSM> ssms;
    /// Global solution orderings over all K x P clouds (geometry-major; the
    /// first cloud is the reference).
    std::vector<Permutation> orderings;
    std::string version;
};

struct TrainingSet {
    /// Unmasked reference box raster shared by all fields.
    Grid box;
    std::vector<Polygon> polygons;
    /// Per geometry, P x Q parameters.
    std::vector<Eigen::MatrixXd> params;
    /// Per geometry, P snapshots on the box raster masked to the domain.
    std::vector<std::vector<FieldSample>> snapshots;
    double steepness = 1.0;
};

struct StageTiming {
    std::string name;
    double seconds = 0.0;
};

struct SnapshotFit {
    DecomposeResult fit;
    /// Field integral over the domain times the fitted amplitude.
    double integral = 0.0;
};

struct TrainResult {
    ModelContainer model;
    std::vector<StageTiming> stages;
    /// Per geometry, per snapshot.
    std::vector<std::vector<SnapshotFit>> solution_fits;
    std::vector<Reparameterization> geometry_fits;
    int did_not_converge = 0;

    double total_seconds() const;
};

/// Offline pipeline: splat all K x P snapshots, match them globally, fit one
/// SSM per geometry, reparameterize and match the K geometries.
TrainResult train(const TrainingSet& data, const SurrogateSettings& settings);

/// Stage 1 alone: normalize and splat every snapshot.
std::vector<std::vector<SnapshotFit>> decompose_snapshots(const TrainingSet& data, const SurrogateSettings& settings);

/// Stages 2-5 on precomputed splats; the decomposition stage is reported as 0 s.
TrainResult train_from_fits(const TrainingSet& data, std::vector<std::vector<SnapshotFit>> fits,
                            const SurrogateSettings& settings);

/// Immutable model plus derived geometry data used at inference.
class Surrogate {
public:
    explicit Surrogate(ModelContainer model);

    const ModelContainer& model() const noexcept { return model_; }
    int geometries() const noexcept { return static_cast<int>(domains_.size()); }
    const GeometryDomain& domain(int k) const { return domains_.at(k); }

private:
    ModelContainer model_;
    std::vector<GeometryDomain> domains_;
};

struct Inference {
    FieldSample field;
    FieldSample levelset;
    ParticleCloud cloud;
    double integral = 0.0;
    bool integral_clamped = false;
    bool extrapolated = false;
    /// Mass of the unit cloud outside the field mask.
    double leaked_mass = 0.0;
};

/// Regressed particle positions of geometry k at theta.
ParticleCloud predict_cloud(const SSM& ssm, const Eigen::VectorXd& theta);

Inference infer_fixed_geometry(const Surrogate& model, int k, const Eigen::VectorXd& theta);

/// Barycentric blend of the per-geometry predictions; the field is masked to
/// the reconstructed domain {levelset >= 0.5}. One-hot weights reproduce
/// infer_fixed_geometry exactly.
Inference infer_cross_geometry(const Surrogate& model, const Eigen::VectorXd& theta,
                               const BarycentricWeights& weights);

/// Node-wise (predicted - reference) / sqrt(int reference^2 / area) over the
/// shared mask; zero outside.
FieldSample relative_error(const FieldSample& predicted, const FieldSample& reference);

/// Mean distance from each parameter row to its nearest other row.
double default_rbf_scale(const Eigen::MatrixXd& params);

/// Gaussian-weighted average of the snapshots in parameter space.
FieldSample idw_baseline(const std::vector<FieldSample>& snapshots, const Eigen::MatrixXd& params,
                         const Eigen::VectorXd& theta, double rbf_scale);

/// Domain enclosed by the largest 0.5 contour of a level-set.
GeometryDomain domain_from_levelset(const FieldSample& levelset, const Grid& box, double steepness);

}  // namespace ots
