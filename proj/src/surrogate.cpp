#include "ots/surrogate.hpp"

#include "ots/error.hpp"
#include "ots/seed.hpp"
#include "ots/version.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace ots {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd flatten(const ParticleCloud& cloud)
{
    return Eigen::Map<const Eigen::VectorXd>(cloud.centers().data(), 2 * cloud.size());
}

// Seed streams: 1 = solution decompositions, 2 = geometry decompositions,
// 3 = solution matching, 4 = geometry matching.
enum Stream : std::uint64_t { kSolutionSplat = 1, kGeometrySplat = 2, kSolutionMatch = 3, kGeometryMatch = 4 };

void check_training_set(const TrainingSet& data)
{
    const std::size_t k = data.polygons.size();
    if (k == 0) throw Error(ErrorCode::EmptyEnsemble, "training needs at least one geometry");
    if (data.params.size() != k || data.snapshots.size() != k)
        throw Error(ErrorCode::SizeMismatch, "parameters and snapshots must be given per geometry");
    for (std::size_t g = 0; g < k; ++g) {
        if (data.snapshots[g].size() < 2)
            throw Error(ErrorCode::InsufficientSnapshots, "each geometry needs at least two snapshots");
        if (static_cast<std::size_t>(data.params[g].rows()) != data.snapshots[g].size())
            throw Error(ErrorCode::SizeMismatch, "parameter rows differ from snapshot count");
        if (data.params[g].cols() != data.params[0].cols())
            throw Error(ErrorCode::SizeMismatch, "parameter dimension differs between geometries");
        for (const auto& s : data.snapshots[g])
            if (!s.grid.same_raster(data.box)) throw Error(ErrorCode::SizeMismatch, "snapshot raster differs from box");
    }
}

}  // namespace

double TrainResult::total_seconds() const
{
    double t = 0.0;
    for (const auto& s : stages) t += s.seconds;
    return t;
}

std::vector<std::vector<SnapshotFit>> decompose_snapshots(const TrainingSet& data, const SurrogateSettings& settings)
{
    check_training_set(data);
    std::vector<std::vector<SnapshotFit>> fits(data.snapshots.size());
    for (std::size_t g = 0; g < data.snapshots.size(); ++g) {
        for (std::size_t p = 0; p < data.snapshots[g].size(); ++p) {
            const FieldSample rho = normalize_field(data.snapshots[g][p]);
            DecomposeOptions opts = settings.solution_decompose;
            opts.seed = derive_seed(settings.seed, kSolutionSplat, (static_cast<std::uint64_t>(g) << 32) | p);
            opts.free_scale = true;
            SnapshotFit fit{decompose(rho, settings.n_s, settings.sigma_s, opts), 0.0};
            fit.integral = *rho.integral * fit.fit.scale;
            fits[g].push_back(std::move(fit));
        }
        spdlog::debug("decomposed snapshots of geometry {}", g);
    }
    return fits;
}

TrainResult train(const TrainingSet& data, const SurrogateSettings& settings)
{
    const auto t0 = Clock::now();
    auto fits = decompose_snapshots(data, settings);
    const double seconds = seconds_since(t0);
    TrainResult out = train_from_fits(data, std::move(fits), settings);
    out.stages.front().seconds = seconds;
    return out;
}

TrainResult train_from_fits(const TrainingSet& data, std::vector<std::vector<SnapshotFit>> fits,
                            const SurrogateSettings& settings)
{
    check_training_set(data);
    const int k_count = static_cast<int>(data.polygons.size());
    if (fits.size() != data.snapshots.size())
        throw Error(ErrorCode::SizeMismatch, "one fit list per geometry expected");
    TrainResult out;
    ModelContainer& model = out.model;
    model.settings = settings;
    model.steepness = data.steepness;
    model.box = data.box.unmasked();
    model.version = std::string(kVersion);

    std::vector<ParticleCloud> clouds;
    for (std::size_t g = 0; g < fits.size(); ++g) {
        if (fits[g].size() != data.snapshots[g].size())
            throw Error(ErrorCode::SizeMismatch, "one fit per snapshot expected");
        for (const auto& f : fits[g]) {
            if (f.fit.cloud.size() != settings.n_s)
                throw Error(ErrorCode::SizeMismatch, "fit particle count differs from the settings");
            if (f.fit.did_not_converge) ++out.did_not_converge;
            clouds.push_back(f.fit.cloud);
        }
    }
    out.solution_fits = std::move(fits);
    out.stages.push_back({"SSM Particle Decomposition", 0.0});

    // Stage 2: one global match across all geometries.
    auto t0 = Clock::now();
    MatchOptions mopts = settings.solution_match;
    mopts.seed = derive_seed(settings.seed, kSolutionMatch, 0);
    MatchedEnsemble matched = match_multi(clouds, mopts);
    model.orderings = matched.orderings;
    out.stages.push_back({"P-Dimensional Matching", seconds_since(t0)});
    spdlog::debug("solution matching cost {}", matched.total_cost);

    // Stage 3: POD + regressors per geometry.
    t0 = Clock::now();
    std::size_t offset = 0;
    for (int g = 0; g < k_count; ++g) {
        const int p_count = static_cast<int>(data.snapshots[g].size());
        SnapshotMatrix snap;
        snap.data.resize(2 * settings.n_s, p_count);
        snap.params = data.params[g];
        Eigen::VectorXd integrals(p_count);
        for (int p = 0; p < p_count; ++p) {
            snap.data.col(p) = flatten(matched.clouds[offset + p]);
            integrals[p] = out.solution_fits[g][p].integral;
        }
        offset += p_count;
        PodFit pod = pod_fit(snap, settings.energy_threshold);
        SSM ssm;
        ssm.regressor = poly_fit(snap.params, pod.coeffs, settings.poly);
        ssm.integral_model = integral_regressor_fit(snap.params, integrals, settings.poly);
        ssm.pod = std::move(pod.basis);
        ssm.params = snap.params;
        ssm.n_s = settings.n_s;
        ssm.sigma_s = settings.sigma_s;
        if (ssm.regressor.ill_conditioned || ssm.integral_model.ill_conditioned)
            spdlog::warn("regressor for geometry {} needed ridge regularization", g);
        if (ssm.regressor.degree_reduced)
            spdlog::warn("regressor degree for geometry {} reduced to {}", g, ssm.regressor.degree());
        model.ssms.push_back(std::move(ssm));
    }
    out.stages.push_back({"SSM Training", seconds_since(t0)});

    // Stage 4: geometry reparameterization.
    t0 = Clock::now();
    std::vector<ParticleCloud> shapes;
    for (int g = 0; g < k_count; ++g) {
        const GeometryDomain dom(data.polygons[g], model.box, data.steepness);
        DecomposeOptions opts = settings.geometry_decompose;
        opts.seed = derive_seed(settings.seed, kGeometrySplat, static_cast<std::uint64_t>(g));
        Reparameterization rep = reparameterize(dom, settings.n_g, settings.sigma_g, opts);
        if (rep.fit.did_not_converge) ++out.did_not_converge;
        shapes.push_back(rep.fit.cloud);
        model.sgm.polygons.push_back(dom.boundary());
        model.sgm.integrals.push_back(rep.integral);
        out.geometry_fits.push_back(std::move(rep));
    }
    out.stages.push_back({"SGM Particle Decomposition", seconds_since(t0)});

    // Stage 5: match the geometry clouds.
    t0 = Clock::now();
    MatchOptions gopts = settings.geometry_match;
    gopts.seed = derive_seed(settings.seed, kGeometryMatch, 0);
    MatchedEnsemble gm = match_multi(shapes, gopts);
    model.sgm.clouds = std::move(gm.clouds);
    model.sgm.orderings = std::move(gm.orderings);
    model.sgm.total_cost = gm.total_cost;
    model.sgm.steepness = data.steepness;
    out.stages.push_back({"K-Dimensional Matching", seconds_since(t0)});
    return out;
}

Surrogate::Surrogate(ModelContainer model) : model_(std::move(model))
{
    if (model_.ssms.size() != model_.sgm.polygons.size())
        throw Error(ErrorCode::SizeMismatch, "model holds a different number of SSMs and geometries");
    for (const auto& poly : model_.sgm.polygons) domains_.emplace_back(poly, model_.box, model_.steepness);
}

ParticleCloud predict_cloud(const SSM& ssm, const Eigen::VectorXd& theta)
{
    const Eigen::VectorXd coeffs = ssm.regressor.predict(theta);
    const Eigen::VectorXd flat = ssm.pod.modes * coeffs;
    return ParticleCloud(Eigen::Map<const Centers>(flat.data(), ssm.n_s, 2), ssm.sigma_s);
}

namespace {

FieldSample masked_reconstruction(const ParticleCloud& cloud, double integral, const Grid& grid)
{
    FieldSample f = evaluate_cloud(cloud, grid);
    for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = grid.inside(k) ? integral * f.values[k] : 0.0;
    f.integral = integral;
    return f;
}

void check_theta(const Surrogate& model, const Eigen::VectorXd& theta)
{
    const auto& ssm = model.model().ssms.front();
    if (theta.size() != ssm.params.cols())
        throw Error(ErrorCode::SizeMismatch, "parameter vector has the wrong length");
    if (!theta.allFinite()) throw Error(ErrorCode::InvalidArgument, "parameter vector must be finite");
}

}  // namespace

Inference infer_fixed_geometry(const Surrogate& model, int k, const Eigen::VectorXd& theta)
{
    if (k < 0 || k >= model.geometries()) throw Error(ErrorCode::InvalidArgument, "geometry index out of range");
    check_theta(model, theta);
    const SSM& ssm = model.model().ssms[k];
    Inference out;
    out.cloud = predict_cloud(ssm, theta);
    out.extrapolated = !ssm.regressor.in_bounds(theta);
    double integral = integral_regressor_predict(ssm.integral_model, theta);
    if (!(integral >= 0.0)) {
        spdlog::warn("predicted integral {} clamped to 0", integral);
        integral = 0.0;
        out.integral_clamped = true;
    }
    out.integral = integral;
    const GeometryDomain& dom = model.domain(k);
    out.field = masked_reconstruction(out.cloud, integral, dom.interior_grid());
    out.levelset = dom.levelset();
    out.leaked_mass = leaked_mass(out.cloud, out.field.grid);
    return out;
}

Inference infer_cross_geometry(const Surrogate& model, const Eigen::VectorXd& theta, const BarycentricWeights& weights)
{
    const ModelContainer& m = model.model();
    if (weights.size() != model.geometries())
        throw Error(ErrorCode::BadWeights, "expected one weight per training geometry");
    if (const auto k = weights.vertex()) return infer_fixed_geometry(model, *k, theta);
    check_theta(model, theta);

    Inference out;
    Centers mu = Centers::Zero(m.settings.n_s, 2);
    double integral = 0.0;
    for (int k = 0; k < model.geometries(); ++k) {
        if (weights[k] == 0.0) continue;
        const SSM& ssm = m.ssms[k];
        mu += weights[k] * predict_cloud(ssm, theta).centers();
        integral += weights[k] * integral_regressor_predict(ssm.integral_model, theta);
        out.extrapolated = out.extrapolated || !ssm.regressor.in_bounds(theta);
    }
    if (!(integral >= 0.0)) {
        spdlog::warn("blended integral {} clamped to 0", integral);
        integral = 0.0;
        out.integral_clamped = true;
    }
    out.integral = integral;
    out.cloud = ParticleCloud(std::move(mu), m.settings.sigma_s);

    MatchedEnsemble shapes;
    shapes.clouds = m.sgm.clouds;
    const ParticleCloud gamma = barycenter(shapes, weights);
    out.levelset = levelset_from_cloud(gamma, m.box);
    std::vector<std::uint8_t> mask(m.box.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = out.levelset.values[i] >= 0.5 ? 1 : 0;
    const Grid grid = m.box.with_mask(std::move(mask));
    out.field = masked_reconstruction(out.cloud, integral, grid);
    out.leaked_mass = leaked_mass(out.cloud, grid);
    return out;
}

FieldSample relative_error(const FieldSample& predicted, const FieldSample& reference)
{
    if (!predicted.grid.same_raster(reference.grid) || predicted.grid.mask() != reference.grid.mask())
        throw Error(ErrorCode::SizeMismatch, "relative error needs identical grids and masks");
    const double area = reference.grid.masked_area();
    const double denom = std::sqrt(reference.quadrature_squared() / area);
    if (!(denom >= 1e-14)) throw Error(ErrorCode::ZeroReference, "reference field is zero on the domain");
    FieldSample eps = FieldSample::zeros(reference.grid);
    for (std::size_t k = 0; k < eps.values.size(); ++k)
        if (reference.grid.inside(k)) eps.values[k] = (predicted.values[k] - reference.values[k]) / denom;
    return eps;
}

double default_rbf_scale(const Eigen::MatrixXd& params)
{
    const Eigen::Index p = params.rows();
    if (p < 2) return 1.0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < p; ++j)
            if (j != i) best = std::min(best, (params.row(i) - params.row(j)).norm());
        sum += best;
    }
    const double scale = sum / static_cast<double>(p);
    return scale > 0.0 ? scale : 1.0;
}

FieldSample idw_baseline(const std::vector<FieldSample>& snapshots, const Eigen::MatrixXd& params,
                         const Eigen::VectorXd& theta, double rbf_scale)
{
    if (snapshots.empty()) throw Error(ErrorCode::EmptyEnsemble, "IDW needs at least one snapshot");
    if (static_cast<std::size_t>(params.rows()) != snapshots.size())
        throw Error(ErrorCode::SizeMismatch, "one parameter row per snapshot expected");
    if (!(rbf_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "rbf scale must be positive");
    for (std::size_t p = 0; p < snapshots.size(); ++p)
        if ((params.row(static_cast<Eigen::Index>(p)).transpose() - theta).squaredNorm() == 0.0) return snapshots[p];

    std::vector<double> w(snapshots.size());
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < w.size(); ++p) {
        w[p] = (params.row(static_cast<Eigen::Index>(p)).transpose() - theta).squaredNorm();
        dmin = std::min(dmin, w[p]);
    }
    // Shift by the nearest distance so the weights cannot all underflow.
    double total = 0.0;
    for (double& v : w) {
        v = std::exp(-(v - dmin) / (2.0 * rbf_scale * rbf_scale));
        total += v;
    }
    FieldSample out = FieldSample::zeros(snapshots.front().grid);
    for (std::size_t p = 0; p < w.size(); ++p) {
        if (!snapshots[p].grid.same_raster(out.grid))
            throw Error(ErrorCode::SizeMismatch, "IDW snapshots must share one raster");
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w[p] / total * snapshots[p].values[k];
    }
    return out;
}

GeometryDomain domain_from_levelset(const FieldSample& levelset, const Grid& box, double steepness)
{
    return GeometryDomain(largest_contour(levelset, 0.5), box, steepness);
}

}  // namespace ots
