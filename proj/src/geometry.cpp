#include "ots/geometry.hpp"

#include "ots/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>

namespace ots {

void validate_polygon(const Polygon& poly)
{
    if (poly.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 vertices");
    for (const auto& v : poly.vertices)
        if (!v.allFinite()) throw Error(ErrorCode::DegeneratePolygon, "polygon vertex is not finite");
    Vec2 lo, hi;
    poly.bounds(lo, hi);
    const double diag2 = (hi - lo).squaredNorm();
    if (!(std::abs(poly.signed_area()) > 1e-12 * diag2))
        throw Error(ErrorCode::DegeneratePolygon, "polygon area is near zero");
    if (!poly.is_simple()) throw Error(ErrorCode::SelfIntersectingPolygon, "polygon boundary intersects itself");
}

FieldSample sdf_from_polygon(const Polygon& poly, const Grid& grid)
{
    validate_polygon(poly);
    FieldSample out = FieldSample::zeros(grid);
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const Vec2 x = grid.node(i, j);
            const double d = poly.distance(x);
            out.values[grid.index(i, j)] = poly.contains(x) ? d : -d;
        }
    return out;
}

FieldSample sigmoid_levelset(const FieldSample& sdf, double steepness)
{
    FieldSample out = FieldSample::zeros(sdf.grid);
    for (std::size_t k = 0; k < sdf.values.size(); ++k)
        out.values[k] = 1.0 / (1.0 + std::exp(-steepness * sdf.values[k]));
    return out;
}

GeometryDomain::GeometryDomain(Polygon boundary, const Grid& box, double steepness)
    : boundary_(std::move(boundary)), steepness_(steepness)
{
    if (!(steepness_ > 0.0) || !std::isfinite(steepness_))
        throw Error(ErrorCode::InvalidArgument, "level-set steepness must be positive");
    validate_polygon(boundary_);
    if (boundary_.signed_area() < 0.0) std::reverse(boundary_.vertices.begin(), boundary_.vertices.end());
    area_ = boundary_.signed_area();
    sdf_ = sdf_from_polygon(boundary_, box.unmasked());
    levelset_ = sigmoid_levelset(sdf_, steepness_);
}

Grid GeometryDomain::interior_grid() const
{
    return sdf_.grid.with_mask(polygon_mask(boundary_, sdf_.grid));
}

BarycentricWeights::BarycentricWeights(std::vector<double> weights) : w_(std::move(weights))
{
    if (w_.empty()) throw Error(ErrorCode::BadWeights, "weights must not be empty");
    double sum = 0.0;
    for (double w : w_) {
        if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::BadWeights, "weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw Error(ErrorCode::BadWeights, "weights must sum to 1 (got " + std::to_string(sum) + ")");
}

BarycentricWeights BarycentricWeights::one_hot(int k, int count)
{
    if (k < 0 || k >= count) throw Error(ErrorCode::BadWeights, "one-hot index out of range");
    std::vector<double> w(static_cast<std::size_t>(count), 0.0);
    w[k] = 1.0;
    return BarycentricWeights(std::move(w));
}

BarycentricWeights BarycentricWeights::uniform(int count)
{
    if (count < 1) throw Error(ErrorCode::BadWeights, "weights must not be empty");
    std::vector<double> w(static_cast<std::size_t>(count), 1.0 / count);
    // Push the rounding residue into the last entry so the sum is 1.
    double head = 0.0;
    for (int k = 0; k + 1 < count; ++k) head += w[k];
    w.back() = 1.0 - head;
    return BarycentricWeights(std::move(w));
}

std::optional<int> BarycentricWeights::vertex() const
{
    std::optional<int> hit;
    for (int k = 0; k < size(); ++k) {
        if (w_[k] == 1.0) hit = k;
        else if (w_[k] != 0.0) return std::nullopt;
    }
    return hit;
}

Reparameterization reparameterize(const GeometryDomain& domain, int n_particles, double sigma,
                                  const DecomposeOptions& options)
{
    const FieldSample target = normalize_field(domain.levelset());
    Reparameterization out;
    out.fit = decompose(target, n_particles, sigma, options);
    out.integral = *target.integral;
    return out;
}

ParticleCloud barycenter(const MatchedEnsemble& ensemble, const BarycentricWeights& weights)
{
    if (ensemble.clouds.empty()) throw Error(ErrorCode::EmptyEnsemble, "barycenter of an empty ensemble");
    if (static_cast<int>(ensemble.clouds.size()) != weights.size())
        throw Error(ErrorCode::SizeMismatch, "weight count differs from ensemble size");
    const int n = ensemble.clouds.front().size();
    Centers c = Centers::Zero(n, 2);
    for (int k = 0; k < weights.size(); ++k) {
        const auto& cloud = ensemble.clouds[k];
        if (cloud.size() != n) throw Error(ErrorCode::SizeMismatch, "ensemble clouds differ in size");
        c += weights[k] * cloud.centers();
    }
    return ParticleCloud(std::move(c), ensemble.clouds.front().sigma());
}

FieldSample levelset_from_cloud(const ParticleCloud& cloud, const Grid& grid)
{
    FieldSample eta = evaluate_cloud(cloud, grid.unmasked());
    const double peak = *std::max_element(eta.values.begin(), eta.values.end());
    if (!(peak > 0.0)) throw Error(ErrorCode::NonPositiveField, "cloud does not reach the grid");
    for (double& v : eta.values) v /= peak;
    eta.integral.reset();
    return eta;
}

double interpolate(const FieldSample& field, const Vec2& x)
{
    const Grid& g = field.grid;
    const double eps = 1e-12 * std::max(1.0, (g.upper() - g.origin()).norm());
    const Vec2 lo = g.origin(), hi = g.upper();
    if (x.x() < lo.x() - eps || x.x() > hi.x() + eps || x.y() < lo.y() - eps || x.y() > hi.y() + eps)
        throw Error(ErrorCode::OutOfBox, "point lies outside the reference box");
    const double u = std::clamp((x.x() - lo.x()) / g.spacing().x(), 0.0, static_cast<double>(g.nx() - 1));
    const double v = std::clamp((x.y() - lo.y()) / g.spacing().y(), 0.0, static_cast<double>(g.ny() - 1));
    const int i = std::min(static_cast<int>(u), std::max(g.nx() - 2, 0));
    const int j = std::min(static_cast<int>(v), std::max(g.ny() - 2, 0));
    const double fu = g.nx() > 1 ? u - i : 0.0;
    const double fv = g.ny() > 1 ? v - j : 0.0;
    const int i1 = std::min(i + 1, g.nx() - 1);
    const int j1 = std::min(j + 1, g.ny() - 1);
    const auto& f = field.values;
    return (1 - fu) * (1 - fv) * f[g.index(i, j)] + fu * (1 - fv) * f[g.index(i1, j)] +
           (1 - fu) * fv * f[g.index(i, j1)] + fu * fv * f[g.index(i1, j1)];
}

bool membership(const FieldSample& levelset, const Vec2& x)
{
    return interpolate(levelset, x) >= 0.5;
}

Polygon random_star_polygon(std::uint64_t seed, const StarDomainConfig& config)
{
    if (config.vertices < 3 || !(config.mean_radius > 0.0) || config.harmonics < 0)
        throw Error(ErrorCode::InvalidArgument, "invalid star-domain configuration");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> amp(static_cast<std::size_t>(config.harmonics));
    std::vector<double> phase(amp.size());
    for (int j = 0; j < config.harmonics; ++j) {
        amp[j] = config.amplitude / (j + 1) * (2.0 * unit(rng) - 1.0);
        phase[j] = 2.0 * std::numbers::pi * unit(rng);
    }
    const int nv = config.vertices;
    std::vector<double> alpha(nv), pert(nv);
    double lowest = 0.0;
    for (int v = 0; v < nv; ++v) {
        alpha[v] = 2.0 * std::numbers::pi * v / nv;
        double s = 0.0;
        for (int j = 0; j < config.harmonics; ++j) s += amp[j] * std::cos((j + 1) * alpha[v] + phase[j]);
        pert[v] = s;
        lowest = std::min(lowest, s);
    }
    // Shrink the perturbation when it would push the radius below 0.35 r0.
    const double scale = (1.0 + lowest < 0.35) ? 0.65 / -lowest : 1.0;
    Polygon poly;
    poly.vertices.reserve(nv);
    for (int v = 0; v < nv; ++v) {
        const double r = config.mean_radius * (1.0 + scale * pert[v]);
        poly.vertices.push_back(config.center + r * Vec2(std::cos(alpha[v]), std::sin(alpha[v])));
    }
    return poly;
}

GeometryDomain random_star_domain(std::uint64_t seed, const StarDomainConfig& config, const Grid& box,
                                  double steepness)
{
    return GeometryDomain(random_star_polygon(seed, config), box, steepness);
}

Polygon regular_polygon(int sides, double radius, Vec2 center, double phase)
{
    if (sides < 3 || !(radius > 0.0)) throw Error(ErrorCode::DegeneratePolygon, "regular polygon needs 3+ sides");
    Polygon poly;
    for (int k = 0; k < sides; ++k) {
        const double a = phase + 2.0 * std::numbers::pi * k / sides;
        poly.vertices.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
    }
    return poly;
}

void reference_box(const std::vector<Polygon>& polygons, double margin, Vec2& lo, Vec2& hi)
{
    if (polygons.empty()) throw Error(ErrorCode::EmptyEnsemble, "reference box needs at least one polygon");
    lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& p : polygons) {
        Vec2 a, b;
        p.bounds(a, b);
        lo = lo.cwiseMin(a);
        hi = hi.cwiseMax(b);
    }
    const double extent = (hi - lo).maxCoeff();
    const Vec2 mid = 0.5 * (lo + hi);
    const double half = 0.5 * extent + margin * extent;
    lo = mid - Vec2::Constant(half);
    hi = mid + Vec2::Constant(half);
}

namespace {

// Marching squares over cells (i, j) for i in [-1, nx - 1], j in [-1, ny - 1];
// nodes outside the raster count as below the level so every contour closes.
class ContourTracer {
public:
    ContourTracer(const FieldSample& f, double level) : f_(f), g_(f.grid), level_(level) {}

    std::vector<Polygon> run()
    {
        for (int j = -1; j < g_.ny(); ++j)
            for (int i = -1; i < g_.nx(); ++i) cell(i, j);
        std::vector<Polygon> loops;
        // Walk in insertion order for determinism.
        for (std::size_t s = 0; s < order_.size(); ++s) {
            const long long start = order_[s];
            if (visited_.count(start)) continue;
            Polygon poly;
            long long e = start;
            while (!visited_.count(e)) {
                visited_.insert({e, 1});
                poly.vertices.push_back(point(e));
                auto it = next_.find(e);
                if (it == next_.end()) break;
                e = it->second;
            }
            if (poly.size() >= 3) loops.push_back(std::move(poly));
        }
        return loops;
    }

private:
    bool real(int i, int j) const { return i >= 0 && j >= 0 && i < g_.nx() && j < g_.ny(); }
    double value(int i, int j) const
    {
        return real(i, j) ? f_.values[g_.index(i, j)] : -std::numeric_limits<double>::infinity();
    }
    bool in(int i, int j) const { return value(i, j) >= level_; }

    long long edge_id(int i, int j, int vertical) const
    {
        const long long w = g_.nx() + 2;
        return 2 * ((static_cast<long long>(j) + 1) * w + (i + 1)) + vertical;
    }

    Vec2 point(long long id) const
    {
        const long long w = g_.nx() + 2;
        const int vertical = static_cast<int>(id % 2);
        const long long cell = id / 2;
        const int i = static_cast<int>(cell % w) - 1;
        const int j = static_cast<int>(cell / w) - 1;
        const int i1 = vertical ? i : i + 1;
        const int j1 = vertical ? j + 1 : j;
        const bool ra = real(i, j), rb = real(i1, j1);
        if (!rb) return g_.node(i, j);
        if (!ra) return g_.node(i1, j1);
        const double va = value(i, j), vb = value(i1, j1);
        const double t = (va == vb) ? 0.5 : std::clamp((level_ - va) / (vb - va), 0.0, 1.0);
        return g_.node(i, j) + t * (g_.node(i1, j1) - g_.node(i, j));
    }

    void cell(int i, int j)
    {
        // Corners counter-clockwise and the edge leaving each corner.
        const int ci[4] = {i, i + 1, i + 1, i};
        const int cj[4] = {j, j, j + 1, j + 1};
        const long long edges[4] = {edge_id(i, j, 0), edge_id(i + 1, j, 1), edge_id(i, j + 1, 0), edge_id(i, j, 1)};
        bool inside[4];
        int count = 0;
        for (int c = 0; c < 4; ++c) count += (inside[c] = in(ci[c], cj[c]));
        if (count == 0 || count == 4) return;
        bool exits[4], enters[4];
        for (int e = 0; e < 4; ++e) {
            exits[e] = inside[e] && !inside[(e + 1) % 4];
            enters[e] = !inside[e] && inside[(e + 1) % 4];
        }
        bool connected = true;
        if (count == 2 && inside[0] == inside[2]) {
            double mean = 0.0;
            for (int c = 0; c < 4; ++c) mean += real(ci[c], cj[c]) ? value(ci[c], cj[c]) : level_ - 1.0;
            connected = 0.25 * mean >= level_;
        }
        for (int e = 0; e < 4; ++e) {
            if (!exits[e]) continue;
            int target = -1;
            for (int step = 1; step < 4; ++step) {
                const int cand = connected ? (e + step) % 4 : (e + 4 - step) % 4;
                if (enters[cand]) {
                    target = cand;
                    break;
                }
            }
            link(edges[e], edges[target]);
        }
    }

    void link(long long from, long long to)
    {
        if (next_.emplace(from, to).second) order_.push_back(from);
    }

    const FieldSample& f_;
    const Grid& g_;
    double level_;
    std::unordered_map<long long, long long> next_;
    std::unordered_map<long long, int> visited_;
    std::vector<long long> order_;
};

}  // namespace

std::vector<Polygon> extract_contours(const FieldSample& field, double level)
{
    return ContourTracer(field, level).run();
}

Polygon largest_contour(const FieldSample& field, double level)
{
    auto loops = extract_contours(field, level);
    const Polygon* best = nullptr;
    double best_area = 0.0;
    for (const auto& p : loops) {
        const double a = p.signed_area();
        if (a > best_area) {
            best_area = a;
            best = &p;
        }
    }
    if (!best) throw Error(ErrorCode::EmptyInterior, "level set has no closed interior contour");
    // Crossings that land exactly on a node appear twice; drop the repeats.
    const double eps = 1e-9 * field.grid.spacing().minCoeff();
    Polygon out;
    for (const auto& v : best->vertices)
        if (out.vertices.empty() || (v - out.vertices.back()).norm() > eps) out.vertices.push_back(v);
    while (out.size() > 1 && (out.vertices.front() - out.vertices.back()).norm() <= eps) out.vertices.pop_back();
    return out;
}

}  // namespace ots
