#pragma once

#include "ots/grid.hpp"
#include "ots/matching.hpp"
#include "ots/polygon.hpp"
#include "ots/splat.hpp"

#include <cstdint>
#include <vector>

namespace ots {

/// A 2D domain as a simple counter-clockwise polygon plus its signed distance
/// and sigmoid level-set rasterized over a reference box.
class GeometryDomain {
public:
    GeometryDomain() = default;
    /// Validates the polygon and reorients it counter-clockwise.
    GeometryDomain(Polygon boundary, const Grid& box, double steepness = 1.0);

    const Polygon& boundary() const noexcept { return boundary_; }
    const FieldSample& sdf() const noexcept { return sdf_; }
    const FieldSample& levelset() const noexcept { return levelset_; }
    double area() const noexcept { return area_; }
    double steepness() const noexcept { return steepness_; }

    /// Box grid masked to the nodes inside the polygon.
    Grid interior_grid() const;

private:
    Polygon boundary_;
    FieldSample sdf_;
    FieldSample levelset_;
    double area_ = 0.0;
    double steepness_ = 1.0;
};

/// Convex combination coefficients over K samples.
class BarycentricWeights {
public:
    explicit BarycentricWeights(std::vector<double> weights);
    static BarycentricWeights one_hot(int k, int count);
    static BarycentricWeights uniform(int count);

    const std::vector<double>& values() const noexcept { return w_; }
    int size() const noexcept { return static_cast<int>(w_.size()); }
    double operator[](int k) const { return w_[k]; }
    /// Index of the unit weight when all others are exactly zero.
    std::optional<int> vertex() const;

private:
    std::vector<double> w_;
};

/// Throws DegeneratePolygon or SelfIntersectingPolygon.
void validate_polygon(const Polygon& poly);

/// Signed distance to the boundary, positive inside.
FieldSample sdf_from_polygon(const Polygon& poly, const Grid& grid);

/// 1 / (1 + exp(-steepness * sdf)) node by node.
FieldSample sigmoid_levelset(const FieldSample& sdf, double steepness = 1.0);

struct Reparameterization {
    DecomposeResult fit;
    /// Integral of the level-set over the reference box.
    double integral = 0.0;
};

/// Normalizes the level-set over the whole reference box and splats it.
Reparameterization reparameterize(const GeometryDomain& domain, int n_particles, double sigma,
                                  const DecomposeOptions& options = {});

/// Row-wise weighted mean of matched clouds.
ParticleCloud barycenter(const MatchedEnsemble& ensemble, const BarycentricWeights& weights);

/// Reconstruction rescaled by its maximum node value.
FieldSample levelset_from_cloud(const ParticleCloud& cloud, const Grid& grid);

/// Bilinear interpolation of the level-set compared against 0.5.
bool membership(const FieldSample& levelset, const Vec2& x);
double interpolate(const FieldSample& field, const Vec2& x);

struct StarDomainConfig {
    double mean_radius = 0.2;
    int harmonics = 4;
    /// Upper bound on the j-th harmonic coefficient is amplitude / j.
    double amplitude = 0.25;
    int vertices = 256;
    Vec2 center = Vec2::Zero();
};

/// r(alpha) = r0 (1 + sum_j a_j cos(j alpha + phase_j)) with seeded
/// coefficients, scaled so that the radius stays above 0.3 r0.
Polygon random_star_polygon(std::uint64_t seed, const StarDomainConfig& config = {});
GeometryDomain random_star_domain(std::uint64_t seed, const StarDomainConfig& config, const Grid& box,
                                  double steepness = 1.0);

Polygon regular_polygon(int sides, double radius, Vec2 center = Vec2::Zero(), double phase = 0.0);

/// Square box around all polygons, padded by margin times the largest extent
/// on every side.
void reference_box(const std::vector<Polygon>& polygons, double margin, Vec2& lo, Vec2& hi);

/// Closed iso-contours by marching squares (saddles resolved by the cell mean).
std::vector<Polygon> extract_contours(const FieldSample& field, double level);
/// Largest-area contour, counter-clockwise.
Polygon largest_contour(const FieldSample& field, double level);

}  // namespace ots
