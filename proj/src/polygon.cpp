#include "ots/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ots {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p)
{
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b)
{
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (x - a).norm();
    const double t = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
    return (x - (a + t * ab)).norm();
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2)
{
    const int d1 = sign(orient(q1, q2, p1));
    const int d2 = sign(orient(q1, q2, p2));
    const int d3 = sign(orient(p1, p2, q1));
    const int d4 = sign(orient(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

double Polygon::signed_area() const
{
    double a = 0.0;
    for (std::size_t k = 0; k < size(); ++k) a += cross(vertex(k), vertex(k + 1));
    return 0.5 * a;
}

Vec2 Polygon::centroid() const
{
    double a = 0.0;
    Vec2 c = Vec2::Zero();
    for (std::size_t k = 0; k < size(); ++k) {
        const double w = cross(vertex(k), vertex(k + 1));
        a += w;
        c += w * (vertex(k) + vertex(k + 1));
    }
    return c / (3.0 * a);
}

bool Polygon::is_simple() const
{
    const std::size_t n = size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a1 = vertex(i);
        const Vec2& a2 = vertex(i + 1);
        if (a1 == a2) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            const Vec2& b1 = vertex(j);
            const Vec2& b2 = vertex(j + 1);
            if (adjacent) {
                // Neighbours share one vertex; they may not fold back onto each other.
                const Vec2& shared = (j == i + 1) ? a2 : a1;
                const Vec2& other_a = (j == i + 1) ? a1 : a2;
                const Vec2& other_b = (j == i + 1) ? b2 : b1;
                if (orient(other_a, shared, other_b) == 0.0 && (other_a - shared).dot(other_b - shared) > 0.0)
                    return false;
                continue;
            }
            if (segments_intersect(a1, a2, b1, b2)) return false;
        }
    }
    return true;
}

bool Polygon::contains(const Vec2& x) const
{
    int winding = 0;
    for (std::size_t k = 0; k < size(); ++k) {
        const Vec2& a = vertex(k);
        const Vec2& b = vertex(k + 1);
        const double o = orient(a, b, x);
        if (o == 0.0 && on_segment(a, b, x)) return true;
        if (a.y() <= x.y()) {
            if (b.y() > x.y() && o > 0.0) ++winding;
        } else if (b.y() <= x.y() && o < 0.0) {
            --winding;
        }
    }
    return winding != 0;
}

double Polygon::distance(const Vec2& x) const
{
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size(); ++k) d = std::min(d, point_segment_distance(x, vertex(k), vertex(k + 1)));
    return d;
}

std::optional<double> Polygon::ray_hit(const Vec2& origin, const Vec2& direction) const
{
    std::optional<double> best;
    for (std::size_t k = 0; k < size(); ++k) {
        const Vec2& a = vertex(k);
        const Vec2 e = vertex(k + 1) - a;
        const double denom = cross(direction, e);
        if (denom == 0.0) continue;
        const Vec2 w = a - origin;
        const double t = cross(w, e) / denom;
        const double s = cross(w, direction) / denom;
        if (t > 0.0 && s >= 0.0 && s <= 1.0 && (!best || t < *best)) best = t;
    }
    return best;
}

std::optional<double> Polygon::segment_hit(const Vec2& a, const Vec2& b) const
{
    auto t = ray_hit(a, b - a);
    if (t && *t <= 1.0) return t;
    return std::nullopt;
}

void Polygon::bounds(Vec2& lo, Vec2& hi) const
{
    lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

std::vector<std::uint8_t> polygon_mask(const Polygon& poly, const Grid& grid)
{
    std::vector<std::uint8_t> mask(grid.size(), 0);
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) mask[grid.index(i, j)] = poly.contains(grid.node(i, j)) ? 1 : 0;
    return mask;
}

}  // namespace ots
