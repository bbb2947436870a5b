#pragma once

#include "ots/grid.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ots {

/// Closed polygon; the last vertex connects back to the first.
struct Polygon {
    std::vector<Vec2> vertices;

    std::size_t size() const noexcept { return vertices.size(); }
    const Vec2& vertex(std::size_t k) const { return vertices[k % vertices.size()]; }

    /// Positive for counter-clockwise orientation.
    double signed_area() const;
    Vec2 centroid() const;
    bool is_simple() const;

    /// Winding-number test; points on the boundary count as inside.
    bool contains(const Vec2& x) const;
    double distance(const Vec2& x) const;

    /// Smallest t > 0 with origin + t * direction on the boundary.
    std::optional<double> ray_hit(const Vec2& origin, const Vec2& direction) const;
    /// Smallest t in (0, 1] with a + t (b - a) on the boundary.
    std::optional<double> segment_hit(const Vec2& a, const Vec2& b) const;

    void bounds(Vec2& lo, Vec2& hi) const;
};

double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b);

/// Closed-segment intersection test (touching counts).
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

/// 1 for nodes inside (or on) the polygon.
std::vector<std::uint8_t> polygon_mask(const Polygon& poly, const Grid& grid);

}  // namespace ots
