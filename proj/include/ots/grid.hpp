#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace ots {

using Vec2 = Eigen::Vector2d;

/// Uniform raster over an axis-aligned box. Node (i, j) sits at
/// origin + (i * spacing.x, j * spacing.y) and is stored at j * nx + i.
class Grid {
public:
    Grid() = default;

    /// All nodes masked in.
    Grid(Vec2 origin, Vec2 spacing, int nx, int ny);
    Grid(Vec2 origin, Vec2 spacing, int nx, int ny, std::vector<std::uint8_t> mask);

    /// nx x ny nodes spanning [lo, hi] inclusive on both axes.
    static Grid over_box(Vec2 lo, Vec2 hi, int nx, int ny);

    const Vec2& origin() const noexcept { return origin_; }
    const Vec2& spacing() const noexcept { return spacing_; }
    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }
    double cell_area() const noexcept { return spacing_.x() * spacing_.y(); }

    std::size_t index(int i, int j) const noexcept { return static_cast<std::size_t>(j) * nx_ + i; }
    double x(int i) const noexcept { return origin_.x() + i * spacing_.x(); }
    double y(int j) const noexcept { return origin_.y() + j * spacing_.y(); }
    Vec2 node(int i, int j) const noexcept { return {x(i), y(j)}; }
    Vec2 upper() const noexcept { return {x(nx_ - 1), y(ny_ - 1)}; }

    bool inside(std::size_t k) const noexcept { return mask_[k] != 0; }
    const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
    std::size_t masked_count() const noexcept;
    double masked_area() const noexcept { return static_cast<double>(masked_count()) * cell_area(); }

    /// Same raster, different mask. Throws if the mask is empty or mis-sized.
    Grid with_mask(std::vector<std::uint8_t> mask) const;
    Grid unmasked() const;

    bool same_raster(const Grid& other) const noexcept;

private:
    void validate() const;

    Vec2 origin_ = Vec2::Zero();
    Vec2 spacing_ = Vec2::Ones();
    int nx_ = 0;
    int ny_ = 0;
    std::vector<std::uint8_t> mask_;
};

/// Scalar values on every node of a grid. Masked-out nodes carry whatever the
/// producer wrote (usually zero) and are ignored by quadratures.
struct FieldSample {
    Grid grid;
    std::vector<double> values;
    std::optional<double> integral;

    FieldSample() = default;
    FieldSample(Grid g, std::vector<double> v, std::optional<double> i = std::nullopt);
    static FieldSample zeros(const Grid& g);

    /// Masked midpoint rule.
    double quadrature() const;
    /// Masked midpoint rule of the squared values.
    double quadrature_squared() const;

    double max_masked() const;
    double min_masked() const;
};

}  // namespace ots
