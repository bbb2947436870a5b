#include "ots/grid.hpp"

#include "ots/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ots {

Grid::Grid(Vec2 origin, Vec2 spacing, int nx, int ny)
    : Grid(origin, spacing, nx, ny,
           std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(nx, 0)) * std::max(ny, 0), 1))
{
}

Grid::Grid(Vec2 origin, Vec2 spacing, int nx, int ny, std::vector<std::uint8_t> mask)
    : origin_(origin), spacing_(spacing), nx_(nx), ny_(ny), mask_(std::move(mask))
{
    validate();
}

Grid Grid::over_box(Vec2 lo, Vec2 hi, int nx, int ny)
{
    if (nx < 2 || ny < 2 || !(hi.x() > lo.x()) || !(hi.y() > lo.y()))
        throw Error(ErrorCode::InvalidArgument, "grid box needs >= 2 nodes per axis and positive extent");
    Vec2 spacing((hi.x() - lo.x()) / (nx - 1), (hi.y() - lo.y()) / (ny - 1));
    return Grid(lo, spacing, nx, ny);
}

void Grid::validate() const
{
    if (nx_ < 1 || ny_ < 1)
        throw Error(ErrorCode::InvalidArgument, "grid needs at least one node per axis");
    if (!(spacing_.x() > 0.0) || !(spacing_.y() > 0.0))
        throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
    if (mask_.size() != size())
        throw Error(ErrorCode::SizeMismatch, "grid mask size does not match node count");
    if (masked_count() == 0)
        throw Error(ErrorCode::EmptyInterior, "grid mask selects no node");
}

std::size_t Grid::masked_count() const noexcept
{
    return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(), [](auto m) { return m != 0; }));
}

Grid Grid::with_mask(std::vector<std::uint8_t> mask) const
{
    return Grid(origin_, spacing_, nx_, ny_, std::move(mask));
}

Grid Grid::unmasked() const
{
    return Grid(origin_, spacing_, nx_, ny_);
}

bool Grid::same_raster(const Grid& other) const noexcept
{
    return nx_ == other.nx_ && ny_ == other.ny_ && origin_ == other.origin_ && spacing_ == other.spacing_;
}

FieldSample::FieldSample(Grid g, std::vector<double> v, std::optional<double> i)
    : grid(std::move(g)), values(std::move(v)), integral(i)
{
    if (values.size() != grid.size())
        throw Error(ErrorCode::SizeMismatch, "field values do not match grid size");
}

FieldSample FieldSample::zeros(const Grid& g)
{
    return FieldSample(g, std::vector<double>(g.size(), 0.0));
}

double FieldSample::quadrature() const
{
    double sum = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (grid.inside(k)) sum += values[k];
    return sum * grid.cell_area();
}

double FieldSample::quadrature_squared() const
{
    double sum = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (grid.inside(k)) sum += values[k] * values[k];
    return sum * grid.cell_area();
}

double FieldSample::max_masked() const
{
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k)
        if (grid.inside(k)) m = std::max(m, values[k]);
    return m;
}

double FieldSample::min_masked() const
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k)
        if (grid.inside(k)) m = std::min(m, values[k]);
    return m;
}

}  // namespace ots
