#include "regcore/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regcore/errors.hpp"
#include "regcore/parallel.hpp"

namespace regcore {

namespace {

void check_shape(std::size_t height, std::size_t width, Spacing spacing)
{
    if (height == 0 || width == 0) {
        throw InvalidArgument("image dimensions must be positive");
    }
    if (!(spacing.row_mm > 0.0) || !(spacing.col_mm > 0.0) || !std::isfinite(spacing.row_mm) ||
        !std::isfinite(spacing.col_mm)) {
        throw InvalidArgument("pixel spacing must be positive and finite");
    }
}

// Continuous pixel coordinates within this distance of an integer are snapped
// onto it, which keeps identity and integer-shift resampling bit-exact.
constexpr double snap_tolerance = 1e-9;

double snap(double v)
{
    const double r = std::nearbyint(v);
    return std::abs(v - r) < snap_tolerance ? r : v;
}

bool in_unit_box(Point2 p) { return p.x >= -1.0 && p.x <= 1.0 && p.y >= -1.0 && p.y <= 1.0; }

} // namespace

ImageGrid::ImageGrid(std::size_t height, std::size_t width, Spacing spacing, double fill)
    : height_(height)
    , width_(width)
    , spacing_(spacing)
{
    check_shape(height, width, spacing);
    values_.assign(height * width, fill);
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, Spacing spacing, std::vector<double> values)
    : height_(height)
    , width_(width)
    , spacing_(spacing)
    , values_(std::move(values))
{
    check_shape(height, width, spacing);
    if (values_.size() != height * width) {
        throw ShapeMismatch("image payload has " + std::to_string(values_.size()) + " values, expected " +
                            std::to_string(height * width));
    }
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("image values must be finite");
    }
}

SegmentationMask::SegmentationMask(std::size_t height, std::size_t width, Spacing spacing)
    : height_(height)
    , width_(width)
    , spacing_(spacing)
{
    check_shape(height, width, spacing);
    values_.assign(height * width, 0);
}

SegmentationMask::SegmentationMask(std::size_t height, std::size_t width, Spacing spacing,
                                   std::vector<std::uint8_t> values)
    : height_(height)
    , width_(width)
    , spacing_(spacing)
    , values_(std::move(values))
{
    check_shape(height, width, spacing);
    if (values_.size() != height * width) {
        throw ShapeMismatch("mask payload size does not match its shape");
    }
    for (auto& v : values_) {
        v = v != 0 ? 1 : 0;
    }
}

std::size_t SegmentationMask::count() const
{
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------

SampleGrid identity_grid(std::size_t height, std::size_t width, Spacing spacing)
{
    check_shape(height, width, spacing);
    SampleGrid g{height, width, spacing, {}};
    g.coords.resize(height * width);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            g.coords[r * width + c] =
                pixel_to_normalized(static_cast<double>(c), static_cast<double>(r), width, height);
        }
    }
    return g;
}

SampleGrid build_sample_grid(const TransformModel& transform, std::size_t height, std::size_t width,
                             Spacing spacing, unsigned threads)
{
    SampleGrid g = identity_grid(height, width, spacing);
    std::visit(
        [&](const auto& t) {
            parallel_for(height, threads, [&](std::size_t r) {
                for (std::size_t c = 0; c < width; ++c) {
                    auto& p = g.coords[r * width + c];
                    p = t.apply(p);
                }
            });
        },
        transform);
    return g;
}

ImageGrid resample_bilinear(const ImageGrid& moving, const SampleGrid& grid, unsigned threads)
{
    if (grid.coords.size() != grid.height * grid.width) {
        throw ShapeMismatch("sample grid is inconsistent with its shape");
    }
    ImageGrid out(grid.height, grid.width, grid.spacing);
    const auto w = static_cast<std::ptrdiff_t>(moving.width());
    const auto h = static_cast<std::ptrdiff_t>(moving.height());
    auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) -> double {
        if (r < 0 || c < 0 || r >= h || c >= w) {
            return 0.0;
        }
        return moving(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };

    parallel_for(grid.height, threads, [&](std::size_t r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            const Point2 p = grid(r, c);
            if (!in_unit_box(p)) {
                out(r, c) = 0.0;
                continue;
            }
            const Point2 px = normalized_to_pixel(p, moving.width(), moving.height());
            const double fc = snap(px.x);
            const double fr = snap(px.y);
            const double c0 = std::floor(fc);
            const double r0 = std::floor(fr);
            const double ax = fc - c0;
            const double ay = fr - r0;
            const auto ic = static_cast<std::ptrdiff_t>(c0);
            const auto ir = static_cast<std::ptrdiff_t>(r0);

            double v = (1.0 - ay) * (1.0 - ax) * at(ir, ic);
            if (ax != 0.0) {
                v += (1.0 - ay) * ax * at(ir, ic + 1);
            }
            if (ay != 0.0) {
                v += ay * (1.0 - ax) * at(ir + 1, ic);
                if (ax != 0.0) {
                    v += ay * ax * at(ir + 1, ic + 1);
                }
            }
            out(r, c) = v;
        }
    });
    return out;
}

SegmentationMask resample_mask_nearest(const SegmentationMask& mask, const SampleGrid& grid)
{
    if (grid.coords.size() != grid.height * grid.width) {
        throw ShapeMismatch("sample grid is inconsistent with its shape");
    }
    SegmentationMask out(grid.height, grid.width, grid.spacing);
    const auto w = static_cast<double>(mask.width());
    const auto h = static_cast<double>(mask.height());
    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            const Point2 p = grid(r, c);
            if (!in_unit_box(p)) {
                continue;
            }
            const Point2 px = normalized_to_pixel(p, mask.width(), mask.height());
            const double ic = std::floor(snap(px.x) + 0.5);
            const double ir = std::floor(snap(px.y) + 0.5);
            if (ic < 0.0 || ir < 0.0 || ic >= w || ir >= h) {
                continue;
            }
            out.set(r, c, mask(static_cast<std::size_t>(ir), static_cast<std::size_t>(ic)));
        }
    }
    return out;
}

AffineTransform physical_to_normalized(const AffineTransform& mm_map, std::size_t height, std::size_t width,
                                       Spacing spacing)
{
    // normalized -> mm: diag(half extents); the map is S^-1 A S.
    const double sx = 0.5 * static_cast<double>(width) * spacing.col_mm;
    const double sy = 0.5 * static_cast<double>(height) * spacing.row_mm;
    const AffineTransform::Matrix& a = mm_map.matrix();
    AffineTransform::Matrix m;
    m << a(0, 0), a(0, 1) * sy / sx, a(0, 2) / sx,
         a(1, 0) * sx / sy, a(1, 1), a(1, 2) / sy;
    return AffineTransform(m);
}

} // namespace regcore
