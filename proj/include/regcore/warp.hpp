#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regcore/geom.hpp"

namespace regcore {

// Physical pixel size in millimetres.
struct Spacing {
    double row_mm = 1.0;
    double col_mm = 1.0;

    friend bool operator==(const Spacing&, const Spacing&) = default;
};

// Row-major H x W scalar image with physical spacing.
class ImageGrid {
public:
    ImageGrid(std::size_t height, std::size_t width, Spacing spacing = {}, double fill = 0.0);
    ImageGrid(std::size_t height, std::size_t width, Spacing spacing, std::vector<double> values);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    const Spacing& spacing() const { return spacing_; }

    double operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
    double& operator()(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool same_shape(const ImageGrid& other) const { return height_ == other.height_ && width_ == other.width_; }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    Spacing spacing_;
    std::vector<double> values_;
};

// Binary label image; stored as bytes holding 0 or 1.
class SegmentationMask {
public:
    SegmentationMask(std::size_t height, std::size_t width, Spacing spacing = {});
    SegmentationMask(std::size_t height, std::size_t width, Spacing spacing, std::vector<std::uint8_t> values);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    const Spacing& spacing() const { return spacing_; }

    bool operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col] != 0; }
    void set(std::size_t row, std::size_t col, bool v) { values_[row * width_ + col] = v ? 1 : 0; }

    std::span<const std::uint8_t> values() const { return values_; }
    std::size_t count() const;

    bool same_shape(const SegmentationMask& other) const
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const SegmentationMask&, const SegmentationMask&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    Spacing spacing_;
    std::vector<std::uint8_t> values_;
};

// Per-output-pixel source coordinate in normalized moving-image space.
struct SampleGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    Spacing spacing; // spacing of the output (target) image
    std::vector<Point2> coords;

    const Point2& operator()(std::size_t row, std::size_t col) const { return coords[row * width + col]; }
};

SampleGrid identity_grid(std::size_t height, std::size_t width, Spacing spacing = {});

// Entry (r, c) = apply(transform, pixel_to_normalized(c, r)).
SampleGrid build_sample_grid(const TransformModel& transform, std::size_t height, std::size_t width,
                             Spacing spacing = {}, unsigned threads = 1);

// Bilinear sampling with zero padding; coordinates outside [-1, 1] give 0.
ImageGrid resample_bilinear(const ImageGrid& moving, const SampleGrid& grid, unsigned threads = 1);

// Nearest-neighbour sampling; out-of-bounds pixels are background.
SegmentationMask resample_mask_nearest(const SegmentationMask& mask, const SampleGrid& grid);

// Converts an affine map expressed in centred physical millimetres (origin at
// the image centre) into the equivalent map on normalized coordinates of an
// image with the given shape and spacing.
AffineTransform physical_to_normalized(const AffineTransform& mm_map, std::size_t height, std::size_t width,
                                       Spacing spacing);

} // namespace regcore
