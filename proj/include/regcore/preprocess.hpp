#pragma once

#include <span>
#include <vector>

#include "regcore/geom.hpp"
#include "regcore/rng.hpp"
#include "regcore/warp.hpp"

namespace regcore {

// Pixel-wise arithmetic mean. Throws EmptyInput or ShapeMismatch.
ImageGrid make_template(std::span<const ImageGrid> frames);

// Min-max normalization to [0, 1]; a constant image maps to all zeros.
ImageGrid normalize_intensity(const ImageGrid& image);

// Resamples to the given output shape over the same physical extent.
ImageGrid resize(const ImageGrid& image, std::size_t height, std::size_t width);

// Resamples to (approximately) isotropic `target_mm` pixels.
ImageGrid resample_to_spacing(const ImageGrid& image, double target_mm);

ImageGrid center_crop(const ImageGrid& image, std::size_t height, std::size_t width);

inline constexpr std::size_t canonical_size = 224;

// Normalize to [0, 1], resample to 1 mm, scale so the shorter side spans 224
// pixels, then center-crop to 224 x 224.
ImageGrid preprocess(const ImageGrid& raw);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Parameter intervals for random affine augmentation. Translation is in mm;
// scale and shear are fractions (scale factor 1 + s, shear matrix [[1, k], [0, 1]]).
struct AugmentRanges {
    Interval rotation_deg{-30.0, 30.0};
    Interval translation_mm{-30.0, 30.0};
    Interval scale{-0.10, 0.10};
    Interval shear{-0.05, 0.05};

    static AugmentRanges none() { return {{0, 0}, {0, 0}, {0, 0}, {0, 0}}; }
};

struct AugmentResult {
    ImageGrid image;
    std::vector<SegmentationMask> masks;
    // Maps original normalized coordinates to augmented ones (content moves
    // by this transform).
    AffineTransform applied;
};

// Draws rotation, tx, ty, scale and shear (in that order) uniformly from the
// ranges and warps the image (bilinear) and masks (nearest) about the image
// centre.
AugmentResult random_affine_augment(const ImageGrid& image, std::span<const SegmentationMask> masks, Philox& rng,
                                    const AugmentRanges& ranges = {});

} // namespace regcore
