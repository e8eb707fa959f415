#include "regcore/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "regcore/errors.hpp"

namespace regcore {

ImageGrid make_template(std::span<const ImageGrid> frames)
{
    if (frames.empty()) {
        throw EmptyInput("make_template: no frames");
    }
    const ImageGrid& first = frames.front();
    std::vector<double> acc(first.size(), 0.0);
    for (const auto& f : frames) {
        if (!f.same_shape(first)) {
            throw ShapeMismatch("make_template: frames differ in shape");
        }
        const auto v = f.values();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += v[i];
        }
    }
    const double n = static_cast<double>(frames.size());
    for (auto& v : acc) {
        v /= n;
    }
    return {first.height(), first.width(), first.spacing(), std::move(acc)};
}

ImageGrid normalize_intensity(const ImageGrid& image)
{
    const auto v = image.values();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    ImageGrid out(image.height(), image.width(), image.spacing());
    if (!(range > 0.0)) {
        return out;
    }
    auto o = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        o[i] = (v[i] - lo) / range;
    }
    return out;
}

ImageGrid resize(const ImageGrid& image, std::size_t height, std::size_t width)
{
    if (height == image.height() && width == image.width()) {
        return image;
    }
    const Spacing s{image.spacing().row_mm * static_cast<double>(image.height()) / static_cast<double>(height),
                    image.spacing().col_mm * static_cast<double>(image.width()) / static_cast<double>(width)};
    return resample_bilinear(image, identity_grid(height, width, s));
}

ImageGrid resample_to_spacing(const ImageGrid& image, double target_mm)
{
    if (!(target_mm > 0.0)) {
        throw InvalidArgument("target spacing must be positive");
    }
    const double extent_r = image.spacing().row_mm * static_cast<double>(image.height());
    const double extent_c = image.spacing().col_mm * static_cast<double>(image.width());
    const auto h = static_cast<std::size_t>(std::max(1.0, std::round(extent_r / target_mm)));
    const auto w = static_cast<std::size_t>(std::max(1.0, std::round(extent_c / target_mm)));
    if (h == image.height() && w == image.width()) {
        return image;
    }
    return resize(image, h, w);
}

ImageGrid center_crop(const ImageGrid& image, std::size_t height, std::size_t width)
{
    if (height > image.height() || width > image.width()) {
        throw InvalidArgument("center_crop: crop is larger than the image");
    }
    const std::size_t r0 = (image.height() - height) / 2;
    const std::size_t c0 = (image.width() - width) / 2;
    ImageGrid out(height, width, image.spacing());
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            out(r, c) = image(r0 + r, c0 + c);
        }
    }
    return out;
}

ImageGrid preprocess(const ImageGrid& raw)
{
    const ImageGrid iso = resample_to_spacing(normalize_intensity(raw), 1.0);
    const std::size_t shorter = std::min(iso.height(), iso.width());
    const double scale = static_cast<double>(canonical_size) / static_cast<double>(shorter);
    const std::size_t h = iso.height() == shorter
                              ? canonical_size
                              : std::max(canonical_size, static_cast<std::size_t>(std::round(iso.height() * scale)));
    const std::size_t w = iso.width() == shorter
                              ? canonical_size
                              : std::max(canonical_size, static_cast<std::size_t>(std::round(iso.width() * scale)));
    ImageGrid out = center_crop(resize(iso, h, w), canonical_size, canonical_size);
    // Bilinear resampling is a convex combination, but keep the [0, 1]
    // invariant exact.
    for (auto& v : out.values()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

AugmentResult random_affine_augment(const ImageGrid& image, std::span<const SegmentationMask> masks, Philox& rng,
                                    const AugmentRanges& ranges)
{
    const double rot = rng.uniform(ranges.rotation_deg.lo, ranges.rotation_deg.hi) * std::numbers::pi / 180.0;
    const double tx = rng.uniform(ranges.translation_mm.lo, ranges.translation_mm.hi);
    const double ty = rng.uniform(ranges.translation_mm.lo, ranges.translation_mm.hi);
    const double scale = 1.0 + rng.uniform(ranges.scale.lo, ranges.scale.hi);
    const double shear = rng.uniform(ranges.shear.lo, ranges.shear.hi);

    Eigen::Matrix2d rotation;
    rotation << std::cos(rot), -std::sin(rot), std::sin(rot), std::cos(rot);
    Eigen::Matrix2d shear_m;
    shear_m << 1.0, shear, 0.0, 1.0;
    AffineTransform::Matrix mm;
    mm.leftCols<2>() = rotation * shear_m * scale;
    mm.col(2) = Eigen::Vector2d(tx, ty);

    const AffineTransform applied =
        physical_to_normalized(AffineTransform(mm), image.height(), image.width(), image.spacing());
    const SampleGrid grid = build_sample_grid(applied.inverse(), image.height(), image.width(), image.spacing());

    AugmentResult out{resample_bilinear(image, grid), {}, applied};
    out.masks.reserve(masks.size());
    for (const auto& m : masks) {
        if (m.height() != image.height() || m.width() != image.width()) {
            throw ShapeMismatch("augment: mask shape differs from the image");
        }
        out.masks.push_back(resample_mask_nearest(m, grid));
    }
    return out;
}

} // namespace regcore
