#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regcore/geom.hpp"
#include "regcore/warp.hpp"

namespace regcore {

// N non-negative h x w activation maps, channel-major. This is the plug point
// for features exported by an external backbone.
class ActivationStack {
public:
    static constexpr std::size_t default_channels = 64;

    ActivationStack(std::size_t channels, std::size_t height, std::size_t width);
    ActivationStack(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> values);

    std::size_t channels() const { return channels_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }

    std::span<const double> channel(std::size_t n) const
    {
        return std::span<const double>(values_).subspan(n * height_ * width_, height_ * width_);
    }
    std::span<double> channel(std::size_t n)
    {
        return std::span<double>(values_).subspan(n * height_ * width_, height_ * width_);
    }
    std::span<const double> values() const { return values_; }

    // Throws InvalidArgument if any value is negative or non-finite. Mutable
    // access through channel() bypasses the constructor check.
    void validate() const;

    friend bool operator==(const ActivationStack&, const ActivationStack&) = default;

private:
    std::size_t channels_;
    std::size_t height_;
    std::size_t width_;
    std::vector<double> values_;
};

// Per-channel landmark estimates; `degenerate[i]` marks channels whose total
// mass fell below `mass_epsilon` (their point is reported as (0, 0)).
struct LandmarkDetection {
    std::vector<Point2> points;
    std::vector<std::uint8_t> degenerate;

    bool any_degenerate() const;
    std::size_t size() const { return points.size(); }

    LandmarkSet landmarks() const;
};

inline constexpr double mass_epsilon = 1e-12;

// Intensity-weighted mean pixel-center position of every channel, in
// normalized coordinates. Sums are compensated so that the result does not
// depend on summation order beyond ~1e-15.
LandmarkDetection center_of_mass(const ActivationStack& stack, unsigned threads = 1);

// Mean squared intensity difference. Throws ShapeMismatch.
double mse_loss(const ImageGrid& a, const ImageGrid& b);

} // namespace regcore
