#include "regcore/landmark_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regcore/errors.hpp"
#include "regcore/parallel.hpp"

namespace regcore {

namespace {

// Neumaier summation.
class CompensatedSum {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            carry_ += (sum_ - t) + v;
        } else {
            carry_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

} // namespace

ActivationStack::ActivationStack(std::size_t channels, std::size_t height, std::size_t width)
    : channels_(channels)
    , height_(height)
    , width_(width)
    , values_(channels * height * width, 0.0)
{
    if (channels == 0 || height == 0 || width == 0) {
        throw InvalidArgument("activation stack dimensions must be positive");
    }
}

ActivationStack::ActivationStack(std::size_t channels, std::size_t height, std::size_t width,
                                 std::vector<double> values)
    : channels_(channels)
    , height_(height)
    , width_(width)
    , values_(std::move(values))
{
    if (channels == 0 || height == 0 || width == 0) {
        throw InvalidArgument("activation stack dimensions must be positive");
    }
    if (values_.size() != channels * height * width) {
        throw ShapeMismatch("activation payload has " + std::to_string(values_.size()) + " values, expected " +
                            std::to_string(channels * height * width));
    }
    validate();
}

void ActivationStack::validate() const
{
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw InvalidArgument("activations must be finite and non-negative");
        }
    }
}

bool LandmarkDetection::any_degenerate() const
{
    return std::any_of(degenerate.begin(), degenerate.end(), [](std::uint8_t d) { return d != 0; });
}

LandmarkSet LandmarkDetection::landmarks() const { return LandmarkSet(points); }

LandmarkDetection center_of_mass(const ActivationStack& stack, unsigned threads)
{
    const std::size_t n = stack.channels();
    const std::size_t h = stack.height();
    const std::size_t w = stack.width();
    LandmarkDetection out;
    out.points.assign(n, Point2{});
    out.degenerate.assign(n, 0);

    parallel_for(n, threads, [&](std::size_t ch) {
        const auto a = stack.channel(ch);
        CompensatedSum mass;
        CompensatedSum sx;
        CompensatedSum sy;
        for (std::size_t r = 0; r < h; ++r) {
            const double y = 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(h) - 1.0;
            for (std::size_t c = 0; c < w; ++c) {
                const double v = a[r * w + c];
                if (v == 0.0) {
                    continue;
                }
                const double x = 2.0 * (static_cast<double>(c) + 0.5) / static_cast<double>(w) - 1.0;
                mass.add(v);
                sx.add(v * x);
                sy.add(v * y);
            }
        }
        const double m = mass.value();
        if (!(m >= mass_epsilon)) {
            out.degenerate[ch] = 1;
            return;
        }
        // A weighted mean of coordinates in [-1, 1] stays there; clamp the
        // last-ulp overshoot.
        out.points[ch] = {std::clamp(sx.value() / m, -1.0, 1.0), std::clamp(sy.value() / m, -1.0, 1.0)};
    });
    return out;
}

double mse_loss(const ImageGrid& a, const ImageGrid& b)
{
    if (!a.same_shape(b)) {
        throw ShapeMismatch("mse_loss: images differ in shape");
    }
    const auto va = a.values();
    const auto vb = b.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = va[i] - vb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(va.size());
}

} // namespace regcore
