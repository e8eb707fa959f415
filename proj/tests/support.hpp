#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "regcore/geom.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Random points in [-extent, extent]^2, rejecting pairs closer than min_sep.
inline regcore::LandmarkSet random_set(Rng& rng, std::size_t n, double extent = 0.9, double min_sep = 1e-3)
{
    std::vector<regcore::Point2> pts;
    while (pts.size() < n) {
        const regcore::Point2 p{uniform(rng, -extent, extent), uniform(rng, -extent, extent)};
        bool ok = true;
        for (const auto& q : pts) {
            ok = ok && regcore::distance(p, q) >= min_sep;
        }
        if (ok) {
            pts.push_back(p);
        }
    }
    return regcore::LandmarkSet(std::move(pts));
}

inline regcore::LandmarkSet map_set(const regcore::TransformModel& t, const regcore::LandmarkSet& s)
{
    return regcore::apply_set(t, s);
}

} // namespace testing

#include "regcore/landmark_head.hpp"

namespace testing {

// Channels holding compactly supported, slightly irregular blobs whose
// support stays at least `margin` pixels from every border.
inline regcore::ActivationStack random_blob_stack(Rng& rng, std::size_t channels, std::size_t h, std::size_t w,
                                                  double margin)
{
    regcore::ActivationStack stack(channels, h, w);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        const double sigma = uniform(rng, 1.0, 3.0);
        const double radius = 3.0 * sigma;
        const double cx = uniform(rng, margin + radius, static_cast<double>(w) - 1.0 - margin - radius);
        const double cy = uniform(rng, margin + radius, static_cast<double>(h) - 1.0 - margin - radius);
        auto a = stack.channel(ch);
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const double dx = static_cast<double>(c) - cx;
                const double dy = static_cast<double>(r) - cy;
                const double d2 = dx * dx + dy * dy;
                if (d2 <= radius * radius) {
                    a[r * w + c] = std::exp(-d2 / (2 * sigma * sigma)) * uniform(rng, 0.5, 1.5);
                }
            }
        }
    }
    return stack;
}

// Integer shift of every channel with zero padding.
inline regcore::ActivationStack shift_stack(const regcore::ActivationStack& s, long dc, long dr)
{
    regcore::ActivationStack out(s.channels(), s.height(), s.width());
    const auto h = static_cast<long>(s.height());
    const auto w = static_cast<long>(s.width());
    for (std::size_t ch = 0; ch < s.channels(); ++ch) {
        const auto src = s.channel(ch);
        auto dst = out.channel(ch);
        for (long r = 0; r < h; ++r) {
            for (long c = 0; c < w; ++c) {
                const long tr = r + dr;
                const long tc = c + dc;
                if (tr >= 0 && tr < h && tc >= 0 && tc < w) {
                    dst[static_cast<std::size_t>(tr * w + tc)] = src[static_cast<std::size_t>(r * w + c)];
                }
            }
        }
    }
    return out;
}

} // namespace testing

#include <algorithm>
#include <limits>

#include "regcore/warp.hpp"

namespace testing {

inline regcore::SegmentationMask random_mask(Rng& rng, std::size_t h, std::size_t w, double density)
{
    regcore::SegmentationMask m(h, w);
    // A few random rectangles plus speckle gives holes, islands and edges.
    const int rects = static_cast<int>(uniform(rng, 1, 4));
    for (int k = 0; k < rects; ++k) {
        const auto r0 = static_cast<std::size_t>(uniform(rng, 0, static_cast<double>(h)));
        const auto c0 = static_cast<std::size_t>(uniform(rng, 0, static_cast<double>(w)));
        const auto r1 = std::min(h, r0 + static_cast<std::size_t>(uniform(rng, 1, static_cast<double>(h) / 2 + 1)));
        const auto c1 = std::min(w, c0 + static_cast<std::size_t>(uniform(rng, 1, static_cast<double>(w) / 2 + 1)));
        for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = c0; c < c1; ++c) {
                m.set(r, c, true);
            }
        }
    }
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (uniform(rng, 0, 1) < density) {
                m.set(r, c, !m(r, c));
            }
        }
    }
    return m;
}

inline double dice_oracle(const regcore::SegmentationMask& a, const regcore::SegmentationMask& b)
{
    double inter = 0, na = 0, nb = 0;
    for (std::size_t r = 0; r < a.height(); ++r) {
        for (std::size_t c = 0; c < a.width(); ++c) {
            inter += (a(r, c) && b(r, c)) ? 1 : 0;
            na += a(r, c) ? 1 : 0;
            nb += b(r, c) ? 1 : 0;
        }
    }
    return na + nb == 0 ? 1.0 : 2 * inter / (na + nb);
}

// Boundary by explicit 4-neighbour lookup with out-of-image as background,
// then all-pairs max-min in both directions.
inline double hausdorff_oracle(const regcore::SegmentationMask& a, const regcore::SegmentationMask& b)
{
    auto fg = [](const regcore::SegmentationMask& m, long r, long c) {
        return r >= 0 && c >= 0 && r < static_cast<long>(m.height()) && c < static_cast<long>(m.width()) &&
               m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    auto boundary = [&](const regcore::SegmentationMask& m) {
        std::vector<std::pair<long, long>> out;
        for (long r = 0; r < static_cast<long>(m.height()); ++r) {
            for (long c = 0; c < static_cast<long>(m.width()); ++c) {
                if (fg(m, r, c) && (!fg(m, r - 1, c) || !fg(m, r + 1, c) || !fg(m, r, c - 1) || !fg(m, r, c + 1))) {
                    out.emplace_back(r, c);
                }
            }
        }
        return out;
    };
    const auto ba = boundary(a);
    const auto bb = boundary(b);
    const double sr = a.spacing().row_mm;
    const double sc = a.spacing().col_mm;
    auto directed = [&](const auto& from, const auto& to) {
        double best = 0.0;
        for (const auto& p : from) {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& q : to) {
                const double dy = static_cast<double>(p.first - q.first) * sr;
                const double dx = static_cast<double>(p.second - q.second) * sc;
                m = std::min(m, std::sqrt(dx * dx + dy * dy));
            }
            best = std::max(best, m);
        }
        return best;
    };
    return std::max(directed(ba, bb), directed(bb, ba));
}

// Two-sided Student-t tail from composite Simpson integration of the density
// over [0, |t|] with 20000 panels.
inline double student_t_p_oracle(double t, double dof)
{
    const double logc = std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2) - 0.5 * std::log(dof * 3.14159265358979323846);
    auto f = [&](double x) { return std::exp(logc - (dof + 1) / 2 * std::log1p(x * x / dof)); };
    const double a = std::abs(t);
    if (a == 0.0) {
        return 1.0;
    }
    const int n = 20000;
    const double h = a / n;
    double s = f(0) + f(a);
    for (int i = 1; i < n; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    }
    const double half = s * h / 3.0;
    return std::clamp(1.0 - 2.0 * half, 0.0, 1.0);
}

} // namespace testing

#include <bit>
#include <span>

namespace testing {

// FNV-1a over the raw bytes of the values; used for golden outputs.
inline std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h = 1469598103934665603ull)
{
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFFu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

inline std::uint64_t fnv1a(std::span<const std::uint8_t> values, std::uint64_t h = 1469598103934665603ull)
{
    for (auto v : values) {
        h ^= v;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace testing
