#include "regcore/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <boost/math/special_functions/beta.hpp>

#include "regcore/errors.hpp"

namespace regcore {

namespace {

void require_same_shape(const SegmentationMask& a, const SegmentationMask& b, const char* what)
{
    if (!a.same_shape(b)) {
        throw ShapeMismatch(std::string(what) + ": masks differ in shape");
    }
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& v)
{
    MeanStd out;
    out.n = v.size();
    if (v.empty()) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.std = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    out.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - out.mean) * (x - out.mean);
        }
        out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

} // namespace

double dice(const SegmentationMask& a, const SegmentationMask& b)
{
    require_same_shape(a, b, "dice");
    const auto va = a.values();
    const auto vb = b.values();
    std::size_t inter = 0;
    std::size_t na = 0;
    std::size_t nb = 0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        na += va[i];
        nb += vb[i];
        inter += va[i] & vb[i];
    }
    if (na + nb == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

std::vector<std::pair<std::size_t, std::size_t>> boundary_pixels(const SegmentationMask& mask)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t h = mask.height();
    const std::size_t w = mask.width();
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (!mask(r, c)) {
                continue;
            }
            const bool edge = r == 0 || c == 0 || r + 1 == h || c + 1 == w || !mask(r - 1, c) || !mask(r + 1, c) ||
                              !mask(r, c - 1) || !mask(r, c + 1);
            if (edge) {
                out.emplace_back(r, c);
            }
        }
    }
    return out;
}

namespace {

using PixelList = std::vector<std::pair<std::size_t, std::size_t>>;

double pixel_distance2(std::pair<std::size_t, std::size_t> p, std::pair<std::size_t, std::size_t> q,
                       const Spacing& s)
{
    const double dy = (static_cast<double>(p.first) - static_cast<double>(q.first)) * s.row_mm;
    const double dx = (static_cast<double>(p.second) - static_cast<double>(q.second)) * s.col_mm;
    return dx * dx + dy * dy;
}

// Directed max-min with early break: once a point's running minimum drops
// below the current maximum it cannot raise the result.
double directed_max(const PixelList& from, const PixelList& to, const Spacing& s)
{
    double cmax = 0.0;
    for (const auto& p : from) {
        double cmin = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            const double d = pixel_distance2(p, q, s);
            if (d < cmin) {
                cmin = d;
                if (cmin <= cmax) {
                    break;
                }
            }
        }
        cmax = std::max(cmax, cmin);
    }
    return cmax;
}

void directed_all(const PixelList& from, const PixelList& to, const Spacing& s, std::vector<double>& out)
{
    for (const auto& p : from) {
        double cmin = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            cmin = std::min(cmin, pixel_distance2(p, q, s));
        }
        out.push_back(cmin);
    }
}

} // namespace

double hausdorff_mm(const SegmentationMask& a, const SegmentationMask& b, double percentile)
{
    require_same_shape(a, b, "hausdorff");
    if (!(a.spacing() == b.spacing())) {
        throw ShapeMismatch("hausdorff: masks differ in spacing");
    }
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw InvalidArgument("hausdorff percentile must lie in (0, 100]");
    }
    const PixelList ba = boundary_pixels(a);
    const PixelList bb = boundary_pixels(b);
    if (ba.empty() || bb.empty()) {
        throw EmptyMask("hausdorff: a mask has no foreground");
    }
    const Spacing& s = a.spacing();
    if (percentile == 100.0) {
        return std::sqrt(std::max(directed_max(ba, bb, s), directed_max(bb, ba, s)));
    }
    std::vector<double> d;
    d.reserve(ba.size() + bb.size());
    directed_all(ba, bb, s, d);
    directed_all(bb, ba, s, d);
    std::sort(d.begin(), d.end());
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(d.size())));
    return std::sqrt(d[std::max<std::size_t>(rank, 1) - 1]);
}

double student_t_two_sided_p(double t, double dof)
{
    if (!(dof > 0.0)) {
        throw InvalidArgument("degrees of freedom must be positive");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    const double x = dof / (dof + t * t);
    return boost::math::ibeta(0.5 * dof, 0.5, x);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw InvalidArgument("paired t-test needs samples of equal length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw DegenerateSample("paired t-test needs at least two pairs");
    }
    std::vector<double> d(n);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = a[i] - b[i];
        max_abs = std::max(max_abs, std::abs(d[i]));
    }
    TTestResult out;
    out.dof = n - 1;
    if (max_abs == 0.0) {
        return out; // no difference at all: t = 0, p = 1
    }
    const MeanStd ms = mean_std(d);
    if (!(ms.std > 1e-14 * max_abs)) {
        throw DegenerateSample("paired t-test: differences have zero variance");
    }
    out.t_statistic = ms.mean / (ms.std / std::sqrt(static_cast<double>(n)));
    out.p_value = student_t_two_sided_p(out.t_statistic, static_cast<double>(out.dof));
    return out;
}

std::vector<OrganSummary> summarize(std::span<const MetricSample> samples)
{
    if (samples.empty()) {
        throw EmptyInput("summarize: no samples");
    }
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& s : samples) {
        auto& g = groups[s.organ];
        g.first.push_back(s.dice);
        if (std::isfinite(s.hausdorff_mm)) {
            g.second.push_back(s.hausdorff_mm);
        }
    }
    std::vector<OrganSummary> out;
    for (const auto& [organ, g] : groups) {
        const MeanStd d = mean_std(g.first);
        const MeanStd hd = mean_std(g.second);
        out.push_back({organ, d.n, d.mean, d.std, hd.mean, hd.std});
    }
    return out;
}

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_report_csv(std::ostream& os, std::span<const ReportRow> rows, bool with_offset)
{
    if (with_offset) {
        os << "offset,";
    }
    os << "frame_id,organ,method,dice,hausdorff_mm,runtime_ms\n";
    for (const auto& r : rows) {
        if (with_offset) {
            os << (r.offset ? format_number(*r.offset) : std::string()) << ',';
        }
        os << r.frame_id << ',' << r.organ << ',' << r.method << ',' << format_number(r.dice) << ','
           << format_number(r.hausdorff_mm) << ',' << (r.runtime_ms ? format_number(*r.runtime_ms) : std::string())
           << '\n';
    }
}

void write_summary_csv(std::ostream& os, std::span<const OrganSummary> rows)
{
    os << "organ,n,dice_mean,dice_std,hausdorff_mean,hausdorff_std\n";
    for (const auto& r : rows) {
        os << r.organ << ',' << r.count << ',' << format_number(r.dice_mean) << ',' << format_number(r.dice_std)
           << ',' << format_number(r.hausdorff_mean) << ',' << format_number(r.hausdorff_std) << '\n';
    }
}

} // namespace regcore
