#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regcore/warp.hpp"

namespace regcore {

// 2|A n B| / (|A| + |B|); two empty masks score 1.0. Throws ShapeMismatch.
double dice(const SegmentationMask& a, const SegmentationMask& b);

// Pixel-center positions of foreground pixels with at least one background
// 4-neighbour (outside the image counts as background).
std::vector<std::pair<std::size_t, std::size_t>> boundary_pixels(const SegmentationMask& mask);

// Symmetric Hausdorff distance between the boundary sets, in millimetres.
// percentile = 100 gives the classical max; lower values (e.g. 95) take that
// percentile of the pooled directed nearest-boundary distances instead.
// Throws EmptyMask if either mask has no foreground, ShapeMismatch if the
// shapes or spacings differ.
double hausdorff_mm(const SegmentationMask& a, const SegmentationMask& b, double percentile = 100.0);

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};

// Two-sided paired t-test on d = a - b with n - 1 degrees of freedom.
// All-zero differences give t = 0, p = 1. Throws DegenerateSample for n < 2 or
// for constant non-zero differences.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Two-sided tail probability P(|T| >= |t|) of Student's t with `dof` degrees
// of freedom, via the regularized incomplete beta function.
double student_t_two_sided_p(double t, double dof);

struct MetricSample {
    int frame_id = 0;
    std::string organ;
    double dice = 0.0;
    double hausdorff_mm = 0.0; // NaN when undefined (empty mask)
};

struct OrganSummary {
    std::string organ;
    std::size_t count = 0;
    double dice_mean = 0.0;
    double dice_std = 0.0;
    double hausdorff_mean = 0.0;
    double hausdorff_std = 0.0;
};

// Mean and sample standard deviation (n - 1) per organ, sorted by organ name.
// Single-sample groups report std = 0. Non-finite Hausdorff values are
// excluded from the Hausdorff columns.
std::vector<OrganSummary> summarize(std::span<const MetricSample> samples);

// One line of the metrics report CSV:
// [offset,]frame_id,organ,method,dice,hausdorff_mm,runtime_ms
struct ReportRow {
    std::optional<double> offset;
    int frame_id = 0;
    std::string organ;
    std::string method;
    double dice = 0.0;
    double hausdorff_mm = 0.0;
    std::optional<double> runtime_ms; // written as an empty field when absent
};

void write_report_csv(std::ostream& os, std::span<const ReportRow> rows, bool with_offset);
void write_summary_csv(std::ostream& os, std::span<const OrganSummary> rows);

// Shortest decimal text for a double that parses back to the same value.
std::string format_number(double v);

} // namespace regcore
