#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regcore/geom.hpp"
#include "regcore/metrics.hpp"
#include "regcore/phantom.hpp"
#include "regcore/warp.hpp"

namespace regcore {

struct RegistrationReport {
    std::string method;
    double lambda = 0.0;
    KernelVariant kernel = KernelVariant::StandardRLogR;
    double mse_before = 0.0;
    double mse_after = 0.0;
    double runtime_ms = 0.0;
};

struct Registration {
    // Template (fixed) coordinates -> moving coordinates; the sample grid is
    // this map evaluated at every template pixel centre.
    TransformModel transform;
    ImageGrid registered;
    SampleGrid grid;
    RegistrationReport report;
};

// Fits `model` with the template landmarks as source and the moving
// landmarks as target, then resamples the moving image onto the template
// grid. Solver errors propagate.
Registration register_frame(const ImageGrid& fixed, const ImageGrid& moving, const LandmarkSet& lm_fix,
                            const LandmarkSet& lm_mov, ModelKind model, double lambda = 0.0,
                            KernelVariant kernel = KernelVariant::StandardRLogR, unsigned threads = 1);

// Intensity-only integer translation found by greedy descent on the MSE,
// limited to +-max_shift_px in each axis. Deliberately weak: it gives the
// robustness sweeps a method that degrades with the offset.
Registration register_baseline(const ImageGrid& fixed, const ImageGrid& moving, int max_shift_px,
                               unsigned threads = 1);

enum class Method { None, Rigid, Affine, Tps, Baseline };

Method parse_method(std::string_view name);
const char* to_string(Method m);

enum class SweepAxis { RotationDeg, TranslationMm };

SweepAxis parse_sweep_axis(std::string_view name);
const char* to_string(SweepAxis axis);

struct SweepConfig {
    SweepAxis axis = SweepAxis::RotationDeg;
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;

    // min, min + step, ..., max. Throws InvalidArgument unless the range is
    // symmetric about 0, step > 0 and the range is a whole number of steps.
    std::vector<double> offsets() const;
};

struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::size_t frames = 20;
    std::vector<Method> methods{Method::Rigid};
    std::optional<double> lambda = 0.1; // empty: draw per frame with sample_lambda
    KernelVariant kernel = KernelVariant::StandardRLogR;
    SweepConfig sweep;
    PhantomConfig phantom;
    int baseline_max_shift_px = 8;
    bool record_timing = false;

    void validate() const;
};

// Parses the JSON experiment description. Unknown keys are rejected.
// Throws FormatError on malformed JSON and InvalidArgument on bad values.
ExperimentConfig parse_experiment_config(std::string_view json_text);
std::string to_json(const ExperimentConfig& cfg);

// Offset applied to the moving frames at one sweep position, in normalized
// coordinates (rotation about the image centre or a shift along x).
RigidTransform sweep_offset(SweepAxis axis, double value, const PhantomConfig& phantom);

// Lambda used for frame `frame` (fixed value, or a per-frame log-uniform draw).
double frame_lambda(const ExperimentConfig& cfg, std::size_t frame);

// One row per (offset, method, frame), ordered by offset, then method in
// configuration order, then frame. Dice and Hausdorff compare the frame's
// target organ mask, warped onto the template grid, with the template mask.
std::vector<ReportRow> robustness_sweep(const ExperimentConfig& cfg, unsigned threads = 1);

// Per-frame dice/hausdorff samples for one method and offset, as fed to summarize().
std::vector<MetricSample> samples_for(std::span<const ReportRow> rows, std::string_view method,
                                      std::optional<double> offset = std::nullopt);

// Per (offset, method, organ) means and standard deviations:
// offset,method,organ,count,dice_mean,dice_std,hausdorff_mean,hausdorff_std
void write_sweep_summary_csv(std::ostream& os, std::span<const ReportRow> rows, const ExperimentConfig& cfg);

} // namespace regcore
