#include "regcore/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "regcore/errors.hpp"
#include "regcore/landmark_head.hpp"
#include "regcore/parallel.hpp"
#include "regcore/rng.hpp"
#include "regcore/solvers.hpp"

namespace regcore {

unsigned resolve_threads(unsigned requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("REGCORE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<unsigned>(std::min<long>(v, 1024));
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_pair(const ImageGrid& fixed, const ImageGrid& moving)
{
    if (!fixed.same_shape(moving)) {
        throw ShapeMismatch("fixed and moving images differ in shape");
    }
}

// MSE between `fixed` and `moving` shifted by whole pixels, zero padded.
double shifted_mse(const ImageGrid& fixed, const ImageGrid& moving, int dr, int dc)
{
    const auto h = static_cast<long>(fixed.height());
    const auto w = static_cast<long>(fixed.width());
    double acc = 0.0;
    for (long r = 0; r < h; ++r) {
        const long sr = r + dr;
        for (long c = 0; c < w; ++c) {
            const long sc = c + dc;
            const double m = (sr >= 0 && sr < h && sc >= 0 && sc < w) ? moving(static_cast<std::size_t>(sr),
                                                                               static_cast<std::size_t>(sc))
                                                                        : 0.0;
            const double d = fixed(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) - m;
            acc += d * d;
        }
    }
    return acc / static_cast<double>(h * w);
}

double require_number(const nlohmann::json& j, const char* key)
{
    if (!j.is_number()) {
        throw InvalidArgument(std::string("'") + key + "' must be a number");
    }
    return j.get<double>();
}

std::size_t require_count(const nlohmann::json& j, const char* key)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
        throw InvalidArgument(std::string("'") + key + "' must be a non-negative integer");
    }
    return j.get<std::size_t>();
}

} // namespace

Registration register_frame(const ImageGrid& fixed, const ImageGrid& moving, const LandmarkSet& lm_fix,
                            const LandmarkSet& lm_mov, ModelKind model, double lambda, KernelVariant kernel,
                            unsigned threads)
{
    check_pair(fixed, moving);
    if (lm_fix.size() != lm_mov.size()) {
        throw ShapeMismatch("landmark sets differ in length");
    }
    const auto start = Clock::now();
    TransformModel t = solve(model, lm_fix, lm_mov, lambda, kernel);
    SampleGrid grid = build_sample_grid(t, fixed.height(), fixed.width(), fixed.spacing(), threads);
    ImageGrid registered = resample_bilinear(moving, grid, threads);
    const double ms = elapsed_ms(start);

    RegistrationReport report;
    report.method = to_string(model);
    report.lambda = model == ModelKind::Tps ? lambda : 0.0;
    report.kernel = kernel;
    report.mse_before = mse_loss(fixed, moving);
    report.mse_after = mse_loss(fixed, registered);
    report.runtime_ms = ms;
    return {std::move(t), std::move(registered), std::move(grid), report};
}

Registration register_baseline(const ImageGrid& fixed, const ImageGrid& moving, int max_shift_px, unsigned threads)
{
    check_pair(fixed, moving);
    if (max_shift_px < 0) {
        throw InvalidArgument("baseline shift limit must be non-negative");
    }
    const auto start = Clock::now();
    int dr = 0;
    int dc = 0;
    double best = shifted_mse(fixed, moving, 0, 0);
    for (;;) {
        int next_r = dr;
        int next_c = dc;
        for (int er = -1; er <= 1; ++er) {
            for (int ec = -1; ec <= 1; ++ec) {
                const int r = dr + er;
                const int c = dc + ec;
                if ((er == 0 && ec == 0) || std::abs(r) > max_shift_px || std::abs(c) > max_shift_px) {
                    continue;
                }
                const double e = shifted_mse(fixed, moving, r, c);
                if (e < best) {
                    best = e;
                    next_r = r;
                    next_c = c;
                }
            }
        }
        if (next_r == dr && next_c == dc) {
            break;
        }
        dr = next_r;
        dc = next_c;
    }
    const Eigen::Vector2d shift(2.0 * dc / static_cast<double>(fixed.width()),
                                2.0 * dr / static_cast<double>(fixed.height()));
    TransformModel t = RigidTransform(Eigen::Matrix2d::Identity(), shift);
    SampleGrid grid = build_sample_grid(t, fixed.height(), fixed.width(), fixed.spacing(), threads);
    ImageGrid registered = resample_bilinear(moving, grid, threads);
    const double ms = elapsed_ms(start);

    RegistrationReport report;
    report.method = "baseline";
    report.mse_before = mse_loss(fixed, moving);
    report.mse_after = mse_loss(fixed, registered);
    report.runtime_ms = ms;
    return {std::move(t), std::move(registered), std::move(grid), report};
}

Method parse_method(std::string_view name)
{
    if (name == "none") {
        return Method::None;
    }
    if (name == "rigid") {
        return Method::Rigid;
    }
    if (name == "affine") {
        return Method::Affine;
    }
    if (name == "tps") {
        return Method::Tps;
    }
    if (name == "baseline") {
        return Method::Baseline;
    }
    throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

const char* to_string(Method m)
{
    switch (m) {
    case Method::None:
        return "none";
    case Method::Rigid:
        return "rigid";
    case Method::Affine:
        return "affine";
    case Method::Tps:
        return "tps";
    case Method::Baseline:
        return "baseline";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view name)
{
    if (name == "rotation_deg") {
        return SweepAxis::RotationDeg;
    }
    if (name == "translation_mm") {
        return SweepAxis::TranslationMm;
    }
    throw InvalidArgument("unknown sweep axis '" + std::string(name) + "'");
}

const char* to_string(SweepAxis axis)
{
    return axis == SweepAxis::RotationDeg ? "rotation_deg" : "translation_mm";
}

std::vector<double> SweepConfig::offsets() const
{
    if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step) || !(step > 0.0)) {
        throw InvalidArgument("sweep step must be positive and bounds finite");
    }
    if (min > max || std::abs(min + max) > 1e-9 * std::max(1.0, max)) {
        throw InvalidArgument("sweep range must be symmetric about 0");
    }
    const double n_real = (max - min) / step;
    const double n = std::round(n_real);
    if (std::abs(n - n_real) > 1e-9 * std::max(1.0, n_real) || n > 100000) {
        throw InvalidArgument("sweep range must be a whole number of steps");
    }
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(n) + 1;
    for (std::size_t k = 0; k < count; ++k) {
        double v = min + static_cast<double>(k) * step;
        if (std::abs(v) < 1e-9 * step) {
            v = 0.0;
        }
        out.push_back(v);
    }
    out.back() = max;
    return out;
}

void ExperimentConfig::validate() const
{
    if (frames == 0 || frames > 100000) {
        throw InvalidArgument("frame count must be in [1, 100000]");
    }
    if (methods.empty()) {
        throw InvalidArgument("at least one method is required");
    }
    if (lambda && (!std::isfinite(*lambda) || *lambda < 0.0)) {
        throw InvalidArgument("lambda must be finite and non-negative");
    }
    if (baseline_max_shift_px < 0) {
        throw InvalidArgument("baseline_max_shift_px must be non-negative");
    }
    (void)sweep.offsets();
}

ExperimentConfig parse_experiment_config(std::string_view json_text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("experiment config: ") + e.what());
    }
    if (!j.is_object()) {
        throw FormatError("experiment config must be a JSON object");
    }
    ExperimentConfig cfg;
    for (const auto& [key, v] : j.items()) {
        if (key == "seed") {
            if (!v.is_number_unsigned()) {
                throw InvalidArgument("'seed' must be a non-negative integer");
            }
            cfg.seed = v.get<std::uint64_t>();
        } else if (key == "frames") {
            cfg.frames = require_count(v, "frames");
        } else if (key == "model") {
            if (!v.is_string()) {
                throw InvalidArgument("'model' must be a string");
            }
            cfg.methods = {parse_method(v.get<std::string>())};
        } else if (key == "models") {
            if (!v.is_array()) {
                throw InvalidArgument("'models' must be an array of strings");
            }
            cfg.methods.clear();
            for (const auto& m : v) {
                if (!m.is_string()) {
                    throw InvalidArgument("'models' must be an array of strings");
                }
                cfg.methods.push_back(parse_method(m.get<std::string>()));
            }
        } else if (key == "lambda") {
            if (v.is_string() && v.get<std::string>() == "sample") {
                cfg.lambda.reset();
            } else {
                cfg.lambda = require_number(v, "lambda");
            }
        } else if (key == "kernel") {
            if (!v.is_string()) {
                throw InvalidArgument("'kernel' must be a string");
            }
            cfg.kernel = parse_kernel_variant(v.get<std::string>());
        } else if (key == "sweep") {
            if (!v.is_object()) {
                throw InvalidArgument("'sweep' must be an object");
            }
            for (const auto& [sk, sv] : v.items()) {
                if (sk == "axis") {
                    if (!sv.is_string()) {
                        throw InvalidArgument("'sweep.axis' must be a string");
                    }
                    cfg.sweep.axis = parse_sweep_axis(sv.get<std::string>());
                } else if (sk == "min") {
                    cfg.sweep.min = require_number(sv, "sweep.min");
                } else if (sk == "max") {
                    cfg.sweep.max = require_number(sv, "sweep.max");
                } else if (sk == "step") {
                    cfg.sweep.step = require_number(sv, "sweep.step");
                } else {
                    throw InvalidArgument("unknown key 'sweep." + sk + "'");
                }
            }
        } else if (key == "phantom") {
            if (!v.is_object()) {
                throw InvalidArgument("'phantom' must be an object");
            }
            auto& p = cfg.phantom;
            for (const auto& [pk, pv] : v.items()) {
                if (pk == "size") {
                    p.size = require_count(pv, "phantom.size");
                } else if (pk == "spacing_mm") {
                    p.spacing_mm = require_number(pv, "phantom.spacing_mm");
                } else if (pk == "organs") {
                    p.organs = require_count(pv, "phantom.organs");
                } else if (pk == "amplitude_mm") {
                    p.amplitude_mm = require_number(pv, "phantom.amplitude_mm");
                } else if (pk == "deformation") {
                    if (!pv.is_string()) {
                        throw InvalidArgument("'phantom.deformation' must be a string");
                    }
                    p.deformation = parse_deformation_kind(pv.get<std::string>());
                } else if (pk == "noise_sigma") {
                    p.noise_sigma = require_number(pv, "phantom.noise_sigma");
                } else if (pk == "landmarks") {
                    p.landmarks = require_count(pv, "phantom.landmarks");
                } else if (pk == "blob_sigma_px") {
                    p.blob_sigma_px = require_number(pv, "phantom.blob_sigma_px");
                } else {
                    throw InvalidArgument("unknown key 'phantom." + pk + "'");
                }
            }
        } else if (key == "baseline_max_shift_px") {
            if (!v.is_number_integer()) {
                throw InvalidArgument("'baseline_max_shift_px' must be an integer");
            }
            cfg.baseline_max_shift_px = v.get<int>();
        } else if (key == "record_timing") {
            if (!v.is_boolean()) {
                throw InvalidArgument("'record_timing' must be a boolean");
            }
            cfg.record_timing = v.get<bool>();
        } else {
            throw InvalidArgument("unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

std::string to_json(const ExperimentConfig& cfg)
{
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["frames"] = cfg.frames;
    auto& models = j["models"] = nlohmann::ordered_json::array();
    for (Method m : cfg.methods) {
        models.push_back(to_string(m));
    }
    if (cfg.lambda) {
        j["lambda"] = *cfg.lambda;
    } else {
        j["lambda"] = "sample";
    }
    j["kernel"] = to_string(cfg.kernel);
    j["sweep"] = {{"axis", to_string(cfg.sweep.axis)},
                  {"min", cfg.sweep.min},
                  {"max", cfg.sweep.max},
                  {"step", cfg.sweep.step}};
    const auto& p = cfg.phantom;
    j["phantom"] = {{"size", p.size},
                    {"spacing_mm", p.spacing_mm},
                    {"organs", p.organs},
                    {"amplitude_mm", p.amplitude_mm},
                    {"deformation", to_string(p.deformation)},
                    {"noise_sigma", p.noise_sigma},
                    {"landmarks", p.landmarks},
                    {"blob_sigma_px", p.blob_sigma_px}};
    j["baseline_max_shift_px"] = cfg.baseline_max_shift_px;
    j["record_timing"] = cfg.record_timing;
    return j.dump(2);
}

RigidTransform sweep_offset(SweepAxis axis, double value, const PhantomConfig& phantom)
{
    if (axis == SweepAxis::RotationDeg) {
        return RigidTransform::from_angle(value * std::numbers::pi / 180.0);
    }
    const double extent_mm = static_cast<double>(phantom.size) * phantom.spacing_mm;
    return RigidTransform(Eigen::Matrix2d::Identity(), Eigen::Vector2d(2.0 * value / extent_mm, 0.0));
}

double frame_lambda(const ExperimentConfig& cfg, std::size_t frame)
{
    if (cfg.lambda) {
        return *cfg.lambda;
    }
    Philox rng(cfg.seed, 2'000'000 + frame);
    return sample_lambda(rng);
}

std::vector<ReportRow> robustness_sweep(const ExperimentConfig& cfg, unsigned threads)
{
    cfg.validate();
    const std::vector<double> offsets = cfg.sweep.offsets();
    const Phantom phantom(cfg.phantom, cfg.seed, cfg.frames);
    const ImageGrid fixed = phantom.template_image();
    const std::vector<SegmentationMask> fixed_masks = phantom.template_masks();
    const LandmarkSet& lm_fix = phantom.template_landmarks();
    const auto labels = phantom.labels();

    const std::size_t n_methods = cfg.methods.size();
    const std::size_t n_tasks = offsets.size() * cfg.frames;
    std::vector<ReportRow> slots(n_tasks * n_methods);

    parallel_for(n_tasks, resolve_threads(threads), [&](std::size_t task) {
        const std::size_t oi = task / cfg.frames;
        const std::size_t fi = task % cfg.frames;
        const double offset = offsets[oi];
        const PhantomFrame frame =
            phantom.frame(fi, sweep_offset(cfg.sweep.axis, offset, cfg.phantom), false);
        const SegmentationMask& moving_mask = frame.masks[frame.target_organ];
        const SegmentationMask& fixed_mask = fixed_masks[frame.target_organ];

        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const Method m = cfg.methods[mi];
            SegmentationMask warped = moving_mask;
            double runtime = 0.0;
            if (m == Method::Baseline) {
                const Registration reg = register_baseline(fixed, frame.image, cfg.baseline_max_shift_px, 1);
                warped = resample_mask_nearest(moving_mask, reg.grid);
                runtime = reg.report.runtime_ms;
            } else if (m != Method::None) {
                const ModelKind kind = m == Method::Rigid    ? ModelKind::Rigid
                                       : m == Method::Affine ? ModelKind::Affine
                                                             : ModelKind::Tps;
                const Registration reg = register_frame(fixed, frame.image, lm_fix, frame.oracle_landmarks, kind,
                                                        frame_lambda(cfg, fi), cfg.kernel, 1);
                warped = resample_mask_nearest(moving_mask, reg.grid);
                runtime = reg.report.runtime_ms;
            }
            ReportRow row;
            row.offset = offset;
            row.frame_id = frame.id;
            row.organ = labels[frame.target_organ];
            row.method = to_string(m);
            row.dice = dice(warped, fixed_mask);
            row.hausdorff_mm = warped.count() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                   : hausdorff_mm(warped, fixed_mask);
            if (cfg.record_timing) {
                row.runtime_ms = runtime;
            }
            slots[(oi * n_methods + mi) * cfg.frames + fi] = std::move(row);
        }
    });
    return slots;
}

std::vector<MetricSample> samples_for(std::span<const ReportRow> rows, std::string_view method,
                                      std::optional<double> offset)
{
    std::vector<MetricSample> out;
    for (const auto& r : rows) {
        if (r.method == method && (!offset || (r.offset && *r.offset == *offset))) {
            out.push_back({r.frame_id, r.organ, r.dice, r.hausdorff_mm});
        }
    }
    return out;
}

void write_sweep_summary_csv(std::ostream& os, std::span<const ReportRow> rows, const ExperimentConfig& cfg)
{
    os << "offset,method,organ,count,dice_mean,dice_std,hausdorff_mean,hausdorff_std\n";
    for (double off : cfg.sweep.offsets()) {
        for (Method m : cfg.methods) {
            const auto samples = samples_for(rows, to_string(m), off);
            if (samples.empty()) {
                continue;
            }
            for (const auto& o : summarize(samples)) {
                os << format_number(off) << ',' << to_string(m) << ',' << o.organ << ',' << o.count << ','
                   << format_number(o.dice_mean) << ',' << format_number(o.dice_std) << ','
                   << format_number(o.hausdorff_mean) << ',' << format_number(o.hausdorff_std) << '\n';
            }
        }
    }
}

} // namespace regcore
