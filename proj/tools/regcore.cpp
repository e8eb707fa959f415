// regcore: landmark-driven 2D registration from the command line.
//
// Exit codes: 0 success, 1 unexpected failure, 2 malformed or missing input,
// 3 solver degeneracy.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regcore/errors.hpp"
#include "regcore/io.hpp"
#include "regcore/landmark_head.hpp"
#include "regcore/metrics.hpp"
#include "regcore/parallel.hpp"
#include "regcore/pipeline.hpp"
#include "regcore/preprocess.hpp"
#include "regcore/rng.hpp"
#include "regcore/solvers.hpp"

namespace io = regcore::io;
using namespace regcore;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_input = 2;
constexpr int exit_degenerate = 3;

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

struct RegisterArgs {
    std::string fixed, moving;
    std::string lm_fixed, lm_moving;
    std::string act_fixed, act_moving;
    std::string model = "tps";
    double lambda = 0.0;
    std::string kernel = "standard";
    std::string out_image, out_report, out_pgm;
};

struct ConfigArgs {
    std::string config;
    std::string out;
    std::string out_summary;
};

struct MetricsArgs {
    std::string mask_a, mask_b, label, out;
    double percentile = 100.0;
};

struct TemplateArgs {
    std::vector<std::string> frames;
    std::string out;
    bool preprocess = false;
};

struct BenchArgs {
    std::size_t m = 64;
    std::size_t grid = 224;
    std::size_t iters = 50;
    std::string model = "tps";
    double lambda = 0.1;
    std::string out;
};

LandmarkSet landmarks_from(const std::string& csv, const std::string& act, unsigned threads, const char* which)
{
    if (!csv.empty()) {
        return io::read_landmarks(csv);
    }
    const LandmarkDetection det = center_of_mass(io::read_activations(act), threads);
    if (det.any_degenerate()) {
        throw DegenerateConfiguration(std::string(which) + " activations contain an all-zero channel");
    }
    return det.landmarks();
}

int cmd_register(const RegisterArgs& a, const Globals& g)
{
    const bool have_csv = !a.lm_fixed.empty() && !a.lm_moving.empty();
    const bool have_act = !a.act_fixed.empty() && !a.act_moving.empty();
    if (have_csv == have_act) {
        throw FormatError("give either --landmarks-fixed/--landmarks-moving or "
                          "--activations-fixed/--activations-moving");
    }
    const unsigned threads = resolve_threads(g.threads);
    const ImageGrid fixed = io::read_image(a.fixed);
    const ImageGrid moving = io::read_image(a.moving);
    const LandmarkSet lm_fix = landmarks_from(a.lm_fixed, a.act_fixed, threads, "fixed");
    const LandmarkSet lm_mov = landmarks_from(a.lm_moving, a.act_moving, threads, "moving");
    if (lm_fix.size() != lm_mov.size()) {
        throw FormatError("landmark counts differ (" + std::to_string(lm_fix.size()) + " vs " +
                          std::to_string(lm_mov.size()) + ")");
    }
    const Registration reg = register_frame(fixed, moving, lm_fix, lm_mov, parse_model_kind(a.model), a.lambda,
                                            parse_kernel_variant(a.kernel), threads);
    // Encode everything before the first write so a failure leaves nothing behind.
    const std::string image = io::encode_image(reg.registered);
    const std::string report = io::encode_report(reg);
    const std::string pgm = a.out_pgm.empty() ? std::string() : io::encode_pgm(reg.registered);
    io::write_file_atomic(a.out_image, image);
    io::write_file_atomic(a.out_report, report);
    if (!a.out_pgm.empty()) {
        io::write_file_atomic(a.out_pgm, pgm);
    }
    std::cout << "mse_before " << format_number(reg.report.mse_before) << "\nmse_after "
              << format_number(reg.report.mse_after) << "\n";
    return exit_ok;
}

ExperimentConfig load_config(const std::string& path, const Globals& g)
{
    ExperimentConfig cfg = parse_experiment_config(io::read_file(path));
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    return cfg;
}

int cmd_phantom(const ConfigArgs& a, const Globals& g)
{
    const ExperimentConfig cfg = load_config(a.config, g);
    const Phantom ph(cfg.phantom, cfg.seed, cfg.frames);
    const PhantomDataset ds = generate_phantom(cfg.phantom, cfg.seed, cfg.frames);
    io::write_phantom_dataset(a.out, ds, ph.labels());
    std::cout << "wrote " << cfg.frames << " frames to " << a.out << "\n";
    return exit_ok;
}

int cmd_sweep(const ConfigArgs& a, const Globals& g)
{
    const ExperimentConfig cfg = load_config(a.config, g);
    const std::vector<ReportRow> rows = robustness_sweep(cfg, resolve_threads(g.threads));
    std::ostringstream csv;
    write_report_csv(csv, rows, true);
    std::string summary;
    if (!a.out_summary.empty()) {
        std::ostringstream s;
        write_sweep_summary_csv(s, rows, cfg);
        summary = s.str();
    }
    io::write_file_atomic(a.out, csv.str());
    if (!a.out_summary.empty()) {
        io::write_file_atomic(a.out_summary, summary);
    }
    std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
    return exit_ok;
}

std::size_t label_index(const io::MaskFile& f, const std::string& label)
{
    const auto it = std::find(f.labels.begin(), f.labels.end(), label);
    if (it == f.labels.end()) {
        throw FormatError("label '" + label + "' not present in mask file");
    }
    return static_cast<std::size_t>(it - f.labels.begin());
}

int cmd_metrics(const MetricsArgs& a, const Globals&)
{
    const io::MaskFile fa = io::read_masks(a.mask_a);
    const io::MaskFile fb = io::read_masks(a.mask_b);
    std::vector<std::string> labels;
    if (!a.label.empty()) {
        labels = {a.label};
    } else {
        labels = fa.labels;
    }
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& label : labels) {
        const auto& ma = fa.masks[label_index(fa, label)];
        const auto& mb = fb.masks[label_index(fb, label)];
        nlohmann::ordered_json row;
        row["organ"] = label;
        row["dice"] = dice(ma, mb);
        if (ma.count() == 0 || mb.count() == 0) {
            row["hausdorff_mm"] = nullptr;
        } else {
            row["hausdorff_mm"] = hausdorff_mm(ma, mb, a.percentile);
        }
        out.push_back(row);
    }
    const std::string text = out.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        io::write_file_atomic(a.out, text);
    }
    return exit_ok;
}

int cmd_template(const TemplateArgs& a, const Globals&)
{
    std::vector<ImageGrid> frames;
    for (const auto& f : a.frames) {
        ImageGrid img = io::read_image(f);
        frames.push_back(a.preprocess ? regcore::preprocess(img) : std::move(img));
    }
    const ImageGrid t = make_template(frames);
    io::write_file_atomic(a.out, io::encode_image(t));
    return exit_ok;
}

double percentile_of(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

int cmd_bench(const BenchArgs& a, const Globals& g)
{
    if (a.m < 3 || a.grid < 2 || a.iters == 0) {
        throw InvalidArgument("bench needs --m >= 3, --grid >= 2, --iters >= 1");
    }
    const ModelKind kind = parse_model_kind(a.model);
    Philox rng(g.seed.value_or(42), 7);
    std::vector<Point2> fix, mov;
    for (std::size_t i = 0; i < a.m; ++i) {
        const Point2 p{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
        fix.push_back(p);
        mov.push_back({p.x + rng.uniform(-0.03, 0.03), p.y + rng.uniform(-0.03, 0.03)});
    }
    const LandmarkSet lm_fix(fix), lm_mov(mov);
    std::vector<double> pixels(a.grid * a.grid);
    for (auto& v : pixels) {
        v = rng.uniform();
    }
    const ImageGrid image(a.grid, a.grid, {}, std::move(pixels));

    const unsigned multi = std::max(2u, resolve_threads(g.threads));
    nlohmann::ordered_json report;
    report["model"] = a.model;
    report["m"] = a.m;
    report["grid"] = a.grid;
    report["iters"] = a.iters;
    for (unsigned threads : {1u, multi}) {
        std::vector<double> times;
        for (std::size_t it = 0; it < a.iters; ++it) {
            const auto start = std::chrono::steady_clock::now();
            const TransformModel t = solve(kind, lm_fix, lm_mov, a.lambda);
            const SampleGrid grid = build_sample_grid(t, a.grid, a.grid, {}, threads);
            const ImageGrid out = resample_bilinear(image, grid, threads);
            times.push_back(
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
            if (out.values().empty()) {
                return exit_failure;
            }
        }
        const double median = percentile_of(times, 50.0);
        const double p95 = percentile_of(times, 95.0);
        const std::string key = threads == 1 ? "single_thread" : "multi_thread";
        report[key] = {{"threads", threads}, {"median_ms", median}, {"p95_ms", p95}};
        std::cout << key << " threads=" << threads << " median_ms=" << format_number(median)
                  << " p95_ms=" << format_number(p95) << "\n";
    }
    const double single = report["single_thread"]["median_ms"].get<double>();
    report["cpu_budget_ms"] = 400.0;
    report["within_cpu_budget"] = single <= 400.0;
    report["aspirational_ms"] = 30.0;
    report["within_aspirational"] = single <= 30.0;
    std::cout << "cpu budget 400 ms: " << (single <= 400.0 ? "met" : "missed") << "\n"
              << "aspirational 30 ms: " << (single <= 30.0 ? "met" : "missed") << "\n";
    if (!a.out.empty()) {
        io::write_file_atomic(a.out, report.dump(2) + "\n");
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Landmark-driven 2D image registration"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for every random draw (overrides config files)");
    app.add_option("--threads", g.threads, "Worker threads (default: REGCORE_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    RegisterArgs ra;
    auto* reg = app.add_subcommand("register", "Register a moving image onto a template");
    reg->add_option("--template", ra.fixed, "Template (fixed) image")->required();
    reg->add_option("--moving", ra.moving, "Moving image")->required();
    reg->add_option("--landmarks-fixed", ra.lm_fixed, "Template landmarks CSV");
    reg->add_option("--landmarks-moving", ra.lm_moving, "Moving landmarks CSV");
    reg->add_option("--activations-fixed", ra.act_fixed, "Template activation stack");
    reg->add_option("--activations-moving", ra.act_moving, "Moving activation stack");
    reg->add_option("--model", ra.model, "rigid | affine | tps")->check(CLI::IsMember({"rigid", "affine", "tps"}));
    reg->add_option("--lambda", ra.lambda, "TPS regularization")->check(CLI::NonNegativeNumber);
    reg->add_option("--kernel", ra.kernel, "standard | paper")->check(CLI::IsMember({"standard", "paper"}));
    reg->add_option("--out-image", ra.out_image, "Registered image")->required();
    reg->add_option("--out-report", ra.out_report, "JSON report")->required();
    reg->add_option("--out-pgm", ra.out_pgm, "Optional 8-bit preview");

    ConfigArgs pa;
    auto* phantom = app.add_subcommand("phantom", "Write a synthetic phantom dataset");
    phantom->add_option("--config", pa.config, "Experiment config JSON")->required();
    phantom->add_option("--out-dir", pa.out, "Output directory")->required();

    ConfigArgs sa;
    auto* sweep = app.add_subcommand("sweep", "Run a robustness sweep on the phantom");
    sweep->add_option("--config", sa.config, "Experiment config JSON")->required();
    sweep->add_option("--out-csv", sa.out, "Per-row report CSV")->required();
    sweep->add_option("--out-summary", sa.out_summary, "Per-offset organ summary CSV");

    MetricsArgs ma;
    auto* metrics = app.add_subcommand("metrics", "Dice and Hausdorff between two mask files");
    metrics->add_option("--mask-a", ma.mask_a)->required();
    metrics->add_option("--mask-b", ma.mask_b)->required();
    metrics->add_option("--label", ma.label, "Compare one label only");
    metrics->add_option("--percentile", ma.percentile, "Hausdorff percentile (100 = max)")
        ->check(CLI::Range(0.0, 100.0));
    metrics->add_option("--out", ma.out, "JSON output (default stdout)");

    TemplateArgs ta;
    auto* tmpl = app.add_subcommand("template", "Average frames into a template");
    tmpl->add_option("--frames", ta.frames, "Input images")->required();
    tmpl->add_option("--out", ta.out, "Output image")->required();
    tmpl->add_flag("--preprocess", ta.preprocess, "Normalize and resample each frame to 224 x 224 at 1 mm first");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Time fit + warp cycles");
    bench->add_option("--m", ba.m, "Landmark pairs");
    bench->add_option("--grid", ba.grid, "Image side in pixels");
    bench->add_option("--iters", ba.iters, "Timed iterations");
    bench->add_option("--model", ba.model, "rigid | affine | tps")->check(CLI::IsMember({"rigid", "affine", "tps"}));
    bench->add_option("--lambda", ba.lambda, "TPS regularization")->check(CLI::NonNegativeNumber);
    bench->add_option("--out", ba.out, "JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }
    if (*seed_opt) {
        g.seed = seed;
    }

    try {
        if (*reg) {
            return cmd_register(ra, g);
        }
        if (*phantom) {
            return cmd_phantom(pa, g);
        }
        if (*sweep) {
            return cmd_sweep(sa, g);
        }
        if (*metrics) {
            return cmd_metrics(ma, g);
        }
        if (*tmpl) {
            return cmd_template(ta, g);
        }
        if (*bench) {
            return cmd_bench(ba, g);
        }
    } catch (const DegenerateConfiguration& e) {
        std::cerr << "error: degenerate configuration: " << e.what() << "\n";
        return exit_degenerate;
    } catch (const SingularSystem& e) {
        std::cerr << "error: singular system: " << e.what() << "\n";
        return exit_degenerate;
    } catch (const DegenerateSample& e) {
        std::cerr << "error: degenerate sample: " << e.what() << "\n";
        return exit_degenerate;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_failure;
}
