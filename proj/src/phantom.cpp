#include "regcore/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "regcore/errors.hpp"
#include "regcore/rng.hpp"
#include "regcore/solvers.hpp"

namespace regcore {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

struct OrganPreset {
    const char* label;
    double cx, cy, sx, sy, angle_deg, intensity;
};

// Layout keeps the structures apart and well inside the field of view.
constexpr OrganPreset organ_presets[] = {
    {"liver", -0.28, -0.12, 0.30, 0.22, 20.0, 0.75},
    {"kidney", 0.34, 0.20, 0.13, 0.19, -15.0, 0.55},
    {"pancreas", 0.12, -0.36, 0.22, 0.09, 10.0, 0.90},
    {"lung", -0.18, 0.42, 0.20, 0.12, 0.0, 0.10},
};

constexpr double body_semi_x = 0.90;
constexpr double body_semi_y = 0.80;

// Smooth inside-indicator across an outline, about `width` normalized units wide.
double soft_inside(double radius, double semi_min, double width)
{
    return 0.5 * (1.0 + std::tanh((1.0 - radius) * semi_min / width));
}

std::vector<Organ> make_organs(const PhantomConfig& cfg, std::uint64_t seed)
{
    if (cfg.organs < 2 || cfg.organs > 4) {
        throw InvalidArgument("phantom organ count must be between 2 and 4");
    }
    Philox rng(seed, 0);
    std::vector<Organ> organs;
    for (std::size_t k = 0; k < cfg.organs; ++k) {
        const auto& p = organ_presets[k];
        Organ o;
        o.label = p.label;
        o.center = {p.cx + rng.uniform(-0.02, 0.02), p.cy + rng.uniform(-0.02, 0.02)};
        o.semi_x = p.sx * rng.uniform(0.9, 1.1);
        o.semi_y = p.sy * rng.uniform(0.9, 1.1);
        o.angle = (p.angle_deg + rng.uniform(-5.0, 5.0)) * deg;
        o.intensity = p.intensity;
        organs.push_back(o);
    }
    return organs;
}

Point2 on_outline(const Organ& o, double theta)
{
    const double u = o.semi_x * std::cos(theta);
    const double v = o.semi_y * std::sin(theta);
    const double c = std::cos(o.angle);
    const double s = std::sin(o.angle);
    return {o.center.x + c * u - s * v, o.center.y + s * u + c * v};
}

// Organ centres and outline points first, then a Vogel spiral fills the
// remaining sites while keeping a minimum separation.
LandmarkSet make_sites(const std::vector<Organ>& organs, std::size_t count)
{
    if (count < LandmarkSet::min_size) {
        throw InvalidArgument("phantom needs at least 3 landmarks");
    }
    std::vector<Point2> sites;
    for (const auto& o : organs) {
        sites.push_back(o.center);
        for (int j = 0; j < 6; ++j) {
            sites.push_back(on_outline(o, 0.3 + 2.0 * std::numbers::pi * j / 6.0));
        }
    }
    if (sites.size() > count) {
        sites.resize(count);
    }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    double min_sep = 0.06;
    while (sites.size() < count) {
        const std::size_t k_max = 4 * count;
        for (std::size_t k = 0; k < k_max && sites.size() < count; ++k) {
            const double r = 0.62 * std::sqrt((static_cast<double>(k) + 0.5) / static_cast<double>(k_max));
            const double th = static_cast<double>(k) * golden;
            const Point2 cand{r * std::cos(th), r * std::sin(th)};
            const bool clear = std::all_of(sites.begin(), sites.end(),
                                           [&](Point2 s) { return distance(s, cand) >= min_sep; });
            if (clear) {
                sites.push_back(cand);
            }
        }
        min_sep *= 0.7;
    }
    return LandmarkSet(std::move(sites));
}

TransformModel identity_of(DeformationKind kind)
{
    switch (kind) {
    case DeformationKind::Rigid:
        return RigidTransform{};
    case DeformationKind::Affine:
        return AffineTransform{};
    case DeformationKind::Tps:
        break;
    }
    LandmarkSet ctrl({{-0.5, -0.5}, {0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}});
    return TpsTransform(AffineTransform::Matrix::Identity(), Eigen::MatrixX2d::Zero(4, 2), ctrl, 0.0);
}

} // namespace

DeformationKind parse_deformation_kind(std::string_view name)
{
    if (name == "rigid") {
        return DeformationKind::Rigid;
    }
    if (name == "affine") {
        return DeformationKind::Affine;
    }
    if (name == "tps") {
        return DeformationKind::Tps;
    }
    throw InvalidArgument("unknown deformation kind '" + std::string(name) + "'");
}

const char* to_string(DeformationKind kind)
{
    switch (kind) {
    case DeformationKind::Rigid:
        return "rigid";
    case DeformationKind::Affine:
        return "affine";
    case DeformationKind::Tps:
        return "tps";
    }
    return "?";
}

double Organ::radius(Point2 p) const
{
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double u = (c * dx + s * dy) / semi_x;
    const double v = (-s * dx + c * dy) / semi_y;
    return std::sqrt(u * u + v * v);
}

TransformModel precompose_rigid(const TransformModel& f, const RigidTransform& g)
{
    const AffineTransform ga = AffineTransform::from_rigid(g);
    return std::visit(
        [&](const auto& t) -> TransformModel {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, RigidTransform>) {
                return RigidTransform(t.rotation() * g.rotation(), t.rotation() * g.translation() + t.translation());
            } else if constexpr (std::is_same_v<T, AffineTransform>) {
                return t.compose(ga);
            } else {
                // |c - g(q)| = |g^-1(c) - q| for an isometry.
                const RigidTransform gi = g.inverse();
                std::vector<Point2> ctrl;
                for (const auto& c : t.control_points()) {
                    ctrl.push_back(gi.apply(c));
                }
                const AffineTransform b = AffineTransform(t.affine_part()).compose(ga);
                return TpsTransform(b.matrix(), t.weights(), LandmarkSet(std::move(ctrl)), t.lambda(), t.kernel());
            }
        },
        f);
}

Phantom::Phantom(const PhantomConfig& config, std::uint64_t seed, std::size_t frame_count)
    : config_(config)
    , seed_(seed)
    , organs_(make_organs(config, seed))
    , sites_(make_sites(organs_, config.landmarks))
{
    if (config_.size < 16 || !(config_.spacing_mm > 0.0) || !(config_.amplitude_mm >= 0.0) ||
        !(config_.noise_sigma >= 0.0) || !(config_.blob_sigma_px > 0.0)) {
        throw InvalidArgument("invalid phantom configuration");
    }
    Philox rng(seed, 0);
    for (int i = 0; i < 64; ++i) {
        rng(); // skip the draws used for the organ layout
    }
    for (auto& ph : background_phase_) {
        ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    ground_truth_.reserve(frame_count);
    for (std::size_t i = 0; i < frame_count; ++i) {
        ground_truth_.push_back(draw_ground_truth(i));
    }
}

std::vector<std::string> Phantom::labels() const
{
    std::vector<std::string> out;
    for (const auto& o : organs_) {
        out.push_back(o.label);
    }
    return out;
}

TransformModel Phantom::draw_ground_truth(std::size_t frame) const
{
    const double a = config_.amplitude_mm;
    if (a == 0.0) {
        return identity_of(config_.deformation);
    }
    const double mm = 2.0 / (static_cast<double>(config_.size) * config_.spacing_mm);
    Philox rng(seed_, 1 + frame);

    const double angle = rng.uniform(-0.5 * a, 0.5 * a) * deg;
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double mag = rng.uniform(0.6 * a, a) * mm;
    const Eigen::Vector2d t(mag * std::cos(dir), mag * std::sin(dir));
    const RigidTransform rigid = RigidTransform::from_angle(angle, t);
    if (config_.deformation == DeformationKind::Rigid) {
        return rigid;
    }

    Eigen::Matrix2d e;
    for (int k = 0; k < 4; ++k) {
        e(k / 2, k % 2) = rng.uniform(-a / 150.0, a / 150.0);
    }
    AffineTransform::Matrix m;
    m.leftCols<2>() = rigid.rotation() * (Eigen::Matrix2d::Identity() + e);
    m.col(2) = t;
    const AffineTransform affine(m);
    if (config_.deformation == DeformationKind::Affine) {
        return affine;
    }

    std::vector<Point2> ctrl;
    std::vector<Point2> target;
    for (double y : {-0.5, 0.0, 0.5}) {
        for (double x : {-0.5, 0.0, 0.5}) {
            ctrl.push_back({x, y});
            const Point2 d{rng.uniform(-0.5 * a, 0.5 * a) * mm, rng.uniform(-0.5 * a, 0.5 * a) * mm};
            target.push_back(affine.apply({x, y}) + d);
        }
    }
    for (double y : {-1.1, 1.1}) {
        for (double x : {-1.1, 1.1}) {
            ctrl.push_back({x, y});
            target.push_back(affine.apply({x, y}));
        }
    }
    return solve_tps(LandmarkSet(std::move(ctrl)), LandmarkSet(std::move(target)), 0.0);
}

double Phantom::intensity(Point2 p) const
{
    const double bx = p.x / body_semi_x;
    const double by = p.y / body_semi_y;
    const double body_r = std::sqrt(bx * bx + by * by);
    const double edge = 1.0 / static_cast<double>(config_.size); // about half a pixel
    const double body = soft_inside(body_r, body_semi_y, edge);
    if (body < 1e-300) {
        return 0.0;
    }
    const auto& ph = background_phase_;
    double v = 0.30 + 0.06 * std::cos(2.1 * p.x + ph[0]) * std::cos(1.7 * p.y + ph[1]) +
               0.04 * std::cos(3.3 * p.x + 2.2 * p.y + ph[2]) + 0.03 * std::sin(1.3 * p.x - 2.9 * p.y + ph[3]);
    for (const auto& o : organs_) {
        const double ind = soft_inside(o.radius(p), std::min(o.semi_x, o.semi_y), edge);
        v = v * (1.0 - ind) + o.intensity * ind;
    }
    return body * v;
}

ImageGrid Phantom::render(const TransformModel& frame_to_template, std::uint64_t noise_stream) const
{
    const std::size_t n = config_.size;
    ImageGrid img(n, n, spacing());
    const SampleGrid grid = build_sample_grid(frame_to_template, n, n, spacing());
    for (std::size_t i = 0; i < grid.coords.size(); ++i) {
        img.values()[i] = intensity(grid.coords[i]);
    }
    if (config_.noise_sigma > 0.0) {
        Philox rng(seed_, noise_stream);
        for (auto& v : img.values()) {
            v += config_.noise_sigma * rng.normal();
        }
    }
    return img;
}

std::vector<SegmentationMask> Phantom::render_masks(const TransformModel& frame_to_template) const
{
    const std::size_t n = config_.size;
    const SampleGrid grid = build_sample_grid(frame_to_template, n, n, spacing());
    std::vector<SegmentationMask> masks;
    for (const auto& o : organs_) {
        SegmentationMask m(n, n, spacing());
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                m.set(r, c, o.radius(grid(r, c)) <= 1.0);
            }
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

ImageGrid Phantom::template_image() const { return render(RigidTransform{}, 0); }

std::vector<SegmentationMask> Phantom::template_masks() const { return render_masks(RigidTransform{}); }

ActivationStack Phantom::activations(const LandmarkSet& landmarks) const
{
    const std::size_t n = config_.size;
    ActivationStack stack(landmarks.size(), n, n);
    const double inv2s2 = 1.0 / (2.0 * config_.blob_sigma_px * config_.blob_sigma_px);
    for (std::size_t ch = 0; ch < landmarks.size(); ++ch) {
        const Point2 centre = normalized_to_pixel(landmarks[ch], n, n);
        auto a = stack.channel(ch);
        for (std::size_t r = 0; r < n; ++r) {
            const double dy = static_cast<double>(r) - centre.y;
            for (std::size_t c = 0; c < n; ++c) {
                const double dx = static_cast<double>(c) - centre.x;
                a[r * n + c] = std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
        }
    }
    return stack;
}

Point2 Phantom::invert_point(const TransformModel& t, Point2 target)
{
    Point2 q = target;
    constexpr double h = 1e-6;
    for (int it = 0; it < 60; ++it) {
        const Point2 f = apply(t, q);
        const Eigen::Vector2d r(f.x - target.x, f.y - target.y);
        if (r.norm() < 1e-15) {
            return q;
        }
        const Point2 fx1 = apply(t, {q.x + h, q.y});
        const Point2 fx0 = apply(t, {q.x - h, q.y});
        const Point2 fy1 = apply(t, {q.x, q.y + h});
        const Point2 fy0 = apply(t, {q.x, q.y - h});
        Eigen::Matrix2d j;
        j << (fx1.x - fx0.x) / (2 * h), (fy1.x - fy0.x) / (2 * h), (fx1.y - fx0.y) / (2 * h),
            (fy1.y - fy0.y) / (2 * h);
        const Eigen::Vector2d step = j.partialPivLu().solve(r);
        q = {q.x - step(0), q.y - step(1)};
    }
    const Point2 f = apply(t, q);
    if (distance(f, target) > 1e-12) {
        throw DegenerateConfiguration("phantom: ground-truth transform inversion did not converge");
    }
    return q;
}

PhantomFrame Phantom::frame(std::size_t index, const std::optional<RigidTransform>& offset,
                            bool with_activations) const
{
    const TransformModel& gt = ground_truth(index);
    std::vector<Point2> lm;
    lm.reserve(sites_.size());
    for (const auto& s : sites_) {
        const Point2 m = invert_point(gt, s);
        lm.push_back(offset ? offset->apply(m) : m);
    }
    const TransformModel frame_gt = offset ? precompose_rigid(gt, offset->inverse()) : gt;

    PhantomFrame f{static_cast<int>(index),
                   render(frame_gt, 1'000'000 + index),
                   render_masks(frame_gt),
                   index % organs_.size(),
                   LandmarkSet(std::move(lm)),
                   std::nullopt,
                   frame_gt};
    if (with_activations) {
        f.oracle_activations = activations(f.oracle_landmarks);
    }
    return f;
}

PhantomDataset generate_phantom(const PhantomConfig& config, std::uint64_t seed, std::size_t frame_count)
{
    const Phantom ph(config, seed, frame_count);
    PhantomDataset ds{ph.template_image(), ph.template_masks(), ph.template_landmarks(),
                      ph.activations(ph.template_landmarks()), {}};
    ds.frames.reserve(frame_count);
    for (std::size_t i = 0; i < frame_count; ++i) {
        ds.frames.push_back(ph.frame(i, std::nullopt, true));
    }
    return ds;
}

} // namespace regcore
