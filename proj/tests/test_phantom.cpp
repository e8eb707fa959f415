#include <doctest.h>

#include <fstream>
#include <sstream>

#include "regcore/errors.hpp"
#include "regcore/phantom.hpp"
#include "regcore/solvers.hpp"
#include "support.hpp"

using namespace regcore;

namespace {

PhantomConfig small_config()
{
    PhantomConfig cfg;
    cfg.size = 96;
    return cfg;
}

std::string hex(std::uint64_t h)
{
    std::ostringstream s;
    s << std::hex << h;
    return s.str();
}

std::string read_golden(const char* name)
{
    std::ifstream in(std::string(REGCORE_TEST_DATA) + "/" + name);
    std::string s;
    in >> s;
    return s;
}

} // namespace

TEST_CASE("phantom configuration is validated")
{
    PhantomConfig cfg;
    cfg.organs = 5;
    CHECK_THROWS_AS(Phantom(cfg, 1, 1), InvalidArgument);
    cfg = PhantomConfig{};
    cfg.landmarks = 2;
    CHECK_THROWS_AS(Phantom(cfg, 1, 1), InvalidArgument);
    cfg = PhantomConfig{};
    cfg.amplitude_mm = -1;
    CHECK_THROWS_AS(Phantom(cfg, 1, 1), InvalidArgument);
    CHECK(parse_deformation_kind("affine") == DeformationKind::Affine);
    CHECK_THROWS_AS(parse_deformation_kind("bspline"), InvalidArgument);
}

TEST_CASE("phantom layout: organs, labels and 64 distinct sites")
{
    const Phantom ph(PhantomConfig{}, 42, 4);
    CHECK(ph.labels() == std::vector<std::string>{"liver", "kidney", "pancreas"});
    const LandmarkSet& s = ph.template_landmarks();
    REQUIRE(s.size() == 64);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s[i].x) < 0.7);
        CHECK(std::abs(s[i].y) < 0.7);
        for (std::size_t j = 0; j < i; ++j) {
            CHECK(distance(s[i], s[j]) > 0.01);
        }
    }
    const auto masks = ph.template_masks();
    REQUIRE(masks.size() == 3);
    for (const auto& m : masks) {
        CHECK(m.count() > 100);
    }
    const ImageGrid t = ph.template_image();
    CHECK(t.height() == 224);
    CHECK(t(0, 0) == 0.0);
}

TEST_CASE("zero amplitude gives identity frames")
{
    for (auto kind : {DeformationKind::Rigid, DeformationKind::Affine, DeformationKind::Tps}) {
        PhantomConfig cfg = small_config();
        cfg.amplitude_mm = 0.0;
        cfg.deformation = kind;
        const PhantomDataset ds = generate_phantom(cfg, 3, 3);
        for (const auto& f : ds.frames) {
            CHECK(f.image == ds.template_image);
            CHECK(f.masks == ds.template_masks);
            CHECK(f.oracle_landmarks == ds.template_landmarks);
            for (const auto& p : ds.template_landmarks) {
                CHECK(apply(f.ground_truth, p) == p);
            }
        }
    }
}

TEST_CASE("frames carry consistent masks, targets and activations")
{
    const PhantomConfig cfg = small_config();
    const PhantomDataset ds = generate_phantom(cfg, 5, 4);
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        const PhantomFrame& f = ds.frames[i];
        CHECK(f.id == static_cast<int>(i));
        CHECK(f.target_organ == i % 3);
        REQUIRE(f.masks.size() == 3);
        for (const auto& m : f.masks) {
            CHECK(m.height() == f.image.height());
            CHECK(m.width() == f.image.width());
        }
        REQUIRE(f.oracle_activations.has_value());
        const LandmarkDetection d = center_of_mass(*f.oracle_activations);
        CHECK(!d.any_degenerate());
        for (std::size_t k = 0; k < d.size(); ++k) {
            CHECK(distance(d.points[k], f.oracle_landmarks[k]) < 1e-6);
        }
    }
    const LandmarkDetection t = center_of_mass(ds.template_activations);
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(distance(t.points[k], ds.template_landmarks[k]) < 1e-6);
    }
}

TEST_CASE("oracle landmarks map onto the template sites under the ground truth")
{
    for (auto kind : {DeformationKind::Rigid, DeformationKind::Affine, DeformationKind::Tps}) {
        PhantomConfig cfg;
        cfg.deformation = kind;
        const Phantom ph(cfg, 11, 3);
        for (std::size_t i = 0; i < 3; ++i) {
            const PhantomFrame f = ph.frame(i);
            CHECK(kind_of(f.ground_truth) == static_cast<ModelKind>(kind));
            const TpsTransform fit = solve_tps(f.oracle_landmarks, ph.template_landmarks(), 0.0);
            for (std::size_t k = 0; k < f.oracle_landmarks.size(); ++k) {
                const Point2 m = f.oracle_landmarks[k];
                CHECK(distance(apply(f.ground_truth, m), ph.template_landmarks()[k]) < 1e-12);
                CHECK(distance(fit.apply(m), apply(f.ground_truth, m)) < 1e-6);
            }
        }
    }
}

TEST_CASE("frames move: ground truth has real motion")
{
    const Phantom ph(PhantomConfig{}, 42, 20);
    for (std::size_t i = 0; i < 20; ++i) {
        const Point2 c = apply(ph.ground_truth(i), {0.0, 0.0});
        const Point2 e = apply(ph.ground_truth(i), {0.5, 0.0});
        CHECK(distance(c, {0.0, 0.0}) + distance(e, {0.5, 0.0}) > 0.01);
    }
}

TEST_CASE("offsets compose with the ground truth")
{
    const Phantom ph(PhantomConfig{}, 42, 2);
    const RigidTransform o = RigidTransform::from_angle(0.4, {0.05, -0.1});
    const PhantomFrame plain = ph.frame(1);
    const PhantomFrame moved = ph.frame(1, o);
    for (std::size_t k = 0; k < plain.oracle_landmarks.size(); ++k) {
        CHECK(distance(moved.oracle_landmarks[k], o.apply(plain.oracle_landmarks[k])) < 1e-12);
        CHECK(distance(apply(moved.ground_truth, moved.oracle_landmarks[k]), ph.template_landmarks()[k]) < 1e-9);
    }
}

TEST_CASE("precompose_rigid matches pointwise composition for every model")
{
    testing::Rng rng(51);
    const RigidTransform g = RigidTransform::from_angle(-0.7, {0.2, 0.1});
    AffineTransform::Matrix a;
    a << 1.1, 0.2, 0.1, -0.1, 0.9, 0.0;
    const LandmarkSet mov = testing::random_set(rng, 10);
    const LandmarkSet fix = testing::random_set(rng, 10);
    const std::vector<TransformModel> models{RigidTransform::from_angle(0.3, {0.1, 0.0}), AffineTransform(a),
                                             solve_tps(mov, fix, 0.1)};
    for (const auto& f : models) {
        const TransformModel fg = precompose_rigid(f, g);
        CHECK(kind_of(fg) == kind_of(f));
        for (int i = 0; i < 50; ++i) {
            const Point2 p{testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1)};
            CHECK(distance(apply(fg, p), apply(f, g.apply(p))) < 1e-12);
        }
    }
}

TEST_CASE("inverting a point recovers the preimage")
{
    const Phantom ph(PhantomConfig{}, 9, 1);
    const Point2 target{0.3, -0.2};
    const Point2 q = Phantom::invert_point(ph.ground_truth(0), target);
    CHECK(distance(apply(ph.ground_truth(0), q), target) < 1e-12);
}

TEST_CASE("phantom datasets are bit-identical for a fixed seed")
{
    const PhantomConfig cfg = small_config();
    const PhantomDataset a = generate_phantom(cfg, 42, 3);
    const PhantomDataset b = generate_phantom(cfg, 42, 3);
    std::uint64_t h = testing::fnv1a(a.template_image.values());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.frames[i].image == b.frames[i].image);
        CHECK(a.frames[i].masks == b.frames[i].masks);
        CHECK(a.frames[i].oracle_landmarks == b.frames[i].oracle_landmarks);
        h = testing::fnv1a(a.frames[i].image.values(), h);
        for (const auto& m : a.frames[i].masks) {
            h = testing::fnv1a(m.values(), h);
        }
        const auto pts = a.frames[i].oracle_landmarks.points();
        h = testing::fnv1a(std::span<const double>(&pts[0].x, 2 * pts.size()), h);
        h = testing::fnv1a(a.frames[i].oracle_activations->values(), h);
    }
    CHECK(hex(h) == read_golden("phantom_seed42.txt"));
}
