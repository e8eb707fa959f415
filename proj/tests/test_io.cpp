#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "regcore/errors.hpp"
#include "regcore/io.hpp"
#include "regcore/solvers.hpp"
#include "support.hpp"

using namespace regcore;
using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name)
{
    const fs::path d = fs::temp_directory_path() / ("regcore_io_" + std::string(name));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

ImageGrid float_image(testing::Rng& rng, std::size_t h, std::size_t w)
{
    std::vector<double> v(h * w);
    for (auto& x : v) {
        x = static_cast<float>(testing::uniform(rng, -2.0, 2.0));
    }
    return ImageGrid(h, w, {0.7, 1.3}, std::move(v));
}

void check_same_map(const TransformModel& a, const TransformModel& b)
{
    CHECK(kind_of(a) == kind_of(b));
    testing::Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const Point2 p{testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1)};
        const Point2 qa = std::visit([&](const auto& t) { return t.apply(p); }, a);
        const Point2 qb = std::visit([&](const auto& t) { return t.apply(p); }, b);
        CHECK(qa == qb);
    }
}

} // namespace

TEST_CASE("image round trip is exact for float32-representable values")
{
    testing::Rng rng(1);
    const ImageGrid img = float_image(rng, 7, 11);
    const std::string bytes = io::encode_image(img);
    CHECK(io::decode_image(bytes) == img);
    // header line + 4 bytes per pixel
    CHECK(bytes.size() == bytes.find('\n') + 1 + 4 * 77);
}

TEST_CASE("malformed images are format errors")
{
    testing::Rng rng(2);
    const std::string good = io::encode_image(float_image(rng, 3, 3));
    CHECK_THROWS_AS(io::decode_image(""), FormatError);
    CHECK_THROWS_AS(io::decode_image("not json\n"), FormatError);
    CHECK_THROWS_AS(io::decode_image(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(io::decode_image(good + "x"), FormatError);
    CHECK_THROWS_AS(io::decode_image("{\"h\": 0, \"w\": 1, \"spacing_mm\": [1, 1]}\n"), FormatError);
    CHECK_THROWS_AS(io::decode_image("{\"h\": 1, \"w\": 1, \"spacing_mm\": [1, -1]}\n1234"), FormatError);
    // spacing is optional and defaults to 1 mm
    CHECK(io::decode_image("{\"h\": 1, \"w\": 1}\n\0\0\0\0"s).spacing() == Spacing{});

    std::string nan_img = "{\"h\": 1, \"w\": 1, \"spacing_mm\": [1, 1]}\n";
    const float nan = std::numeric_limits<float>::quiet_NaN();
    nan_img.append(reinterpret_cast<const char*>(&nan), 4);
    CHECK_THROWS_AS(io::decode_image(nan_img), FormatError);
}

TEST_CASE("mask files keep labels and values")
{
    testing::Rng rng(3);
    io::MaskFile mf;
    mf.labels = {"liver", "kidney"};
    for (int i = 0; i < 2; ++i) {
        SegmentationMask m = testing::random_mask(rng, 9, 5, 0.4);
        mf.masks.push_back(SegmentationMask(9, 5, {2.0, 0.5}, {m.values().begin(), m.values().end()}));
    }
    const io::MaskFile back = io::decode_masks(io::encode_masks(mf));
    CHECK(back.labels == mf.labels);
    CHECK(back.masks == mf.masks);

    io::MaskFile bad = mf;
    bad.labels.pop_back();
    CHECK_THROWS_AS(io::encode_masks(bad), InvalidArgument);

    std::string bytes = io::encode_masks(mf);
    bytes.back() = 2;
    CHECK_THROWS_AS(io::decode_masks(bytes), FormatError);
    CHECK_THROWS_AS(io::decode_masks("{\"h\": 1, \"w\": 1, \"spacing_mm\": [1, 1], \"labels\": []}\n"), FormatError);
}

TEST_CASE("activation round trip")
{
    testing::Rng rng(4);
    const ActivationStack s = testing::random_blob_stack(rng, 3, 6, 8, 1);
    ActivationStack f32 = s;
    for (std::size_t n = 0; n < f32.channels(); ++n) {
        for (auto& v : f32.channel(n)) {
            v = static_cast<float>(v);
        }
    }
    CHECK(io::decode_activations(io::encode_activations(s)) == f32);
    CHECK_THROWS_AS(io::decode_activations("{\"n\": 1, \"h\": 1, \"w\": 1}\n"), FormatError);

    std::string neg = "{\"n\": 1, \"h\": 1, \"w\": 1}\n";
    const float m1 = -1.0f;
    neg.append(reinterpret_cast<const char*>(&m1), 4);
    CHECK_THROWS_AS(io::decode_activations(neg), FormatError);
}

TEST_CASE("landmark csv round trip is exact")
{
    testing::Rng rng(6);
    const LandmarkSet s = testing::random_set(rng, 17);
    CHECK(io::decode_landmarks(io::encode_landmarks(s)) == s);
    CHECK(io::decode_landmarks("index,x,y\r\n0,0.5,-0.25\r\n1,0,0\r\n2,0,1\r\n").size() == 3);

    CHECK_THROWS_AS(io::decode_landmarks(""), FormatError);
    CHECK_THROWS_AS(io::decode_landmarks("i,x,y\n0,0,0\n"), FormatError);
    CHECK_THROWS_AS(io::decode_landmarks("index,x,y\n0,0\n"), FormatError);
    CHECK_THROWS_AS(io::decode_landmarks("index,x,y\n1,0,0\n"), FormatError);
    CHECK_THROWS_AS(io::decode_landmarks("index,x,y\n0,abc,0\n"), FormatError);
    CHECK_THROWS_AS(io::decode_landmarks("index,x,y\n0,nan,0\n"), FormatError);
}

TEST_CASE("transform json round trip reproduces the map bit for bit")
{
    testing::Rng rng(7);
    const LandmarkSet a = testing::random_set(rng, 12);
    const LandmarkSet b = testing::random_set(rng, 12);
    check_same_map(solve_rigid(a, b), io::decode_transform(io::encode_transform(solve_rigid(a, b))));
    check_same_map(solve_affine(a, b), io::decode_transform(io::encode_transform(solve_affine(a, b))));
    for (auto kernel : {KernelVariant::StandardRLogR, KernelVariant::PaperLiteral}) {
        const TpsTransform t = solve_tps(a, b, 0.3, kernel);
        const TransformModel back = io::decode_transform(io::encode_transform(t));
        check_same_map(t, back);
        CHECK(std::get<TpsTransform>(back).kernel() == kernel);
        CHECK(std::get<TpsTransform>(back).lambda() == 0.3);
    }

    CHECK_THROWS_AS(io::decode_transform("{"), FormatError);
    CHECK_THROWS_AS(io::decode_transform("{}"), FormatError);
    CHECK_THROWS_AS(io::decode_transform(R"({"model": "spline"})"), FormatError);
    CHECK_THROWS_AS(io::decode_transform(R"({"model": "affine", "matrix": [[1, 0], [0, 1]]})"), FormatError);
}

TEST_CASE("pgm output clamps to 8 bits")
{
    ImageGrid img(2, 2, {}, std::vector<double>{-1.0, 0.0, 0.5, 2.0});
    const std::string bytes = io::encode_pgm(img);
    CHECK(bytes.rfind("P5\n2 2\n255\n", 0) == 0);
    const ImageGrid back = io::decode_pgm(bytes);
    CHECK(back(0, 0) == 0.0);
    CHECK(back(0, 1) == 0.0);
    CHECK(back(1, 0) == doctest::Approx(128.0 / 255.0));
    CHECK(back(1, 1) == 1.0);
    CHECK_THROWS_AS(io::decode_pgm("P2\n1 1\n255\n0"), FormatError);
}

TEST_CASE("files: missing input is a format error and writes are atomic")
{
    const fs::path d = scratch_dir("files");
    CHECK_THROWS_AS(io::read_file(d / "absent.img"), FormatError);
    CHECK_THROWS_AS(io::read_image(d / "absent.img"), FormatError);

    io::write_file_atomic(d / "out.txt", "first");
    io::write_file_atomic(d / "out.txt", "second");
    CHECK(io::read_file(d / "out.txt") == "second");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d)) {
        ++entries;
    }
    CHECK(entries == 1);

    CHECK_THROWS_AS(io::write_file_atomic(d / "no_such_dir" / "x", "y"), Error);
    CHECK(!fs::exists(d / "no_such_dir"));

    io::write_file_atomic(d / "bad.img", "garbage");
    try {
        io::read_image(d / "bad.img");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("bad.img") != std::string::npos);
    }
    fs::remove_all(d);
}

TEST_CASE("phantom dataset on disk reads back")
{
    PhantomConfig cfg;
    cfg.size = 32;
    const PhantomDataset ds = generate_phantom(cfg, 9, 2);
    const Phantom ph(cfg, 9, 2);
    const fs::path d = scratch_dir("dataset");
    io::write_phantom_dataset(d, ds, ph.labels());

    CHECK(io::read_landmarks(d / "template.csv") == ds.template_landmarks);
    CHECK(io::read_masks(d / "template.mask").masks == ds.template_masks);
    CHECK(io::read_masks(d / "template.mask").labels == ph.labels());
    CHECK(io::read_image(d / "frame_001.img").height() == 32);
    CHECK(io::read_activations(d / "frame_001.act").channels() == ds.frames[1].oracle_activations->channels());

    const auto meta = nlohmann::json::parse(io::read_file(d / "frame_001.json"));
    CHECK(meta.at("frame_id") == 1);
    CHECK(meta.at("target_organ") == ph.labels()[ds.frames[1].target_organ]);
    check_same_map(io::decode_transform(meta.at("ground_truth").dump()), ds.frames[1].ground_truth);
    fs::remove_all(d);
}

TEST_CASE("report json")
{
    testing::Rng rng(8);
    const LandmarkSet a = testing::random_set(rng, 8);
    const ImageGrid img(16, 16);
    const Registration r = register_frame(img, img, a, a, ModelKind::Tps, 0.5);
    const auto j = nlohmann::json::parse(io::encode_report(r));
    CHECK(j.at("method") == "tps");
    CHECK(j.at("lambda") == 0.5);
    CHECK(j.at("kernel") == "standard");
    CHECK(j.at("mse_after") == 0.0);
    CHECK(j.contains("transform"));
    CHECK(io::frame_stem(7) == "frame_007");
}

TEST_CASE("command-line registration writes what the library computes")
{
    PhantomConfig cfg;
    cfg.size = 64;
    const PhantomDataset ds = generate_phantom(cfg, 11, 1);
    const fs::path d = scratch_dir("cli");
    io::write_phantom_dataset(d, ds, Phantom(cfg, 11, 1).labels());

    const std::string cmd = std::string("\"") + REGCORE_CLI + "\" register --template " + (d / "template.img").string() +
                            " --moving " + (d / "frame_000.img").string() + " --landmarks-fixed " +
                            (d / "template.csv").string() + " --landmarks-moving " + (d / "frame_000.csv").string() +
                            " --model tps --lambda 0.05 --out-image " + (d / "out.img").string() + " --out-report " +
                            (d / "out.json").string();
    REQUIRE(std::system(cmd.c_str()) == 0);

    // Compare against the library run on the same decoded inputs.
    const Registration lib =
        register_frame(io::read_image(d / "template.img"), io::read_image(d / "frame_000.img"),
                       io::read_landmarks(d / "template.csv"), io::read_landmarks(d / "frame_000.csv"),
                       ModelKind::Tps, 0.05);
    CHECK(io::read_file(d / "out.img") == io::encode_image(lib.registered));
    auto cli_report = nlohmann::json::parse(io::read_file(d / "out.json"));
    auto lib_report = nlohmann::json::parse(io::encode_report(lib));
    cli_report.erase("runtime_ms");
    lib_report.erase("runtime_ms");
    CHECK(cli_report == lib_report);
    fs::remove_all(d);
}
