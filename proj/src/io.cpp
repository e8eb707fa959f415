#include "regcore/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "regcore/errors.hpp"

namespace regcore::io {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void put_f32(std::string& out, double v)
{
    const auto f = static_cast<float>(v);
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>((u >> (8 * b)) & 0xFFu));
    }
}

float get_f32(const char* p)
{
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) {
        u |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    }
    return std::bit_cast<float>(u);
}

// Splits "header\npayload" and parses the header.
std::pair<json, std::string_view> split_header(std::string_view bytes, const char* what)
{
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) {
        throw FormatError(std::string(what) + ": missing header line");
    }
    json h;
    try {
        h = json::parse(bytes.substr(0, nl));
    } catch (const json::parse_error&) {
        throw FormatError(std::string(what) + ": header is not valid JSON");
    }
    if (!h.is_object()) {
        throw FormatError(std::string(what) + ": header must be a JSON object");
    }
    return {h, bytes.substr(nl + 1)};
}

std::size_t header_size(const json& h, const char* key, const char* what)
{
    if (!h.contains(key) || !h[key].is_number_unsigned() || h[key].get<std::size_t>() == 0) {
        throw FormatError(std::string(what) + ": header field '" + key + "' must be a positive integer");
    }
    return h[key].get<std::size_t>();
}

Spacing header_spacing(const json& h, const char* what)
{
    if (!h.contains("spacing_mm")) {
        return {};
    }
    const auto& s = h["spacing_mm"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
        throw FormatError(std::string(what) + ": 'spacing_mm' must be [row, col]");
    }
    const Spacing sp{s[0].get<double>(), s[1].get<double>()};
    if (!(sp.row_mm > 0.0) || !(sp.col_mm > 0.0) || !std::isfinite(sp.row_mm) || !std::isfinite(sp.col_mm)) {
        throw FormatError(std::string(what) + ": spacing must be positive");
    }
    return sp;
}

void check_payload(std::string_view payload, std::size_t expected, const char* what)
{
    if (payload.size() != expected) {
        throw FormatError(std::string(what) + ": payload has " + std::to_string(payload.size()) +
                          " bytes, header declares " + std::to_string(expected));
    }
}

ojson matrix_json(const Eigen::MatrixXd& m)
{
    ojson rows = ojson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ojson row = ojson::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what)
{
    if (!j.is_array() || (rows >= 0 && static_cast<Eigen::Index>(j.size()) != rows)) {
        throw FormatError(std::string("transform: bad '") + what + "'");
    }
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, cols);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw FormatError(std::string("transform: bad '") + what + "'");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) {
                throw FormatError(std::string("transform: bad '") + what + "'");
            }
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

ojson transform_json(const TransformModel& t)
{
    return std::visit(
        [](const auto& x) -> ojson {
            using T = std::decay_t<decltype(x)>;
            ojson j;
            if constexpr (std::is_same_v<T, RigidTransform>) {
                j["model"] = "rigid";
                j["angle_rad"] = x.angle();
                j["rotation"] = matrix_json(x.rotation());
                j["translation"] = {x.translation()(0), x.translation()(1)};
            } else if constexpr (std::is_same_v<T, AffineTransform>) {
                j["model"] = "affine";
                j["matrix"] = matrix_json(x.matrix());
            } else {
                j["model"] = "tps";
                j["kernel"] = to_string(x.kernel());
                j["lambda"] = x.lambda();
                j["affine"] = matrix_json(x.affine_part());
                j["weights"] = matrix_json(x.weights());
                j["control_points"] = matrix_json(x.control_points().as_matrix());
            }
            return j;
        },
        t);
}

TransformModel transform_from(const json& j)
{
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string()) {
        throw FormatError("transform: missing 'model'");
    }
    try {
        const ModelKind kind = parse_model_kind(j["model"].get<std::string>());
        switch (kind) {
        case ModelKind::Rigid: {
            const Eigen::MatrixXd r = matrix_from(j.value("rotation", json()), 2, 2, "rotation");
            const Eigen::MatrixXd t = matrix_from(json::array({j.value("translation", json())}), 1, 2, "translation");
            return RigidTransform(r, Eigen::Vector2d(t(0, 0), t(0, 1)));
        }
        case ModelKind::Affine:
            return AffineTransform(matrix_from(j.value("matrix", json()), 2, 3, "matrix"));
        case ModelKind::Tps: {
            const Eigen::MatrixXd a = matrix_from(j.value("affine", json()), 2, 3, "affine");
            const Eigen::MatrixXd w = matrix_from(j.value("weights", json()), -1, 2, "weights");
            const Eigen::MatrixXd c = matrix_from(j.value("control_points", json()), w.rows(), 2, "control_points");
            std::vector<Point2> pts;
            for (Eigen::Index i = 0; i < c.rows(); ++i) {
                pts.push_back({c(i, 0), c(i, 1)});
            }
            const auto& lam = j.value("lambda", json());
            const auto& ker = j.value("kernel", json("standard"));
            if (!lam.is_number() || !ker.is_string()) {
                throw FormatError("transform: bad 'lambda' or 'kernel'");
            }
            return TpsTransform(a, w, LandmarkSet(std::move(pts)), lam.get<double>(),
                                parse_kernel_variant(ker.get<std::string>()));
        }
        }
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("transform: ") + e.what());
    }
    throw FormatError("transform: unknown model");
}

} // namespace

std::string encode_image(const ImageGrid& image)
{
    ojson h;
    h["h"] = image.height();
    h["w"] = image.width();
    h["spacing_mm"] = {image.spacing().row_mm, image.spacing().col_mm};
    std::string out = h.dump() + "\n";
    out.reserve(out.size() + 4 * image.values().size());
    for (double v : image.values()) {
        put_f32(out, v);
    }
    return out;
}

ImageGrid decode_image(std::string_view bytes)
{
    const auto [h, payload] = split_header(bytes, "image");
    const std::size_t rows = header_size(h, "h", "image");
    const std::size_t cols = header_size(h, "w", "image");
    const Spacing sp = header_spacing(h, "image");
    check_payload(payload, 4 * rows * cols, "image");
    std::vector<double> values(rows * cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = get_f32(payload.data() + 4 * i);
        if (!std::isfinite(values[i])) {
            throw FormatError("image: non-finite pixel value");
        }
    }
    return ImageGrid(rows, cols, sp, std::move(values));
}

std::string encode_masks(const MaskFile& file)
{
    if (file.masks.empty() || file.labels.size() != file.masks.size()) {
        throw InvalidArgument("mask file needs one label per mask");
    }
    const auto& first = file.masks.front();
    ojson h;
    h["h"] = first.height();
    h["w"] = first.width();
    h["spacing_mm"] = {first.spacing().row_mm, first.spacing().col_mm};
    h["labels"] = file.labels;
    std::string out = h.dump() + "\n";
    for (const auto& m : file.masks) {
        if (!m.same_shape(first)) {
            throw ShapeMismatch("masks in one file must share a shape");
        }
        for (auto v : m.values()) {
            out.push_back(static_cast<char>(v));
        }
    }
    return out;
}

MaskFile decode_masks(std::string_view bytes)
{
    const auto [h, payload] = split_header(bytes, "mask");
    const std::size_t rows = header_size(h, "h", "mask");
    const std::size_t cols = header_size(h, "w", "mask");
    const Spacing sp = header_spacing(h, "mask");
    MaskFile file;
    if (h.contains("labels")) {
        const auto& l = h["labels"];
        if (!l.is_array() || l.empty()) {
            throw FormatError("mask: 'labels' must be a non-empty array");
        }
        for (const auto& s : l) {
            if (!s.is_string()) {
                throw FormatError("mask: labels must be strings");
            }
            file.labels.push_back(s.get<std::string>());
        }
    } else {
        file.labels.push_back("mask");
    }
    check_payload(payload, rows * cols * file.labels.size(), "mask");
    for (std::size_t k = 0; k < file.labels.size(); ++k) {
        std::vector<std::uint8_t> v(rows * cols);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto b = static_cast<unsigned char>(payload[k * rows * cols + i]);
            if (b > 1) {
                throw FormatError("mask: values must be 0 or 1");
            }
            v[i] = b;
        }
        file.masks.emplace_back(rows, cols, sp, std::move(v));
    }
    return file;
}

std::string encode_activations(const ActivationStack& stack)
{
    ojson h;
    h["n"] = stack.channels();
    h["h"] = stack.height();
    h["w"] = stack.width();
    std::string out = h.dump() + "\n";
    for (double v : stack.values()) {
        put_f32(out, v);
    }
    return out;
}

ActivationStack decode_activations(std::string_view bytes)
{
    const auto [h, payload] = split_header(bytes, "activations");
    const std::size_t n = header_size(h, "n", "activations");
    const std::size_t rows = header_size(h, "h", "activations");
    const std::size_t cols = header_size(h, "w", "activations");
    check_payload(payload, 4 * n * rows * cols, "activations");
    std::vector<double> values(n * rows * cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = get_f32(payload.data() + 4 * i);
    }
    try {
        return ActivationStack(n, rows, cols, std::move(values));
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("activations: ") + e.what());
    }
}

std::string encode_landmarks(const LandmarkSet& landmarks)
{
    std::string out = "index,x,y\n";
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
        out += std::to_string(i) + "," + format_number(landmarks[i].x) + "," + format_number(landmarks[i].y) + "\n";
    }
    return out;
}

LandmarkSet decode_landmarks(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line.rfind("index,x,y", 0) != 0) {
        throw FormatError("landmarks: expected header 'index,x,y'");
    }
    std::vector<Point2> pts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string idx, xs, ys, extra;
        if (!std::getline(row, idx, ',') || !std::getline(row, xs, ',') || !std::getline(row, ys, ',') ||
            std::getline(row, extra)) {
            throw FormatError("landmarks: line " + std::to_string(lineno) + " must have 3 fields");
        }
        try {
            std::size_t used = 0;
            if (std::stoul(idx, &used) != pts.size() || used != idx.size()) {
                throw FormatError("landmarks: indices must run 0, 1, 2, ...");
            }
            const double x = std::stod(xs, &used);
            if (used != xs.size()) {
                throw std::invalid_argument(xs);
            }
            const double y = std::stod(ys, &used);
            if (used != ys.size()) {
                throw std::invalid_argument(ys);
            }
            pts.push_back({x, y});
        } catch (const std::logic_error&) {
            throw FormatError("landmarks: bad number on line " + std::to_string(lineno));
        }
    }
    try {
        return LandmarkSet(std::move(pts));
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("landmarks: ") + e.what());
    }
}

std::string encode_transform(const TransformModel& t) { return transform_json(t).dump(2) + "\n"; }

TransformModel decode_transform(std::string_view text)
{
    try {
        return transform_from(json::parse(text));
    } catch (const json::exception& e) {
        throw FormatError(std::string("transform: ") + e.what());
    }
}

std::string encode_pgm(const ImageGrid& image)
{
    std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    for (double v : image.values()) {
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
    return out;
}

ImageGrid decode_pgm(std::string_view bytes, Spacing spacing)
{
    std::istringstream in{std::string(bytes)};
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (!in || magic != "P5" || w == 0 || h == 0 || maxval == 0 || maxval > 255) {
        throw FormatError("pgm: expected 8-bit binary P5 header");
    }
    in.get();
    const auto offset = static_cast<std::size_t>(in.tellg());
    if (bytes.size() - offset != w * h) {
        throw FormatError("pgm: payload size does not match header");
    }
    std::vector<double> values(w * h);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<unsigned char>(bytes[offset + i]) / static_cast<double>(maxval);
    }
    return ImageGrid(h, w, spacing, std::move(values));
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw FormatError("cannot read '" + path.string() + "'");
    }
    return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view content)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + path.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("cannot write '" + path.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot write '" + path.string() + "'");
    }
}

ImageGrid read_image(const fs::path& path)
{
    const std::string bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

MaskFile read_masks(const fs::path& path)
{
    const std::string bytes = read_file(path);
    try {
        return decode_masks(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ActivationStack read_activations(const fs::path& path)
{
    const std::string bytes = read_file(path);
    try {
        return decode_activations(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

LandmarkSet read_landmarks(const fs::path& path)
{
    const std::string text = read_file(path);
    try {
        return decode_landmarks(text);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string frame_stem(std::size_t index)
{
    std::string s = std::to_string(index);
    if (s.size() < 3) {
        s.insert(0, 3 - s.size(), '0');
    }
    return "frame_" + s;
}

void write_phantom_dataset(const fs::path& dir, const PhantomDataset& ds, const std::vector<std::string>& labels)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create '" + dir.string() + "'");
    }
    write_file_atomic(dir / "template.img", encode_image(ds.template_image));
    write_file_atomic(dir / "template.mask", encode_masks({labels, ds.template_masks}));
    write_file_atomic(dir / "template.act", encode_activations(ds.template_activations));
    write_file_atomic(dir / "template.csv", encode_landmarks(ds.template_landmarks));
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        const PhantomFrame& f = ds.frames[i];
        const std::string stem = frame_stem(i);
        write_file_atomic(dir / (stem + ".img"), encode_image(f.image));
        write_file_atomic(dir / (stem + ".mask"), encode_masks({labels, f.masks}));
        if (f.oracle_activations) {
            write_file_atomic(dir / (stem + ".act"), encode_activations(*f.oracle_activations));
        }
        write_file_atomic(dir / (stem + ".csv"), encode_landmarks(f.oracle_landmarks));
        ojson j;
        j["frame_id"] = f.id;
        j["target_organ"] = labels.at(f.target_organ);
        j["ground_truth"] = transform_json(f.ground_truth);
        write_file_atomic(dir / (stem + ".json"), j.dump(2) + "\n");
    }
}

std::string encode_report(const Registration& reg)
{
    ojson j;
    j["method"] = reg.report.method;
    if (reg.report.method == "tps") {
        j["lambda"] = reg.report.lambda;
        j["kernel"] = to_string(reg.report.kernel);
    }
    j["mse_before"] = reg.report.mse_before;
    j["mse_after"] = reg.report.mse_after;
    j["runtime_ms"] = reg.report.runtime_ms;
    j["transform"] = transform_json(reg.transform);
    return j.dump(2) + "\n";
}

} // namespace regcore::io
