#include "regcore/geom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "regcore/errors.hpp"

namespace regcore {

namespace {

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m)
{
    return m.allFinite();
}

} // namespace

Point2 make_point(double x, double y)
{
    Point2 p{x, y};
    if (!finite(p)) {
        throw InvalidArgument("point coordinates must be finite");
    }
    return p;
}

double squared_distance(Point2 a, Point2 b)
{
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

double distance(Point2 a, Point2 b) { return std::sqrt(squared_distance(a, b)); }

Point2 pixel_to_normalized(double col, double row, std::size_t width, std::size_t height)
{
    return {2.0 * (col + 0.5) / static_cast<double>(width) - 1.0,
            2.0 * (row + 0.5) / static_cast<double>(height) - 1.0};
}

Point2 normalized_to_pixel(Point2 p, std::size_t width, std::size_t height)
{
    return {0.5 * (p.x + 1.0) * static_cast<double>(width) - 0.5,
            0.5 * (p.y + 1.0) * static_cast<double>(height) - 0.5};
}

// ---------------------------------------------------------------------------

LandmarkSet::LandmarkSet(std::vector<Point2> points)
    : points_(std::move(points))
{
    if (points_.size() < min_size) {
        throw InvalidArgument("a landmark set needs at least 3 points, got " + std::to_string(points_.size()));
    }
    if (!std::all_of(points_.begin(), points_.end(), finite)) {
        throw InvalidArgument("landmark coordinates must be finite");
    }
}

Point2 LandmarkSet::centroid() const
{
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : points_) {
        sx += p.x;
        sy += p.y;
    }
    const double n = static_cast<double>(points_.size());
    return {sx / n, sy / n};
}

Eigen::MatrixX2d LandmarkSet::as_matrix() const
{
    Eigen::MatrixX2d m(points_.size(), 2);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = points_[i].x;
        m(static_cast<Eigen::Index>(i), 1) = points_[i].y;
    }
    return m;
}

// ---------------------------------------------------------------------------

RigidTransform::RigidTransform()
    : rotation_(Eigen::Matrix2d::Identity())
    , translation_(Eigen::Vector2d::Zero())
{
}

RigidTransform::RigidTransform(const Eigen::Matrix2d& rotation, const Eigen::Vector2d& translation)
    : rotation_(rotation)
    , translation_(translation)
{
    if (!all_finite(rotation_) || !all_finite(translation_)) {
        throw InvalidArgument("rigid transform parameters must be finite");
    }
    const double orth = (rotation_.transpose() * rotation_ - Eigen::Matrix2d::Identity()).norm();
    if (orth > 1e-10) {
        throw InvalidArgument("rigid rotation is not orthogonal");
    }
    if (std::abs(rotation_.determinant() - 1.0) > 1e-10) {
        throw InvalidArgument("rigid rotation must have determinant +1");
    }
}

RigidTransform RigidTransform::from_angle(double radians, const Eigen::Vector2d& translation)
{
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return {r, translation};
}

double RigidTransform::angle() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

Point2 RigidTransform::apply(Point2 p) const
{
    return {rotation_(0, 0) * p.x + rotation_(0, 1) * p.y + translation_(0),
            rotation_(1, 0) * p.x + rotation_(1, 1) * p.y + translation_(1)};
}

RigidTransform RigidTransform::inverse() const
{
    const Eigen::Matrix2d rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
}

// ---------------------------------------------------------------------------

AffineTransform::AffineTransform()
    : matrix_(Matrix::Identity())
{
}

AffineTransform::AffineTransform(const Matrix& matrix)
    : matrix_(matrix)
{
    if (!all_finite(matrix_)) {
        throw InvalidArgument("affine matrix entries must be finite");
    }
}

AffineTransform AffineTransform::from_rigid(const RigidTransform& rigid)
{
    Matrix m;
    m.leftCols<2>() = rigid.rotation();
    m.col(2) = rigid.translation();
    return AffineTransform(m);
}

Point2 AffineTransform::apply(Point2 p) const
{
    return {matrix_(0, 0) * p.x + matrix_(0, 1) * p.y + matrix_(0, 2),
            matrix_(1, 0) * p.x + matrix_(1, 1) * p.y + matrix_(1, 2)};
}

AffineTransform AffineTransform::inverse() const
{
    const Eigen::Matrix2d a = linear();
    const double det = a.determinant();
    if (!(std::abs(det) > 1e-14)) {
        throw DegenerateConfiguration("affine transform is not invertible");
    }
    const Eigen::Matrix2d ai = a.inverse();
    Matrix m;
    m.leftCols<2>() = ai;
    m.col(2) = -(ai * offset());
    return AffineTransform(m);
}

AffineTransform AffineTransform::compose(const AffineTransform& other) const
{
    Matrix m;
    m.leftCols<2>() = linear() * other.linear();
    m.col(2) = linear() * other.offset() + offset();
    return AffineTransform(m);
}

// ---------------------------------------------------------------------------

double tps_kernel(double r2, KernelVariant variant)
{
    if (r2 <= 0.0) {
        return 0.0;
    }
    const double l = std::log(r2);
    switch (variant) {
    case KernelVariant::StandardRLogR:
        return 0.5 * r2 * l;
    case KernelVariant::PaperLiteral:
        return r2 * r2 * l;
    }
    return 0.0;
}

TpsTransform::TpsTransform(const AffineTransform::Matrix& affine_part, Eigen::MatrixX2d weights,
                           LandmarkSet control_points, double lambda, KernelVariant kernel)
    : affine_(affine_part)
    , weights_(std::move(weights))
    , control_points_(std::move(control_points))
    , lambda_(lambda)
    , kernel_(kernel)
{
    if (static_cast<std::size_t>(weights_.rows()) != control_points_.size()) {
        throw InvalidArgument("TPS weight count must equal control point count");
    }
    if (!all_finite(affine_) || !all_finite(weights_)) {
        throw InvalidArgument("TPS parameters must be finite");
    }
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
        throw InvalidArgument("TPS lambda must be finite and non-negative");
    }
    // Side conditions: sum w_i = 0 and sum w_i c_i^T = 0.
    const Eigen::MatrixX2d c = control_points_.as_matrix();
    const Eigen::RowVector2d sum_w = weights_.colwise().sum();
    const Eigen::Matrix2d moment = weights_.transpose() * c;
    const double scale = std::max(1.0, weights_.cwiseAbs().maxCoeff() * std::max(1.0, c.cwiseAbs().maxCoeff()));
    if (sum_w.cwiseAbs().maxCoeff() > 1e-8 * scale || moment.cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw InvalidArgument("TPS weights violate the side conditions");
    }
}

Point2 TpsTransform::apply(Point2 p) const
{
    double x = affine_(0, 0) * p.x + affine_(0, 1) * p.y + affine_(0, 2);
    double y = affine_(1, 0) * p.x + affine_(1, 1) * p.y + affine_(1, 2);
    const auto pts = control_points_.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double k = tps_kernel(squared_distance(pts[i], p), kernel_);
        const auto row = static_cast<Eigen::Index>(i);
        x += weights_(row, 0) * k;
        y += weights_(row, 1) * k;
    }
    return {x, y};
}

// ---------------------------------------------------------------------------

ModelKind kind_of(const TransformModel& t)
{
    return static_cast<ModelKind>(t.index());
}

const char* to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Rigid:
        return "rigid";
    case ModelKind::Affine:
        return "affine";
    case ModelKind::Tps:
        return "tps";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name)
{
    if (name == "rigid") {
        return ModelKind::Rigid;
    }
    if (name == "affine") {
        return ModelKind::Affine;
    }
    if (name == "tps") {
        return ModelKind::Tps;
    }
    throw InvalidArgument("unknown transform model '" + std::string(name) + "'");
}

const char* to_string(KernelVariant variant)
{
    return variant == KernelVariant::StandardRLogR ? "standard" : "paper";
}

KernelVariant parse_kernel_variant(std::string_view name)
{
    if (name == "standard") {
        return KernelVariant::StandardRLogR;
    }
    if (name == "paper") {
        return KernelVariant::PaperLiteral;
    }
    throw InvalidArgument("unknown kernel variant '" + std::string(name) + "'");
}

Point2 apply(const TransformModel& t, Point2 p)
{
    return std::visit([p](const auto& tr) { return tr.apply(p); }, t);
}

std::vector<Point2> apply_points(const TransformModel& t, std::span<const Point2> pts)
{
    std::vector<Point2> out;
    out.reserve(pts.size());
    std::visit(
        [&](const auto& tr) {
            for (const auto& p : pts) {
                out.push_back(tr.apply(p));
            }
        },
        t);
    return out;
}

LandmarkSet apply_set(const TransformModel& t, const LandmarkSet& pts)
{
    return LandmarkSet(apply_points(t, pts.points()));
}

} // namespace regcore
